#include <gtest/gtest.h>

#include <random>

#include "oaisim/error.hpp"
#include "oaisim/oai_validate.hpp"
#include "oaisim/oai_xml.hpp"
#include "support/synth.hpp"

using namespace oaisim;

namespace {

ResponseHeader header_for(QueryArgs args) {
    ResponseHeader h;
    h.response_date = "2003-04-07T12:00:00Z";
    h.request.base_url = "http://aggregator.example.org/oai";
    h.request.arguments = std::move(args);
    return h;
}

std::string describe(const std::vector<Violation>& v) {
    std::string out;
    for (const auto& x : v) out += "@" + std::to_string(x.offset) + " " + x.message + "\n";
    return out;
}

const char* kListRecordsFixture = R"(<?xml version="1.0" encoding="UTF-8"?>
<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/"
         xmlns:xsi="http://www.w3.org/2001/XMLSchema-instance"
         xsi:schemaLocation="http://www.openarchives.org/OAI/2.0/ http://www.openarchives.org/OAI/2.0/OAI-PMH.xsd">
  <responseDate>2003-04-02T10:00:00Z</responseDate>
  <request verb="ListRecords" metadataPrefix="oai_dc">http://techreports.larc.nasa.gov/ltrs/oai2.0</request>
  <ListRecords>
    <record>
      <header>
        <identifier>oai:ltrs.larc.nasa.gov:rdp3195.tex</identifier>
        <datestamp>2003-03-31</datestamp>
        <setSpec>ltrs:tp</setSpec>
      </header>
      <metadata>
        <oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/"
                   xmlns:dc="http://purl.org/dc/elements/1.1/">
          <dc:title>Space Shuttle Orbiter Nose-Gear Tire</dc:title>
          <dc:creator>Carter, John F.</dc:creator>
          <dc:subject>tires</dc:subject>
          <dc:subject>landing gear</dc:subject>
        </oai_dc:dc>
      </metadata>
    </record>
    <record>
      <header>
        <identifier>oai:ltrs.larc.nasa.gov:NASA-TM-2001-210617</identifier>
        <datestamp>2003-03-30T08:15:00Z</datestamp>
      </header>
      <metadata>
        <oai_dc:dc xmlns:oai_dc="http://www.openarchives.org/OAI/2.0/oai_dc/"
                   xmlns:dc="http://purl.org/dc/elements/1.1/">
          <dc:title>PEM-Tropics B &amp; more</dc:title>
        </oai_dc:dc>
      </metadata>
    </record>
    <resumptionToken completeListSize="3751" cursor="0">tok-500</resumptionToken>
  </ListRecords>
</OAI-PMH>)";

}  // namespace

TEST(ParseResponse, ListRecordsFixture) {
    const auto parsed = parse_response(kListRecordsFixture, Verb::ListRecords);
    ASSERT_EQ(parsed.records.size(), 2u);
    const auto& a = parsed.records[0].record;
    EXPECT_EQ(a.identifier, "oai:ltrs.larc.nasa.gov:rdp3195.tex");
    EXPECT_EQ(a.datestamp, "2003-03-31");
    EXPECT_EQ(a.set_specs, std::vector<std::string>{"ltrs:tp"});
    const std::vector<DcField> expected{{"title", "Space Shuttle Orbiter Nose-Gear Tire"},
                                        {"creator", "Carter, John F."},
                                        {"subject", "tires"},
                                        {"subject", "landing gear"}};
    EXPECT_EQ(a.dc_fields, expected);
    EXPECT_FALSE(a.deleted);
    EXPECT_TRUE(a.provenance.empty());
    EXPECT_EQ(parsed.records[1].record.dc_fields, (std::vector<DcField>{{"title", "PEM-Tropics B & more"}}));
    ASSERT_TRUE(parsed.resumption_token);
    EXPECT_EQ(parsed.resumption_token->value, "tok-500");
    EXPECT_EQ(parsed.resumption_token->complete_list_size, 3751u);
    EXPECT_EQ(parsed.resumption_token->cursor, 0u);
    EXPECT_FALSE(parsed.resumption_token->expiration_date);
    EXPECT_EQ(parsed.request.base_url, "http://techreports.larc.nasa.gov/ltrs/oai2.0");
    EXPECT_TRUE(parsed.errors.empty());
    EXPECT_TRUE(validate_oai_response(kListRecordsFixture).empty()) << describe(validate_oai_response(kListRecordsFixture));
}

TEST(ParseResponse, ErrorPassthrough) {
    const char* xml = R"(<?xml version="1.0"?>
<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/">
  <responseDate>2003-04-02T10:00:00Z</responseDate>
  <request verb="GetRecord" identifier="oai:x:y" metadataPrefix="oai_dc">http://h/oai</request>
  <error code="idDoesNotExist">no such record</error>
</OAI-PMH>)";
    const auto parsed = parse_response(xml, Verb::GetRecord);
    EXPECT_TRUE(parsed.records.empty());
    ASSERT_EQ(parsed.errors.size(), 1u);
    EXPECT_EQ(parsed.errors[0].code, OaiErrorCode::idDoesNotExist);
    EXPECT_EQ(parsed.errors[0].message, "no such record");
}

TEST(ParseResponse, DeletedHeader) {
    const char* xml = R"(<?xml version="1.0"?>
<OAI-PMH xmlns="http://www.openarchives.org/OAI/2.0/">
  <responseDate>2003-04-02T10:00:00Z</responseDate>
  <request verb="GetRecord" identifier="oai:x:gone" metadataPrefix="oai_dc">http://h/oai</request>
  <GetRecord><record><header status="deleted"><identifier>oai:x:gone</identifier><datestamp>2003-01-01</datestamp></header></record></GetRecord>
</OAI-PMH>)";
    const auto parsed = parse_response(xml, Verb::GetRecord);
    ASSERT_EQ(parsed.records.size(), 1u);
    EXPECT_TRUE(parsed.records[0].record.deleted);
    EXPECT_TRUE(parsed.records[0].record.dc_fields.empty());
}

TEST(ParseResponse, MalformedXmlReportsOffset) {
    const std::string xml = "<OAI-PMH xmlns=\"http://www.openarchives.org/OAI/2.0/\"><responseDate>x</response>";
    try {
        parse_response(xml, Verb::Identify);
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_GT(e.offset(), 0u);
        EXPECT_LE(e.offset(), xml.size());
    }
}

TEST(ParseResponse, VerbMismatch) {
    EXPECT_THROW(parse_response(kListRecordsFixture, Verb::GetRecord), ProtocolMismatch);
    EXPECT_THROW(parse_response("<html/>", Verb::GetRecord), ProtocolMismatch);
}

TEST(SerializeGetRecord, MatchOrderPreserved) {
    MetadataRecord r{"oai:a:1", "2003-01-01", {}, {{"title", "x"}}, {}, false};
    SimilarityAbout about{"oai:a:1", "2003-04-07T00:00:00Z", {{"oai:a:2", 0.9}, {"oai:a:3", 0.5}, {"oai:a:4", 0.1}}};
    const auto xml = serialize_get_record(r, about, header_for({{"verb", "GetRecord"}}));
    const auto p2 = xml.find("oai:a:2\""), p3 = xml.find("oai:a:3\""), p4 = xml.find("oai:a:4\"");
    ASSERT_NE(p2, std::string::npos);
    EXPECT_LT(p2, p3);
    EXPECT_LT(p3, p4);
    EXPECT_NE(xml.find("score=\"0.9000\""), std::string::npos);
    EXPECT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
    const auto parsed = parse_response(xml, Verb::GetRecord);
    ASSERT_EQ(parsed.records.size(), 1u);
    EXPECT_EQ(parsed.records[0].similarity, about);
}

TEST(SerializeGetRecord, EmptyMatchList) {
    MetadataRecord r{"oai:a:1", "2003-01-01", {}, {{"title", "x"}}, {}, false};
    SimilarityAbout about{"oai:a:1", "2003-04-07T00:00:00Z", {}};
    const auto xml = serialize_get_record(r, about, header_for({{"verb", "GetRecord"}}));
    EXPECT_NE(xml.find("<about>"), std::string::npos);
    EXPECT_EQ(xml.find("<match"), std::string::npos);
    EXPECT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
    EXPECT_EQ(parse_response(xml, Verb::GetRecord).records.at(0).similarity, about);
}

TEST(SerializeGetRecord, DeletedWithAboutRejected) {
    MetadataRecord r{"oai:a:1", "2003-01-01", {}, {}, {}, true};
    EXPECT_ANY_THROW(serialize_get_record(r, SimilarityAbout{"oai:a:1", "2003-04-07T00:00:00Z", {}}, header_for({})));
}

TEST(SerializeGetRecord, RandomizedRoundTrip) {
    std::mt19937_64 rng(11);
    for (std::size_t i = 0; i < 300; ++i) {
        const auto record = fixtures::random_record(rng, i);
        std::optional<SimilarityAbout> about;
        if (!record.deleted) {
            about.emplace();
            about->subject_identifier = record.identifier;
            about->computed_at = "2003-04-07T01:02:03Z";
            for (int m = 0; m < static_cast<int>(i % 11); ++m)
                about->matches.push_back({"oai:other:" + std::to_string(m), 1.0 - 0.0625 * m});
        }
        const auto xml = serialize_get_record(record, about,
                                              header_for({{"verb", "GetRecord"}, {"identifier", record.identifier},
                                                          {"metadataPrefix", "oai_dc"}}));
        ASSERT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml)) << xml;
        const auto parsed = parse_response(xml, Verb::GetRecord);
        ASSERT_EQ(parsed.records.size(), 1u);
        EXPECT_EQ(parsed.records[0].record, record) << xml;
        EXPECT_EQ(parsed.records[0].similarity, about);
        EXPECT_EQ(parsed.request.arguments.size(), 3u);
    }
}

TEST(SerializeLists, ListRecordsAndIdentifiersRoundTrip) {
    std::mt19937_64 rng(12);
    std::vector<MetadataRecord> records;
    for (std::size_t i = 0; i < 40; ++i) records.push_back(fixtures::random_record(rng, i));
    ResumptionToken token{"next-40", 100, 0, std::nullopt};
    for (const Verb verb : {Verb::ListRecords, Verb::ListIdentifiers}) {
        const auto h = header_for({{"verb", std::string(to_string(verb))}, {"metadataPrefix", "oai_dc"}});
        const auto xml = verb == Verb::ListRecords ? serialize_list_records(records, token, h)
                                                   : serialize_list_identifiers(records, token, h);
        ASSERT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
        const auto parsed = parse_response(xml, verb);
        ASSERT_EQ(parsed.records.size(), records.size());
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (verb == Verb::ListRecords) {
                EXPECT_EQ(parsed.records[i].record, records[i]);
            } else {
                EXPECT_EQ(parsed.records[i].record.identifier, records[i].identifier);
                EXPECT_EQ(parsed.records[i].record.set_specs, records[i].set_specs);
                EXPECT_TRUE(parsed.records[i].record.dc_fields.empty());
            }
            EXPECT_FALSE(parsed.records[i].similarity);
        }
        EXPECT_EQ(parsed.resumption_token, token);
    }
}

TEST(SerializeLists, LastPageEmptyToken) {
    const ResumptionToken last{"", 25, 20, std::nullopt};
    MetadataRecord r{"oai:a:1", "2003-01-01", {}, {{"title", "x"}}, {}, false};
    const auto xml = serialize_list_records(std::span(&r, 1), last, header_for({{"verb", "ListRecords"}}));
    EXPECT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
    const auto parsed = parse_response(xml, Verb::ListRecords);
    ASSERT_TRUE(parsed.resumption_token);
    EXPECT_FALSE(parsed.resumption_token->has_more());
    EXPECT_EQ(parsed.resumption_token->complete_list_size, 25u);
}

TEST(SerializeError, BadVerb) {
    const auto xml = serialize_error(OaiError{OaiErrorCode::badVerb, "Bogus"}, header_for({{"verb", "Bogus"}}));
    EXPECT_NE(xml.find("<error code=\"badVerb\">"), std::string::npos);
    EXPECT_EQ(xml.find("verb=\"Bogus\""), std::string::npos);  // badVerb echoes no arguments
    EXPECT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
}

TEST(SerializeError, AllCodesRoundTrip) {
    for (const auto code : {OaiErrorCode::badVerb, OaiErrorCode::badArgument, OaiErrorCode::idDoesNotExist,
                            OaiErrorCode::noRecordsMatch, OaiErrorCode::cannotDisseminateFormat,
                            OaiErrorCode::badResumptionToken, OaiErrorCode::noMetadataFormats,
                            OaiErrorCode::noSetHierarchy}) {
        const OaiError errors[] = {{code, "first <&> message"}, {OaiErrorCode::badArgument, "second"}};
        const auto xml = serialize_error(errors, header_for({{"verb", "ListRecords"}, {"metadataPrefix", "x"}}));
        ASSERT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
        const auto parsed = parse_response(xml, Verb::ListRecords);
        ASSERT_EQ(parsed.errors.size(), 2u);
        EXPECT_EQ(parsed.errors[0], errors[0]);
        EXPECT_EQ(parse_error_code(to_string(code)), code);
    }
}

TEST(SerializeIdentify, ConstantFields) {
    RepositoryIdentity id;
    id.repository_name = "LTRS aggregator";
    id.base_url = "http://aggregator.example.org/oai";
    id.earliest_datestamp = "2003-01-01T00:00:00Z";
    id.admin_emails = {"admin@example.org"};
    const auto xml = serialize_identify(id, header_for({{"verb", "Identify"}}));
    for (const char* needle : {"<repositoryName>LTRS aggregator</repositoryName>",
                               "<baseURL>http://aggregator.example.org/oai</baseURL>",
                               "<protocolVersion>2.0</protocolVersion>",
                               "<earliestDatestamp>2003-01-01T00:00:00Z</earliestDatestamp>"})
        EXPECT_NE(xml.find(needle), std::string::npos) << needle;
    EXPECT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
    EXPECT_EQ(parse_response(xml, Verb::Identify).identity, id);
}

TEST(SerializeMisc, MetadataFormatsAndSets) {
    const MetadataFormat formats[] = {oai_dc_format()};
    auto xml = serialize_list_metadata_formats(formats, header_for({{"verb", "ListMetadataFormats"}}));
    EXPECT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
    EXPECT_EQ(parse_response(xml, Verb::ListMetadataFormats).metadata_formats.at(0), oai_dc_format());
    const SetEntry sets[] = {{"nasa", "NASA"}, {"nasa:larc", "Langley"}};
    xml = serialize_list_sets(sets, std::nullopt, header_for({{"verb", "ListSets"}}));
    EXPECT_TRUE(validate_oai_response(xml).empty()) << describe(validate_oai_response(xml));
    EXPECT_EQ(parse_response(xml, Verb::ListSets).sets.size(), 2u);
}

TEST(BuildSimilarityAbout, TruncatesToK) {
    std::vector<SimilarityMatch> m;
    for (int i = 0; i < 12; ++i) m.push_back({"oai:a:" + std::to_string(i), 0.05 + 0.07 * i});
    const auto about = build_similarity_about("oai:a:subject", m, 10, "2003-04-07T00:00:00Z");
    ASSERT_EQ(about.matches.size(), 10u);
    for (const auto& x : about.matches) {
        EXPECT_NE(x.identifier, "oai:a:0");
        EXPECT_NE(x.identifier, "oai:a:1");
    }
    EXPECT_EQ(about.matches.front().identifier, "oai:a:11");
}

TEST(BuildSimilarityAbout, ExcludesSubject) {
    const std::vector<SimilarityMatch> m{{"oai:a:s", 1.0}, {"oai:a:b", 0.3}};
    const auto about = build_similarity_about("oai:a:s", m, 10, "2003-04-07T00:00:00Z");
    ASSERT_EQ(about.matches.size(), 1u);
    EXPECT_EQ(about.matches[0].identifier, "oai:a:b");
}

TEST(BuildSimilarityAbout, TieBreakByIdentifier) {
    const std::vector<SimilarityMatch> m{{"oai:a:z", 0.5}, {"oai:a:b", 0.5}, {"oai:a:m", 0.7}};
    const auto about = build_similarity_about("oai:a:s", m, 10, "2003-04-07T00:00:00Z");
    ASSERT_EQ(about.matches.size(), 3u);
    EXPECT_EQ(about.matches[0].identifier, "oai:a:m");
    EXPECT_EQ(about.matches[1].identifier, "oai:a:b");
    EXPECT_EQ(about.matches[2].identifier, "oai:a:z");
}

TEST(BuildSimilarityAbout, ZeroKAndRange) {
    EXPECT_TRUE(build_similarity_about("s", std::vector<SimilarityMatch>{{"a", 0.5}}, 0, "2003-04-07T00:00:00Z")
                    .matches.empty());
    EXPECT_THROW(build_similarity_about("s", std::vector<SimilarityMatch>{{"a", 1.5}}, 3, "2003-04-07T00:00:00Z"),
                 ValidationError);
}

TEST(FormatScore, FourDecimalsHalfEven) {
    EXPECT_EQ(format_score(0.9822), "0.9822");
    EXPECT_EQ(format_score(1.0), "1.0000");
    EXPECT_EQ(format_score(0.0), "0.0000");
    EXPECT_EQ(format_score(0.03125), "0.0312");  // 312.5 exactly -> even
    EXPECT_EQ(format_score(0.09375), "0.0938");  // 937.5 exactly -> even
}

TEST(SimilarityDocument, ValidatesAndRoundTrips) {
    SimilarityAbout about{"oai:a:1", "2003-04-07T00:00:00Z", {{"oai:a:2", 0.9822}, {"oai:a:3", 0.5}}};
    const auto xml = serialize_similarity_document(about, "http://localhost:8080/schema/similarity");
    EXPECT_TRUE(validate_similarity_document(xml).empty()) << describe(validate_similarity_document(xml));
    EXPECT_EQ(parse_similarity_document(xml), about);
    EXPECT_NE(xml.find("http://localhost:8080/schema/similarity"), std::string::npos);
}

TEST(Validator, RejectsBrokenResponses) {
    std::string missing_date = kListRecordsFixture;
    const auto a = missing_date.find("<responseDate>"), b = missing_date.find("</responseDate>") + 15;
    missing_date.erase(a, b - a);
    EXPECT_FALSE(validate_oai_response(missing_date).empty());

    const char* rising = R"(<similarity xmlns="urn:oaisim:similarity" subject="oai:a:1" computedDate="2003-04-07T00:00:00Z">
<match identifier="oai:a:2" score="0.1000"/><match identifier="oai:a:3" score="0.5000"/></similarity>)";
    EXPECT_FALSE(validate_similarity_document(rising).empty());
    const char* bad_score = R"(<similarity xmlns="urn:oaisim:similarity" subject="oai:a:1" computedDate="2003-04-07T00:00:00Z">
<match identifier="oai:a:2" score="1.5"/></similarity>)";
    EXPECT_FALSE(validate_similarity_document(bad_score).empty());
    EXPECT_FALSE(validate_oai_response("<OAI-PMH").empty());
}

TEST(Validator, SchemaIsShipped) {
    const auto xsd = similarity_schema();
    EXPECT_NE(xsd.find("targetNamespace=\"urn:oaisim:similarity\""), std::string::npos);
    EXPECT_NE(xsd.find("http://www.w3.org/2001/XMLSchema"), std::string::npos);
}

TEST(RecordDocument, RoundTrip) {
    std::mt19937_64 rng(13);
    for (std::size_t i = 0; i < 100; ++i) {
        const auto r = fixtures::random_record(rng, i);
        EXPECT_EQ(parse_record_document(serialize_record_document(r)), r);
    }
}
