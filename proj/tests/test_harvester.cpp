#include <gtest/gtest.h>

#include <random>
#include <set>

#include "oaisim/error.hpp"
#include "oaisim/harvester.hpp"
#include "oaisim/record_store.hpp"
#include "support/mock_upstream.hpp"
#include "support/synth.hpp"
#include "support/tempdir.hpp"

using namespace oaisim;
using namespace std::chrono_literals;

namespace {

std::vector<MetadataRecord> corpus(std::size_t n, std::uint64_t seed = 51) {
    std::mt19937_64 rng(seed);
    const auto vocab = fixtures::make_vocabulary(300, rng);
    std::vector<MetadataRecord> out;
    for (std::size_t i = 0; i < n; ++i)
        out.push_back(fixtures::synthetic_doc(fixtures::synthetic_identifier(i), 20, vocab, rng).record);
    return out;
}

struct Collecting {
    std::vector<std::string> ids;
    RecordSink sink() {
        return [this](const MetadataRecord& r) {
            ids.push_back(r.identifier);
            return IngestResult{};
        };
    }
};

HarvestOptions quiet_options(std::vector<std::chrono::milliseconds>* slept = nullptr) {
    HarvestOptions o;
    o.sleep = [slept](std::chrono::milliseconds d) {
        if (slept) slept->push_back(d);
    };
    return o;
}

}  // namespace

TEST(BuildRequestUrl, PaperExample) {
    HarvestSession s;
    s.base_url = "http://128.82.7.113:5180/perl/NASA_ltrs/";
    EXPECT_EQ(build_request_url(s, Verb::GetRecord,
                                {{"metadataPrefix", "oai_dc"}, {"identifier", "oai:ltrs.larc.nasa.gov:rdp3195.tex"}}),
              "http://128.82.7.113:5180/perl/NASA_ltrs/"
              "?verb=GetRecord&metadataPrefix=oai_dc&identifier=oai:ltrs.larc.nasa.gov:rdp3195.tex");
}

TEST(BuildRequestUrl, ExclusiveToken) {
    HarvestSession s;
    s.base_url = "http://h/oai";
    EXPECT_EQ(build_request_url(s, Verb::ListRecords, {{"resumptionToken", "abc"}}),
              "http://h/oai?verb=ListRecords&resumptionToken=abc");
    EXPECT_THROW(build_request_url(s, Verb::ListRecords, {{"resumptionToken", "abc"}, {"metadataPrefix", "oai_dc"}}),
                 ValidationError);
    EXPECT_THROW(build_request_url(s, Verb::ListRecords, {}), ValidationError);
    EXPECT_THROW(build_request_url(s, Verb::GetRecord, {{"identifier", "x"}}), ValidationError);
    EXPECT_THROW(build_request_url(s, Verb::Identify, {{"set", "x"}}), ValidationError);
    EXPECT_THROW(build_request_url(s, Verb::ListRecords, {{"metadataPrefix", "a"}, {"metadataPrefix", "b"}}),
                 ValidationError);
}

TEST(BuildRequestUrl, ReservedCharactersRoundTrip) {
    HarvestSession s;
    s.base_url = "http://h/oai";
    const QueryArgs args{{"identifier", "oai:a.b:x/y:z&q=1 %+#"}, {"metadataPrefix", "oai_dc"}};
    const auto url = build_request_url(s, Verb::GetRecord, args);
    const auto query = url.substr(url.find('?') + 1);
    EXPECT_EQ(query.find('&', query.find("identifier=")), query.find("&metadataPrefix"));
    QueryArgs expected{{"verb", "GetRecord"}};
    expected.insert(expected.end(), args.begin(), args.end());
    EXPECT_EQ(parse_query(query), expected);
}

TEST(Session, Validation) {
    HarvestSession s;
    s.base_url = "http://h/oai";
    EXPECT_NO_THROW(validate(s));
    s.from = "2003-04-02";
    s.until = "2003-04-01";
    EXPECT_THROW(validate(s), ValidationError);
    s.until = "2003-04-03";
    EXPECT_NO_THROW(validate(s));
    s.until = "2003-04-03T00:00:00Z";
    EXPECT_THROW(validate(s), ValidationError);  // mixed granularity
    s.from = "April";
    EXPECT_THROW(validate(s), ValidationError);
    s.from.reset();
    s.base_url = "https://h/oai";
    EXPECT_THROW(validate(s), ValidationError);
}

TEST(RetryDelay, BackoffAndRetryAfter) {
    HarvestOptions o;
    EXPECT_EQ(retry_delay(o, 1, std::nullopt), 1000ms);
    EXPECT_EQ(retry_delay(o, 2, std::nullopt), 2000ms);
    EXPECT_EQ(retry_delay(o, 4, std::nullopt), 8000ms);
    EXPECT_EQ(retry_delay(o, 10, std::nullopt), 60000ms);
    EXPECT_EQ(retry_delay(o, 1, "2"), 2000ms);
    EXPECT_EQ(retry_delay(o, 1, "3600"), 60000ms);
    EXPECT_EQ(retry_delay(o, 3, "soon"), 4000ms);
}

TEST(Harvest, PagedFullHarvest) {
    fixtures::MockUpstream up(corpus(3751), {.page_size = 500});
    HarvestSession s;
    s.base_url = up.base_url();
    Collecting c;
    const auto report = harvest(s, c.sink(), quiet_options());
    EXPECT_EQ(report.pages_fetched, 8u);
    EXPECT_EQ(report.records_received, 3751u);
    EXPECT_EQ(c.ids.size(), 3751u);
    EXPECT_EQ(std::set<std::string>(c.ids.begin(), c.ids.end()).size(), 3751u);
    EXPECT_EQ(s.records_received, 3751u);
    EXPECT_FALSE(s.cursor);
    EXPECT_EQ(report.retries, 0u);
}

TEST(Harvest, NoRecordsMatch) {
    fixtures::MockUpstream up(corpus(10), {});
    HarvestSession s;
    s.base_url = up.base_url();
    s.from = "2010-01-01";
    Collecting c;
    const auto report = harvest(s, c.sink(), quiet_options());
    EXPECT_EQ(report.records_received, 0u);
    EXPECT_TRUE(c.ids.empty());
}

TEST(Harvest, RetryAfter503) {
    fixtures::MockUpstream up(corpus(120), {.page_size = 50, .fail_with_503 = {2}, .retry_after = "2"});
    HarvestSession s;
    s.base_url = up.base_url();
    std::vector<std::chrono::milliseconds> slept;
    Collecting c;
    const auto report = harvest(s, c.sink(), quiet_options(&slept));
    EXPECT_EQ(report.retries, 1u);
    EXPECT_EQ(report.records_received, 120u);
    ASSERT_EQ(slept.size(), 1u);
    EXPECT_EQ(slept[0], 2000ms);
    EXPECT_EQ(up.requests(), 4);
}

TEST(Harvest, GivesUpAfterMaxAttempts) {
    fixtures::MockUpstream up(corpus(120), {.page_size = 50, .fail_with_503 = {2, 3, 4, 5, 6}});
    HarvestSession s;
    s.base_url = up.base_url();
    Collecting c;
    try {
        harvest(s, c.sink(), quiet_options());
        FAIL();
    } catch (const HarvestError& e) {
        EXPECT_EQ(e.kind(), HarvestError::Kind::resumable);
        EXPECT_EQ(e.partial().records_received, 50u);
        EXPECT_EQ(e.partial().retries, 4u);
        EXPECT_EQ(e.cursor(), "page-50");
    }
}

TEST(Harvest, BadResumptionTokenRequiresRestart) {
    fixtures::MockUpstream up(corpus(120), {.page_size = 50, .bad_token_on = {2}});
    HarvestSession s;
    s.base_url = up.base_url();
    Collecting c;
    try {
        harvest(s, c.sink(), quiet_options());
        FAIL();
    } catch (const HarvestError& e) {
        EXPECT_EQ(e.kind(), HarvestError::Kind::restart_required);
        EXPECT_EQ(e.partial().records_received, 50u);
    }
}

TEST(Harvest, TransportFailureIsResumable) {
    fixtures::MockUpstream up(corpus(200), {.page_size = 50});
    HarvestSession s;
    s.base_url = up.base_url();
    auto options = quiet_options();
    const auto real = http_fetcher(options);
    int calls = 0;
    options.fetcher = [&](const std::string& url) {
        if (++calls > 2) return HttpResponse{0, "", std::nullopt, "connection refused"};
        return real(url);
    };
    Collecting c;
    std::optional<std::string> cursor;
    try {
        harvest(s, c.sink(), options);
        FAIL();
    } catch (const HarvestError& e) {
        EXPECT_EQ(e.kind(), HarvestError::Kind::resumable);
        cursor = e.cursor();
        EXPECT_EQ(e.partial().records_received, 100u);
    }
    ASSERT_EQ(cursor, "page-100");
    // Resume from the cursor with a working network.
    HarvestSession resume = s;
    resume.cursor = cursor;
    const auto rest = harvest(resume, c.sink(), quiet_options());
    EXPECT_EQ(rest.records_received, 100u);
    EXPECT_EQ(std::set<std::string>(c.ids.begin(), c.ids.end()).size(), 200u);
}

TEST(Harvest, UnreachableUpstream) {
    HarvestSession s;
    s.base_url = "http://127.0.0.1:1/oai";
    auto options = quiet_options();
    options.max_attempts = 2;
    options.timeout = 2s;
    Collecting c;
    try {
        harvest(s, c.sink(), options);
        FAIL();
    } catch (const HarvestError& e) {
        EXPECT_EQ(e.kind(), HarvestError::Kind::resumable);
        EXPECT_FALSE(e.cursor());
    }
}

TEST(Harvest, OverlappingPagesDeliverOnce) {
    fixtures::MockUpstream up(corpus(130), {.page_size = 50, .overlap_pages = true});
    HarvestSession s;
    s.base_url = up.base_url();
    Collecting c;
    const auto report = harvest(s, c.sink(), quiet_options());
    EXPECT_EQ(report.records_received, 130u);
    EXPECT_EQ(report.duplicate_identifiers.size(), 2u);
    EXPECT_EQ(std::set<std::string>(c.ids.begin(), c.ids.end()).size(), c.ids.size());
}

TEST(Harvest, RepeatedTokenTerminates) {
    fixtures::MockUpstream up(corpus(1000), {.page_size = 10, .constant_token = "same"});
    HarvestSession s;
    s.base_url = up.base_url();
    Collecting c;
    try {
        harvest(s, c.sink(), quiet_options());
        FAIL();
    } catch (const HarvestError& e) {
        EXPECT_EQ(e.kind(), HarvestError::Kind::protocol);
    }
    EXPECT_LE(up.requests(), 5);
}

TEST(Harvest, IncrementalIsSubset) {
    const auto records = corpus(300);
    fixtures::MockUpstream up(records, {.page_size = 40});
    HarvestSession full;
    full.base_url = up.base_url();
    Collecting all;
    harvest(full, all.sink(), quiet_options());
    HarvestSession inc = full;
    inc.from = "2003-03-01";
    Collecting some;
    harvest(inc, some.sink(), quiet_options());
    const std::set<std::string> all_ids(all.ids.begin(), all.ids.end());
    EXPECT_LT(some.ids.size(), all.ids.size());
    EXPECT_GT(some.ids.size(), 0u);
    for (const auto& id : some.ids) EXPECT_TRUE(all_ids.contains(id));
    std::size_t expected = 0;
    for (const auto& r : records) expected += r.datestamp >= "2003-03-01";
    EXPECT_EQ(some.ids.size(), expected);
}

TEST(Harvest, PolitenessHeaders) {
    fixtures::MockUpstream up(corpus(5), {});
    HarvestSession s;
    s.base_url = up.base_url();
    auto options = quiet_options();
    options.user_agent = "test-agent/2";
    options.from_header = "ops@example.org";
    Collecting c;
    harvest(s, c.sink(), options);
    EXPECT_EQ(up.last_user_agent(), "test-agent/2");
    EXPECT_EQ(up.last_from_header(), "ops@example.org");
}

TEST(StoreSink, ProvenanceAndCollisions) {
    fixtures::TempDir dir;
    RecordStore store(dir.path());
    const auto records = corpus(60);
    auto other = corpus(60, 99);  // different content, same identifiers
    other.resize(10);
    fixtures::MockUpstream first(records, {.page_size = 25});
    fixtures::MockUpstream second(other, {.page_size = 25});

    HarvestSession s1;
    s1.base_url = first.base_url();
    const auto r1 = harvest(s1, store_sink(store, s1.base_url, "2003-04-01T00:00:00Z"), quiet_options());
    EXPECT_EQ(r1.records_received, 60u);
    EXPECT_TRUE(r1.collisions.empty());
    const auto stored = store.get_record(records[0].identifier);
    ASSERT_EQ(stored.provenance.size(), 1u);
    const auto info = provenance_info(stored.provenance);
    EXPECT_EQ(info.origin_base_url, first.base_url());
    EXPECT_TRUE(info.identifiers.contains(records[0].identifier));

    // Re-harvesting the same upstream later changes nothing.
    const auto epoch = store.epoch();
    HarvestSession again = s1;
    harvest(again, store_sink(store, s1.base_url, "2003-04-09T00:00:00Z"), quiet_options());
    EXPECT_EQ(store.epoch(), epoch);

    HarvestSession s2;
    s2.base_url = second.base_url();
    const auto r2 = harvest(s2, store_sink(store, s2.base_url, "2003-04-02T00:00:00Z"), quiet_options());
    ASSERT_EQ(r2.collisions.size(), 10u);
    EXPECT_EQ(provenance_info(r2.collisions[0].previous_provenance).origin_base_url, first.base_url());
    EXPECT_EQ(provenance_info(r2.collisions[0].incoming_provenance).origin_base_url, second.base_url());
    EXPECT_EQ(store.get_record(other[0].identifier).dc_fields, other[0].dc_fields);  // last write wins
}

TEST(StoreSink, NestsUpstreamProvenance) {
    MetadataRecord r{"oai:a:1", "2003-01-01", {}, {{"title", "x"}}, {}, false};
    r.provenance = {make_provenance(r, "http://origin.example.org/oai", "2003-01-02T00:00:00Z",
                                    std::string(kOaiDcNamespace))};
    const auto chained = make_provenance(r, "http://middle.example.org/oai", "2003-02-01T00:00:00Z",
                                         std::string(kOaiDcNamespace));
    const auto info = provenance_info(std::vector<std::string>{chained});
    EXPECT_EQ(info.origin_base_url, "http://origin.example.org/oai");
    EXPECT_EQ(info.base_urls, (std::set<std::string>{"http://origin.example.org/oai", "http://middle.example.org/oai"}));
}
