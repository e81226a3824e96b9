#include "oaisim/harvester.hpp"

#include <algorithm>
#include <thread>
#include <unordered_set>

#include <httplib.h>

#include "oaisim/oai_xml.hpp"
#include "oaisim/record_store.hpp"
#include "oaisim/timefmt.hpp"
#include "xml_dom.hpp"

namespace oaisim {

namespace {

bool has(const QueryArgs& args, std::string_view key) {
    return std::any_of(args.begin(), args.end(), [&](const auto& kv) { return kv.first == key; });
}

}  // namespace

void validate(const HarvestSession& session) {
    parse_http_url(session.base_url);
    if (session.metadata_prefix.empty()) throw ValidationError("empty metadataPrefix");
    std::optional<UtcStamp> from, until;
    if (session.from && !(from = parse_utc(*session.from)))
        throw ValidationError("invalid from datestamp '" + *session.from + "'");
    if (session.until && !(until = parse_utc(*session.until)))
        throw ValidationError("invalid until datestamp '" + *session.until + "'");
    if (from && until) {
        if (from->granularity != until->granularity)
            throw ValidationError("from and until must share a granularity");
        if (from->seconds > until->seconds) throw ValidationError("from is later than until");
    }
}

std::string build_request_url(const HarvestSession& session, Verb verb, const QueryArgs& arguments) {
    std::vector<std::string_view> allowed;
    std::vector<std::string_view> required;
    switch (verb) {
        case Verb::Identify: break;
        case Verb::ListMetadataFormats: allowed = {"identifier"}; break;
        case Verb::ListSets: allowed = {"resumptionToken"}; break;
        case Verb::ListIdentifiers:
        case Verb::ListRecords:
            allowed = {"metadataPrefix", "from", "until", "set", "resumptionToken"};
            required = {"metadataPrefix"};
            break;
        case Verb::GetRecord:
            allowed = {"identifier", "metadataPrefix"};
            required = {"identifier", "metadataPrefix"};
            break;
    }
    std::unordered_set<std::string> seen;
    for (const auto& [key, value] : arguments) {
        if (key == "verb") throw ValidationError("verb is supplied separately");
        if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
            throw ValidationError("argument '" + key + "' is not legal for " + std::string(to_string(verb)));
        if (!seen.insert(key).second) throw ValidationError("argument '" + key + "' repeated");
    }
    if (has(arguments, "resumptionToken")) {
        if (arguments.size() != 1) throw ValidationError("resumptionToken is an exclusive argument");
    } else {
        for (auto key : required)
            if (!has(arguments, key))
                throw ValidationError(std::string(to_string(verb)) + " requires " + std::string(key));
    }
    parse_http_url(session.base_url);
    QueryArgs query{{"verb", std::string(to_string(verb))}};
    query.insert(query.end(), arguments.begin(), arguments.end());
    return session.base_url + "?" + encode_query(query);
}

HttpFetcher http_fetcher(const HarvestOptions& options) {
    return [options](const std::string& url) {
        HttpResponse out;
        const auto q = url.find('?');
        const auto parsed = parse_http_url(url.substr(0, q));
        httplib::Client client(parsed.host, parsed.port);
        client.set_connection_timeout(options.timeout);
        client.set_read_timeout(options.timeout);
        httplib::Headers headers{{"User-Agent", options.user_agent}};
        if (options.from_header) headers.emplace("From", *options.from_header);
        const std::string target = parsed.path + (q == std::string::npos ? std::string{} : url.substr(q));
        auto result = client.Get(target, headers);
        if (!result) {
            out.error = httplib::to_string(result.error());
            return out;
        }
        out.status = result->status;
        out.body = std::move(result->body);
        if (result->has_header("Retry-After")) out.retry_after = result->get_header_value("Retry-After");
        return out;
    };
}

std::chrono::milliseconds retry_delay(const HarvestOptions& options, int attempt,
                                      const std::optional<std::string>& retry_after) {
    using std::chrono::milliseconds;
    if (retry_after) {
        const std::string& text = *retry_after;
        if (!text.empty() && std::all_of(text.begin(), text.end(), [](char c) { return c >= '0' && c <= '9'; })) {
            const auto seconds = std::stoll(text.substr(0, 9));
            return std::min(milliseconds(seconds * 1000), options.backoff_cap);
        }
    }
    auto delay = options.backoff_base;
    for (int i = 1; i < attempt && delay < options.backoff_cap; ++i) delay *= 2;
    return std::min(delay, options.backoff_cap);
}

HarvestReport harvest(HarvestSession& session, const RecordSink& sink, const HarvestOptions& options) {
    validate(session);
    const HttpFetcher fetch = options.fetcher ? options.fetcher : http_fetcher(options);
    const auto sleep = options.sleep ? options.sleep
                                     : std::function<void(std::chrono::milliseconds)>(
                                           [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); });

    HarvestReport report;
    std::unordered_set<std::string> delivered;
    std::optional<std::string> previous_token;
    int repeats = 0;

    for (;;) {
        QueryArgs args;
        if (session.cursor) {
            args.emplace_back("resumptionToken", *session.cursor);
        } else {
            args.emplace_back("metadataPrefix", session.metadata_prefix);
            if (session.from) args.emplace_back("from", *session.from);
            if (session.until) args.emplace_back("until", *session.until);
            if (session.set) args.emplace_back("set", *session.set);
        }
        const std::string url = build_request_url(session, Verb::ListRecords, args);

        HttpResponse response;
        for (int attempt = 1;; ++attempt) {
            response = fetch(url);
            if (response.status == 200) break;
            const bool retryable = response.status == 0 || response.status == 503;
            const std::string detail = response.status == 0 ? "transport failure: " + response.error
                                                             : "HTTP " + std::to_string(response.status);
            if (!retryable || attempt >= options.max_attempts)
                throw HarvestError(HarvestError::Kind::resumable,
                                   detail + " fetching " + url + " (after " + std::to_string(attempt) + " attempts)",
                                   report, session.cursor);
            ++report.retries;
            sleep(retry_delay(options, attempt, response.status == 503 ? response.retry_after : std::nullopt));
        }

        ParsedResponse page;
        try {
            page = parse_response(response.body, Verb::ListRecords);
        } catch (const Error& e) {
            throw HarvestError(HarvestError::Kind::protocol, std::string("unusable response: ") + e.what(), report,
                               session.cursor);
        }
        ++report.pages_fetched;

        if (!page.errors.empty()) {
            const auto& first = page.errors.front();
            if (first.code == OaiErrorCode::noRecordsMatch) return report;
            if (first.code == OaiErrorCode::badResumptionToken)
                throw HarvestError(HarvestError::Kind::restart_required,
                                   "upstream rejected resumption token; restart the harvest from scratch", report,
                                   std::nullopt);
            throw HarvestError(HarvestError::Kind::upstream,
                               "upstream error " + std::string(to_string(first.code)) + ": " + first.message, report,
                               session.cursor);
        }

        for (auto& entry : page.records) {
            if (!delivered.insert(entry.record.identifier).second) {
                report.duplicate_identifiers.push_back(entry.record.identifier);
                continue;
            }
            const auto result = sink(entry.record);
            ++report.records_received;
            ++session.records_received;
            if (result.collision)
                report.collisions.push_back({entry.record.identifier, result.previous_provenance,
                                             result.stored_provenance});
        }

        if (!page.resumption_token || !page.resumption_token->has_more()) {
            session.cursor.reset();
            return report;
        }
        const auto& token = page.resumption_token->value;
        if (previous_token && *previous_token == token) {
            if (++repeats >= options.max_token_repeats)
                throw HarvestError(HarvestError::Kind::protocol,
                                   "upstream repeated resumption token '" + token + "' " +
                                       std::to_string(repeats + 1) + " times",
                                   report, session.cursor);
        } else {
            repeats = 0;
        }
        previous_token = token;
        session.cursor = token;
    }
}

std::string make_provenance(const MetadataRecord& record, const std::string& base_url,
                            const std::string& harvest_date, const std::string& metadata_namespace) {
    std::string inner;
    for (const auto& block : record.provenance) {
        const auto root = xml::parse(block);
        if (const auto* od = root->child(std::string(kProvenanceNamespace), "originDescription")) {
            inner = xml::canonicalize(*od);
            break;
        }
    }
    std::string out = "<provenance xmlns=\"" + std::string(kProvenanceNamespace) + "\">";
    out += "<originDescription harvestDate=\"" + xml::escape_attribute(harvest_date) + "\" altered=\"false\">";
    out += "<baseURL>" + xml::escape_text(base_url) + "</baseURL>";
    out += "<identifier>" + xml::escape_text(record.identifier) + "</identifier>";
    out += "<datestamp>" + xml::escape_text(record.datestamp) + "</datestamp>";
    out += "<metadataNamespace>" + xml::escape_text(metadata_namespace) + "</metadataNamespace>";
    out += inner;
    out += "</originDescription></provenance>";
    return xml::canonicalize(*xml::parse(out));
}

ProvenanceInfo provenance_info(std::span<const std::string> blocks) {
    ProvenanceInfo info;
    const std::string ns(kProvenanceNamespace);
    for (const auto& block : blocks) {
        const auto root = xml::parse(block);
        const xml::Element* od = root->child(ns, "originDescription");
        while (od != nullptr) {
            if (const auto* b = od->child(ns, "baseURL")) {
                info.base_urls.insert(b->text());
                info.origin_base_url = b->text();
            }
            if (const auto* id = od->child(ns, "identifier")) info.identifiers.insert(id->text());
            od = od->child(ns, "originDescription");
        }
    }
    return info;
}

RecordSink store_sink(RecordStore& store, std::string base_url, std::string harvest_date) {
    return [&store, base_url = std::move(base_url), harvest_date = std::move(harvest_date)](const MetadataRecord& in) {
        MetadataRecord record = in;
        if (!record.deleted) {
            record.provenance = {make_provenance(in, base_url, harvest_date, std::string(kOaiDcNamespace))};
        }
        IngestResult result;
        if (store.contains(record.identifier)) {
            // Same metadata from the same chain of repositories: only harvestDate would change.
            const auto held = store.get_record(record.identifier);
            const auto held_info = provenance_info(held.provenance);
            const auto new_info = provenance_info(record.provenance);
            if (held.datestamp == record.datestamp && held.set_specs == record.set_specs &&
                held.dc_fields == record.dc_fields && held.deleted == record.deleted &&
                held_info.base_urls == new_info.base_urls && held_info.identifiers == new_info.identifiers) {
                result.status = IngestStatus::unchanged;
                result.stored_provenance = held.provenance;
                return result;
            }
        }
        auto put = store.put_record(record);
        result.stored_provenance = record.provenance;
        switch (put.status) {
            case PutStatus::created: result.status = IngestStatus::created; break;
            case PutStatus::unchanged: result.status = IngestStatus::unchanged; break;
            case PutStatus::replaced: {
                result.status = IngestStatus::replaced;
                result.previous_provenance = put.previous->provenance;
                const auto before = provenance_info(result.previous_provenance);
                const auto after = provenance_info(result.stored_provenance);
                result.collision = before.origin_base_url.has_value() && before.base_urls != after.base_urls;
                break;
            }
        }
        return result;
    };
}

}  // namespace oaisim
