#include "oaisim/service.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <httplib.h>

#include "oaisim/error.hpp"
#include "oaisim/harvester.hpp"
#include "oaisim/oai_validate.hpp"
#include "oaisim/timefmt.hpp"

namespace oaisim {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

template <typename T>
T parse_number(std::string_view key, std::string_view value, T min, T max) {
    T out{};
    auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
    if (ec != std::errc{} || ptr != value.data() + value.size() || out < min || out > max)
        throw ValidationError("invalid value '" + std::string(value) + "' for " + std::string(key));
    return out;
}

std::uint64_t fnv1a(std::string_view text) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string optional_field(const std::optional<std::string>& v) { return v ? "=" + percent_encode(*v) : ""; }

std::optional<std::string> read_optional_field(std::string_view piece) {
    if (piece.empty()) return std::nullopt;
    if (piece.front() != '=') throw ValidationError("bad token field");
    return percent_decode(piece.substr(1));
}

std::vector<std::string_view> split(std::string_view text, char sep) {
    std::vector<std::string_view> out;
    for (;;) {
        const auto pos = text.find(sep);
        out.push_back(text.substr(0, pos));
        if (pos == std::string_view::npos) return out;
        text.remove_prefix(pos + 1);
    }
}

const std::vector<std::string_view>& legal_arguments(Verb verb) {
    static const std::map<Verb, std::vector<std::string_view>> kLegal = {
        {Verb::Identify, {}},
        {Verb::ListMetadataFormats, {"identifier"}},
        {Verb::ListSets, {"resumptionToken"}},
        {Verb::ListIdentifiers, {"metadataPrefix", "from", "until", "set", "resumptionToken"}},
        {Verb::ListRecords, {"metadataPrefix", "from", "until", "set", "resumptionToken"}},
        {Verb::GetRecord, {"identifier", "metadataPrefix"}},
    };
    return kLegal.at(verb);
}

std::optional<std::string> argument(const QueryArgs& args, std::string_view key) {
    for (const auto& [k, v] : args)
        if (k == key) return v;
    return std::nullopt;
}

}  // namespace

std::string ServiceConfig::schema_url() const {
    try {
        return parse_http_url(base_url).origin() + schema_path;
    } catch (const ValidationError&) {
        return schema_path;
    }
}

const std::vector<std::string_view>& config_keys() {
    static const std::vector<std::string_view> kKeys = {
        "bind_address", "port",     "repository_name", "base_url",    "admin_email", "k",
        "store_root",   "page_size", "oai_path",       "schema_path", "similar_path"};
    return kKeys;
}

void apply_setting(ServiceConfig& config, std::string_view key, std::string_view value) {
    if (key == "bind_address") config.bind_address = std::string(value);
    else if (key == "port") config.port = parse_number<std::uint16_t>(key, value, 0, 65535);
    else if (key == "repository_name") config.repository_name = std::string(value);
    else if (key == "base_url") config.base_url = std::string(value);
    else if (key == "admin_email") config.admin_emails = {std::string(value)};
    else if (key == "k") config.k = parse_number<std::size_t>(key, value, 1, 100000);
    else if (key == "store_root") config.store_root = std::string(value);
    else if (key == "page_size") config.page_size = parse_number<std::size_t>(key, value, 1, 1000000);
    else if (key == "oai_path") config.oai_path = std::string(value);
    else if (key == "schema_path") config.schema_path = std::string(value);
    else if (key == "similar_path") config.similar_path = std::string(value);
    else throw ValidationError("unknown configuration key '" + std::string(key) + "'");
}

ServiceConfig parse_config(std::string_view text) {
    ServiceConfig config;
    bool saw_email = false;
    std::size_t line_no = 0;
    for (auto line : split(text, '\n')) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ValidationError("config line " + std::to_string(line_no) + " is not key = value");
        const auto key = trim(line.substr(0, eq));
        const auto value = trim(line.substr(eq + 1));
        if (key == "admin_email" && saw_email) {
            config.admin_emails.emplace_back(value);
            continue;
        }
        apply_setting(config, key, value);
        saw_email = saw_email || key == "admin_email";
    }
    return config;
}

ServiceConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw StorageError("cannot read config " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string encode_resumption_token(const ListState& state) {
    std::string body = std::to_string(state.epoch) + "!" + std::to_string(state.cursor) + "!" +
                       percent_encode(state.metadata_prefix) + "!" + optional_field(state.filter.from) + "!" +
                       optional_field(state.filter.until) + "!" + optional_field(state.filter.set);
    char check[17];
    std::snprintf(check, sizeof check, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    return body + "!" + check;
}

std::optional<ListState> decode_resumption_token(std::string_view token) {
    const auto parts = split(token, '!');
    if (parts.size() != 7) return std::nullopt;
    const auto body = token.substr(0, token.size() - parts[6].size() - 1);
    char check[17];
    std::snprintf(check, sizeof check, "%016llx", static_cast<unsigned long long>(fnv1a(body)));
    if (parts[6] != check) return std::nullopt;
    try {
        ListState state;
        state.epoch = parse_number<std::uint64_t>("epoch", parts[0], 0, UINT64_MAX);
        state.cursor = parse_number<std::uint64_t>("cursor", parts[1], 0, UINT64_MAX);
        state.metadata_prefix = percent_decode(parts[2]);
        state.filter.from = read_optional_field(parts[3]);
        state.filter.until = read_optional_field(parts[4]);
        state.filter.set = read_optional_field(parts[5]);
        return state;
    } catch (const ValidationError&) {
        return std::nullopt;
    }
}

std::vector<DuplicateEntry> duplicate_report(const RecordStore& store, double threshold, unsigned jobs) {
    if (std::isnan(threshold)) throw ValidationError("threshold is not a number");
    const auto corpus = load_weighted_corpus(store);
    std::vector<DuplicateEntry> out;
    PairOptions options;
    options.jobs = jobs;
    all_pairs(corpus, options, [&](const IndexPair& p) {
        if (p.score >= threshold) out.push_back({corpus.identifier(p.a), corpus.identifier(p.b), p.score, false});
    });
    std::stable_sort(out.begin(), out.end(),
                     [](const DuplicateEntry& x, const DuplicateEntry& y) { return x.score > y.score; });
    std::map<std::string, ProvenanceInfo> info;
    auto info_for = [&](const std::string& id) -> const ProvenanceInfo& {
        auto it = info.find(id);
        if (it == info.end()) it = info.emplace(id, provenance_info(store.get_record(id).provenance)).first;
        return it->second;
    };
    for (auto& entry : out) {
        const auto& a = info_for(entry.id_a);
        const auto& b = info_for(entry.id_b);
        entry.provenance_linked = a.identifiers.contains(entry.id_b) || b.identifiers.contains(entry.id_a) ||
                                  (a.origin_base_url && b.origin_base_url && *a.origin_base_url == *b.origin_base_url);
    }
    return out;
}

AggregatorService::AggregatorService(ServiceConfig config) : config_(std::move(config)) { reload(); }

std::shared_ptr<const AggregatorService::Snapshot> AggregatorService::build_snapshot() const {
    RecordStore store(config_.store_root);
    auto snap = std::make_shared<Snapshot>();
    snap->epoch = store.epoch();
    snap->state = store.derived_state();
    snap->computed_at = store.computed_at();
    snap->summaries = store.summaries();
    for (const auto& [id, summary] : snap->summaries) snap->records.emplace(id, store.get_record(id));
    if (snap->state == DerivedState::fresh) {
        try {
            snap->corpus = load_weighted_corpus(store);
        } catch (const StaleError&) {
            snap->state = DerivedState::stale;
        }
    }
    return snap;
}

void AggregatorService::reload() {
    auto fresh = build_snapshot();
    std::lock_guard lock(snapshot_mutex_);
    snapshot_ = std::move(fresh);
}

void AggregatorService::refresh() {
    const auto snap = current();
    RecordStore probe(config_.store_root);
    if (probe.epoch() != snap->epoch || probe.derived_state() != snap->state ||
        probe.computed_at() != snap->computed_at)
        reload();
}

std::shared_ptr<const AggregatorService::Snapshot> AggregatorService::current() const {
    std::lock_guard lock(snapshot_mutex_);
    return snapshot_;
}

bool AggregatorService::has_similarity() const { return current()->corpus.has_value(); }

std::uint64_t AggregatorService::epoch() const { return current()->epoch; }

ResponseHeader AggregatorService::header_for(const QueryArgs& args) const {
    ResponseHeader header;
    header.request.base_url = config_.base_url;
    header.request.arguments = args;
    header.similarity_schema_location = config_.schema_url();
    return header;
}

HttpReply AggregatorService::error_reply(const QueryArgs& args, OaiErrorCode code, std::string message) const {
    return {200, "text/xml; charset=utf-8", serialize_error(OaiError{code, std::move(message)}, header_for(args))};
}

HttpReply AggregatorService::handle_request(const QueryArgs& args) {
    refresh();
    const auto snap = current();

    std::vector<std::string> verbs;
    for (const auto& [k, v] : args)
        if (k == "verb") verbs.push_back(v);
    if (verbs.size() != 1) return error_reply(args, OaiErrorCode::badVerb, "exactly one verb argument is required");
    const auto verb = parse_verb(verbs.front());
    if (!verb) return error_reply(args, OaiErrorCode::badVerb, "'" + verbs.front() + "' is not an OAI-PMH verb");

    const auto& legal = legal_arguments(*verb);
    std::set<std::string> seen;
    for (const auto& [k, v] : args) {
        if (k == "verb") continue;
        if (std::find(legal.begin(), legal.end(), k) == legal.end())
            return error_reply(args, OaiErrorCode::badArgument, "illegal argument '" + k + "'");
        if (!seen.insert(k).second) return error_reply(args, OaiErrorCode::badArgument, "repeated argument '" + k + "'");
    }
    const auto header = header_for(args);

    switch (*verb) {
        case Verb::Identify: {
            RepositoryIdentity id;
            id.repository_name = config_.repository_name;
            id.base_url = config_.base_url;
            id.admin_emails = config_.admin_emails;
            std::optional<std::int64_t> earliest;
            for (const auto& [rid, s] : snap->summaries)
                if (const auto stamp = parse_utc(s.datestamp); stamp && (!earliest || stamp->seconds < *earliest))
                    earliest = stamp->seconds;
            id.earliest_datestamp = format_utc(earliest.value_or(0));
            return {200, "text/xml; charset=utf-8", serialize_identify(id, header)};
        }
        case Verb::ListMetadataFormats: {
            if (const auto id = argument(args, "identifier"); id && !snap->records.contains(*id))
                return error_reply(args, OaiErrorCode::idDoesNotExist, "no record " + *id);
            const MetadataFormat formats[] = {oai_dc_format()};
            return {200, "text/xml; charset=utf-8", serialize_list_metadata_formats(formats, header)};
        }
        case Verb::ListSets: {
            if (argument(args, "resumptionToken"))
                return error_reply(args, OaiErrorCode::badResumptionToken, "set lists are never paged");
            std::set<std::string> specs;
            for (const auto& [rid, s] : snap->summaries) specs.insert(s.set_specs.begin(), s.set_specs.end());
            if (specs.empty()) return error_reply(args, OaiErrorCode::noSetHierarchy, "repository has no sets");
            std::vector<SetEntry> sets;
            for (const auto& spec : specs) sets.push_back({spec, spec});
            return {200, "text/xml; charset=utf-8", serialize_list_sets(sets, std::nullopt, header)};
        }
        case Verb::ListIdentifiers:
        case Verb::ListRecords:
            return list(*snap, args, *verb);
        case Verb::GetRecord: {
            const auto id = argument(args, "identifier");
            const auto prefix = argument(args, "metadataPrefix");
            if (!id || !prefix)
                return error_reply(args, OaiErrorCode::badArgument, "GetRecord requires identifier and metadataPrefix");
            const auto it = snap->records.find(*id);
            if (it == snap->records.end()) return error_reply(args, OaiErrorCode::idDoesNotExist, "no record " + *id);
            if (*prefix != "oai_dc")
                return error_reply(args, OaiErrorCode::cannotDisseminateFormat, "only oai_dc is disseminated");
            std::optional<SimilarityAbout> about;
            if (!it->second.deleted && snap->corpus && snap->corpus->index_of(*id)) {
                const auto matches = top_k(*snap->corpus, *id, config_.k);
                about = build_similarity_about(*id, matches, config_.k, snap->computed_at.value_or(utc_now()));
            }
            return {200, "text/xml; charset=utf-8", serialize_get_record(it->second, about, header)};
        }
    }
    return error_reply(args, OaiErrorCode::badVerb, "unsupported verb");
}

HttpReply AggregatorService::list(const Snapshot& snap, const QueryArgs& args, Verb verb) {
    ListState state;
    if (const auto token = argument(args, "resumptionToken")) {
        if (args.size() != 2)
            return error_reply(args, OaiErrorCode::badArgument, "resumptionToken is an exclusive argument");
        const auto decoded = decode_resumption_token(*token);
        if (!decoded) return error_reply(args, OaiErrorCode::badResumptionToken, "unrecognized resumption token");
        if (decoded->epoch != snap.epoch)
            return error_reply(args, OaiErrorCode::badResumptionToken, "resumption token predates a corpus change");
        state = *decoded;
    } else {
        const auto prefix = argument(args, "metadataPrefix");
        if (!prefix) return error_reply(args, OaiErrorCode::badArgument, "metadataPrefix is required");
        state.metadata_prefix = *prefix;
        state.filter.from = argument(args, "from");
        state.filter.until = argument(args, "until");
        state.filter.set = argument(args, "set");
        std::optional<UtcStamp> from, until;
        if (state.filter.from && !(from = parse_utc(*state.filter.from)))
            return error_reply(args, OaiErrorCode::badArgument, "illegal from datestamp");
        if (state.filter.until && !(until = parse_utc(*state.filter.until)))
            return error_reply(args, OaiErrorCode::badArgument, "illegal until datestamp");
        if (from && until && from->granularity != until->granularity)
            return error_reply(args, OaiErrorCode::badArgument, "from and until granularities differ");
        if (from && until && from->seconds > until->seconds)
            return error_reply(args, OaiErrorCode::badArgument, "from is later than until");
        if (state.metadata_prefix != "oai_dc")
            return error_reply(args, OaiErrorCode::cannotDisseminateFormat, "only oai_dc is disseminated");
        if (state.filter.set) {
            const bool any_sets = std::any_of(snap.summaries.begin(), snap.summaries.end(),
                                              [](const auto& kv) { return !kv.second.set_specs.empty(); });
            if (!any_sets) return error_reply(args, OaiErrorCode::noSetHierarchy, "repository has no sets");
        }
        state.epoch = snap.epoch;
    }

    const auto ids = filter_identifiers(snap.summaries, state.filter);
    if (ids.empty()) return error_reply(args, OaiErrorCode::noRecordsMatch, "no records match");
    if (state.cursor >= ids.size())
        return error_reply(args, OaiErrorCode::badResumptionToken, "resumption token cursor out of range");

    const std::size_t end = std::min<std::size_t>(ids.size(), state.cursor + config_.page_size);
    std::vector<MetadataRecord> page;
    for (std::size_t i = state.cursor; i < end; ++i) page.push_back(snap.records.at(ids[i]));

    std::optional<ResumptionToken> token;
    if (end < ids.size() || state.cursor > 0) {
        token.emplace();
        token->complete_list_size = ids.size();
        token->cursor = state.cursor;
        if (end < ids.size()) {
            ListState next = state;
            next.cursor = end;
            token->value = encode_resumption_token(next);
        }
    }
    const auto header = header_for(args);
    const std::string body = verb == Verb::ListRecords ? serialize_list_records(page, token, header)
                                                       : serialize_list_identifiers(page, token, header);
    return {200, "text/xml; charset=utf-8", body};
}

HttpReply AggregatorService::handle_similar(const QueryArgs& args) {
    refresh();
    const auto snap = current();
    const auto id = argument(args, "identifier");
    if (!id) return {400, "text/plain; charset=utf-8", "identifier is required\n"};
    std::size_t k = config_.k;
    if (const auto kv = argument(args, "k")) {
        try {
            k = parse_number<std::size_t>("k", *kv, 1, 100000);
        } catch (const ValidationError& e) {
            return {400, "text/plain; charset=utf-8", std::string(e.what()) + "\n"};
        }
    }
    if (!snap->records.contains(*id)) return {404, "text/plain; charset=utf-8", "no record " + *id + "\n"};
    if (!snap->corpus)
        return {503, "text/plain; charset=utf-8", "similarity results are stale or absent; run compute\n"};
    if (!snap->corpus->index_of(*id)) return {404, "text/plain; charset=utf-8", "no similarity data for " + *id + "\n"};
    const auto about = build_similarity_about(*id, top_k(*snap->corpus, *id, k), k, snap->computed_at.value_or(utc_now()));
    return {200, "text/xml; charset=utf-8", serialize_similarity_document(about, config_.schema_url())};
}

HttpReply AggregatorService::serve_similarity_schema() const {
    return {200, "text/xml; charset=utf-8", std::string(similarity_schema())};
}

void AggregatorService::mount(httplib::Server& server) {
    auto raw_query = [](const httplib::Request& req) {
        const auto q = req.target.find('?');
        return q == std::string::npos ? std::string_view{} : std::string_view(req.target).substr(q + 1);
    };
    auto send = [](httplib::Response& res, const HttpReply& reply) {
        res.status = reply.status;
        res.set_content(reply.body, reply.content_type);
    };
    auto oai = [this, raw_query, send](const httplib::Request& req, httplib::Response& res) {
        QueryArgs args;
        try {
            args = parse_query(raw_query(req));
            if (req.method == "POST") {
                const auto body_args = parse_query(req.body);
                args.insert(args.end(), body_args.begin(), body_args.end());
            }
        } catch (const ValidationError& e) {
            send(res, error_reply({}, OaiErrorCode::badArgument, e.what()));
            return;
        }
        send(res, handle_request(args));
    };
    server.Get(config_.oai_path, oai);
    server.Post(config_.oai_path, oai);
    server.Get(config_.schema_path,
               [this, send](const httplib::Request&, httplib::Response& res) { send(res, serve_similarity_schema()); });
    server.Get(config_.similar_path, [this, raw_query, send](const httplib::Request& req, httplib::Response& res) {
        try {
            send(res, handle_similar(parse_query(raw_query(req))));
        } catch (const ValidationError& e) {
            send(res, {400, "text/plain; charset=utf-8", std::string(e.what()) + "\n"});
        }
    });
}

}  // namespace oaisim
