#include "oaisim/url.hpp"

#include <charconv>

#include "oaisim/error.hpp"

namespace oaisim {

namespace {

bool is_unreserved(unsigned char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '-' ||
           c == '.' || c == '_' || c == '~';
}

int hex_value(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

}  // namespace

std::string percent_encode(std::string_view text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        if (is_unreserved(c)) {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

std::string percent_decode(std::string_view text, bool plus_as_space) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '%') {
            if (i + 2 >= text.size())
                throw ValidationError("truncated percent escape");
            const int hi = hex_value(text[i + 1]);
            const int lo = hex_value(text[i + 2]);
            if (hi < 0 || lo < 0) throw ValidationError("invalid percent escape");
            out.push_back(static_cast<char>(hi * 16 + lo));
            i += 2;
        } else if (c == '+' && plus_as_space) {
            out.push_back(' ');
        } else {
            out.push_back(c);
        }
    }
    return out;
}

std::string encode_query_component(std::string_view text) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(text.size());
    for (unsigned char c : text) {
        if (is_unreserved(c) || c == ':' || c == '/' || c == '@') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(kHex[c >> 4]);
            out.push_back(kHex[c & 0xF]);
        }
    }
    return out;
}

std::string encode_query(const QueryArgs& args) {
    std::string out;
    for (const auto& [key, value] : args) {
        if (!out.empty()) out.push_back('&');
        out += encode_query_component(key);
        out.push_back('=');
        out += encode_query_component(value);
    }
    return out;
}

QueryArgs parse_query(std::string_view query) {
    QueryArgs args;
    while (!query.empty()) {
        const auto amp = query.find('&');
        const std::string_view piece = query.substr(0, amp);
        if (!piece.empty()) {
            const auto eq = piece.find('=');
            if (eq == std::string_view::npos)
                args.emplace_back(percent_decode(piece, true), std::string{});
            else
                args.emplace_back(percent_decode(piece.substr(0, eq), true),
                                  percent_decode(piece.substr(eq + 1), true));
        }
        if (amp == std::string_view::npos) break;
        query.remove_prefix(amp + 1);
    }
    return args;
}

std::string HttpUrl::origin() const {
    return scheme + "://" + host + (port == 80 ? std::string{} : ":" + std::to_string(port));
}

HttpUrl parse_http_url(std::string_view url) {
    constexpr std::string_view kPrefix = "http://";
    if (url.substr(0, kPrefix.size()) != kPrefix)
        throw ValidationError("only absolute http:// URLs are supported: " + std::string(url));
    std::string_view rest = url.substr(kPrefix.size());
    const auto slash = rest.find_first_of("/?");
    std::string_view authority = rest.substr(0, slash);
    std::string_view path = slash == std::string_view::npos ? std::string_view{"/"} : rest.substr(slash);
    if (authority.empty()) throw ValidationError("URL has no host: " + std::string(url));

    HttpUrl out;
    out.scheme = "http";
    const auto colon = authority.rfind(':');
    if (colon != std::string_view::npos && authority.find(']') == std::string_view::npos) {
        unsigned port = 0;
        const auto port_text = authority.substr(colon + 1);
        auto [ptr, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
        if (ec != std::errc{} || ptr != port_text.data() + port_text.size() || port == 0 || port > 65535)
            throw ValidationError("bad port in URL: " + std::string(url));
        out.port = static_cast<std::uint16_t>(port);
        authority = authority.substr(0, colon);
    }
    out.host = std::string(authority);
    out.path = std::string(path);
    if (out.path.find('?') != std::string::npos)
        throw ValidationError("base URL must not carry a query string: " + std::string(url));
    return out;
}

}  // namespace oaisim
