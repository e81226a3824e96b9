#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace oaisim {

using QueryArgs = std::vector<std::pair<std::string, std::string>>;

/// Percent-encodes every byte outside the RFC 3986 unreserved set.
std::string percent_encode(std::string_view text);

/// Decodes %XX escapes; `plus_as_space` applies form-encoding rules.
/// Throws ValidationError on a truncated or non-hex escape.
std::string percent_decode(std::string_view text, bool plus_as_space = false);

/// Like percent_encode but keeps ':', '/' and '@', which are legal in a query.
std::string encode_query_component(std::string_view text);

std::string encode_query(const QueryArgs& args);
QueryArgs parse_query(std::string_view query);

struct HttpUrl {
    std::string scheme;
    std::string host;
    std::uint16_t port = 80;
    std::string path;  // always begins with '/'

    std::string origin() const;
};

/// Throws ValidationError unless `url` is an absolute http:// URL.
HttpUrl parse_http_url(std::string_view url);

}  // namespace oaisim
