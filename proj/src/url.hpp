#pragma once

#include <string>

namespace restmorph {

// "http://host:8080/api/v3" -> { "http://host:8080", "/api/v3" }.
// The origin feeds httplib::Client; the prefix is prepended to request paths
// so templates and coverage keys stay prefix-free.
struct UrlParts {
    std::string origin;
    std::string path_prefix;
};

inline UrlParts split_url(const std::string& url) {
    std::string u = url;
    if (u.find("://") == std::string::npos) u = "http://" + u;
    const size_t scheme_end = u.find("://") + 3;
    const size_t path_start = u.find('/', scheme_end);
    UrlParts parts;
    if (path_start == std::string::npos) {
        parts.origin = u;
    } else {
        parts.origin = u.substr(0, path_start);
        parts.path_prefix = u.substr(path_start);
    }
    while (!parts.path_prefix.empty() && parts.path_prefix.back() == '/') {
        parts.path_prefix.pop_back();
    }
    return parts;
}

} // namespace restmorph
