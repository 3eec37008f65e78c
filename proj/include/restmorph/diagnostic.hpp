#pragma once

#include <string>
#include <vector>

namespace restmorph {

// A non-fatal finding attached to a specific location in some artifact
// (an HLMT field, a plan step, a dropped candidate). Diagnostics are data:
// they travel in reports and repair prompts instead of being thrown.
struct Diagnostic {
    std::string where;  // e.g. "given_steps[1]", "id", "candidate MR4"
    std::string reason; // human-readable explanation

    std::string str() const { return where + ": " + reason; }

    bool operator==(const Diagnostic&) const = default;
};

inline std::vector<std::string> diagnostic_lines(const std::vector<Diagnostic>& ds) {
    std::vector<std::string> out;
    out.reserve(ds.size());
    for (const auto& d : ds) out.push_back(d.str());
    return out;
}

} // namespace restmorph
