#include "restmorph/mt_model.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <regex>

namespace restmorph {

using nlohmann::json;

// ============================================================================
// Semantic slugs
// ============================================================================

namespace {

std::string to_lower(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

std::string trim(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::string normalize_title(const std::string& title) {
    std::string s = to_lower(title);
    // Drop generator-assigned numbering like "MR 12" / "mr3" so titles that
    // differ only in their label collapse to the same slug. \b keeps the
    // removal token-shaped ("camry 4" and "mri 3" stay intact).
    static const std::regex mr_token(R"(\bmr\s*[0-9]+)");
    s = std::regex_replace(s, mr_token, "");
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            out.push_back(c);
        } else if (!out.empty() && out.back() != '_') {
            out.push_back('_'); // any run of separators collapses to one
        }
    }
    while (!out.empty() && out.back() == '_') out.pop_back();
    return out;
}

Hlmt make_hlmt(std::string id, std::string scenario_title, std::string given_text,
               std::string when_text, std::string then_text, int iteration_index) {
    Hlmt h;
    h.id = std::move(id);
    h.scenario_title = std::move(scenario_title);
    h.given_text = std::move(given_text);
    h.when_text = std::move(when_text);
    h.then_text = std::move(then_text);
    h.iteration_index = iteration_index;
    h.semantic_slug = normalize_title(h.scenario_title);
    return h;
}

std::vector<SemanticGroup> group_semantic(std::span<const Hlmt> hlmts,
                                          const std::string& session_id) {
    std::vector<SemanticGroup> groups;
    std::map<std::string, size_t> index_of;
    for (const auto& h : hlmts) {
        auto it = index_of.find(h.semantic_slug);
        if (it == index_of.end()) {
            it = index_of.emplace(h.semantic_slug, groups.size()).first;
            groups.push_back({h.semantic_slug, {}});
        }
        groups[it->second].members.push_back({session_id, h.iteration_index, h.id});
    }
    return groups;
}

// ============================================================================
// Lenient JSON recovery
// ============================================================================

namespace {

// One left-to-right repair pass over an extracted bracketed region:
// single-quoted strings become double-quoted, unquoted keys get quoted,
// Python literals map to JSON ones, trailing commas vanish, and raw control
// characters inside strings are escaped. Anything else passes through and is
// judged by the strict parse afterwards.
std::string repair_region(const std::string& in) {
    std::string out;
    out.reserve(in.size() + 16);
    bool in_double = false, in_single = false;
    for (size_t i = 0; i < in.size(); ++i) {
        char c = in[i];
        if (in_double || in_single) {
            const char closer = in_double ? '"' : '\'';
            if (c == '\\' && i + 1 < in.size()) {
                char esc = in[i + 1];
                if (in_single && esc == '\'') {
                    out.push_back('\''); // \' is only meaningful inside single quotes
                } else if (in_single && esc == '"') {
                    out += "\\\"";
                } else {
                    out.push_back('\\');
                    out.push_back(esc);
                }
                ++i;
                continue;
            }
            if (c == closer) {
                in_double = in_single = false;
                out.push_back('"');
                continue;
            }
            if (in_single && c == '"') {
                out += "\\\"";
                continue;
            }
            if (c == '\n') { out += "\\n"; continue; }
            if (c == '\r') { out += "\\r"; continue; }
            if (c == '\t') { out += "\\t"; continue; }
            out.push_back(c);
            continue;
        }
        if (c == '"') { in_double = true; out.push_back(c); continue; }
        if (c == '\'') { in_single = true; out.push_back('"'); continue; }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            size_t j = i;
            while (j < in.size() &&
                   (std::isalnum(static_cast<unsigned char>(in[j])) || in[j] == '_')) {
                ++j;
            }
            std::string word = in.substr(i, j - i);
            size_t k = j;
            while (k < in.size() && std::isspace(static_cast<unsigned char>(in[k]))) ++k;
            if (word == "True") {
                out += "true";
            } else if (word == "False") {
                out += "false";
            } else if (word == "None") {
                out += "null";
            } else if (k < in.size() && in[k] == ':' && word != "true" && word != "false" &&
                       word != "null") {
                out += "\"" + word + "\""; // unquoted object key
            } else {
                out += word; // bare value word: left for the strict parse to reject
            }
            i = j - 1;
            continue;
        }
        if (c == ',') {
            size_t k = i + 1;
            while (k < in.size() && std::isspace(static_cast<unsigned char>(in[k]))) ++k;
            if (k < in.size() && (in[k] == '}' || in[k] == ']')) continue; // trailing comma
            out.push_back(c);
            continue;
        }
        out.push_back(c);
    }
    return out;
}

// Extracts the balanced bracketed region starting at `start` (which must hold
// '[' or '{'), honoring strings in both quote styles. Empty on imbalance.
std::string extract_balanced(const std::string& text, size_t start) {
    std::vector<char> stack;
    bool in_double = false, in_single = false;
    for (size_t i = start; i < text.size(); ++i) {
        char c = text[i];
        if (in_double || in_single) {
            if (c == '\\') {
                ++i;
            } else if (in_double && c == '"') {
                in_double = false;
            } else if (in_single && c == '\'') {
                in_single = false;
            }
            continue;
        }
        switch (c) {
        case '"': in_double = true; break;
        case '\'': in_single = true; break;
        case '[': stack.push_back(']'); break;
        case '{': stack.push_back('}'); break;
        case ']':
        case '}':
            if (stack.empty() || stack.back() != c) return ""; // mismatched close
            stack.pop_back();
            if (stack.empty()) return text.substr(start, i - start + 1);
            break;
        default: break;
        }
    }
    return "";
}

// Candidate texts to scan: each ``` fenced block body first, whole text last.
std::vector<std::string> candidate_texts(const std::string& raw) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t open = raw.find("```", pos);
        if (open == std::string::npos) break;
        size_t body = raw.find('\n', open + 3);
        if (body == std::string::npos) break; // fence with no body
        size_t close = raw.find("```", body + 1);
        if (close == std::string::npos) break;
        out.push_back(raw.substr(body + 1, close - body - 1));
        pos = close + 3;
    }
    out.push_back(raw);
    return out;
}

std::optional<json> recover_json(const std::string& raw, char open_char) {
    for (const auto& text : candidate_texts(raw)) {
        for (size_t at = text.find(open_char); at != std::string::npos;
             at = text.find(open_char, at + 1)) {
            const std::string region = extract_balanced(text, at);
            if (region.empty()) continue;
            json parsed = json::parse(repair_region(region), nullptr, /*allow_exceptions=*/false);
            if (parsed.is_discarded()) continue;
            if (open_char == '[' ? parsed.is_array() : parsed.is_object()) return parsed;
        }
    }
    return std::nullopt;
}

} // namespace

std::optional<json> recover_json_array(const std::string& raw) {
    return recover_json(raw, '[');
}

std::optional<json> recover_json_object(const std::string& raw) {
    return recover_json(raw, '{');
}

// ============================================================================
// HLMT list parsing and validation
// ============================================================================

HlmtParse parse_hlmt_list(const std::string& raw_output, int iteration_index) {
    auto arr = recover_json_array(raw_output);
    if (!arr) throw NoArrayFound("no JSON array recoverable from generator output");

    HlmtParse result;
    int index = 0;
    for (const auto& el : *arr) {
        const std::string where = "element " + std::to_string(index++);
        if (!el.is_object()) {
            result.dropped.push_back(where + ": not an object");
            continue;
        }
        std::string id;
        if (el.contains("id")) {
            if (el["id"].is_string()) {
                id = el["id"].get<std::string>();
            } else if (el["id"].is_number_integer()) {
                id = std::to_string(el["id"].get<long long>());
            } else if (el["id"].is_number()) {
                id = el["id"].dump();
            }
        }
        if (id.empty()) {
            result.dropped.push_back(where + ": missing or unusable 'id'");
            continue;
        }
        auto text_field = [&](const char* key) -> std::optional<std::string> {
            if (!el.contains(key) || !el[key].is_string()) return std::nullopt;
            return el[key].get<std::string>();
        };
        auto scenario = text_field("scenario");
        auto given = text_field("given");
        auto when = text_field("when");
        auto then = text_field("then");
        if (!scenario || !given || !when || !then) {
            std::string missing;
            for (const char* key : {"scenario", "given", "when", "then"}) {
                if (!text_field(key)) missing += missing.empty() ? key : std::string(", ") + key;
            }
            result.dropped.push_back(where + " (id " + id + "): missing field(s) " + missing);
            continue;
        }
        result.hlmts.push_back(
            make_hlmt(id, trim(*scenario), trim(*given), trim(*when), trim(*then), iteration_index));
    }
    return result;
}

std::vector<Diagnostic> validate_hlmt(const Hlmt& hlmt, std::span<const Hlmt> iteration_peers) {
    std::vector<Diagnostic> out;
    if (trim(hlmt.id).empty()) out.push_back({"id", "must be non-empty"});
    if (trim(hlmt.scenario_title).empty()) out.push_back({"scenario", "must be non-empty"});
    if (trim(hlmt.given_text).empty()) out.push_back({"given", "must be non-empty"});
    if (trim(hlmt.when_text).empty()) out.push_back({"when", "must be non-empty"});
    if (trim(hlmt.then_text).empty()) out.push_back({"then", "must be non-empty"});
    if (hlmt.semantic_slug != normalize_title(hlmt.scenario_title)) {
        out.push_back({"semantic_slug", "out of sync with scenario title"});
    }
    // iteration_peers is the full batch for the iteration (this HLMT included).
    int same_id = 0;
    for (const auto& p : iteration_peers) {
        if (p.iteration_index == hlmt.iteration_index && p.id == hlmt.id) ++same_id;
    }
    if (same_id >= 2) out.push_back({"id", "duplicate id '" + hlmt.id + "' within iteration"});
    return out;
}

json hlmt_to_json(const Hlmt& h) {
    return json{{"id", h.id},
                {"scenario", h.scenario_title},
                {"given", h.given_text},
                {"when", h.when_text},
                {"then", h.then_text}};
}

json hlmt_list_to_json(std::span<const Hlmt> hlmts) {
    json arr = json::array();
    for (const auto& h : hlmts) arr.push_back(hlmt_to_json(h));
    return arr;
}

} // namespace restmorph
