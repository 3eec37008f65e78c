#include "restmorph/emt_plan.hpp"

#include <algorithm>
#include <cctype>
#include <regex>
#include <set>

namespace restmorph {

using nlohmann::json;

// ============================================================================
// Relation kinds
// ============================================================================

std::string relation_kind_text(RelationKind k) {
    switch (k) {
    case RelationKind::Equality: return "equality";
    case RelationKind::Difference: return "difference";
    case RelationKind::Inclusion: return "inclusion";
    case RelationKind::Exclusion: return "exclusion";
    case RelationKind::CountDelta: return "count-delta";
    }
    return "equality";
}

std::optional<RelationKind> parse_relation_kind(const std::string& text) {
    if (text == "equality") return RelationKind::Equality;
    if (text == "difference") return RelationKind::Difference;
    if (text == "inclusion") return RelationKind::Inclusion;
    if (text == "exclusion") return RelationKind::Exclusion;
    if (text == "count-delta" || text == "count_delta") return RelationKind::CountDelta;
    return std::nullopt;
}

// ============================================================================
// Value paths
// ============================================================================

ValuePath ValuePath::parse(const std::string& text) {
    ValuePath vp;
    if (text.empty()) return vp; // whole body
    std::vector<std::string> parts;
    size_t i = 0;
    while (i <= text.size()) {
        size_t next = text.find('/', i);
        if (next == std::string::npos) {
            parts.push_back(text.substr(i));
            break;
        }
        parts.push_back(text.substr(i, next - i));
        i = next + 1;
    }
    size_t begin = 0;
    if (!parts.empty() && parts[0] == "headers") {
        vp.root = Root::Headers;
        begin = 1;
    } else if (!parts.empty() && parts[0] == "body") {
        begin = 1;
    }
    size_t end = parts.size();
    if (end > begin && parts[end - 1] == "#count") {
        vp.count = true;
        --end;
    }
    for (size_t k = begin; k < end; ++k) {
        if (parts[k].empty()) throw PlanParseError("value path has empty segment: " + text);
        if (parts[k].front() == '#') {
            throw PlanParseError("'#count' is only valid as the final segment: " + text);
        }
        vp.segments.push_back(parts[k]);
    }
    return vp;
}

std::string ValuePath::str() const {
    std::vector<std::string> parts;
    if (root == Root::Headers) parts.push_back("headers");
    parts.insert(parts.end(), segments.begin(), segments.end());
    if (count) parts.push_back("#count");
    std::string out;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (i) out += "/";
        out += parts[i];
    }
    return out;
}

// ============================================================================
// Wire format
// ============================================================================

namespace {

// "${name}" in exact-match position.
std::optional<std::string> parse_ref(const json& v) {
    if (!v.is_string()) return std::nullopt;
    const std::string& s = v.get_ref<const std::string&>();
    if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}') {
        std::string name = s.substr(2, s.size() - 3);
        if (name.find('}') == std::string::npos && !name.empty()) return name;
    }
    return std::nullopt;
}

std::string require_string(const json& j, const char* key, const std::string& where) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw PlanParseError(where + ": missing or non-string '" + key + "'");
    }
    return j[key].get<std::string>();
}

RequestStep step_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw PlanParseError(where + ": step is not an object");
    RequestStep step;
    const std::string mtext = require_string(j, "method", where);
    auto m = parse_method(mtext);
    if (!m) throw PlanParseError(where + ": unknown method '" + mtext + "'");
    step.method = *m;
    step.path_template = require_string(j, "path", where);
    if (step.path_template.empty() || step.path_template[0] != '/') {
        throw PlanParseError(where + ": path must start with '/'");
    }
    auto read_map = [&](const char* key, std::map<std::string, json>& into) {
        if (!j.contains(key)) return;
        if (!j[key].is_object()) throw PlanParseError(where + ": '" + key + "' must be an object");
        for (const auto& [k, v] : j[key].items()) into[k] = v;
    };
    read_map("path_args", step.path_args);
    read_map("query", step.query);
    if (j.contains("headers")) {
        if (!j["headers"].is_object()) throw PlanParseError(where + ": 'headers' must be an object");
        for (const auto& [k, v] : j["headers"].items()) {
            if (v.is_string()) {
                step.headers[k] = v.get<std::string>();
            } else if (v.is_number() || v.is_boolean()) {
                step.headers[k] = v.dump();
            } else {
                throw PlanParseError(where + ": header '" + k + "' must be a scalar");
            }
        }
    }
    if (j.contains("body") && !j["body"].is_null()) step.body = j["body"];
    if (j.contains("expect_success")) {
        if (!j["expect_success"].is_boolean()) {
            throw PlanParseError(where + ": 'expect_success' must be a boolean");
        }
        step.expect_success = j["expect_success"].get<bool>();
    }
    if (j.contains("extract")) {
        if (!j["extract"].is_object()) throw PlanParseError(where + ": 'extract' must be an object");
        for (const auto& [name, pathv] : j["extract"].items()) {
            if (!pathv.is_string()) {
                throw PlanParseError(where + ": extract '" + name + "' must map to a string path");
            }
            try {
                step.extract[name] = ValuePath::parse(pathv.get<std::string>());
            } catch (const PlanParseError& e) {
                throw PlanParseError(where + ": extract '" + name + "': " + e.what());
            }
        }
    }
    return step;
}

json step_to_json(const RequestStep& step) {
    json j;
    j["method"] = method_text(step.method);
    j["path"] = step.path_template;
    j["path_args"] = json::object();
    for (const auto& [k, v] : step.path_args) j["path_args"][k] = v;
    j["query"] = json::object();
    for (const auto& [k, v] : step.query) j["query"][k] = v;
    j["headers"] = json::object();
    for (const auto& [k, v] : step.headers) j["headers"][k] = v;
    if (step.body) j["body"] = *step.body;
    j["expect_success"] = step.expect_success;
    j["extract"] = json::object();
    for (const auto& [name, path] : step.extract) j["extract"][name] = path.str();
    return j;
}

RelationAssertion assertion_from_json(const json& j, const std::string& where) {
    if (!j.is_object()) throw PlanParseError(where + ": assertion is not an object");
    RelationAssertion a;
    const std::string kind_text = require_string(j, "kind", where);
    auto kind = parse_relation_kind(kind_text);
    if (!kind) throw PlanParseError(where + ": unknown relation kind '" + kind_text + "'");
    a.kind = *kind;
    if (!j.contains("left")) throw PlanParseError(where + ": missing 'left'");
    auto left_ref = parse_ref(j["left"]);
    if (!left_ref) throw PlanParseError(where + ": 'left' must be a \"${binding}\" reference");
    a.left.name = *left_ref;
    if (!j.contains("right")) throw PlanParseError(where + ": missing 'right'");
    if (auto right_ref = parse_ref(j["right"])) {
        a.right = BindingRef{*right_ref};
    } else {
        a.right = j["right"];
    }
    if (a.kind == RelationKind::CountDelta && j.contains("delta")) {
        if (!j["delta"].is_number_integer()) {
            throw PlanParseError(where + ": 'delta' must be an integer");
        }
        a.delta = j["delta"].get<long long>();
    }
    return a;
}

json assertion_to_json(const RelationAssertion& a) {
    json j;
    j["kind"] = relation_kind_text(a.kind);
    j["left"] = "${" + a.left.name + "}";
    if (const auto* ref = std::get_if<BindingRef>(&a.right)) {
        j["right"] = "${" + ref->name + "}";
    } else {
        j["right"] = std::get<json>(a.right);
    }
    if (a.delta) j["delta"] = *a.delta;
    return j;
}

} // namespace

EmtPlan plan_from_json(const json& j) {
    if (!j.is_object()) throw PlanParseError("plan is not a JSON object");
    EmtPlan plan;
    if (j.contains("hlmt_id") && j["hlmt_id"].is_string()) {
        plan.hlmt_id = j["hlmt_id"].get<std::string>();
    } else if (j.contains("hlmt_id") && j["hlmt_id"].is_number_integer()) {
        plan.hlmt_id = std::to_string(j["hlmt_id"].get<long long>());
    } else {
        throw PlanParseError("plan: missing or non-string 'hlmt_id'");
    }
    if (!j.contains("labels") || !j["labels"].is_object()) {
        throw PlanParseError("plan: missing 'labels' object");
    }
    plan.given_label = require_string(j["labels"], "given", "labels");
    plan.when_label = require_string(j["labels"], "when", "labels");
    plan.then_label = require_string(j["labels"], "then", "labels");
    if (j.contains("placeholder")) {
        if (!j["placeholder"].is_boolean()) throw PlanParseError("plan: 'placeholder' must be a boolean");
        plan.placeholder = j["placeholder"].get<bool>();
    }
    auto read_steps = [&](const char* key, std::vector<RequestStep>& into) {
        if (!j.contains(key)) return;
        if (!j[key].is_array()) throw PlanParseError(std::string("plan: '") + key + "' must be an array");
        int i = 0;
        for (const auto& s : j[key]) {
            into.push_back(step_from_json(s, std::string(key) + "[" + std::to_string(i++) + "]"));
        }
    };
    read_steps("given_steps", plan.given_steps);
    read_steps("when_steps", plan.when_steps);
    if (j.contains("assertions")) {
        if (!j["assertions"].is_array()) throw PlanParseError("plan: 'assertions' must be an array");
        int i = 0;
        for (const auto& a : j["assertions"]) {
            plan.assertions.push_back(
                assertion_from_json(a, "assertions[" + std::to_string(i++) + "]"));
        }
    }
    return plan;
}

json plan_to_json(const EmtPlan& plan) {
    json j;
    j["hlmt_id"] = plan.hlmt_id;
    j["labels"] = json{{"given", plan.given_label},
                       {"when", plan.when_label},
                       {"then", plan.then_label}};
    j["placeholder"] = plan.placeholder;
    j["given_steps"] = json::array();
    for (const auto& s : plan.given_steps) j["given_steps"].push_back(step_to_json(s));
    j["when_steps"] = json::array();
    for (const auto& s : plan.when_steps) j["when_steps"].push_back(step_to_json(s));
    j["assertions"] = json::array();
    for (const auto& a : plan.assertions) j["assertions"].push_back(assertion_to_json(a));
    return j;
}

EmtPlan plan_from_text(const std::string& raw_output) {
    auto obj = recover_json_object(raw_output);
    if (!obj) throw PlanParseError("no JSON object recoverable from generator output");
    return plan_from_json(*obj);
}

std::map<std::string, ValuePath> EmtPlan::bindings() const {
    std::map<std::string, ValuePath> out;
    for (const auto* steps : {&given_steps, &when_steps}) {
        for (const auto& s : *steps) {
            for (const auto& [name, path] : s.extract) out[name] = path;
        }
    }
    return out;
}

// ============================================================================
// Structural validation
// ============================================================================

namespace {

// Collects every "${name}" occurrence in a JSON value, exact or embedded.
void collect_refs(const json& v, std::set<std::string>& out) {
    if (v.is_string()) {
        static const std::regex ref_re(R"(\$\{([^}]+)\})");
        const std::string& s = v.get_ref<const std::string&>();
        for (auto it = std::sregex_iterator(s.begin(), s.end(), ref_re);
             it != std::sregex_iterator(); ++it) {
            out.insert((*it)[1].str());
        }
        return;
    }
    if (v.is_object() || v.is_array()) {
        for (const auto& child : v) collect_refs(child, out);
    }
}

std::set<std::string> step_refs(const RequestStep& step) {
    std::set<std::string> refs;
    for (const auto& [k, v] : step.path_args) collect_refs(v, refs);
    for (const auto& [k, v] : step.query) collect_refs(v, refs);
    for (const auto& [k, v] : step.headers) collect_refs(json(v), refs);
    if (step.body) collect_refs(*step.body, refs);
    return refs;
}

std::vector<std::string> template_placeholders(const std::string& path_template) {
    std::vector<std::string> out;
    static const std::regex ph_re(R"(\{([^/{}]+)\})");
    for (auto it = std::sregex_iterator(path_template.begin(), path_template.end(), ph_re);
         it != std::sregex_iterator(); ++it) {
        out.push_back((*it)[1].str());
    }
    return out;
}

} // namespace

std::vector<Diagnostic> validate_plan(const EmtPlan& plan, const ApiSpecification& spec) {
    std::vector<Diagnostic> out;
    if (plan.given_label.empty()) out.push_back({"labels.given", "must be non-empty"});
    if (plan.when_label.empty()) out.push_back({"labels.when", "must be non-empty"});
    if (plan.then_label.empty()) out.push_back({"labels.then", "must be non-empty"});

    if (plan.placeholder) {
        if (!plan.given_steps.empty() || !plan.when_steps.empty() || !plan.assertions.empty()) {
            out.push_back({"placeholder", "placeholder plan must carry no steps or assertions"});
        }
        return out;
    }
    if (plan.given_steps.empty()) out.push_back({"given_steps", "at least one seed request required"});
    if (plan.when_steps.empty()) {
        out.push_back({"when_steps", "at least one follow-up request required"});
    }
    if (plan.assertions.empty()) out.push_back({"assertions", "at least one relation required"});

    // Walk steps in execution order, tracking which bindings exist so far.
    std::set<std::string> bound;
    const auto all_bindings = plan.bindings();
    auto check_steps = [&](const std::vector<RequestStep>& steps, const char* label) {
        for (size_t i = 0; i < steps.size(); ++i) {
            const auto& step = steps[i];
            const std::string where = std::string(label) + "[" + std::to_string(i) + "]";
            bool documented = std::any_of(
                spec.operations.begin(), spec.operations.end(), [&](const Operation& op) {
                    return op.method == step.method &&
                           template_shape_matches(op.path_template, step.path_template);
                });
            if (!documented) {
                out.push_back({where + ".path", "no documented operation matches " +
                                                    method_text(step.method) + " " +
                                                    step.path_template});
            }
            for (const auto& ph : template_placeholders(step.path_template)) {
                if (!step.path_args.count(ph)) {
                    out.push_back({where + ".path_args", "no value for placeholder '" + ph + "'"});
                }
            }
            for (const auto& ref : step_refs(step)) {
                if (bound.count(ref)) continue;
                if (all_bindings.count(ref)) {
                    out.push_back({where, "references binding '" + ref + "' before it is bound"});
                } else {
                    out.push_back({where, "references unknown binding '" + ref + "'"});
                }
            }
            for (const auto& [name, path] : step.extract) bound.insert(name);
        }
    };
    check_steps(plan.given_steps, "given_steps");
    check_steps(plan.when_steps, "when_steps");

    for (size_t i = 0; i < plan.assertions.size(); ++i) {
        const auto& a = plan.assertions[i];
        const std::string where = "assertions[" + std::to_string(i) + "]";
        if (!all_bindings.count(a.left.name)) {
            out.push_back({where, "references unknown binding '" + a.left.name + "'"});
        }
        if (const auto* ref = std::get_if<BindingRef>(&a.right)) {
            if (!all_bindings.count(ref->name)) {
                out.push_back({where, "references unknown binding '" + ref->name + "'"});
            }
        }
        if (a.kind == RelationKind::CountDelta && !a.delta) {
            out.push_back({where, "count-delta requires an integer 'delta'"});
        }
    }
    return out;
}

// ============================================================================
// Extraction and relation checking
// ============================================================================

ExtractOutcome extract_value(const json& body, const json& headers, const ValuePath& path) {
    const json* node = (path.root == ValuePath::Root::Headers) ? &headers : &body;
    std::string walked = (path.root == ValuePath::Root::Headers) ? "headers" : "";
    for (const auto& seg : path.segments) {
        walked += walked.empty() ? seg : "/" + seg;
        if (node->is_object()) {
            auto it = node->find(seg);
            if (it == node->end()) {
                return {false, {}, "missing key at '" + walked + "'"};
            }
            node = &*it;
            continue;
        }
        if (node->is_array()) {
            if (!seg.empty() && std::all_of(seg.begin(), seg.end(), [](char c) {
                    return std::isdigit(static_cast<unsigned char>(c));
                })) {
                const size_t idx = std::stoul(seg);
                if (idx >= node->size()) {
                    return {false, {},
                            "index out of range at '" + walked + "' (array size " +
                                std::to_string(node->size()) + ")"};
                }
                node = &(*node)[idx];
                continue;
            }
            return {false, {}, "non-numeric segment on array at '" + walked + "'"};
        }
        return {false, {}, "cannot descend into " + std::string(node->type_name()) +
                               " at '" + walked + "'"};
    }
    if (path.count) {
        if (!node->is_array()) {
            return {false, {}, "#count applied to " + std::string(node->type_name()) +
                                   " at '" + path.str() + "'"};
        }
        return {true, json(node->size()), ""};
    }
    return {true, *node, ""};
}

namespace {

std::string short_dump(const json& v) {
    std::string s = v.dump();
    if (s.size() > 120) s = s.substr(0, 117) + "...";
    return s;
}

RelationVerdict check_inclusion(const json& left, const json& right) {
    if (left.is_array()) {
        for (const auto& el : left) {
            if (el == right) return {true, ""};
        }
        return {false, "value " + short_dump(right) + " not found in array"};
    }
    if (left.is_string() && right.is_string()) {
        if (left.get_ref<const std::string&>().find(right.get_ref<const std::string&>()) !=
            std::string::npos) {
            return {true, ""};
        }
        return {false, short_dump(right) + " is not a substring of " + short_dump(left)};
    }
    if (left.is_object() && right.is_object()) {
        for (const auto& [k, v] : right.items()) {
            if (!left.contains(k) || left.at(k) != v) {
                return {false, "key '" + k + "' missing or different in left operand"};
            }
        }
        return {true, ""};
    }
    return {false, "inclusion requires array, string, or object operands (got " +
                       std::string(left.type_name()) + " and " + std::string(right.type_name()) +
                       ")"};
}

} // namespace

RelationVerdict check_relation(const RelationAssertion& assertion, const json& left,
                               const json& right) {
    switch (assertion.kind) {
    case RelationKind::Equality:
        if (left == right) return {true, ""};
        return {false, "expected equal values, got " + short_dump(left) + " vs " +
                           short_dump(right)};
    case RelationKind::Difference:
        if (left != right) return {true, ""};
        return {false, "expected different values, both are " + short_dump(left)};
    case RelationKind::Inclusion:
        return check_inclusion(left, right);
    case RelationKind::Exclusion: {
        // Exact complement of inclusion, type mismatches included.
        RelationVerdict inc = check_inclusion(left, right);
        if (!inc.holds) return {true, ""};
        return {false, "value " + short_dump(right) + " is contained in the left operand"};
    }
    case RelationKind::CountDelta: {
        if (!assertion.delta) return {false, "count-delta assertion carries no delta"};
        if (!left.is_number() || !right.is_number()) {
            return {false, "count-delta requires numeric operands (got " +
                               std::string(left.type_name()) + " and " +
                               std::string(right.type_name()) + ")"};
        }
        if (left.is_number_integer() && right.is_number_integer()) {
            const long long diff = left.get<long long>() - right.get<long long>();
            if (diff == *assertion.delta) return {true, ""};
            return {false, "expected delta " + std::to_string(*assertion.delta) + ", got " +
                               std::to_string(diff)};
        }
        const double diff = left.get<double>() - right.get<double>();
        if (diff == static_cast<double>(*assertion.delta)) return {true, ""};
        return {false, "expected delta " + std::to_string(*assertion.delta) + ", got " +
                           std::to_string(diff)};
    }
    }
    return {false, "unknown relation kind"};
}

EmtPlan make_placeholder(const Hlmt& hlmt) {
    EmtPlan plan;
    plan.hlmt_id = hlmt.id;
    plan.given_label = hlmt.given_text;
    plan.when_label = hlmt.when_text;
    plan.then_label = hlmt.then_text;
    plan.placeholder = true;
    return plan;
}

} // namespace restmorph
