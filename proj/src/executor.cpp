#include "restmorph/executor.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <iomanip>
#include <map>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "url.hpp"

namespace restmorph {

using nlohmann::json;

std::string phase_text(Phase p) {
    return p == Phase::Given ? "given" : "when";
}

std::string step_outcome_text(StepOutcomeKind k) {
    switch (k) {
    case StepOutcomeKind::Ok: return "ok";
    case StepOutcomeKind::HttpError: return "http-error";
    case StepOutcomeKind::Timeout: return "timeout";
    case StepOutcomeKind::TransportError: return "transport-error";
    case StepOutcomeKind::ExtractionMiss: return "extraction-miss";
    case StepOutcomeKind::Skipped: return "skipped";
    }
    return "ok";
}

std::string verdict_text(Verdict v) {
    switch (v) {
    case Verdict::Passed: return "passed";
    case Verdict::Failed: return "failed";
    case Verdict::FailedPlaceholder: return "failed-placeholder";
    }
    return "failed";
}

std::string failure_kind_text(FailureKind k) {
    switch (k) {
    case FailureKind::Timeout: return "timeout";
    case FailureKind::ServerCrash: return "server-crash";
    case FailureKind::RequestContract: return "request-contract";
    case FailureKind::UndocumentedStatus: return "undocumented-status";
    case FailureKind::ResponseContract: return "response-contract";
    case FailureKind::RelationViolation: return "relation-violation";
    case FailureKind::Placeholder: return "placeholder";
    }
    return "relation-violation";
}

std::string Sequence::key() const {
    std::string out;
    for (size_t i = 0; i < entries.size(); ++i) {
        if (i) out += " -> ";
        out += entries[i].method + " " + entries[i].path;
    }
    return out;
}

// ============================================================================
// Binding resolution
// ============================================================================

namespace {

struct ResolveError {
    std::string reason;
};

// Substitutes "${name}" references in a JSON value. An exact-match string
// reference takes the bound value wholesale (any type); embedded references
// interpolate as text. Returns the reason on the first unresolved name.
std::optional<ResolveError> resolve_value(const std::map<std::string, json>& bindings,
                                          const json& in, json& out) {
    if (in.is_string()) {
        const std::string& s = in.get_ref<const std::string&>();
        if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}' &&
            s.find('}') == s.size() - 1) {
            const std::string name = s.substr(2, s.size() - 3);
            auto it = bindings.find(name);
            if (it == bindings.end()) return ResolveError{"unresolved binding '" + name + "'"};
            out = it->second;
            return std::nullopt;
        }
        static const std::regex ref_re(R"(\$\{([^}]+)\})");
        std::string built;
        std::string rest = s;
        std::smatch m;
        while (std::regex_search(rest, m, ref_re)) {
            built += m.prefix().str();
            auto it = bindings.find(m[1].str());
            if (it == bindings.end()) {
                return ResolveError{"unresolved binding '" + m[1].str() + "'"};
            }
            built += it->second.is_string() ? it->second.get<std::string>() : it->second.dump();
            rest = m.suffix().str();
        }
        built += rest;
        out = built;
        return std::nullopt;
    }
    if (in.is_object()) {
        out = json::object();
        for (const auto& [k, v] : in.items()) {
            json child;
            if (auto err = resolve_value(bindings, v, child)) return err;
            out[k] = std::move(child);
        }
        return std::nullopt;
    }
    if (in.is_array()) {
        out = json::array();
        for (const auto& v : in) {
            json child;
            if (auto err = resolve_value(bindings, v, child)) return err;
            out.push_back(std::move(child));
        }
        return std::nullopt;
    }
    out = in;
    return std::nullopt;
}

std::string scalar_text(const json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
}

std::string percent_encode(const std::string& s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 0xF]);
        }
    }
    return out;
}

std::string fnv1a64_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ull;
    }
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << h;
    return out.str();
}

bool valid_date_time(const std::string& value) {
    static const std::regex rfc3339(
        R"(^\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$)");
    return std::regex_match(value, rfc3339);
}

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

// Header extraction tolerates case differences between the plan's path and
// the server's header casing.
ExtractOutcome extract_with_header_case(const json& body, const json& headers,
                                        const ValuePath& path) {
    ExtractOutcome got = extract_value(body, headers, path);
    if (got.ok || path.root != ValuePath::Root::Headers || path.segments.empty()) return got;
    const std::string want = lower(path.segments[0]);
    for (const auto& [k, v] : headers.items()) {
        if (lower(k) == want) {
            ValuePath fixed = path;
            fixed.segments[0] = k;
            return extract_value(body, headers, fixed);
        }
    }
    return got;
}

struct WireResult {
    bool responded = false;
    bool timed_out = false;
    int status = 0;
    std::string body;
    json headers = json::object();
    long long latency_ms = 0;
    std::string error; // transport detail when !responded
};

WireResult issue_request(httplib::Client& cli, const std::string& prefix, HttpMethod method,
                         const std::string& path_and_query, const httplib::Headers& headers,
                         const std::optional<json>& body,
                         std::chrono::milliseconds timeout) {
    const std::string target = prefix + path_and_query;
    const auto t0 = std::chrono::steady_clock::now();
    httplib::Result res{nullptr, httplib::Error::Unknown};
    const std::string payload = body ? body->dump() : "";
    switch (method) {
    case HttpMethod::Get: res = cli.Get(target, headers); break;
    case HttpMethod::Post: res = cli.Post(target, headers, payload, "application/json"); break;
    case HttpMethod::Put: res = cli.Put(target, headers, payload, "application/json"); break;
    case HttpMethod::Patch: res = cli.Patch(target, headers, payload, "application/json"); break;
    case HttpMethod::Delete: res = cli.Delete(target, headers, payload, "application/json"); break;
    case HttpMethod::Head: res = cli.Head(target, headers); break;
    case HttpMethod::Options: {
        httplib::Request req;
        req.method = "OPTIONS";
        req.path = target;
        req.headers = headers;
        res = cli.send(req);
        break;
    }
    }
    const auto t1 = std::chrono::steady_clock::now();

    WireResult wire;
    wire.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
    if (res) {
        wire.responded = true;
        wire.status = res->status;
        wire.body = res->body;
        for (const auto& [k, v] : res->headers) {
            if (!wire.headers.contains(k)) wire.headers[k] = v;
        }
        return wire;
    }
    // No response: either the wait hit the configured timeout or transport
    // failed outright (refused, unreachable). httplib reports read timeouts
    // as generic read errors, so elapsed time decides.
    if (res.error() == httplib::Error::ConnectionTimeout ||
        wire.latency_ms + 50 >= timeout.count()) {
        wire.timed_out = true;
        wire.error = "no response within " + std::to_string(timeout.count()) + "ms (" +
                     httplib::to_string(res.error()) + ")";
    } else {
        wire.error = httplib::to_string(res.error());
    }
    return wire;
}

} // namespace

// ============================================================================
// Scenario execution
// ============================================================================

ScenarioResult execute_scenario(const EmtPlan& plan, const ApiSpecification& spec,
                                const ExecutionOptions& options) {
    ScenarioResult result;
    result.hlmt_id = plan.hlmt_id;

    if (plan.placeholder) {
        result.verdict = Verdict::FailedPlaceholder;
        result.failure_class =
            FailureClass{FailureKind::Placeholder, "lowering failed; nothing was executed"};
        return result;
    }

    const UrlParts url = split_url(options.base_url);
    httplib::Client cli(url.origin);
    const auto timeout = options.per_request_timeout;
    cli.set_connection_timeout(timeout.count() / 1000, (timeout.count() % 1000) * 1000);
    cli.set_read_timeout(timeout.count() / 1000, (timeout.count() % 1000) * 1000);
    cli.set_write_timeout(timeout.count() / 1000, (timeout.count() % 1000) * 1000);

    std::map<std::string, json> bindings;
    bool aborted = false;
    int step_index = 0;

    auto run_steps = [&](const std::vector<RequestStep>& steps, Phase phase) {
        for (const auto& step : steps) {
            StepOutcome so;
            so.step_index = step_index++;
            so.phase = phase;
            so.method = step.method;
            so.concrete_path = step.path_template;

            if (aborted) {
                so.outcome = StepOutcomeKind::Skipped;
                so.detail = "earlier step failed";
                result.step_outcomes.push_back(std::move(so));
                continue;
            }

            // --- resolve path, query, headers, body against bindings ---
            std::string trouble;
            std::map<std::string, std::string> path_values;
            for (const auto& [name, raw] : step.path_args) {
                json v;
                if (auto err = resolve_value(bindings, raw, v)) {
                    trouble = err->reason;
                    break;
                }
                path_values[name] = scalar_text(v);
            }
            std::string concrete;
            if (trouble.empty()) {
                concrete = instantiate_template(step.path_template, path_values);
                std::string qs;
                for (const auto& [k, raw] : step.query) {
                    json v;
                    if (auto err = resolve_value(bindings, raw, v)) {
                        trouble = err->reason;
                        break;
                    }
                    if (!qs.empty()) qs += "&";
                    qs += percent_encode(k) + "=" + percent_encode(scalar_text(v));
                }
                if (!qs.empty()) concrete += "?" + qs;
            }
            httplib::Headers headers;
            for (const auto& [k, v] : options.static_headers) headers.emplace(k, v);
            std::optional<json> body;
            if (trouble.empty()) {
                for (const auto& [k, raw] : step.headers) {
                    json v;
                    if (auto err = resolve_value(bindings, json(raw), v)) {
                        trouble = err->reason;
                        break;
                    }
                    headers.emplace(k, scalar_text(v));
                }
            }
            if (trouble.empty() && step.body) {
                json v;
                if (auto err = resolve_value(bindings, *step.body, v)) {
                    trouble = err->reason;
                } else {
                    body = std::move(v);
                }
            }
            if (!trouble.empty()) {
                so.outcome = StepOutcomeKind::TransportError;
                so.detail = trouble + " (request was not issued)";
                aborted = true;
                result.step_outcomes.push_back(std::move(so));
                continue;
            }
            so.concrete_path = concrete;
            if (body) so.body_digest = fnv1a64_hex(body->dump());

            // --- budget gate: never issue past the remaining allowance ---
            if (result.requests_spent >= options.budget_remaining) {
                so.outcome = StepOutcomeKind::TransportError;
                so.detail = "request budget exhausted (request was not issued)";
                aborted = true;
                result.step_outcomes.push_back(std::move(so));
                continue;
            }

            const WireResult wire =
                issue_request(cli, url.path_prefix, step.method, concrete, headers, body, timeout);
            so.latency_ms = wire.latency_ms;

            if (!wire.responded) {
                if (wire.timed_out) {
                    so.outcome = StepOutcomeKind::Timeout;
                    ++result.requests_spent; // the wait consumed real budget
                } else {
                    so.outcome = StepOutcomeKind::TransportError;
                }
                so.detail = wire.error;
                aborted = true;
                result.step_outcomes.push_back(std::move(so));
                continue;
            }

            ++result.requests_spent;
            so.status_code = wire.status;
            const bool success_status = wire.status >= 200 && wire.status < 300;
            if (!success_status && step.expect_success) {
                so.outcome = StepOutcomeKind::HttpError;
                so.detail = "status " + std::to_string(wire.status) + " on a step expecting success";
                aborted = true;
                result.step_outcomes.push_back(std::move(so));
                continue;
            }

            json body_json = json::parse(wire.body, nullptr, /*allow_exceptions=*/false);
            if (body_json.is_discarded()) {
                // Non-JSON bodies stay reachable as a whole-body string.
                body_json = wire.body.empty() ? json() : json(wire.body);
            }

            // --- documented header format checks (response contract) ---
            const Operation* op = nullptr;
            try {
                op = resolve_operation(spec, method_text(step.method), concrete);
            } catch (const AmbiguousMatch&) {
                op = nullptr;
            }
            if (op) {
                auto rit = op->documented_responses.find(std::to_string(wire.status));
                if (rit == op->documented_responses.end()) {
                    rit = op->documented_responses.find("default");
                }
                if (rit != op->documented_responses.end()) {
                    for (const auto& [hname, format] : rit->second.header_formats) {
                        if (format != "date-time") continue;
                        std::string value;
                        for (const auto& [k, v] : wire.headers.items()) {
                            if (lower(k) == lower(hname)) {
                                value = v.get<std::string>();
                                break;
                            }
                        }
                        if (!value.empty() && !valid_date_time(value)) {
                            so.outcome = StepOutcomeKind::ExtractionMiss;
                            so.detail = "response header '" + hname +
                                        "' is not a valid date-time: \"" + value + "\"";
                            break;
                        }
                    }
                }
            }
            if (so.outcome == StepOutcomeKind::ExtractionMiss) {
                aborted = true;
                result.step_outcomes.push_back(std::move(so));
                continue;
            }

            // --- declared extractions bind values for later steps ---
            for (const auto& [name, path] : step.extract) {
                ExtractOutcome got = extract_with_header_case(body_json, wire.headers, path);
                if (!got.ok) {
                    so.outcome = StepOutcomeKind::ExtractionMiss;
                    so.detail = "extract '" + name + "': " + got.miss;
                    aborted = true;
                    break;
                }
                bindings[name] = std::move(got.value);
            }
            result.step_outcomes.push_back(std::move(so));
        }
    };

    run_steps(plan.given_steps, Phase::Given);
    run_steps(plan.when_steps, Phase::When);

    bool all_ok = !aborted && std::all_of(result.step_outcomes.begin(), result.step_outcomes.end(),
                                          [](const StepOutcome& so) {
                                              return so.outcome == StepOutcomeKind::Ok;
                                          });

    bool relations_hold = true;
    if (all_ok) {
        for (size_t i = 0; i < plan.assertions.size(); ++i) {
            const auto& a = plan.assertions[i];
            RelationOutcome ro;
            ro.assertion_index = static_cast<int>(i);
            auto lit = bindings.find(a.left.name);
            json left = (lit != bindings.end()) ? lit->second : json();
            json right;
            bool operands_ok = lit != bindings.end();
            std::string operand_trouble =
                operands_ok ? "" : "binding '" + a.left.name + "' was never bound";
            if (const auto* ref = std::get_if<BindingRef>(&a.right)) {
                auto rit = bindings.find(ref->name);
                if (rit == bindings.end()) {
                    operands_ok = false;
                    operand_trouble = "binding '" + ref->name + "' was never bound";
                } else {
                    right = rit->second;
                }
            } else {
                right = std::get<json>(a.right);
            }
            if (operands_ok) {
                RelationVerdict v = check_relation(a, left, right);
                ro.holds = v.holds;
                ro.reason = v.reason;
            } else {
                ro.holds = false;
                ro.reason = operand_trouble;
            }
            if (!ro.holds) relations_hold = false;
            result.relation_verdicts.push_back(std::move(ro));
        }
    }

    result.verdict = (all_ok && relations_hold) ? Verdict::Passed : Verdict::Failed;
    result.sequence = extract_sequence(result, spec);
    if (result.verdict != Verdict::Passed) {
        result.failure_class = classify_failure(result, spec);
    }
    return result;
}

// ============================================================================
// Failure classification
// ============================================================================

FailureClass classify_failure(const ScenarioResult& result, const ApiSpecification& spec) {
    if (result.verdict == Verdict::FailedPlaceholder) {
        return {FailureKind::Placeholder, "lowering failed; nothing was executed"};
    }
    // 1. Timeouts (transport failures fold in here: no response either way).
    for (const auto& so : result.step_outcomes) {
        if (so.outcome == StepOutcomeKind::Timeout) {
            return {FailureKind::Timeout, method_text(so.method) + " " + so.concrete_path + ": " +
                                              so.detail};
        }
    }
    for (const auto& so : result.step_outcomes) {
        if (so.outcome == StepOutcomeKind::TransportError) {
            return {FailureKind::Timeout, method_text(so.method) + " " + so.concrete_path +
                                              ": no response (" + so.detail + ")"};
        }
    }
    // 2. Server crashes: any 5xx anywhere.
    for (const auto& so : result.step_outcomes) {
        if (so.status_code && *so.status_code >= 500) {
            return {FailureKind::ServerCrash, method_text(so.method) + " " + so.concrete_path +
                                                  " returned " + std::to_string(*so.status_code)};
        }
    }
    // 3. Request contract: 4xx where the plan expected success.
    for (const auto& so : result.step_outcomes) {
        if (so.outcome == StepOutcomeKind::HttpError && so.status_code &&
            *so.status_code >= 400 && *so.status_code < 500) {
            return {FailureKind::RequestContract, method_text(so.method) + " " + so.concrete_path +
                                                      " rejected with " +
                                                      std::to_string(*so.status_code)};
        }
    }
    // 4. Undocumented status on any issued request.
    for (const auto& so : result.step_outcomes) {
        if (!so.status_code) continue;
        const Operation* op = nullptr;
        try {
            op = resolve_operation(spec, method_text(so.method), so.concrete_path);
        } catch (const AmbiguousMatch&) {
            continue;
        }
        if (!op) continue;
        const std::string code = std::to_string(*so.status_code);
        if (!op->documented_responses.count(code) && !op->documented_responses.count("default")) {
            return {FailureKind::UndocumentedStatus,
                    op->key() + " answered " + code + ", which the specification does not document"};
        }
    }
    // 5. Response contract: shape or format trouble on an answered request.
    for (const auto& so : result.step_outcomes) {
        if (so.outcome == StepOutcomeKind::ExtractionMiss) {
            return {FailureKind::ResponseContract,
                    method_text(so.method) + " " + so.concrete_path + ": " + so.detail};
        }
    }
    // 6. Everything answered as documented: the metamorphic relation failed.
    for (const auto& ro : result.relation_verdicts) {
        if (!ro.holds) {
            return {FailureKind::RelationViolation,
                    "assertion " + std::to_string(ro.assertion_index) + ": " + ro.reason};
        }
    }
    // 7. Remaining odd case: a non-2xx, non-4xx status on an expecting step.
    for (const auto& so : result.step_outcomes) {
        if (so.outcome == StepOutcomeKind::HttpError && so.status_code) {
            return {FailureKind::UndocumentedStatus,
                    method_text(so.method) + " " + so.concrete_path + " answered " +
                        std::to_string(*so.status_code)};
        }
    }
    return {FailureKind::RelationViolation, "unclassified failure"};
}

// ============================================================================
// Sequence normalization
// ============================================================================

Sequence extract_sequence(const ScenarioResult& result, const ApiSpecification& spec) {
    Sequence seq;
    for (const auto& so : result.step_outcomes) {
        const bool issued = so.status_code.has_value() || so.outcome == StepOutcomeKind::Timeout;
        if (!issued) continue;
        SequenceEntry entry;
        entry.method = method_text(so.method);
        const Operation* op = nullptr;
        try {
            op = resolve_operation(spec, entry.method, so.concrete_path);
        } catch (const AmbiguousMatch&) {
            op = nullptr;
        }
        if (op) {
            entry.path = op->path_template;
            entry.resolved = true;
        } else {
            std::string path = so.concrete_path;
            const size_t cut = path.find_first_of("?#");
            if (cut != std::string::npos) path = path.substr(0, cut);
            entry.path = path;
            entry.resolved = false;
        }
        seq.entries.push_back(std::move(entry));
    }
    return seq;
}

} // namespace restmorph
