#include "restmorph/spec_model.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

#include <yaml-cpp/yaml.h>

namespace restmorph {

using nlohmann::json;

// ============================================================================
// HTTP method names
// ============================================================================

std::string method_text(HttpMethod m) {
    switch (m) {
    case HttpMethod::Get: return "GET";
    case HttpMethod::Post: return "POST";
    case HttpMethod::Put: return "PUT";
    case HttpMethod::Patch: return "PATCH";
    case HttpMethod::Delete: return "DELETE";
    case HttpMethod::Head: return "HEAD";
    case HttpMethod::Options: return "OPTIONS";
    }
    return "GET";
}

std::optional<HttpMethod> parse_method(const std::string& text) {
    std::string up;
    up.reserve(text.size());
    for (char c : text) up.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (up == "GET") return HttpMethod::Get;
    if (up == "POST") return HttpMethod::Post;
    if (up == "PUT") return HttpMethod::Put;
    if (up == "PATCH") return HttpMethod::Patch;
    if (up == "DELETE") return HttpMethod::Delete;
    if (up == "HEAD") return HttpMethod::Head;
    if (up == "OPTIONS") return HttpMethod::Options;
    return std::nullopt;
}

std::string param_location_text(ParamLocation loc) {
    switch (loc) {
    case ParamLocation::Path: return "path";
    case ParamLocation::Query: return "query";
    case ParamLocation::Header: return "header";
    case ParamLocation::BodyField: return "body-field";
    case ParamLocation::FormField: return "form-field";
    }
    return "query";
}

// ============================================================================
// Document ingestion: JSON first, then YAML converted node-by-node
// ============================================================================

namespace {

// yaml-cpp keeps plain scalars as text; recover JSON types the way a spec
// author meant them. Quoted scalars (tag "!") always stay strings.
json yaml_scalar_to_json(const YAML::Node& node) {
    const std::string& s = node.Scalar();
    if (node.Tag() != "!") {
        if (s == "null" || s == "Null" || s == "NULL" || s == "~" || s.empty()) return nullptr;
        if (s == "true" || s == "True" || s == "TRUE") return true;
        if (s == "false" || s == "False" || s == "FALSE") return false;
        static const std::regex int_re(R"(^-?\d+$)");
        static const std::regex float_re(R"(^-?(\d+\.\d*|\.\d+|\d+)([eE][+-]?\d+)?$)");
        if (std::regex_match(s, int_re)) {
            try {
                return std::stoll(s);
            } catch (const std::out_of_range&) {
                // fall through to string for absurdly large literals
            }
        } else if (std::regex_match(s, float_re) && s.find_first_of(".eE") != std::string::npos) {
            try {
                return std::stod(s);
            } catch (const std::out_of_range&) {
            }
        }
    }
    return s;
}

json yaml_to_json(const YAML::Node& node) {
    switch (node.Type()) {
    case YAML::NodeType::Null: return nullptr;
    case YAML::NodeType::Scalar: return yaml_scalar_to_json(node);
    case YAML::NodeType::Sequence: {
        json arr = json::array();
        for (const auto& item : node) arr.push_back(yaml_to_json(item));
        return arr;
    }
    case YAML::NodeType::Map: {
        json obj = json::object();
        for (const auto& kv : node) {
            // Status-code keys like `200:` arrive as integers; stringify all keys.
            obj[kv.first.Scalar()] = yaml_to_json(kv.second);
        }
        return obj;
    }
    default: return nullptr;
    }
}

json load_document(const std::string& text) {
    json doc = json::parse(text, nullptr, /*allow_exceptions=*/false);
    if (!doc.is_discarded()) return doc;
    try {
        YAML::Node root = YAML::Load(text);
        if (!root.IsMap()) throw UnparseableDocument("document is not a JSON/YAML object");
        return yaml_to_json(root);
    } catch (const YAML::Exception& e) {
        throw UnparseableDocument(std::string("document is neither JSON nor YAML: ") + e.what());
    }
}

// ============================================================================
// Local $ref resolution
// ============================================================================

constexpr int kMaxRefDepth = 64;

json resolve_refs(const json& root, const json& node, int depth) {
    if (depth > kMaxRefDepth) return node; // cycle guard: leave the ref in place
    if (node.is_object()) {
        auto ref = node.find("$ref");
        if (ref != node.end() && ref->is_string()) {
            const std::string& target = ref->get_ref<const std::string&>();
            if (target.rfind("#/", 0) == 0) {
                try {
                    const json& resolved = root.at(json::json_pointer(target.substr(1)));
                    return resolve_refs(root, resolved, depth + 1);
                } catch (const json::exception&) {
                    return node; // dangling local ref: keep verbatim
                }
            }
            return node; // remote refs are out of scope: keep verbatim
        }
        json out = json::object();
        for (const auto& [k, v] : node.items()) out[k] = resolve_refs(root, v, depth + 1);
        return out;
    }
    if (node.is_array()) {
        json out = json::array();
        for (const auto& v : node) out.push_back(resolve_refs(root, v, depth + 1));
        return out;
    }
    return node;
}

// ============================================================================
// Parameter / response conversion
// ============================================================================

std::string schema_type(const json& schema) {
    if (schema.is_object()) {
        auto it = schema.find("type");
        if (it != schema.end() && it->is_string()) return it->get<std::string>();
    }
    return "";
}

// Shared by both dialects once the dialect-specific body/form handling is done.
std::optional<ParameterDef> convert_plain_parameter(const json& p, const std::string& type_hint) {
    ParameterDef def;
    def.name = p.value("name", "");
    def.required = p.value("required", false);
    def.value_kind = type_hint;
    const std::string in = p.value("in", "");
    if (in == "path") {
        def.location = ParamLocation::Path;
        def.required = true; // path parameters are required by definition
    } else if (in == "query") {
        def.location = ParamLocation::Query;
    } else if (in == "header") {
        def.location = ParamLocation::Header;
    } else {
        return std::nullopt; // cookies and unknown locations are ignored
    }
    return def;
}

void convert_swagger2_parameter(const json& p, Operation& op) {
    const std::string in = p.value("in", "");
    if (in == "body") {
        op.request_body_schema = p.value("schema", json());
        return;
    }
    if (in == "formData") {
        ParameterDef def;
        def.name = p.value("name", "");
        def.location = ParamLocation::FormField;
        def.required = p.value("required", false);
        def.value_kind = p.value("type", "");
        op.parameters.push_back(std::move(def));
        return;
    }
    if (auto def = convert_plain_parameter(p, p.value("type", ""))) op.parameters.push_back(*def);
}

void convert_openapi3_parameter(const json& p, Operation& op) {
    if (auto def = convert_plain_parameter(p, schema_type(p.value("schema", json())))) {
        op.parameters.push_back(*def);
    }
}

void convert_openapi3_request_body(const json& body, Operation& op) {
    const json content = body.value("content", json::object());
    if (!content.is_object() || content.empty()) return;
    auto js = content.find("application/json");
    if (js != content.end()) {
        op.request_body_schema = js->value("schema", json());
        return;
    }
    auto form = content.find("application/x-www-form-urlencoded");
    if (form != content.end()) {
        // Surface urlencoded bodies as form fields so plans can send them as
        // query-style pairs, mirroring how the executor transmits forms.
        const json schema = form->value("schema", json::object());
        const json props = schema.value("properties", json::object());
        std::vector<std::string> required;
        if (schema.contains("required") && schema["required"].is_array()) {
            for (const auto& r : schema["required"]) {
                if (r.is_string()) required.push_back(r.get<std::string>());
            }
        }
        for (const auto& [name, prop] : props.items()) {
            ParameterDef def;
            def.name = name;
            def.location = ParamLocation::FormField;
            def.required = std::find(required.begin(), required.end(), name) != required.end();
            def.value_kind = schema_type(prop);
            op.parameters.push_back(std::move(def));
        }
        return;
    }
    // Some other media type: keep its schema so reports can still show it.
    op.request_body_schema = content.begin()->value("schema", json());
}

bool valid_response_key(const std::string& key) {
    if (key == "default") return true;
    return key.size() == 3 && std::all_of(key.begin(), key.end(), [](char c) {
        return std::isdigit(static_cast<unsigned char>(c));
    });
}

void convert_responses(const json& responses, bool swagger2, Operation& op) {
    if (!responses.is_object()) return;
    for (const auto& [code, body] : responses.items()) {
        if (!valid_response_key(code)) continue; // e.g. "2XX" ranges: skipped
        if (!body.is_object()) continue;
        ResponseDef def;
        if (swagger2) {
            def.schema = body.value("schema", json());
        } else {
            const json content = body.value("content", json::object());
            if (content.is_object() && !content.empty()) {
                auto js = content.find("application/json");
                def.schema = (js != content.end()) ? js->value("schema", json())
                                                   : content.begin()->value("schema", json());
            }
        }
        const json headers = body.value("headers", json::object());
        if (headers.is_object()) {
            for (const auto& [hname, hdef] : headers.items()) {
                if (!hdef.is_object()) continue;
                std::string format = swagger2 ? hdef.value("format", "")
                                              : hdef.value("schema", json::object()).value("format", "");
                if (!format.empty()) def.header_formats[hname] = format;
            }
        }
        op.documented_responses[code] = std::move(def);
    }
}

// ============================================================================
// Path templates
// ============================================================================

std::vector<std::string> split_segments(const std::string& path) {
    std::vector<std::string> segs;
    size_t i = 0;
    if (!path.empty() && path[0] == '/') i = 1;
    while (i <= path.size()) {
        size_t next = path.find('/', i);
        if (next == std::string::npos) {
            segs.push_back(path.substr(i));
            break;
        }
        segs.push_back(path.substr(i, next - i));
        i = next + 1;
    }
    if (!segs.empty() && segs.back().empty() && segs.size() > 1) segs.pop_back(); // tolerate trailing slash
    return segs;
}

bool is_placeholder(const std::string& segment) {
    return segment.size() >= 2 && segment.front() == '{' && segment.back() == '}';
}

std::string strip_query(const std::string& path) {
    size_t cut = path.find_first_of("?#");
    return cut == std::string::npos ? path : path.substr(0, cut);
}

} // namespace

// ============================================================================
// Public API
// ============================================================================

ApiSpecification parse_spec(const std::string& document_text, SpecDialect dialect) {
    const json doc = load_document(document_text);
    if (!doc.is_object()) throw UnparseableDocument("top-level document is not an object");

    bool swagger2 = false;
    if (dialect == SpecDialect::Swagger2) {
        swagger2 = true;
    } else if (dialect == SpecDialect::Auto) {
        if (doc.contains("openapi") && doc["openapi"].is_string()) {
            const std::string v = doc["openapi"].get<std::string>();
            if (v.rfind("3.", 0) != 0) throw UnsupportedVersion("unsupported openapi version: " + v);
        } else if (doc.contains("swagger") && doc["swagger"].is_string()) {
            const std::string v = doc["swagger"].get<std::string>();
            if (v != "2.0") throw UnsupportedVersion("unsupported swagger version: " + v);
            swagger2 = true;
        } else {
            throw UnsupportedVersion("document declares neither openapi 3.x nor swagger 2.0");
        }
    }

    ApiSpecification spec;
    spec.raw_text = document_text;
    const json info = doc.value("info", json::object());
    if (info.is_object()) {
        spec.title = info.value("title", "");
        spec.version = info.value("version", "");
    }

    // Document-declared default target; callers normally override.
    std::string base_path;
    if (swagger2) {
        base_path = doc.value("basePath", "");
        if (base_path == "/") base_path.clear();
        if (!base_path.empty() && base_path.back() == '/') base_path.pop_back();
        if (!base_path.empty() && base_path.front() != '/') base_path.insert(base_path.begin(), '/');
        const std::string host = doc.value("host", "");
        if (!host.empty()) {
            std::string scheme = "http";
            if (doc.contains("schemes") && doc["schemes"].is_array() && !doc["schemes"].empty() &&
                doc["schemes"][0].is_string()) {
                scheme = doc["schemes"][0].get<std::string>();
            }
            spec.base_url = scheme + "://" + host;
        }
    } else if (doc.contains("servers") && doc["servers"].is_array() && !doc["servers"].empty()) {
        spec.base_url = doc["servers"][0].value("url", "");
    }

    if (!doc.contains("paths") || !doc["paths"].is_object()) {
        throw SchemaViolation("document has no paths object");
    }

    static const char* kMethods[] = {"get", "post", "put", "patch", "delete", "head", "options"};

    for (const auto& [path_key, item_raw] : doc["paths"].items()) {
        if (!item_raw.is_object()) continue;
        if (path_key.empty() || path_key[0] != '/') {
            throw SchemaViolation("path key does not start with '/': " + path_key);
        }
        const json item = resolve_refs(doc, item_raw, 0);
        const json shared_params = item.value("parameters", json::array());

        for (const char* mname : kMethods) {
            auto mit = item.find(mname);
            if (mit == item.end() || !mit->is_object()) continue;
            const json& op_doc = *mit;

            Operation op;
            op.method = *parse_method(mname);
            op.path_template = base_path + path_key;
            op.operation_id = op_doc.value("operationId", "");

            // Path-level parameters apply unless overridden by (name, in).
            std::vector<json> params;
            const json own = op_doc.value("parameters", json::array());
            auto overridden = [&](const json& shared) {
                for (const auto& p : own) {
                    if (p.is_object() && p.value("name", "") == shared.value("name", "") &&
                        p.value("in", "") == shared.value("in", "")) {
                        return true;
                    }
                }
                return false;
            };
            if (shared_params.is_array()) {
                for (const auto& p : shared_params) {
                    if (p.is_object() && !overridden(p)) params.push_back(p);
                }
            }
            if (own.is_array()) {
                for (const auto& p : own) {
                    if (p.is_object()) params.push_back(p);
                }
            }
            for (const auto& p : params) {
                if (swagger2) {
                    convert_swagger2_parameter(p, op);
                } else {
                    convert_openapi3_parameter(p, op);
                }
            }
            if (!swagger2 && op_doc.contains("requestBody") && op_doc["requestBody"].is_object()) {
                convert_openapi3_request_body(op_doc["requestBody"], op);
            }
            convert_responses(op_doc.value("responses", json::object()), swagger2, op);

            // Guarantee a definition for every placeholder in the template.
            for (const auto& seg : split_segments(op.path_template)) {
                if (!is_placeholder(seg)) continue;
                const std::string name = seg.substr(1, seg.size() - 2);
                bool declared = std::any_of(op.parameters.begin(), op.parameters.end(),
                                            [&](const ParameterDef& d) {
                                                return d.location == ParamLocation::Path && d.name == name;
                                            });
                if (!declared) {
                    op.parameters.push_back({name, ParamLocation::Path, true, "string"});
                }
            }

            for (const auto& existing : spec.operations) {
                if (existing.method == op.method && existing.path_template == op.path_template) {
                    throw SchemaViolation("duplicate operation: " + op.key());
                }
            }
            spec.operations.push_back(std::move(op));
        }
    }

    std::sort(spec.operations.begin(), spec.operations.end(), [](const Operation& a, const Operation& b) {
        if (a.path_template != b.path_template) return a.path_template < b.path_template;
        return method_text(a.method) < method_text(b.method);
    });
    return spec;
}

const std::vector<Operation>& list_operations(const ApiSpecification& spec) {
    return spec.operations;
}

const Operation* resolve_operation(const ApiSpecification& spec, const std::string& method,
                                   const std::string& concrete_path) {
    auto m = parse_method(method);
    if (!m) return nullptr;
    const auto concrete = split_segments(strip_query(concrete_path));

    // Specificity mask per candidate: literal segment = 0, placeholder = 1.
    // The lexicographically smallest mask wins (earliest literal dominates).
    const Operation* best = nullptr;
    std::vector<int> best_mask;
    bool tie = false;
    std::string tie_with;

    for (const auto& op : spec.operations) {
        if (op.method != *m) continue;
        const auto tmpl = split_segments(op.path_template);
        if (tmpl.size() != concrete.size()) continue;
        std::vector<int> mask(tmpl.size(), 0);
        bool ok = true;
        for (size_t i = 0; i < tmpl.size(); ++i) {
            if (is_placeholder(tmpl[i])) {
                if (concrete[i].empty()) {
                    ok = false;
                    break;
                }
                mask[i] = 1;
            } else if (tmpl[i] != concrete[i]) {
                ok = false;
                break;
            }
        }
        if (!ok) continue;
        if (!best || mask < best_mask) {
            best = &op;
            best_mask = mask;
            tie = false;
        } else if (mask == best_mask) {
            tie = true;
            tie_with = op.path_template;
        }
    }
    if (tie) {
        throw AmbiguousMatch("path " + concrete_path + " matches both " + best->path_template +
                             " and " + tie_with);
    }
    return best;
}

bool template_shape_matches(const std::string& path_template, const std::string& path) {
    const auto a = split_segments(path_template);
    const auto b = split_segments(strip_query(path));
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i) {
        if (is_placeholder(a[i]) || is_placeholder(b[i])) {
            if (a[i].empty() || b[i].empty()) return false;
            continue;
        }
        if (a[i] != b[i]) return false;
    }
    return true;
}

std::string instantiate_template(const std::string& path_template,
                                 const std::map<std::string, std::string>& args) {
    std::string out = "/";
    const auto segs = split_segments(path_template);
    for (size_t i = 0; i < segs.size(); ++i) {
        if (i) out += "/";
        if (is_placeholder(segs[i])) {
            const std::string name = segs[i].substr(1, segs[i].size() - 2);
            auto it = args.find(name);
            out += (it != args.end()) ? it->second : "1";
        } else {
            out += segs[i];
        }
    }
    return out;
}

} // namespace restmorph
