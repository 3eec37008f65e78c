#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restmorph/errors.hpp"

namespace restmorph {

enum class HttpMethod { Get, Post, Put, Patch, Delete, Head, Options };

// Uppercase wire form ("GET"). parse_method accepts any case.
std::string method_text(HttpMethod m);
std::optional<HttpMethod> parse_method(const std::string& text);

enum class ParamLocation { Path, Query, Header, BodyField, FormField };

std::string param_location_text(ParamLocation loc);

struct ParameterDef {
    std::string name;
    ParamLocation location = ParamLocation::Query;
    bool required = false;
    std::string value_kind; // JSON schema "type" when declared, else ""
};

struct ResponseDef {
    nlohmann::json schema; // resolved body schema, null when undeclared
    // response header name -> declared "format" (e.g. "date-time")
    std::map<std::string, std::string> header_formats;
};

struct Operation {
    HttpMethod method = HttpMethod::Get;
    std::string path_template; // "/pet/{petId}", basePath already folded in
    std::string operation_id;  // "" when the document omits it
    std::vector<ParameterDef> parameters;
    nlohmann::json request_body_schema; // null when no body is declared
    // key is a 3-digit status code or "default"
    std::map<std::string, ResponseDef> documented_responses;

    // "GET /pet/{petId}" — the canonical coverage/sequence key.
    std::string key() const { return method_text(method) + " " + path_template; }
};

struct ApiSpecification {
    std::string title;
    std::string version;
    // Default target taken from the document (servers[] / host+basePath);
    // callers override it with the --base-url they were given.
    std::string base_url;
    // Canonically ordered: path template lexicographic, then method text.
    std::vector<Operation> operations;
    std::string raw_text; // the document as ingested, for prompt embedding
};

enum class SpecDialect { Auto, OpenApi3, Swagger2 };

// Parses an OpenAPI 3.0 or Swagger 2.0 document (JSON or YAML, sniffed by
// content). Local $refs are resolved; vendor extensions are ignored;
// undeclared path parameters are synthesized as required strings.
// Throws UnparseableDocument / UnsupportedVersion / SchemaViolation.
ApiSpecification parse_spec(const std::string& document_text,
                            SpecDialect dialect = SpecDialect::Auto);

// The canonical operation order (stable across calls).
const std::vector<Operation>& list_operations(const ApiSpecification& spec);

// Maps a concrete request path (no base URL, query string tolerated) to the
// operation it instantiates. Literal segments outrank placeholders; returns
// nullptr when nothing matches; throws AmbiguousMatch on an exact tie.
const Operation* resolve_operation(const ApiSpecification& spec,
                                   const std::string& method,
                                   const std::string& concrete_path);

// True when `path` has the same segment shape as `path_template`, treating
// {placeholder} segments on either side as wildcards. Used to check that a
// plan step names a documented operation even if it renames placeholders.
bool template_shape_matches(const std::string& path_template, const std::string& path);

// Replaces each {placeholder} segment with `args[name]`; placeholders with
// no entry become "1". Test/tooling helper for round-trip checks.
std::string instantiate_template(const std::string& path_template,
                                 const std::map<std::string, std::string>& args);

} // namespace restmorph
