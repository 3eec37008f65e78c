#include "restmorph/llm_client.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "url.hpp"

namespace restmorph {

namespace fs = std::filesystem;
using nlohmann::json;

// ============================================================================
// ScriptedLlmClient
// ============================================================================

ScriptedLlmClient::ScriptedLlmClient(const std::string& directory) : directory_(directory) {
    std::error_code ec;
    if (!fs::is_directory(directory, ec)) {
        throw IoError("scripted reply directory not found: " + directory);
    }
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(directory)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        if (!name.empty() && name[0] == '.') continue;
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read scripted reply: " + path.string());
        std::ostringstream buf;
        buf << in.rdbuf();
        replies_.push_back(buf.str());
    }
}

std::string ScriptedLlmClient::complete(const std::string&) {
    if (next_ >= replies_.size()) {
        throw LlmTransportError("scripted client exhausted after " +
                                std::to_string(replies_.size()) + " replies (" + directory_ + ")");
    }
    return replies_[next_++];
}

std::string ScriptedLlmClient::describe() const {
    return "scripted:" + directory_;
}

// ============================================================================
// HttpLlmClient
// ============================================================================

HttpLlmClient::HttpLlmClient(AgentConfig config, HttpLlmOptions options)
    : config_(std::move(config)), options_(std::move(options)) {
    // Provider credentials live in the environment, never in config files.
    const char* key = std::getenv(options_.api_key_env.c_str());
    if (!key || !*key) {
        throw FatalConfigError("environment variable " + options_.api_key_env +
                               " must hold the provider API key");
    }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
    if (options_.endpoint.rfind("https://", 0) == 0) {
        throw FatalConfigError("built without TLS support; use an http:// provider endpoint");
    }
#endif
}

std::string HttpLlmClient::complete(const std::string& prompt) {
    const UrlParts url = split_url(options_.endpoint);
    const std::string path = url.path_prefix.empty() ? "/" : url.path_prefix;

    json body{{"model", config_.model_id},
              {"temperature", config_.temperature},
              {"max_tokens", config_.max_output_tokens},
              {"messages", json::array({json{{"role", "user"}, {"content", prompt}}})}};
    if (config_.seed) body["seed"] = *config_.seed;

    httplib::Headers headers{
        {"Authorization", std::string("Bearer ") + std::getenv(options_.api_key_env.c_str())}};

    std::string last_trouble;
    for (int attempt = 0; attempt <= options_.max_retries; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(options_.backoff_ms << (attempt - 1)));
        }
        httplib::Client cli(url.origin);
        cli.set_connection_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
        cli.set_read_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);
        cli.set_write_timeout(options_.timeout_ms / 1000, (options_.timeout_ms % 1000) * 1000);

        auto res = cli.Post(path, headers, body.dump(), "application/json");
        if (!res) {
            last_trouble = "transport failure (" + httplib::to_string(res.error()) + ")";
            continue; // retryable
        }
        if (res->status >= 200 && res->status < 300) {
            json reply = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
            if (reply.is_discarded() || !reply.contains("choices") || !reply["choices"].is_array() ||
                reply["choices"].empty()) {
                throw LlmTransportError("malformed provider response for role " + config_.role_name);
            }
            const json& msg = reply["choices"][0].value("message", json::object());
            if (!msg.contains("content") || !msg["content"].is_string()) {
                throw LlmTransportError("provider response carries no completion text");
            }
            return msg["content"].get<std::string>();
        }
        if (res->status >= 500) {
            last_trouble = "provider returned " + std::to_string(res->status);
            continue; // retryable
        }
        throw LlmTransportError("provider rejected request with status " +
                                std::to_string(res->status) + ": " + res->body);
    }
    throw LlmTransportError("provider unreachable after " +
                            std::to_string(options_.max_retries + 1) + " attempts: " +
                            last_trouble);
}

std::string HttpLlmClient::describe() const {
    return config_.role_name + ":" + config_.model_id;
}

} // namespace restmorph
