#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "restmorph/errors.hpp"

namespace restmorph {

// Per-agent-role model settings. Temperature defaults to 0 so runs are as
// reproducible as the provider allows.
struct AgentConfig {
    std::string role_name;       // "mr_generator", "mr_refiner", ...
    std::string model_id = "gpt-4o";
    double temperature = 0.0;
    std::optional<int> seed;
    int max_output_tokens = 4096;
};

// The single seam between the engine and any LLM provider. Implementations
// must be safe to call repeatedly from one thread.
class LlmClient {
public:
    virtual ~LlmClient() = default;

    // Returns the raw completion text. Throws LlmTransportError when the
    // provider cannot produce one.
    virtual std::string complete(const std::string& prompt) = 0;

    // Human-readable identity for logs and reports.
    virtual std::string describe() const = 0;
};

// Replays canned completions from a directory: files are sorted by name and
// consumed one per complete() call, regardless of prompt content. Exhaustion
// throws LlmTransportError. Share one instance across roles to script a whole
// session deterministically.
class ScriptedLlmClient : public LlmClient {
public:
    explicit ScriptedLlmClient(const std::string& directory); // throws IoError

    std::string complete(const std::string& prompt) override;
    std::string describe() const override;

    size_t consumed() const { return next_; }
    size_t total() const { return replies_.size(); }

private:
    std::string directory_;
    std::vector<std::string> replies_;
    size_t next_ = 0;
};

// Transport knobs for the HTTP-backed client. The API key is read from an
// environment variable and never from configuration files.
struct HttpLlmOptions {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "RESTMORPH_API_KEY";
    int max_retries = 2;     // retries after the first attempt, 5xx/timeouts only
    int backoff_ms = 500;    // doubled per retry; kept small in tests
    int timeout_ms = 120000; // per-request transport timeout
};

// OpenAI-style chat-completions client. 4xx responses fail immediately;
// 5xx and transport timeouts retry with exponential backoff.
class HttpLlmClient : public LlmClient {
public:
    HttpLlmClient(AgentConfig config, HttpLlmOptions options);

    std::string complete(const std::string& prompt) override;
    std::string describe() const override;

private:
    AgentConfig config_;
    HttpLlmOptions options_;
};

} // namespace restmorph
