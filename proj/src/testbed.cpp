#include "restmorph/testbed.hpp"

#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace restmorph {

using nlohmann::json;

struct Testbed::Impl {
    FaultProfile profile;
    httplib::Server server;
    std::thread worker;
    std::string base_url;
    int port = 0;

    std::mutex mu;
    std::map<long long, json> pets;
    std::map<std::string, json> users;
    long long next_pet_id = 1000;
    std::vector<std::pair<std::string, std::string>> history; // (METHOD, template)
    size_t served = 0;

    // Appends to the request history and reports whether the crash fault
    // fires: the history suffix equals the configured crash sequence.
    bool track_and_check_crash(const std::string& method, const std::string& tmpl) {
        std::lock_guard<std::mutex> lock(mu);
        ++served;
        history.emplace_back(method, tmpl);
        if (!profile.crash_on_sequence || profile.crash_sequence.empty()) return false;
        if (history.size() < profile.crash_sequence.size()) return false;
        const size_t off = history.size() - profile.crash_sequence.size();
        for (size_t i = 0; i < profile.crash_sequence.size(); ++i) {
            if (history[off + i] != profile.crash_sequence[i]) return false;
        }
        return true;
    }
};

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_crash(httplib::Response& res) {
    send_json(res, 500, json{{"error", "internal server error"}});
}

std::optional<long long> parse_id(const std::string& text) {
    if (text.empty() || text.size() > 18) return std::nullopt;
    for (char c : text) {
        if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    }
    return std::stoll(text);
}

} // namespace

Testbed::Testbed() : impl_(std::make_unique<Impl>()) {}

Testbed::~Testbed() {
    impl_->server.stop();
    if (impl_->worker.joinable()) impl_->worker.join();
}

const std::string& Testbed::base_url() const {
    return impl_->base_url;
}

int Testbed::port() const {
    return impl_->port;
}

size_t Testbed::requests_served() const {
    std::lock_guard<std::mutex> lock(impl_->mu);
    return impl_->served;
}

void Testbed::reset() {
    std::lock_guard<std::mutex> lock(impl_->mu);
    impl_->pets.clear();
    impl_->users.clear();
    impl_->history.clear();
    impl_->next_pet_id = 1000;
}

std::unique_ptr<Testbed> Testbed::start(const FaultProfile& profile) {
    auto bed = std::unique_ptr<Testbed>(new Testbed());
    Impl* impl = bed->impl_.get();
    impl->profile = profile;
    auto& svr = impl->server;

    // --- POST /pet: create (or upsert by client-chosen id) ---
    svr.Post("/pet", [impl](const httplib::Request& req, httplib::Response& res) {
        if (impl->track_and_check_crash("POST", "/pet")) return send_crash(res);
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object()) {
            return send_json(res, 400, json{{"error", "request body must be a JSON object"}});
        }
        if (impl->profile.reject_missing_field &&
            (!body.contains("name") || !body["name"].is_string())) {
            return send_json(res, 400, json{{"error", "required field 'name' is missing"}});
        }
        std::lock_guard<std::mutex> lock(impl->mu);
        long long id;
        if (body.contains("id") && body["id"].is_number_integer()) {
            id = body["id"].get<long long>();
        } else {
            id = impl->next_pet_id++;
        }
        body["id"] = id;
        if (!body.contains("status")) body["status"] = "available";
        impl->pets[id] = body;
        send_json(res, 200, body);
    });

    // --- GET /pet/{petId}: fetch (slow under the slow-endpoint fault) ---
    svr.Get("/pet/:petId", [impl](const httplib::Request& req, httplib::Response& res) {
        if (impl->track_and_check_crash("GET", "/pet/{petId}")) return send_crash(res);
        if (impl->profile.slow_endpoint) std::this_thread::sleep_for(impl->profile.slow_delay);
        auto id = parse_id(req.path_params.at("petId"));
        if (!id) return send_json(res, 400, json{{"error", "petId must be an integer"}});
        std::lock_guard<std::mutex> lock(impl->mu);
        auto it = impl->pets.find(*id);
        if (it == impl->pets.end()) return send_json(res, 404, json{{"error", "pet not found"}});
        send_json(res, 200, it->second);
    });

    // --- POST /pet/{petId}: update name/status via query parameters ---
    svr.Post("/pet/:petId", [impl](const httplib::Request& req, httplib::Response& res) {
        if (impl->track_and_check_crash("POST", "/pet/{petId}")) return send_crash(res);
        auto id = parse_id(req.path_params.at("petId"));
        if (!id) return send_json(res, 400, json{{"error", "petId must be an integer"}});
        std::lock_guard<std::mutex> lock(impl->mu);
        auto it = impl->pets.find(*id);
        if (it == impl->pets.end()) return send_json(res, 404, json{{"error", "pet not found"}});
        if (!impl->profile.drop_status_update) {
            // The drop-status-update fault silently ignores the new values
            // while still answering 200 — exactly a relation bug.
            if (req.has_param("status")) it->second["status"] = req.get_param_value("status");
            if (req.has_param("name")) it->second["name"] = req.get_param_value("name");
        }
        send_json(res, 200, it->second);
    });

    // --- DELETE /pet/{petId} ---
    svr.Delete("/pet/:petId", [impl](const httplib::Request& req, httplib::Response& res) {
        if (impl->track_and_check_crash("DELETE", "/pet/{petId}")) return send_crash(res);
        auto id = parse_id(req.path_params.at("petId"));
        if (!id) return send_json(res, 400, json{{"error", "petId must be an integer"}});
        std::lock_guard<std::mutex> lock(impl->mu);
        if (impl->pets.erase(*id) == 0) {
            return send_json(res, 404, json{{"error", "pet not found"}});
        }
        send_json(res, 200, json{{"message", "pet deleted"}});
    });

    // --- POST /user: create a user ---
    svr.Post("/user", [impl](const httplib::Request& req, httplib::Response& res) {
        if (impl->track_and_check_crash("POST", "/user")) return send_crash(res);
        json body = json::parse(req.body, nullptr, false);
        if (body.is_discarded() || !body.is_object() || !body.contains("username") ||
            !body["username"].is_string()) {
            return send_json(res, 400, json{{"error", "request body must carry a username"}});
        }
        std::lock_guard<std::mutex> lock(impl->mu);
        impl->users[body["username"].get<std::string>()] = body;
        send_json(res, 200, body);
    });

    // --- GET /user/login: rate-limit headers, deterministic body ---
    svr.Get("/user/login", [impl](const httplib::Request& req, httplib::Response& res) {
        if (impl->track_and_check_crash("GET", "/user/login")) return send_crash(res);
        res.set_header("X-Rate-Limit", "5000");
        res.set_header("X-Expires-After", impl->profile.invalid_expires_header
                                              ? "not-a-valid-date"
                                              : "2026-01-01T00:00:00Z");
        send_json(res, 200, json{{"message", "logged in"}});
    });

    // --- POST /_testbed/reset: excluded from the served specification ---
    svr.Post("/_testbed/reset", [bed = bed.get()](const httplib::Request&, httplib::Response& res) {
        bed->reset();
        send_json(res, 200, json{{"message", "reset"}});
    });

    impl->port = svr.bind_to_any_port("127.0.0.1");
    if (impl->port <= 0) throw PortUnavailable("could not bind a loopback port for the testbed");
    impl->base_url = "http://127.0.0.1:" + std::to_string(impl->port);
    impl->worker = std::thread([impl] { impl->server.listen_after_bind(); });
    svr.wait_until_ready();
    return bed;
}

} // namespace restmorph
