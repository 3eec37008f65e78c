#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "restmorph/errors.hpp"

namespace restmorph {

// Switchable faults for the fixture service. Each flag plants exactly one
// class of defect so tests can observe one failure class in isolation.
struct FaultProfile {
    // POST /pet/{petId} silently ignores the status update (relation bug).
    bool drop_status_update = false;
    // GET /user/login returns an X-Expires-After header that is not a valid
    // date-time (response contract bug).
    bool invalid_expires_header = false;
    // The service answers 500 when the recent request history ends with
    // crash_sequence (server crash bug).
    bool crash_on_sequence = false;
    std::vector<std::pair<std::string, std::string>> crash_sequence; // (METHOD, template)
    // GET /pet/{petId} sleeps slow_delay before answering (timeout bug).
    // Keep slow_delay above the executor's per-request timeout (default 10s)
    // for the fault to be observable.
    bool slow_endpoint = false;
    std::chrono::milliseconds slow_delay{10600};
    // POST /pet rejects bodies lacking "name" with 400; without the flag the
    // service is lenient (request contract bug is in the test's request).
    bool reject_missing_field = false;
};

// A small in-process pet-store-like HTTP service with deterministic, seeded
// behavior. Serves the six operations of the bundled fixture specification
// plus POST /_testbed/reset, which is deliberately absent from that
// specification so it never counts toward coverage.
class Testbed {
public:
    // Binds an ephemeral port and serves until destruction.
    static std::unique_ptr<Testbed> start(const FaultProfile& profile = {}); // throws PortUnavailable

    ~Testbed();
    Testbed(const Testbed&) = delete;
    Testbed& operator=(const Testbed&) = delete;

    const std::string& base_url() const; // "http://127.0.0.1:<port>"
    int port() const;

    // Clears resources and request history; the fault profile survives.
    void reset();

    // Total requests the service has answered (diagnostics for tests).
    size_t requests_served() const;

private:
    Testbed();
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace restmorph
