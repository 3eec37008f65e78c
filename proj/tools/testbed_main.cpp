// Standalone launcher for the fixture service, so engine demos can run
// against a live target with selectable faults and no external dependencies.

#include <csignal>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "restmorph/testbed.hpp"

namespace {
volatile std::sig_atomic_t g_stop = 0;
void handle_signal(int) { g_stop = 1; }
} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Fault-injectable pet-store fixture service"};
    std::vector<std::string> faults;
    app.add_option("--fault", faults,
                   "Enable a fault: drop-status-update, invalid-expires-header, "
                   "slow-endpoint, reject-missing-field (repeatable)");
    long long slow_ms = 10600;
    app.add_option("--slow-delay", slow_ms, "slow-endpoint delay in ms (default 10600)");
    CLI11_PARSE(app, argc, argv);

    restmorph::FaultProfile profile;
    for (const auto& f : faults) {
        if (f == "drop-status-update") profile.drop_status_update = true;
        else if (f == "invalid-expires-header") profile.invalid_expires_header = true;
        else if (f == "slow-endpoint") profile.slow_endpoint = true;
        else if (f == "reject-missing-field") profile.reject_missing_field = true;
        else {
            std::cerr << "unknown fault: " << f << "\n";
            return 2;
        }
    }
    profile.slow_delay = std::chrono::milliseconds(slow_ms);

    std::unique_ptr<restmorph::Testbed> testbed;
    try {
        testbed = restmorph::Testbed::start(profile);
    } catch (const restmorph::PortUnavailable& e) {
        std::cerr << "cannot bind: " << e.what() << "\n";
        return 2;
    }
    std::cout << "serving on " << testbed->base_url() << " (ctrl-c to stop)" << std::endl;

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
    std::cout << "answered " << testbed->requests_served() << " requests\n";
    return 0;
}
