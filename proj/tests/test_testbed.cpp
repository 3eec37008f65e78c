#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "restmorph/testbed.hpp"
#include "support.hpp"

using namespace restmorph;
using nlohmann::json;

namespace {

httplib::Client client_for(const Testbed& bed) {
    httplib::Client cli("127.0.0.1", bed.port());
    cli.set_read_timeout(15, 0);
    return cli;
}

json body_of(const httplib::Result& res) {
    REQUIRE(res);
    return json::parse(res->body);
}

} // namespace

TEST_CASE("the testbed binds ephemeral loopback ports") {
    auto bed = Testbed::start();
    CHECK(bed->port() > 0);
    CHECK(bed->base_url() == "http://127.0.0.1:" + std::to_string(bed->port()));
    auto second = Testbed::start();
    CHECK(second->port() != bed->port()); // two instances coexist
}

TEST_CASE("pets support the full create, read, update, delete cycle") {
    auto bed = Testbed::start();
    auto cli = client_for(*bed);

    auto created = cli.Post("/pet", R"({"id": 1, "name": "doggie", "photoUrls": ["url1"]})",
                            "application/json");
    REQUIRE(created);
    CHECK(created->status == 200);
    json pet = json::parse(created->body);
    CHECK(pet["id"] == 1);
    CHECK(pet["status"] == "available"); // defaulted

    auto fetched = cli.Get("/pet/1");
    CHECK(fetched->status == 200);
    CHECK(body_of(fetched) == pet);

    auto updated = cli.Post("/pet/1?name=rex&status=sold", "", "text/plain");
    CHECK(updated->status == 200);
    json after = body_of(updated);
    CHECK(after["name"] == "rex");
    CHECK(after["status"] == "sold");
    CHECK(body_of(cli.Get("/pet/1"))["status"] == "sold");

    CHECK(cli.Delete("/pet/1")->status == 200);
    CHECK(cli.Get("/pet/1")->status == 404);
    CHECK(cli.Delete("/pet/1")->status == 404);
}

TEST_CASE("ids are assigned from 1000 when the client picks none") {
    auto bed = Testbed::start();
    auto cli = client_for(*bed);
    CHECK(body_of(cli.Post("/pet", R"({"name": "a"})", "application/json"))["id"] == 1000);
    CHECK(body_of(cli.Post("/pet", R"({"name": "b"})", "application/json"))["id"] == 1001);
    // Upsert by explicit id overwrites.
    cli.Post("/pet", R"({"id": 1000, "name": "swapped"})", "application/json");
    CHECK(body_of(cli.Get("/pet/1000"))["name"] == "swapped");
}

TEST_CASE("client mistakes answer 400 and absences 404") {
    auto bed = Testbed::start();
    auto cli = client_for(*bed);
    CHECK(cli.Post("/pet", "not json at all", "application/json")->status == 400);
    CHECK(cli.Post("/pet", "[1, 2]", "application/json")->status == 400);
    CHECK(cli.Get("/pet/abc")->status == 400);
    CHECK(cli.Get("/pet/99999999999999999999")->status == 400); // too long for an id
    CHECK(cli.Post("/pet/abc?status=sold", "", "text/plain")->status == 400);
    CHECK(cli.Delete("/pet/abc")->status == 400);
    CHECK(cli.Post("/user", R"({"no": "username"})", "application/json")->status == 400);
    CHECK(cli.Get("/pet/424242")->status == 404);
    CHECK(cli.Post("/pet/424242?status=sold", "", "text/plain")->status == 404);
}

TEST_CASE("users register and login serves its documented headers") {
    auto bed = Testbed::start();
    auto cli = client_for(*bed);
    auto user = cli.Post("/user", R"({"username": "kim"})", "application/json");
    CHECK(user->status == 200);
    auto login = cli.Get("/user/login");
    REQUIRE(login);
    CHECK(login->status == 200);
    CHECK(login->get_header_value("X-Rate-Limit") == "5000");
    CHECK(login->get_header_value("X-Expires-After") == "2026-01-01T00:00:00Z");
    CHECK(body_of(login)["message"] == "logged in");
}

// ===== one fault per profile flag =====

TEST_CASE("drop-status-update answers 200 while silently ignoring the update") {
    FaultProfile profile;
    profile.drop_status_update = true;
    auto bed = Testbed::start(profile);
    auto cli = client_for(*bed);
    cli.Post("/pet", R"({"id": 2, "name": "cat", "status": "available"})", "application/json");
    auto updated = cli.Post("/pet/2?status=sold", "", "text/plain");
    CHECK(updated->status == 200);
    CHECK(body_of(updated)["status"] == "available"); // unchanged
    CHECK(body_of(cli.Get("/pet/2"))["status"] == "available");

    // The fault survives a reset; only the data is cleared.
    bed->reset();
    CHECK(cli.Get("/pet/2")->status == 404);
    cli.Post("/pet", R"({"id": 2, "name": "cat"})", "application/json");
    cli.Post("/pet/2?status=sold", "", "text/plain");
    CHECK(body_of(cli.Get("/pet/2"))["status"] == "available");
}

TEST_CASE("invalid-expires-header corrupts only the date-time header") {
    FaultProfile profile;
    profile.invalid_expires_header = true;
    auto bed = Testbed::start(profile);
    auto cli = client_for(*bed);
    auto login = cli.Get("/user/login");
    CHECK(login->status == 200);
    CHECK(login->get_header_value("X-Expires-After") == "not-a-valid-date");
    CHECK(login->get_header_value("X-Rate-Limit") == "5000"); // untouched
}

TEST_CASE("reject-missing-field turns lenient creation strict") {
    FaultProfile profile;
    profile.reject_missing_field = true;
    auto bed = Testbed::start(profile);
    auto cli = client_for(*bed);
    auto rejected = cli.Post("/pet", R"({"id": 3})", "application/json");
    CHECK(rejected->status == 400);
    CHECK(cli.Post("/pet", R"({"id": 3, "name": "named"})", "application/json")->status == 200);
}

TEST_CASE("slow-endpoint delays pet retrieval by the configured amount") {
    FaultProfile profile;
    profile.slow_endpoint = true;
    profile.slow_delay = std::chrono::milliseconds(300);
    auto bed = Testbed::start(profile);
    auto cli = client_for(*bed);
    const auto before = std::chrono::steady_clock::now();
    auto res = cli.Get("/pet/77");
    const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
        std::chrono::steady_clock::now() - before);
    REQUIRE(res);
    CHECK(res->status == 404); // still sleeps before answering
    CHECK(elapsed.count() >= 300);
    // Other operations stay fast.
    const auto t2 = std::chrono::steady_clock::now();
    CHECK(cli.Get("/user/login")->status == 200);
    CHECK(std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() -
                                                                t2)
              .count() < 200);
}

TEST_CASE("crash-on-sequence fires exactly on the configured suffix") {
    FaultProfile profile;
    profile.crash_on_sequence = true;
    profile.crash_sequence = {{"POST", "/user"}, {"GET", "/user/login"}, {"GET", "/user/login"}};
    auto bed = Testbed::start(profile);
    auto cli = client_for(*bed);
    CHECK(cli.Post("/user", R"({"username": "kim"})", "application/json")->status == 200);
    CHECK(cli.Get("/user/login")->status == 200);
    auto crashed = cli.Get("/user/login"); // completes the suffix
    CHECK(crashed->status == 500);
    CHECK(body_of(crashed)["error"] == "internal server error");
    // The suffix no longer matches, so the service recovers.
    CHECK(cli.Get("/user/login")->status == 200);
}

// ===== bookkeeping =====

TEST_CASE("the service counts answered requests and resets over http") {
    auto bed = Testbed::start();
    auto cli = client_for(*bed);
    CHECK(bed->requests_served() == 0);
    cli.Post("/pet", R"({"id": 4, "name": "tracked"})", "application/json");
    cli.Get("/pet/4");
    CHECK(bed->requests_served() == 2);

    // The reset endpoint clears data without joining the documented surface.
    auto reset = cli.Post("/_testbed/reset", "", "text/plain");
    CHECK(reset->status == 200);
    CHECK(bed->requests_served() == 2); // not counted
    CHECK(cli.Get("/pet/4")->status == 404);
    CHECK(bed->requests_served() == 3);
}
