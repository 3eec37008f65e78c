#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "restmorph/cli.hpp"
#include "restmorph/testbed.hpp"
#include "support.hpp"

using namespace restmorph;
using nlohmann::json;
using testsupport::asset_path;
using testsupport::read_file;
using testsupport::TempDir;
namespace fs = std::filesystem;

namespace {

struct CliResult {
    int code = 0;
    std::string out, err;
};

CliResult run_cli(const std::vector<std::string>& args) {
    std::vector<const char*> argv{"restmorph"};
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    CliResult r;
    r.code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

bool contains(const std::string& haystack, const std::string& needle) {
    return haystack.find(needle) != std::string::npos;
}

const std::string kTestbedSpec = asset_path("specs/testbed.json");

} // namespace

// ===== validate-spec =====

TEST_CASE("validate-spec lists the operations of each bundled document") {
    const CliResult bed = run_cli({"validate-spec", "--spec", kTestbedSpec});
    CHECK(bed.code == 0);
    CHECK(contains(bed.out, "operations: 6"));
    CHECK(contains(bed.out, "  DELETE /pet/{petId}"));
    CHECK(contains(bed.out, "title:"));

    const CliResult store = run_cli({"validate-spec", "--spec", asset_path("specs/petstore3.json")});
    CHECK(store.code == 0);
    CHECK(contains(store.out, "operations: 19"));

    const CliResult users =
        run_cli({"validate-spec", "--spec", asset_path("specs/usermanagement2.yaml")});
    CHECK(users.code == 0);
    CHECK(contains(users.out, "operations: 28"));
}

TEST_CASE("validate-spec distinguishes spec errors from io errors") {
    TempDir dir;
    testsupport::write_file(dir.file("broken.json"), "{ not json at all");
    const CliResult broken = run_cli({"validate-spec", "--spec", dir.file("broken.json").string()});
    CHECK(broken.code == 3);
    CHECK(contains(broken.err, "spec error:"));

    testsupport::write_file(dir.file("versionless.json"),
                            R"({"info": {"title": "t", "version": "1"}, "paths": {}})");
    const CliResult versionless =
        run_cli({"validate-spec", "--spec", dir.file("versionless.json").string()});
    CHECK(versionless.code == 3);
    CHECK(contains(versionless.err, "spec error:"));

    const CliResult missing =
        run_cli({"validate-spec", "--spec", dir.file("nowhere.json").string()});
    CHECK(missing.code == 3);
    CHECK(contains(missing.err, "io error:"));
}

TEST_CASE("usage problems exit 2 and --help exits 0") {
    const CliResult nosub = run_cli({});
    CHECK(nosub.code == 2);

    const CliResult nospec = run_cli({"run"});
    CHECK(nospec.code == 2);

    const CliResult unknown = run_cli({"frobnicate"});
    CHECK(unknown.code == 2);

    const CliResult help = run_cli({"--help"});
    CHECK(help.code == 0);
    CHECK(contains(help.out, "run"));
    CHECK(contains(help.out, "validate-spec"));
}

// ===== run: configuration trouble =====

TEST_CASE("run rejects incoherent invocations with exit 2") {
    TempDir dir;
    const std::string url = "http://127.0.0.1:9";

    const CliResult no_llm = run_cli({"run", "--spec", kTestbedSpec, "--base-url", url});
    CHECK(no_llm.code == 2);
    CHECK(contains(no_llm.err, "config error: run needs --llm"));

    const CliResult bad_llm = run_cli(
        {"run", "--spec", kTestbedSpec, "--base-url", url, "--llm", "carrier"});
    CHECK(bad_llm.code == 2);
    CHECK(contains(bad_llm.err, "--llm must be scripted:<dir> or http, got: carrier"));

    const CliResult no_dir =
        run_cli({"run", "--spec", kTestbedSpec, "--base-url", url, "--llm", "scripted:"});
    CHECK(no_dir.code == 2);
    CHECK(contains(no_dir.err, "--llm scripted: needs a directory"));

    const CliResult dead_dir = run_cli({"run", "--spec", kTestbedSpec, "--base-url", url,
                                        "--llm", "scripted:" + dir.file("absent").string()});
    CHECK(dead_dir.code == 2);
    CHECK(contains(dead_dir.err, "scripted responses:"));

    // The bundled document declares a server, so the no-URL failure needs a
    // document without one.
    testsupport::write_file(
        dir.file("serverless.json"),
        R"({"openapi": "3.0.0", "info": {"title": "t", "version": "1"},
            "paths": {"/a": {"get": {"responses": {"200": {"description": "ok"}}}}}})");
    const CliResult no_url =
        run_cli({"run", "--spec", dir.file("serverless.json").string(), "--llm",
                 "scripted:" + testsupport::fig2_scripted_dir()});
    CHECK(no_url.code == 2);
    CHECK(contains(no_url.err, "no base URL"));

    const CliResult bad_header =
        run_cli({"run", "--spec", kTestbedSpec, "--base-url", url, "--llm", "http", "--header",
                 "NoColonHere"});
    CHECK(bad_header.code == 2);
    CHECK(contains(bad_header.err, "--header expects 'Name: value'"));

    const std::string replies = testsupport::scripted_dir(dir, {"[]"});
    const CliResult bad_templates =
        run_cli({"run", "--spec", kTestbedSpec, "--base-url", url, "--llm",
                 "scripted:" + replies, "--templates", dir.file("no-templates").string()});
    CHECK(bad_templates.code == 2);
    CHECK(contains(bad_templates.err, "--templates:"));

    unsetenv("RESTMORPH_API_KEY");
    const CliResult http_no_key =
        run_cli({"run", "--spec", kTestbedSpec, "--base-url", url, "--llm", "http"});
    CHECK(http_no_key.code == 2);
    CHECK(contains(http_no_key.err, "config error:"));
}

TEST_CASE("run reports config file trouble with exit 2") {
    TempDir dir;
    const std::string url = "http://127.0.0.1:9";
    const std::string llm = "scripted:" + testsupport::fig2_scripted_dir();

    const CliResult missing = run_cli({"run", "--spec", kTestbedSpec, "--base-url", url, "--llm",
                                       llm, "--config", dir.file("ghost.json").string()});
    CHECK(missing.code == 2);
    CHECK(contains(missing.err, "config error: config file:"));

    testsupport::write_file(dir.file("bad.json"), "plateau_window: 3");
    const CliResult not_json = run_cli({"run", "--spec", kTestbedSpec, "--base-url", url, "--llm",
                                        llm, "--config", dir.file("bad.json").string()});
    CHECK(not_json.code == 2);
    CHECK(contains(not_json.err, "config file is not valid JSON"));

    testsupport::write_file(dir.file("typo.json"), R"({"platoo_window": 3})");
    const CliResult typo = run_cli({"run", "--spec", kTestbedSpec, "--base-url", url, "--llm",
                                    llm, "--config", dir.file("typo.json").string()});
    CHECK(typo.code == 2);
    CHECK(contains(typo.err, "unknown config key 'platoo_window'"));
}

// ===== run: full sessions =====

TEST_CASE("a scripted run covers half the testbed and persists its artifacts") {
    auto bed = Testbed::start();
    TempDir out_dir;
    const CliResult r = run_cli({"run", "--spec", kTestbedSpec, "--base-url", bed->base_url(),
                                 "--llm", "scripted:" + testsupport::fig2_scripted_dir(),
                                 "--coverage-target", "50", "--out", out_dir.str(),
                                 "--session-id", "cli-fig2"});
    CHECK(r.code == 0);
    CHECK(contains(r.out, "session cli-fig2: stop=coverage-target"));
    CHECK(contains(r.out, "passed=1"));
    CHECK(contains(r.out, "failed=0"));
    CHECK(contains(r.out, "coverage=50.0%"));
    CHECK(contains(r.out, "(6 files)"));
    CHECK(contains(r.err, "iteration 1:")); // progress goes to the error stream
    CHECK(bed->requests_served() == 4);

    const fs::path session = out_dir.path() / "cli-fig2";
    CHECK(fs::exists(session / "report.json"));
    CHECK(fs::exists(session / "report.md"));
    CHECK(fs::exists(session / "plans" / "iter_01_MR26.json"));

    // A faulty service turns the same session into a finding, and the flag
    // turns the finding into a nonzero exit.
    FaultProfile faulty;
    faulty.drop_status_update = true;
    auto bad_bed = Testbed::start(faulty);
    TempDir out2;
    const CliResult f = run_cli({"run", "--spec", kTestbedSpec, "--base-url",
                                 bad_bed->base_url(), "--llm",
                                 "scripted:" + testsupport::fig2_scripted_dir(),
                                 "--coverage-target", "50", "--out", out2.str(),
                                 "--session-id", "cli-faulty", "--fail-on-findings"});
    CHECK(f.code == 1);
    CHECK(contains(f.out, "failed=1"));
}

TEST_CASE("flags override the config file, which overrides the defaults") {
    TempDir dir;
    testsupport::write_file(dir.file("config.json"),
                            R"({"plateau_window": 7, "request_budget": 9000})");
    const std::string replies = testsupport::scripted_dir(dir, {"no json array here at all"});
    auto snapshot_of = [&](const std::vector<std::string>& extra) {
        TempDir out_dir;
        std::vector<std::string> args{"run",   "--spec",       kTestbedSpec,
                                      "--base-url", "http://127.0.0.1:9", "--llm",
                                      "scripted:" + replies,   "--out",      out_dir.str(),
                                      "--session-id", "precedence"};
        args.insert(args.end(), extra.begin(), extra.end());
        const CliResult r = run_cli(args);
        REQUIRE(r.code == 0);
        CHECK(contains(r.out, "stop=no-new-tests"));
        return json::parse(
            read_file((out_dir.path() / "precedence" / "report.json").string()))["config"];
    };

    const json file_only = snapshot_of({"--config", dir.file("config.json").string()});
    CHECK(file_only["plateau_window"] == 7);
    CHECK(file_only["request_budget"] == 9000);

    const json flag_wins = snapshot_of(
        {"--config", dir.file("config.json").string(), "--plateau", "9"});
    CHECK(flag_wins["plateau_window"] == 9);
    CHECK(flag_wins["request_budget"] == 9000); // unflagged keys keep the file's value

    const json defaults = snapshot_of({});
    CHECK(defaults["plateau_window"] == 5);
    CHECK(defaults["request_budget"] == 1000);
}

// ===== replay =====

TEST_CASE("replay re-executes stored plans and reports verdict counts") {
    auto bed = Testbed::start();
    TempDir out_dir;
    const CliResult ran = run_cli({"run", "--spec", kTestbedSpec, "--base-url", bed->base_url(),
                                   "--llm", "scripted:" + testsupport::fig2_scripted_dir(),
                                   "--coverage-target", "50", "--out", out_dir.str(),
                                   "--session-id", "replay-me"});
    REQUIRE(ran.code == 0);
    const size_t after_run = bed->requests_served();

    const CliResult replayed =
        run_cli({"replay", "--spec", kTestbedSpec, "--base-url", bed->base_url(), "--out",
                 out_dir.str(), "--session-id", "replay-me"});
    CHECK(replayed.code == 0);
    CHECK(contains(replayed.out, "replayed 1 plans: passed=1 failed=0 placeholders=0"));
    CHECK(bed->requests_served() == after_run + 4);

    const CliResult nowhere =
        run_cli({"replay", "--spec", kTestbedSpec, "--base-url", bed->base_url(), "--out",
                 out_dir.str(), "--session-id", "never-ran"});
    CHECK(nowhere.code == 3);
    CHECK(contains(nowhere.err, "no plans under"));

    const CliResult no_id = run_cli(
        {"replay", "--spec", kTestbedSpec, "--base-url", bed->base_url(), "--out", out_dir.str()});
    CHECK(no_id.code == 2);
}

TEST_CASE("replay refuses corrupt stored plans") {
    auto bed = Testbed::start();
    TempDir out_dir;
    testsupport::write_file(out_dir.path() / "crooked" / "plans" / "iter_01_bad.json", "{]");
    const CliResult bad_json =
        run_cli({"replay", "--spec", kTestbedSpec, "--base-url", bed->base_url(), "--out",
                 out_dir.str(), "--session-id", "crooked"});
    CHECK(bad_json.code == 3);
    CHECK(contains(bad_json.err, "io error: plan file is not valid JSON"));

    testsupport::write_file(out_dir.path() / "hollow" / "plans" / "iter_01_empty.json",
                            R"({"not_a_plan": true})");
    const CliResult bad_plan =
        run_cli({"replay", "--spec", kTestbedSpec, "--base-url", bed->base_url(), "--out",
                 out_dir.str(), "--session-id", "hollow"});
    CHECK(bad_plan.code == 3);
    CHECK(contains(bad_plan.err, "io error: plan file"));
}

// ===== diff-seq =====

TEST_CASE("diff-seq prints sequences the baseline lacks") {
    TempDir dir;
    testsupport::write_file(dir.file("ours.json"),
                            R"([["POST /pet", "GET /pet/{petId}"], ["GET /user/login"]])");
    testsupport::write_file(dir.file("baseline.json"), R"([["GET /user/login"]])");

    const CliResult fresh =
        run_cli({"diff-seq", dir.file("ours.json").string(), dir.file("baseline.json").string()});
    CHECK(fresh.code == 0);
    CHECK(contains(fresh.out, "+ POST /pet -> GET /pet/{petId}"));
    CHECK(contains(fresh.out, "new sequences: 1 (ours 2, baseline 1)"));

    const CliResult gated =
        run_cli({"diff-seq", dir.file("ours.json").string(), dir.file("baseline.json").string(),
                 "--fail-on-findings"});
    CHECK(gated.code == 1);

    const CliResult same =
        run_cli({"diff-seq", dir.file("ours.json").string(), dir.file("ours.json").string()});
    CHECK(same.code == 0);
    CHECK(contains(same.out, "new sequences: 0"));

    testsupport::write_file(dir.file("scalar.json"), "42");
    const CliResult malformed =
        run_cli({"diff-seq", dir.file("scalar.json").string(), dir.file("baseline.json").string()});
    CHECK(malformed.code == 3);
    CHECK(contains(malformed.err, "io error:"));

    const CliResult missing =
        run_cli({"diff-seq", dir.file("ghost.json").string(), dir.file("baseline.json").string()});
    CHECK(missing.code == 3);
    CHECK(contains(missing.err, "io error:"));
}
