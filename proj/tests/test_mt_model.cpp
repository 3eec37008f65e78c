#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <string>
#include <vector>

#include "restmorph/mt_model.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace restmorph;
using nlohmann::json;

// ===== semantic slugs =====

TEST_CASE("normalize_title reproduces the documented worked-example slug") {
    CHECK(normalize_title("Updating a pet's status should be observable when retrieving that "
                          "pet by its identifier.") ==
          "updating_a_pet_s_status_should_be_observable_when_retrieving_that_pet_by_its_"
          "identifier");
}

TEST_CASE("normalize_title matches the independent oracle on a hand-built corpus") {
    const std::vector<std::string> corpus{
        "",
        "   ",
        "Simple title",
        "MR1: Creating a pet increases the count.",
        "MR 12 deleting twice is idempotent",
        "mr3creating', then retrieving",
        "Repeated   spaces -- and?? punctuation!!",
        "camry 4 is a car, mri 3 is a scan",
        "MR7",
        "xmr12 stays, mr12 goes",
        "Updating a pet's status should be observable when retrieving that pet by its "
        "identifier.",
        "UPPER lower MiXeD",
        "ends with separators ---",
        "---starts with separators",
        "unicode stays bytewise: café",
        "tabs\tand\nnewlines",
        "mr 1 mr 2 mr 3",
        "a_b_c already sluggy",
        "12mr12 numeric prefix keeps token",
    };
    for (const auto& title : corpus) {
        CAPTURE(title);
        CHECK(normalize_title(title) == oracles::slug(title));
    }
}

TEST_CASE("normalize_title matches the oracle and is idempotent on random titles") {
    auto rng = testsupport::property_rng(1);
    const std::string alphabet = "abmr 129'.-_!?/MR()";
    std::uniform_int_distribution<size_t> pick(0, alphabet.size() - 1);
    std::uniform_int_distribution<int> len(0, 40);
    for (int i = 0; i < 500; ++i) {
        std::string title;
        const int n = len(rng);
        for (int k = 0; k < n; ++k) title.push_back(alphabet[pick(rng)]);
        CAPTURE(title);
        const std::string got = normalize_title(title);
        CHECK(got == oracles::slug(title));
        CHECK(normalize_title(got) == got); // idempotent
        for (char c : got) {
            const bool legal = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
            CHECK(legal);
        }
    }
}

TEST_CASE("titles differing only in generator numbering share a slug") {
    CHECK(normalize_title("MR4: Deleting a pet removes it") ==
          normalize_title("MR 17 deleting a pet removes it"));
    CHECK(normalize_title("Deleting a pet removes it") ==
          normalize_title("mr9 Deleting a pet removes it!"));
}

// ===== construction and grouping =====

TEST_CASE("make_hlmt establishes the slug invariant") {
    const Hlmt h = make_hlmt("MR1", "Some Scenario!", "g", "w", "t", 3);
    CHECK(h.id == "MR1");
    CHECK(h.iteration_index == 3);
    CHECK(h.semantic_slug == "some_scenario");
    CHECK(h.semantic_slug == normalize_title(h.scenario_title));
}

TEST_CASE("group_semantic partitions by slug in first-appearance order") {
    std::vector<Hlmt> hlmts{
        make_hlmt("MR1", "Alpha beta", "g", "w", "t", 1),
        make_hlmt("MR2", "Gamma", "g", "w", "t", 1),
        make_hlmt("MR3", "MR3 alpha beta!", "g", "w", "t", 2),
        make_hlmt("MR4", "Gamma", "g", "w", "t", 2),
        make_hlmt("MR5", "delta", "g", "w", "t", 2),
    };
    const auto groups = group_semantic(hlmts, "sess");
    REQUIRE(groups.size() == 3);
    CHECK(groups[0].slug == "alpha_beta");
    CHECK(groups[1].slug == "gamma");
    CHECK(groups[2].slug == "delta");
    REQUIRE(groups[0].members.size() == 2);
    CHECK(groups[0].members[0] == GroupMember{"sess", 1, "MR1"});
    CHECK(groups[0].members[1] == GroupMember{"sess", 2, "MR3"});

    size_t total = 0;
    for (const auto& g : groups) total += g.members.size();
    CHECK(total == hlmts.size()); // every input in exactly one group
}

// ===== lenient recovery =====

TEST_CASE("recover_json_array handles fences, prose, quotes, and trailing commas") {
    auto a = recover_json_array("Here you go:\n```json\n[1, 2, 3]\n```\nEnjoy!");
    REQUIRE(a.has_value());
    CHECK(*a == json::parse("[1,2,3]"));

    auto b = recover_json_array("prefix [ {'k': 'v', }, ] suffix");
    REQUIRE(b.has_value());
    CHECK(*b == json::parse(R"([{"k":"v"}])"));

    auto c = recover_json_array("[{id: 'X', flag: True, nothing: None, no: False}]");
    REQUIRE(c.has_value());
    CHECK(*c == json::parse(R"([{"id":"X","flag":true,"nothing":null,"no":false}])"));

    auto d = recover_json_array("fenced first\n```\n[\"from fence\"]\n```\n[\"from body\"]");
    REQUIRE(d.has_value());
    CHECK(*d == json::parse(R"(["from fence"])")); // fenced bodies are scanned first

    CHECK_FALSE(recover_json_array("no brackets here").has_value());
    CHECK_FALSE(recover_json_array("{\"an\": \"object\"}").has_value());
    CHECK_FALSE(recover_json_array("[1, 2").has_value()); // unbalanced
}

TEST_CASE("recover_json_object finds the outermost object") {
    auto o = recover_json_object("reply: {'a': {'b': 1}} done");
    REQUIRE(o.has_value());
    CHECK(*o == json::parse(R"({"a":{"b":1}})"));
    CHECK_FALSE(recover_json_object("[1,2,3]").has_value());
}

TEST_CASE("recovery escapes raw control characters inside strings") {
    auto a = recover_json_array("[\"line\nbreak\"]");
    REQUIRE(a.has_value());
    CHECK((*a)[0].get<std::string>() == "line\nbreak");
}

// ===== hlmt list parsing =====

TEST_CASE("parse_hlmt_list converts well-formed arrays and stamps the iteration") {
    const std::string raw = R"([
        {"id": "MR1", "scenario": " S1 ", "given": "g1", "when": "w1", "then": "t1"},
        {"id": 7, "scenario": "S2", "given": "g2", "when": "w2", "then": "t2"}
    ])";
    const HlmtParse parsed = parse_hlmt_list(raw, 4);
    REQUIRE(parsed.hlmts.size() == 2);
    CHECK(parsed.dropped.empty());
    CHECK(parsed.hlmts[0].id == "MR1");
    CHECK(parsed.hlmts[0].scenario_title == "S1"); // trimmed
    CHECK(parsed.hlmts[0].iteration_index == 4);
    CHECK(parsed.hlmts[0].semantic_slug == "s1");
    CHECK(parsed.hlmts[1].id == "7"); // numeric id coerced
}

TEST_CASE("parse_hlmt_list drops defective elements with diagnostics") {
    const std::string raw = R"([
        {"id": "OK", "scenario": "s", "given": "g", "when": "w", "then": "t"},
        "not an object",
        {"scenario": "s", "given": "g", "when": "w", "then": "t"},
        {"id": "MISSING", "scenario": "s", "given": "g", "then": "t"}
    ])";
    const HlmtParse parsed = parse_hlmt_list(raw);
    REQUIRE(parsed.hlmts.size() == 1);
    CHECK(parsed.hlmts[0].id == "OK");
    REQUIRE(parsed.dropped.size() == 3);
    CHECK(parsed.dropped[0].find("element 1") != std::string::npos);
    CHECK(parsed.dropped[1].find("element 2") != std::string::npos);
    CHECK(parsed.dropped[2].find("when") != std::string::npos);
}

TEST_CASE("parse_hlmt_list raises when no array is recoverable") {
    CHECK_THROWS_AS(parse_hlmt_list("I could not think of any tests, sorry."), NoArrayFound);
    CHECK_THROWS_AS(parse_hlmt_list(""), NoArrayFound);
    CHECK_THROWS_AS(parse_hlmt_list("{\"id\": \"MR1\"}"), NoArrayFound);
}

// ===== lenient parsing property =====

namespace {

std::string random_text(std::mt19937_64& rng, int max_len) {
    // Payload charset avoids quotes, braces, and backslashes so every
    // supported mutation stays reversible.
    static const std::string chars = "abcdefghij KLMNOP.,-_0123456789";
    std::uniform_int_distribution<size_t> pick(0, chars.size() - 1);
    std::uniform_int_distribution<int> len(1, max_len);
    std::string out;
    const int n = len(rng);
    for (int i = 0; i < n; ++i) out.push_back(chars[pick(rng)]);
    // Leading/trailing whitespace would be trimmed on parse; keep edges tight.
    if (out.front() == ' ') out.front() = 'x';
    if (out.back() == ' ') out.back() = 'x';
    return out;
}

std::string mutate(std::mt19937_64& rng, std::string text) {
    std::uniform_int_distribution<int> coin(0, 1);
    if (coin(rng)) { // single-quote style
        for (char& c : text) {
            if (c == '"') c = '\'';
        }
    }
    if (coin(rng)) { // trailing commas before closers
        std::string out;
        for (size_t i = 0; i < text.size(); ++i) {
            if (text[i] == '}' || text[i] == ']') out += " , ";
            out.push_back(text[i]);
        }
        text = out;
    }
    if (coin(rng)) { // fence it
        text = "Sure! Here are the tests:\n```json\n" + text + "\n```\nLet me know.";
    } else if (coin(rng)) { // bare prose around it
        text = "The tests are " + text + " as requested.";
    }
    return text;
}

} // namespace

TEST_CASE("mutated well-formed hlmt arrays parse back to the original value") {
    auto rng = testsupport::property_rng(2);
    std::uniform_int_distribution<int> count(1, 5);
    for (int sample = 0; sample < 100; ++sample) {
        std::vector<Hlmt> original;
        json array = json::array();
        const int n = count(rng);
        for (int i = 0; i < n; ++i) {
            Hlmt h = make_hlmt("MR" + std::to_string(i + 1), random_text(rng, 30),
                               random_text(rng, 20), random_text(rng, 20),
                               random_text(rng, 20), 1);
            array.push_back(hlmt_to_json(h));
            original.push_back(std::move(h));
        }
        const std::string mutated = mutate(rng, array.dump(2));
        CAPTURE(sample);
        CAPTURE(mutated);
        const HlmtParse parsed = parse_hlmt_list(mutated, 1);
        CHECK(parsed.dropped.empty());
        REQUIRE(parsed.hlmts.size() == original.size());
        for (size_t i = 0; i < original.size(); ++i) {
            CHECK(parsed.hlmts[i] == original[i]);
        }
        CHECK(hlmt_list_to_json(parsed.hlmts) == array);
    }
}

// ===== validation =====

TEST_CASE("validate_hlmt accepts sound scenarios and flags structural defects") {
    const Hlmt good = make_hlmt("MR1", "Title", "g", "w", "t", 1);
    CHECK(validate_hlmt(good).empty());

    Hlmt empty_fields = make_hlmt("", "  ", "", "w", "t", 1);
    const auto problems = validate_hlmt(empty_fields);
    CHECK(problems.size() == 3); // id, scenario, given

    Hlmt stale = good;
    stale.semantic_slug = "wrong";
    bool flagged = false;
    for (const auto& d : validate_hlmt(stale)) {
        if (d.where == "semantic_slug") flagged = true;
    }
    CHECK(flagged);
}

TEST_CASE("validate_hlmt flags duplicate ids within one iteration only") {
    const std::vector<Hlmt> batch{
        make_hlmt("MR1", "A", "g", "w", "t", 1),
        make_hlmt("MR1", "B", "g", "w", "t", 1),
        make_hlmt("MR1", "C", "g", "w", "t", 2), // other iteration: no clash
        make_hlmt("MR2", "D", "g", "w", "t", 1),
    };
    CHECK_FALSE(validate_hlmt(batch[0], batch).empty());
    CHECK_FALSE(validate_hlmt(batch[1], batch).empty());
    CHECK(validate_hlmt(batch[2], batch).empty());
    CHECK(validate_hlmt(batch[3], batch).empty());
}

// ===== wire form =====

TEST_CASE("hlmt json wire form carries the five prose fields") {
    const Hlmt h = make_hlmt("MR9", "S", "G", "W", "T", 2);
    const json j = hlmt_to_json(h);
    CHECK(j == json::parse(R"({"id":"MR9","scenario":"S","given":"G","when":"W","then":"T"})"));
    const json list = hlmt_list_to_json(std::vector<Hlmt>{h, h});
    REQUIRE(list.is_array());
    CHECK(list.size() == 2);
}
