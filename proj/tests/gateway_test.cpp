#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <memory>
#include <string>

#include "digknow/errors.hpp"
#include "digknow/gateway.hpp"

using namespace digknow;

namespace fs = std::filesystem;

TEST_CASE("the registry knows all eight prompt shapes") {
    const TemplateRegistry r = TemplateRegistry::builtin();
    for (const auto& id : template_ids()) CHECK_FALSE(r.body(id).empty());
    CHECK(template_ids().size() == 8);
    CHECK_THROWS_AS(r.body("negotiate"), GatewayError);
}

TEST_CASE("the shipped template assets match the builtin bodies") {
    const TemplateRegistry builtin = TemplateRegistry::builtin();
    const TemplateRegistry loaded = TemplateRegistry::load_dir("assets/templates");
    for (const auto& id : template_ids()) CHECK(loaded.body(id) == builtin.body(id));
}

TEST_CASE("rendering substitutes placeholders and is deterministic") {
    const TemplateRegistry r = TemplateRegistry::builtin();
    const std::map<std::string, std::string> p{{"instruction", "Tidy up."},
                                              {"previous_tasks", "1. Put away pens."}};
    const std::string a = r.render("task_retrieve", p);
    CHECK(a.find("Current task: Tidy up.") != std::string::npos);
    CHECK(a.find("1. Put away pens.") != std::string::npos);
    CHECK(a == r.render("task_retrieve", p));

    CHECK_THROWS_AS(r.render("task_retrieve", {{"instruction", "x"}}),
                    MissingPlaceholder);
}

TEST_CASE("render_numbered emits a 1-based list") {
    CHECK(render_numbered({}) == "");
    CHECK(render_numbered({"a"}) == "1. a");
    CHECK(render_numbered({"a", "b"}) == "1. a\n2. b");
}

TEST_CASE("placeholder digests are stable and value-sensitive") {
    const std::map<std::string, std::string> p{{"a", "1"}, {"b", "2"}};
    CHECK(placeholder_digest(p) == placeholder_digest(p));
    CHECK(placeholder_digest(p) != placeholder_digest({{"a", "1"}, {"b", "3"}}));
    CHECK(placeholder_digest({{"ab", ""}}) != placeholder_digest({{"a", "b"}}));
}

TEST_CASE("scripted responses resolve canned, then fallback, then wildcard") {
    ScriptedClient c;
    const std::map<std::string, std::string> p{{"k", "v"}};
    c.add_wildcard("plan", "wild");
    CHECK(c.complete("plan", p) == "wild");

    c.set_fallback([](const std::string&, const std::map<std::string, std::string>&)
                       -> std::optional<std::string> { return "fallback"; });
    CHECK(c.complete("plan", p) == "fallback");

    c.add_canned("plan", p, "canned");
    CHECK(c.complete("plan", p) == "canned");
    CHECK(c.complete("plan", {{"k", "other"}}) == "fallback");

    ScriptedClient empty;
    CHECK_THROWS_AS(empty.complete("plan", p), GatewayError);
}

TEST_CASE("action lists parse from numbered, semicolon-separated text") {
    const auto items = parse_action_list(
        "1. Open the drawer; 2. Pick up the drink; 3. Put the drink on the table; "
        "4. Close the drawer.");
    REQUIRE(items.size() == 4);
    CHECK(items[0] == "Open the drawer");
    CHECK(items[1] == "Pick up the drink");
    CHECK(items[2] == "Put the drink on the table");
    CHECK(items[3] == "Close the drawer");

    CHECK(parse_action_list("1. Pick up the pen.") ==
          std::vector<std::string>{"Pick up the pen"});
    CHECK(parse_action_list("1) Open the box\n2) Close the box").size() == 2);
    CHECK_THROWS_AS(parse_action_list("I cannot help with that."),
                    UnparseableResponse);
}

TEST_CASE("yes/no index answers parse in both polarities") {
    const auto yes = parse_yes_no_indices("1: Yes, 2: [1,5]");
    CHECK(yes.first);
    CHECK(yes.second == std::vector<int>{1, 5});

    const auto no = parse_yes_no_indices("1: No.");
    CHECK_FALSE(no.first);
    CHECK(no.second.empty());

    CHECK(parse_yes_no_indices("Yes, [2]").second == std::vector<int>{2});
    CHECK(parse_yes_no_indices("1: Yes.").second.empty());
    CHECK_THROWS_AS(parse_yes_no_indices("Maybe?"), UnparseableResponse);
    CHECK_THROWS_AS(parse_yes_no_indices("1: Yes, 2: [1, x]"), UnparseableResponse);
}

TEST_CASE("verdicts parse success, explanation, and correction plans") {
    const Verdict ok = parse_verdict("1. Yes.");
    CHECK(ok.success);
    CHECK_FALSE(ok.correction.has_value());

    const Verdict bad = parse_verdict(
        "1. No. 2. Explanation: Failed to successfully grasp the drink. "
        "Correction plan: 1. Pick up the drink from the drawer; "
        "2. Place the drink on the table.");
    CHECK_FALSE(bad.success);
    CHECK(bad.explanation == "Failed to successfully grasp the drink");
    REQUIRE(bad.correction.has_value());
    REQUIRE(bad.correction->size() == 2);
    CHECK((*bad.correction)[0] == "Pick up the drink from the drawer");
    CHECK((*bad.correction)[1] == "Place the drink on the table");

    const Verdict plain = parse_verdict(
        "1. No. 2. Explanation: The drink should be in the drawer, not in the basket.");
    CHECK_FALSE(plain.success);
    CHECK(plain.explanation ==
          "The drink should be in the drawer, not in the basket");
    CHECK_FALSE(plain.correction.has_value());

    CHECK_THROWS_AS(parse_verdict("1. No."), UnparseableResponse);
    CHECK_THROWS_AS(parse_verdict("I cannot help with that."), UnparseableResponse);
}

TEST_CASE("scene graph sequences parse from stacked three-line blocks") {
    const std::string text =
        "Inferred preceding scene graphs:\n"
        "1.\n"
        "Objects and states: drawer [closed], pen, table\n"
        "Inter-object relations: drawer is on table, pen is in drawer\n"
        "Human-object relations: \n"
        "\n"
        "2.\n"
        "Objects and states: drawer [open], pen, table\n"
        "Inter-object relations: drawer is on table, pen is in drawer\n"
        "Human-object relations: \n"
        "A: 2: Yes.";
    const auto graphs = parse_graph_sequence(text);
    REQUIRE(graphs.size() == 2);
    CHECK(graphs[0].find_node("drawer")->state == std::optional<std::string>("closed"));
    CHECK(graphs[1].find_node("drawer")->state == std::optional<std::string>("open"));

    CHECK_THROWS_AS(parse_graph_sequence("no graphs here"), UnparseableResponse);
}

TEST_CASE("recorded sessions replay by prompt, once each") {
    const fs::path log =
        fs::temp_directory_path() / "digknow_gateway_test_session.jsonl";
    fs::remove(log);
    auto registry = std::make_shared<TemplateRegistry>(TemplateRegistry::builtin());

    auto scripted = std::make_shared<ScriptedClient>();
    scripted->add_wildcard("plan", "1. Pick up the pen.");
    scripted->add_wildcard("plan_revise", "1. Open the drawer.");
    {
        RecordingClient rec(scripted, registry, log.string());
        const std::map<std::string, std::string> p{{"instruction", "x"},
                                                   {"initial_graph", "g"},
                                                   {"pattern_knowledge", "(none)"},
                                                   {"format_reminder", ""}};
        CHECK(rec.complete("plan", p) == "1. Pick up the pen.");
        CHECK(rec.complete("plan", p) == "1. Pick up the pen.");
        CHECK(rec.complete("plan_revise", {{"planned_actions", "1. a"},
                                           {"failure_explanations", "why"},
                                           {"format_reminder", ""}}) ==
              "1. Open the drawer.");
    }

    ReplayClient replay(registry, log.string());
    CHECK(replay.remaining() == 3);
    const std::map<std::string, std::string> p{{"instruction", "x"},
                                               {"initial_graph", "g"},
                                               {"pattern_knowledge", "(none)"},
                                               {"format_reminder", ""}};
    CHECK(replay.complete("plan", p) == "1. Pick up the pen.");
    CHECK(replay.complete("plan", p) == "1. Pick up the pen.");
    CHECK(replay.remaining() == 1);
    // the two identical exchanges are consumed; a third is not served
    CHECK_THROWS_AS(replay.complete("plan", p), GatewayError);
    // a different prompt for a logged template is rejected too
    CHECK_THROWS_AS(replay.complete("plan_revise", {{"planned_actions", "1. b"},
                                                    {"failure_explanations", "why"},
                                                    {"format_reminder", ""}}),
                    GatewayError);
    CHECK(replay.complete("plan_revise", {{"planned_actions", "1. a"},
                                          {"failure_explanations", "why"},
                                          {"format_reminder", ""}}) ==
          "1. Open the drawer.");
    CHECK(replay.remaining() == 0);
    fs::remove(log);
}

TEST_CASE("replaying a missing log fails fast") {
    auto registry = std::make_shared<TemplateRegistry>(TemplateRegistry::builtin());
    CHECK_THROWS_AS(ReplayClient(registry, "/nonexistent/log.jsonl"), GatewayError);
}
