#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "digknow/errors.hpp"
#include "digknow/eval.hpp"
#include "digknow/scripted_oracle.hpp"

using namespace digknow;

namespace {

// exponential-time reference implementation, usable for short sequences
size_t lev_recursive(const std::vector<std::string>& a, size_t i,
                     const std::vector<std::string>& b, size_t j) {
    if (i == a.size()) return b.size() - j;
    if (j == b.size()) return a.size() - i;
    const size_t sub = lev_recursive(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
    const size_t del = lev_recursive(a, i + 1, b, j) + 1;
    const size_t ins = lev_recursive(a, i, b, j + 1) + 1;
    return std::min({sub, del, ins});
}

Scenario drink_scenario(bool drawer_open) {
    Scenario s;
    s.name = "drink";
    s.surfaces = {"table"};
    s.containers.push_back({"drawer", drawer_open, ""});
    ScenarioObject drink;
    drink.id = "drink";
    drink.class_label = "drink";
    drink.location = InContainer{"drawer"};
    s.objects.push_back(drink);
    return s;
}

TaskSpec drink_task() {
    TaskSpec t;
    t.task_id = 99;
    t.description = "Put the drink on the table and close it.";
    t.step_count = 4;
    t.scene = "drink";
    t.scenario = drink_scenario(false);
    GoalLiteral on_table;
    on_table.at_name = "drink";
    on_table.at_location = OnSurface{"table"};
    t.goal.literals.push_back(on_table);
    GoalLiteral closed;
    closed.container_id = "drawer";
    closed.container_is_open = false;
    t.goal.literals.push_back(closed);
    t.ground_truth = {{"open(drawer)", "pick(drink)", "place_on(drink, table)",
                       "close(drawer)"}};
    return t;
}

const TaskSpec& find_task(const std::vector<TaskSpec>& tasks, int id) {
    for (const auto& t : tasks)
        if (t.task_id == id) return t;
    throw std::runtime_error("missing task");
}

} // namespace

TEST_CASE("normalized levenshtein handles the boundary conventions") {
    const std::vector<std::string> abcd{"a", "b", "c", "d"};
    const std::vector<std::string> abxd{"a", "b", "x", "d"};
    CHECK(normalized_levenshtein(abcd, abcd) == doctest::Approx(1.0));
    CHECK(normalized_levenshtein(abcd, abxd) == doctest::Approx(0.75));
    CHECK(normalized_levenshtein({}, {}) == doctest::Approx(1.0));
    CHECK(normalized_levenshtein({}, abcd) == doctest::Approx(0.0));
    CHECK(normalized_levenshtein(abcd, {}) == doctest::Approx(0.0));
    CHECK(normalized_levenshtein(abcd, abxd) ==
          doctest::Approx(normalized_levenshtein(abxd, abcd)));
}

TEST_CASE("normalized levenshtein matches a recursive reference") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> len(0, 5);
    std::uniform_int_distribution<int> sym(0, 3);
    const std::vector<std::string> alphabet{"w", "x", "y", "z"};
    for (int trial = 0; trial < 300; ++trial) {
        std::vector<std::string> a, b;
        for (int i = len(rng); i > 0; --i) a.push_back(alphabet[sym(rng)]);
        for (int i = len(rng); i > 0; --i) b.push_back(alphabet[sym(rng)]);
        const double expected =
            1.0 - static_cast<double>(lev_recursive(a, 0, b, 0)) /
                      static_cast<double>(std::max({a.size(), b.size(), size_t{1}}));
        CHECK(normalized_levenshtein(a, b) == doctest::Approx(expected));
    }
}

TEST_CASE("the task suite loads fifteen tasks with parsable ground truth") {
    const auto tasks = load_tasks("fixtures/tasks.json");
    REQUIRE(tasks.size() == 15);
    for (const auto& t : tasks) {
        CHECK(t.seen == (t.task_id <= 9));
        CHECK(t.step_count > 0);
        REQUIRE(t.ground_truth.size() == 5);
        for (const auto& gt : t.ground_truth) {
            CHECK_FALSE(gt.empty());
            for (const auto& text : gt) CHECK(step_from_text(text).has_value());
        }
    }
    CHECK(find_task(tasks, 1).ground_truth[0].size() == 4);
}

TEST_CASE("a perfect planner scores one on every cell") {
    const auto tasks = load_tasks("fixtures/tasks.json");
    auto oracle = make_scripted_client();
    const PlanningReport r = run_planning_suite({find_task(tasks, 1)}, nullptr,
                                                *oracle, nullptr, RunOptions{}, 2);
    REQUIRE(r.tasks.size() == 1);
    CHECK(r.tasks[0].task_id == 1);
    CHECK(r.tasks[0].cells.size() == find_task(tasks, 1).ground_truth.size() * 2);
    for (const auto& cell : r.tasks[0].cells) {
        CHECK(cell.score == doctest::Approx(1.0));
        CHECK(cell.failure.empty());
    }
    CHECK(r.tasks[0].mean_score == doctest::Approx(1.0));
    CHECK(r.overall_mean == doctest::Approx(1.0));
}

TEST_CASE("a truncated plan earns fractional edit-distance credit") {
    ScriptedClient client;
    client.add_wildcard("plan",
                        "1. Open the drawer; 2. Pick up the drink; "
                        "3. Put the drink on the table");
    const PlanningReport r =
        run_planning_suite({drink_task()}, nullptr, client, nullptr, RunOptions{}, 2);
    REQUIRE(r.tasks.size() == 1);
    REQUIRE(r.tasks[0].cells.size() == 2);
    for (const auto& cell : r.tasks[0].cells)
        CHECK(cell.score == doctest::Approx(0.75));
    CHECK(r.overall_mean == doctest::Approx(0.75));
}

TEST_CASE("planning failures score zero instead of aborting the suite") {
    ScriptedClient client;
    client.add_wildcard("plan", "1. Pick up the drink.");
    client.add_wildcard("plan_revise", "1. Pick up the drink.");
    const PlanningReport r =
        run_planning_suite({drink_task()}, nullptr, client, nullptr, RunOptions{}, 1);
    REQUIRE(r.tasks[0].cells.size() == 1);
    CHECK(r.tasks[0].cells[0].score == 0.0);
    CHECK_FALSE(r.tasks[0].cells[0].failure.empty());
    CHECK(r.overall_mean == 0.0);
}

TEST_CASE("the robot suite runs numbered episodes over the variation seeds") {
    const auto tasks = load_tasks("fixtures/tasks.json");
    auto oracle = make_scripted_client();
    const RobotReport r = run_robot_suite({find_task(tasks, 1)}, nullptr, *oracle,
                                          nullptr, RunOptions{}, 4);
    REQUIRE(r.tasks.size() == 1);
    REQUIRE(r.tasks[0].episodes.size() == 4);
    for (size_t i = 0; i < r.tasks[0].episodes.size(); ++i) {
        CHECK(r.tasks[0].episodes[i].episode == static_cast<int>(i));
        CHECK(r.tasks[0].episodes[i].variation_seed == i);
        CHECK(r.tasks[0].episodes[i].success);
    }
    CHECK(r.tasks[0].success_rate == doctest::Approx(1.0));
    CHECK(r.overall_success_rate == doctest::Approx(1.0));
}

TEST_CASE("ablation variants toggle exactly one flag each") {
    CHECK(ablation_variant_names() ==
          std::vector<std::string>{"full", "no_kb", "no_sg", "no_pc", "no_ec"});
    const RunOptions base;
    CHECK_FALSE(apply_variant(base, "full").ablation.no_kb);
    CHECK(apply_variant(base, "no_kb").ablation.no_kb);
    CHECK(apply_variant(base, "no_sg").ablation.no_sg);
    CHECK(apply_variant(base, "no_pc").ablation.no_pc);
    CHECK(apply_variant(base, "no_ec").ablation.no_ec);
    CHECK_FALSE(apply_variant(base, "no_ec").ablation.no_kb);
    CHECK_THROWS_AS(apply_variant(base, "no_everything"), Error);
}

TEST_CASE("reports serialize deterministically") {
    const auto tasks = load_tasks("fixtures/tasks.json");
    auto oracle = make_scripted_client();
    const std::vector<TaskSpec> suite{find_task(tasks, 1)};

    const PlanningReport p1 =
        run_planning_suite(suite, nullptr, *oracle, nullptr, RunOptions{}, 1);
    const PlanningReport p2 =
        run_planning_suite(suite, nullptr, *oracle, nullptr, RunOptions{}, 1);
    CHECK(planning_report_to_json(p1).dump() == planning_report_to_json(p2).dump());
    CHECK_FALSE(planning_report_table(p1).empty());

    const RobotReport r1 =
        run_robot_suite(suite, nullptr, *oracle, nullptr, RunOptions{}, 3);
    const RobotReport r2 =
        run_robot_suite(suite, nullptr, *oracle, nullptr, RunOptions{}, 3);
    CHECK(robot_report_to_json(r1).dump() == robot_report_to_json(r2).dump());
    CHECK_FALSE(robot_report_table(r1).empty());
}

TEST_CASE("building a knowledge base from recordings stores one entry per file") {
    namespace fs = std::filesystem;
    const fs::path dir = fs::temp_directory_path() / "digknow_eval_kb";
    fs::remove_all(dir);
    auto oracle = make_scripted_client();
    const BagOfClassesEmbedder emb(BagOfClassesEmbedder::default_vocabulary());
    KnowledgeBase kb = build_knowledge_base(
        dir.string(),
        {"fixtures/recordings/task1.json", "fixtures/recordings/task2.json"}, 5,
        *oracle, emb, nlohmann::json{{"name", "bag_of_classes"}});
    CHECK(kb.list() == std::vector<std::string>{"task1", "task2"});
    CHECK(kb.load("task1").task_pattern.text ==
          "Put the pen in the right drawer and close it.");
    fs::remove_all(dir);
}
