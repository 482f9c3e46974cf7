#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "digknow/distiller.hpp"
#include "digknow/errors.hpp"
#include "digknow/eval.hpp"
#include "digknow/knowledge_base.hpp"
#include "digknow/planner.hpp"
#include "digknow/scripted_oracle.hpp"
#include "digknow/simulator.hpp"

using namespace digknow;
using nlohmann::json;

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) {
        path = fs::temp_directory_path() / name;
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

struct Check {
    std::string detail;
    bool ok = true;
    void require(bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            detail = what;
        }
    }
};

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
}

const TaskSpec& find_task(const std::vector<TaskSpec>& tasks, int id) {
    for (const auto& t : tasks)
        if (t.task_id == id) return t;
    throw std::runtime_error("missing task");
}

std::vector<std::string> recording_paths() {
    std::vector<std::string> out;
    for (int i = 1; i <= 9; ++i)
        out.push_back("fixtures/recordings/task" + std::to_string(i) + ".json");
    return out;
}

// --- 1. edit-distance metric against a memoized recursive reference ---------
//
// The score of a pair depends only on the equality pattern of the two
// sequences, so enumerating concatenations in restricted growth form (first
// occurrences of symbols appear in increasing order) with at most five
// distinct symbols covers every pair of length <= 6 over a 5-symbol alphabet.

size_t lev_reference(const std::vector<int>& w, size_t la) {
    const size_t lb = w.size() - la;
    std::vector<int> memo((la + 1) * (lb + 1), -1);
    const std::function<int(size_t, size_t)> go = [&](size_t i, size_t j) -> int {
        int& slot = memo[i * (lb + 1) + j];
        if (slot >= 0) return slot;
        if (i == la) return slot = static_cast<int>(lb - j);
        if (j == lb) return slot = static_cast<int>(la - i);
        const int sub = go(i + 1, j + 1) + (w[i] == w[la + j] ? 0 : 1);
        const int del = go(i + 1, j) + 1;
        const int ins = go(i, j + 1) + 1;
        return slot = std::min({sub, del, ins});
    };
    return static_cast<size_t>(go(0, 0));
}

bool metric_oracle(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    const int max_len = 6;
    const int alphabet = 5;
    long long pairs = 0;

    std::vector<int> w;
    const std::function<void(int)> visit = [&](int used) {
        const int n = static_cast<int>(w.size());
        const int lo = std::max(0, n - max_len);
        const int hi = std::min(max_len, n);
        for (int la = lo; la <= hi; ++la) {
            std::vector<std::string> a, b;
            for (int i = 0; i < la; ++i) a.push_back(std::to_string(w[i]));
            for (int i = la; i < n; ++i) b.push_back(std::to_string(w[i]));
            const size_t dist = lev_reference(w, static_cast<size_t>(la));
            const double denom =
                static_cast<double>(std::max({a.size(), b.size(), size_t{1}}));
            const double expected = 1.0 - static_cast<double>(dist) / denom;
            if (normalized_levenshtein(a, b) != expected) {
                c.require(false, "mismatch on canonical pair of length " +
                                     std::to_string(n));
                return;
            }
            ++pairs;
        }
        if (!c.ok || n == 2 * max_len) return;
        for (int s = 0; s <= std::min(used, alphabet - 1); ++s) {
            w.push_back(s);
            visit(std::max(used, s + 1));
            w.pop_back();
        }
    };
    visit(0);

    c.require(pairs > 1000000, "too few canonical pairs enumerated");
    c.require(seconds_since(start) < 10.0, "metric check exceeded 10s");
    return c.ok;
}

// --- 2. keyframe count law ---------------------------------------------------

bool keyframe_law(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<SceneGraph> pool;
    for (int open = 0; open < 2; ++open)
        for (int spot = 0; spot < 3; ++spot) {
            SymbolicState s;
            s.surfaces.insert("table");
            s.container_open["drawer"] = open != 0;
            if (spot == 0)
                s.object_location["pen"] = OnSurface{"table"};
            else if (spot == 1)
                s.object_location["pen"] = InContainer{"drawer"};
            else
                s.object_location["pen"] = InGripper{};
            pool.push_back(state_to_graph(s, {{"table", "table"},
                                              {"drawer", "drawer"},
                                              {"pen", "pen"}}));
        }

    std::mt19937 rng(2024);
    std::uniform_int_distribution<int> len(1, 50);
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    for (int trial = 0; trial < 1000 && c.ok; ++trial) {
        std::vector<SceneGraph> seq;
        for (int i = len(rng); i > 0; --i) seq.push_back(pool[pick(rng)]);
        size_t changes = 0;
        for (size_t i = 0; i + 1 < seq.size(); ++i)
            if (!graphs_equal(seq[i], seq[i + 1])) ++changes;
        if (select_keyframes(seq).size() != 1 + changes)
            c.require(false, "keyframe count deviates on trial " +
                                 std::to_string(trial));
    }
    c.require(seconds_since(start) < 5.0, "keyframe check exceeded 5s");
    return c.ok;
}

// --- 3. one action record per keyframe transition ----------------------------

bool action_length_contract(Check& c) {
    auto oracle = make_scripted_client();
    for (const auto& path : recording_paths()) {
        const auto frames = load_recording(path);
        const DistilledKnowledge k = distill_recording(frames, 5, *oracle);
        c.require(k.keyframe_graphs.size() >= 2, path + ": too few keyframes");
        c.require(k.action_records.size() == k.keyframe_graphs.size() - 1,
                  path + ": record count is not keyframes minus one");
    }
    return c.ok;
}

// --- 4. golden end-to-end runs are perfect and byte-reproducible -------------

bool golden_end_to_end(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto tasks = load_tasks("fixtures/tasks.json");
    std::vector<TaskSpec> seen;
    for (const auto& t : tasks)
        if (t.seen) seen.push_back(t);
    c.require(seen.size() == 9, "expected nine seen tasks");

    auto one_pass = [&](const std::string& dir_name) {
        TempDir dir(dir_name);
        auto oracle = make_scripted_client();
        const BagOfClassesEmbedder emb(BagOfClassesEmbedder::default_vocabulary());
        KnowledgeBase kb = build_knowledge_base(
            (dir.path / "kb").string(), recording_paths(), 5, *oracle, emb,
            json{{"name", "bag_of_classes"}});
        const PlanningReport planning =
            run_planning_suite(seen, &kb, *oracle, &emb, RunOptions{}, 1);
        const RobotReport robot =
            run_robot_suite(seen, &kb, *oracle, &emb, RunOptions{}, 3);
        c.require(planning.overall_mean == 1.0, "plan score below 1.0");
        c.require(robot.overall_success_rate == 1.0, "simulated success below 1.0");
        return planning_report_to_json(planning).dump() + "\n" +
               robot_report_to_json(robot).dump();
    };

    const std::string first = one_pass("digknow_accept_e2e_a");
    const std::string second = one_pass("digknow_accept_e2e_b");
    c.require(first == second, "reports differ between identical runs");
    c.require(seconds_since(start) < 60.0, "end-to-end check exceeded 60s");
    return c.ok;
}

// --- 5. planning-time correction of an injected close-before-place ----------

Scenario drink_scenario() {
    Scenario s;
    s.name = "drink";
    s.surfaces = {"table"};
    s.containers.push_back({"drawer", true, ""});
    ScenarioObject drink;
    drink.id = "drink";
    drink.class_label = "drink";
    drink.location = InContainer{"drawer"};
    s.objects.push_back(drink);
    return s;
}

GoalSpec drink_goal() {
    GoalSpec goal;
    GoalLiteral on_table;
    on_table.at_name = "drink";
    on_table.at_location = OnSurface{"table"};
    goal.literals.push_back(on_table);
    GoalLiteral closed;
    closed.container_id = "drawer";
    closed.container_is_open = false;
    goal.literals.push_back(closed);
    return goal;
}

bool planning_corrector(Check& c) {
    auto client = std::make_shared<ScriptedClient>();
    client->set_fallback(oracle_response);
    client->add_wildcard("plan",
                         "1. Pick up the drink; 2. Close the drawer; "
                         "3. Put the drink on the table");

    const SceneGraph g0 = observe(reset(drink_scenario(), 0));
    Plan injected;
    injected.steps = {{Verb::Pick, {"drink"}},
                      {Verb::Close, {"drawer"}},
                      {Verb::PlaceOn, {"drink", "table"}}};
    ScriptedClient silent;
    const auto [inferred, disc] =
        check_preconditions(injected, g0, {}, silent, CorrectionConfig{});
    c.require(disc.has_value() && disc->step_index == 1,
              "violation not flagged at the close step");

    const std::string instruction = "Put the drink on the table and close the drawer.";
    const EpisodeResult fixed = run_task(instruction, drink_scenario(), 0,
                                         drink_goal(), nullptr, *client, nullptr,
                                         RunOptions{});
    c.require(fixed.success && fixed.plan_rounds == 1,
              "revised plan did not succeed in one round");

    RunOptions no_pc;
    no_pc.ablation.no_pc = true;
    const EpisodeResult broken = run_task(instruction, drink_scenario(), 0,
                                          drink_goal(), nullptr, *client, nullptr,
                                          no_pc);
    c.require(!broken.success, "episode succeeded with plan correction disabled");
    return c.ok;
}

// --- 6. execution correction recovers dropped grasps -------------------------

bool execution_corrector(Check& c) {
    const auto start = std::chrono::steady_clock::now();
    const auto tasks = load_tasks("fixtures/tasks.json");
    const std::vector<TaskSpec> suite{find_task(tasks, 1)};
    auto oracle = make_scripted_client();

    RunOptions opts;
    opts.fault = {0.3, FaultMode::DropAfterPick, 0};
    const RobotReport with_ec =
        run_robot_suite(suite, nullptr, *oracle, nullptr, opts, 200, 0);
    const RobotReport without_ec = run_robot_suite(
        suite, nullptr, *oracle, nullptr, apply_variant(opts, "no_ec"), 200, 0);

    const double margin =
        with_ec.overall_success_rate - without_ec.overall_success_rate;
    c.require(margin >= 0.25,
              "success margin " + std::to_string(margin) + " below 0.25");
    c.require(seconds_since(start) < 120.0, "execution check exceeded 120s");
    return c.ok;
}

// --- 7. deterministic validator verdicts match simulator rollouts ------------

bool precondition_oracle(Check& c) {
    const auto tasks = load_tasks("fixtures/tasks.json");
    std::mt19937 rng(555);
    for (int task_id : {1, 5, 8}) {
        const Scenario& scn = find_task(tasks, task_id).scenario;
        const WorldState initial = reset(scn, 0);
        std::vector<std::string> ids;
        for (const auto& [id, cls] : initial.classes) ids.push_back(id);
        std::uniform_int_distribution<int> verb(0, 5);
        std::uniform_int_distribution<size_t> arg(0, ids.size() - 1);
        std::uniform_int_distribution<int> len(1, 8);

        for (int trial = 0; trial < 200 && c.ok; ++trial) {
            Plan p;
            for (int i = len(rng); i > 0; --i) {
                ActionStep step;
                step.verb = static_cast<Verb>(verb(rng));
                step.args = {ids[arg(rng)]};
                if (verb_arity(step.verb) == 2) step.args.push_back(ids[arg(rng)]);
                p.steps.push_back(step);
            }

            ScriptedClient silent;
            const auto [inferred, disc] = check_preconditions(
                p, observe(initial), {}, silent, CorrectionConfig{});

            WorldState w = reset(scn, 0);
            std::optional<int> first_failure;
            for (size_t i = 0; i < p.steps.size(); ++i) {
                const ActionOutcome out = apply_action(w, p.steps[i]);
                if (!out.success) {
                    first_failure = static_cast<int>(i);
                    break;
                }
            }

            const std::optional<int> predicted =
                disc ? disc->step_index : std::nullopt;
            if (predicted != first_failure)
                c.require(false, "validator and rollout disagree on task " +
                                     std::to_string(task_id) + " trial " +
                                     std::to_string(trial));
        }
    }
    return c.ok;
}

// --- 8. retrieval ranking against brute force --------------------------------

bool retrieval_oracle(Check& c) {
    TempDir dir("digknow_accept_retrieval");
    const int dim = 6;
    KnowledgeBase kb =
        KnowledgeBase::create((dir.path / "kb").string(), dim, json::object());
    std::mt19937 rng(77);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::vector<std::vector<double>> keys;
    for (int i = 0; i < 50; ++i) {
        std::vector<double> key(dim);
        for (double& x : key) x = u(rng);
        if (i % 11 == 0) key.assign(dim, 0.0);
        keys.push_back(key);
        KnowledgeEntry e;
        e.entry_id = "e" + std::to_string(i);
        e.text_key = "Task " + std::to_string(i) + ".";
        e.task_pattern.text = e.text_key;
        e.visual_key = key;
        kb.store(e);
    }
    for (int trial = 0; trial < 25 && c.ok; ++trial) {
        std::vector<double> q(dim);
        for (double& x : q) x = u(rng);
        std::vector<std::pair<double, size_t>> scored;
        for (size_t i = 0; i < keys.size(); ++i)
            scored.emplace_back(cosine_similarity(q, keys[i]), i);
        std::stable_sort(scored.begin(), scored.end(),
                         [](const auto& a, const auto& b) {
                             return a.first > b.first;
                         });
        const auto ranked = rank_entries_by_similarity(kb, q);
        c.require(ranked.size() == scored.size(), "ranking dropped entries");
        for (size_t i = 0; i < ranked.size() && c.ok; ++i)
            c.require(ranked[i] == "e" + std::to_string(scored[i].second),
                      "ranking deviates from brute force at position " +
                          std::to_string(i));
    }
    return c.ok;
}

// --- 9. simulator invariants under random action storms ----------------------

bool simulator_invariants(Check& c) {
    const auto tasks = load_tasks("fixtures/tasks.json");
    std::mt19937 rng(4242);
    for (int task_id : {1, 5, 8}) {
        const Scenario& scn = find_task(tasks, task_id).scenario;
        WorldState w = reset(scn, 0);

        std::vector<std::string> ids;
        for (const auto& [id, cls] : w.classes) ids.push_back(id);
        std::set<std::string> objects;
        for (const auto& [id, loc] : w.state.object_location) objects.insert(id);
        const size_t containers = w.state.container_open.size();

        // one closed container is never opened; its contents must stay put
        std::string sealed;
        for (const auto& [id, open] : w.state.container_open)
            if (!open && sealed.empty()) sealed = id;
        std::set<std::string> sealed_contents;
        for (const auto& [id, loc] : w.state.object_location)
            if (loc == Location{InContainer{sealed}}) sealed_contents.insert(id);

        std::uniform_int_distribution<int> verb(0, 5);
        std::uniform_int_distribution<size_t> arg(0, ids.size() - 1);
        for (int i = 0; i < 10000 && c.ok; ++i) {
            ActionStep step;
            step.verb = static_cast<Verb>(verb(rng));
            step.args = {ids[arg(rng)]};
            if (verb_arity(step.verb) == 2) step.args.push_back(ids[arg(rng)]);
            if (!sealed.empty() &&
                (step.verb == Verb::Open || step.verb == Verb::Close) &&
                step.args[0] == sealed)
                continue;
            apply_action(w, step);

            std::set<std::string> now;
            int held = 0;
            for (const auto& [id, loc] : w.state.object_location) {
                now.insert(id);
                if (std::holds_alternative<InGripper>(loc)) ++held;
            }
            c.require(now == objects, "object set changed");
            c.require(held <= 1, "gripper held more than one object");
            c.require(w.state.container_open.size() == containers,
                      "container set changed");
        }

        if (!sealed.empty()) {
            std::set<std::string> final_contents;
            for (const auto& [id, loc] : w.state.object_location)
                if (loc == Location{InContainer{sealed}}) final_contents.insert(id);
            c.require(final_contents == sealed_contents,
                      "contents of an untouched closed container changed");
        }
    }
    return c.ok;
}

// --- 10. storage round trips and the recorded gateway session replays --------

bool persistence_and_replay(Check& c) {
    {
        TempDir dir("digknow_accept_persist");
        const int dim = 4;
        KnowledgeBase kb =
            KnowledgeBase::create((dir.path / "kb").string(), dim, json::object());
        std::mt19937 rng(13);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::uniform_int_distribution<int> coin(0, 1);
        std::vector<KnowledgeEntry> entries;
        for (int i = 0; i < 100; ++i) {
            KnowledgeEntry e;
            e.entry_id = "entry" + std::to_string(i);
            e.text_key = "Task variant " + std::to_string(i) + ".";
            e.task_pattern.text = e.text_key;
            e.visual_key.resize(dim);
            for (double& x : e.visual_key) x = u(rng);

            SceneGraph g;
            g.nodes = {{"pen", "pen", std::nullopt},
                       {"drawer", "drawer", coin(rng) ? "open" : "closed"}};
            if (coin(rng)) g.edges = {{"pen", Relation::In, "drawer"}};
            g.normalize();
            e.keyframe_graphs = {g, g};

            ActionRecord r;
            r.index = 0;
            r.description = "Put the pen in the drawer.";
            r.step = ActionStep{Verb::PlaceIn, {"pen", "drawer"}};
            r.preceding_graph = g;
            r.resulting_graph = g;
            e.action_records = {r};

            ObjectPattern p;
            p.object_class = "pen";
            if (coin(rng))
                p.text = "The pen tends to be stored in the drawer.";
            else
                p.graph_snippet = g;
            e.object_patterns = {p};

            entries.push_back(e);
            kb.store(e);
        }
        const KnowledgeBase reopened = KnowledgeBase::open((dir.path / "kb").string());
        for (const auto& e : entries)
            c.require(entry_to_json(reopened.load(e.entry_id)).dump() ==
                          entry_to_json(e).dump(),
                      "entry " + e.entry_id + " changed across reopen");
    }

    const auto tasks = load_tasks("fixtures/tasks.json");
    const TaskSpec& task1 = find_task(tasks, 1);
    const auto frames = load_recording("fixtures/recordings/task1.json");
    const SceneGraph g0 = observe(reset(task1.scenario, 0));

    auto oracle = make_scripted_client();
    const DistilledKnowledge expected_k = distill_recording(frames, 5, *oracle);
    const PlanningOutcome expected_p =
        plan_for_task(task1.description, g0, nullptr, *oracle, nullptr, RunOptions{});

    auto registry =
        std::make_shared<TemplateRegistry>(TemplateRegistry::builtin());
    ReplayClient replay(registry, "fixtures/replay/golden_session.jsonl");
    const DistilledKnowledge replayed_k = distill_recording(frames, 5, replay);
    const PlanningOutcome replayed_p =
        plan_for_task(task1.description, g0, nullptr, replay, nullptr, RunOptions{});

    auto pack = [](const DistilledKnowledge& k) {
        KnowledgeEntry e;
        e.entry_id = "x";
        e.keyframe_graphs = k.keyframe_graphs;
        e.action_records = k.action_records;
        e.task_pattern = k.task_pattern;
        e.object_patterns = k.object_patterns;
        return entry_to_json(e).dump();
    };
    c.require(pack(replayed_k) == pack(expected_k),
              "replayed distillation differs from the scripted one");
    c.require(plan_texts(replayed_p.plan) == plan_texts(expected_p.plan),
              "replayed plan differs from the scripted one");
    c.require(expected_p.failure.empty() && replayed_p.failure.empty(),
              "planning failed during replay comparison");
    c.require(replay.remaining() == 0, "recorded exchanges were left unconsumed");
    return c.ok;
}

// --- 11. ablation report structure from the command-line tool ----------------

bool ablation_structure(Check& c) {
    TempDir dir("digknow_accept_ablate");
    const fs::path cfg_path = dir.path / "config.json";
    const fs::path out_path = dir.path / "ablation.json";
    {
        std::ifstream in("fixtures/config.scripted.json");
        json cfg = json::parse(in);
        cfg["kb_dir"] = (dir.path / "kb").string();
        std::ofstream out(cfg_path);
        out << cfg.dump(2) << "\n";
    }

    const std::string cmd = "build/digknow --config " + cfg_path.string() +
                            " ablate --episodes 5 --fault-prob 0.3 --out " +
                            out_path.string() + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    c.require(rc == 0, "ablate subcommand exited with status " + std::to_string(rc));
    if (!c.ok) return false;

    std::ifstream in(out_path);
    c.require(in.good(), "ablation report was not written");
    if (!c.ok) return false;
    const json report = json::parse(in);

    std::vector<std::string> names;
    std::map<std::string, double> rates;
    for (const auto& v : report.at("variants")) {
        const std::string name = v.at("variant").get<std::string>();
        names.push_back(name);
        rates[name] = v.at("report").at("overall_success_rate").get<double>();
    }
    c.require(names == ablation_variant_names(),
              "variant list differs from the expected five");
    for (const auto& [name, rate] : rates)
        c.require(rates.at("full") >= rate,
                  "full system scored below variant " + name);
    return c.ok;
}

} // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<bool(Check&)>>> criteria{
        {"metric-matches-recursive-oracle", metric_oracle},
        {"keyframe-count-law", keyframe_law},
        {"action-records-per-transition", action_length_contract},
        {"golden-end-to-end", golden_end_to_end},
        {"planning-corrector", planning_corrector},
        {"execution-corrector", execution_corrector},
        {"precondition-validator-oracle", precondition_oracle},
        {"retrieval-ranking-oracle", retrieval_oracle},
        {"simulator-invariants", simulator_invariants},
        {"persistence-and-replay", persistence_and_replay},
        {"ablation-structure", ablation_structure},
    };

    bool all_ok = true;
    for (const auto& [name, fn] : criteria) {
        Check c;
        bool ok = false;
        try {
            ok = fn(c);
        } catch (const std::exception& e) {
            c.detail = e.what();
        }
        if (ok) {
            std::cout << "PASS: " << name << "\n";
        } else {
            std::cout << "FAIL: " << name
                      << (c.detail.empty() ? "" : " (" + c.detail + ")") << "\n";
            all_ok = false;
        }
    }
    return all_ok ? 0 : 1;
}
