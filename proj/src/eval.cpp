#include "digknow/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "digknow/distiller.hpp"
#include "digknow/errors.hpp"

#include <nlohmann/json.hpp>

namespace digknow {

using nlohmann::json;

nlohmann::json task_to_json(const TaskSpec& t) {
    json gt = json::array();
    for (const auto& plan : t.ground_truth) gt.push_back(plan);
    return json{{"task_id", t.task_id},
                {"description", t.description},
                {"step_count", t.step_count},
                {"scene", t.scene},
                {"seen", t.seen},
                {"scenario", scenario_to_json(t.scenario)},
                {"goal", goal_to_json(t.goal)},
                {"ground_truth", gt}};
}

TaskSpec task_from_json(const nlohmann::json& j) {
    TaskSpec t;
    t.task_id = j.at("task_id").get<int>();
    t.description = j.at("description").get<std::string>();
    t.step_count = j.at("step_count").get<int>();
    t.scene = j.at("scene").get<std::string>();
    t.seen = j.at("seen").get<bool>();
    t.scenario = scenario_from_json(j.at("scenario"));
    t.goal = goal_from_json(j.at("goal"));
    for (const auto& plan : j.at("ground_truth"))
        t.ground_truth.push_back(plan.get<std::vector<std::string>>());
    return t;
}

std::vector<TaskSpec> load_tasks(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open task file: " + path);
    json j = json::parse(in);
    std::vector<TaskSpec> tasks;
    for (const auto& item : j.at("tasks")) tasks.push_back(task_from_json(item));
    return tasks;
}

double normalized_levenshtein(const std::vector<std::string>& a,
                              const std::vector<std::string>& b) {
    const size_t n = a.size();
    const size_t m = b.size();
    std::vector<size_t> prev(m + 1);
    std::vector<size_t> cur(m + 1);
    for (size_t j = 0; j <= m; ++j) prev[j] = j;
    for (size_t i = 1; i <= n; ++i) {
        cur[0] = i;
        for (size_t j = 1; j <= m; ++j) {
            const size_t sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    const double denom = static_cast<double>(std::max({n, m, size_t{1}}));
    return 1.0 - static_cast<double>(prev[m]) / denom;
}

KnowledgeBase build_knowledge_base(const std::string& dir,
                                   const std::vector<std::string>& recording_paths,
                                   int downsample_scale, ChatClient& gateway,
                                   const Embedder& embedder,
                                   const nlohmann::json& embedder_config) {
    KnowledgeBase base =
        KnowledgeBase::create(dir, embedder.dimension(), embedder_config);
    for (const auto& path : recording_paths) {
        const auto frames = load_recording(path);
        DistilledKnowledge k =
            distill_recording(frames, downsample_scale, gateway);
        KnowledgeEntry entry;
        entry.entry_id = std::filesystem::path(path).stem().string();
        entry.text_key = k.task_pattern.text;
        entry.visual_key = embedder.embed(frames.front());
        entry.keyframe_graphs = k.keyframe_graphs;
        entry.action_records = k.action_records;
        entry.task_pattern = k.task_pattern;
        entry.object_patterns = k.object_patterns;
        base.store(entry);
    }
    return base;
}

namespace {

std::vector<std::string> canonical_steps(const Plan& p) {
    std::vector<std::string> out;
    for (const auto& s : p.steps) out.push_back(step_text(s));
    return out;
}

std::vector<std::string> canonical_gt(const std::vector<std::string>& gt) {
    // Ground truths are stored canonical already; normalize defensively.
    return gt;
}

} // namespace

PlanningReport run_planning_suite(const std::vector<TaskSpec>& tasks,
                                  KnowledgeBase* base, ChatClient& gateway,
                                  const Embedder* embedder, const RunOptions& opts,
                                  int reps) {
    PlanningReport report;
    double total = 0.0;
    int cells = 0;
    for (const auto& task : tasks) {
        PlanningTaskResult tr;
        tr.task_id = task.task_id;
        double task_total = 0.0;
        for (size_t seed = 0; seed < task.ground_truth.size(); ++seed) {
            WorldState world = reset(task.scenario, seed);
            const SceneGraph g0 = observe(world);
            for (int rep = 0; rep < reps; ++rep) {
                PlanningCell cell;
                cell.seed = seed;
                cell.rep = rep;
                PlanningOutcome out =
                    plan_for_task(task.description, g0, base, gateway, embedder, opts);
                cell.gateway_calls = out.gateway_calls;
                if (!out.failure.empty()) {
                    cell.score = 0.0;
                    cell.failure = out.failure;
                } else {
                    cell.score = normalized_levenshtein(
                        canonical_steps(out.plan), canonical_gt(task.ground_truth[seed]));
                }
                task_total += cell.score;
                total += cell.score;
                ++cells;
                tr.cells.push_back(cell);
            }
        }
        tr.mean_score =
            tr.cells.empty() ? 0.0 : task_total / static_cast<double>(tr.cells.size());
        report.tasks.push_back(tr);
    }
    report.overall_mean = cells ? total / cells : 0.0;
    return report;
}

RobotReport run_robot_suite(const std::vector<TaskSpec>& tasks, KnowledgeBase* base,
                            ChatClient& gateway, const Embedder* embedder,
                            const RunOptions& opts, int episodes, uint64_t base_seed) {
    RobotReport report;
    double total = 0.0;
    int count = 0;
    uint64_t episode_index = 0;
    for (const auto& task : tasks) {
        RobotTaskResult tr;
        tr.task_id = task.task_id;
        int successes = 0;
        for (int ep = 0; ep < episodes; ++ep) {
            RunOptions eopts = opts;
            eopts.fault.seed = base_seed + episode_index++;
            RobotEpisode re;
            re.episode = ep;
            re.variation_seed = static_cast<uint64_t>(ep);
            EpisodeResult result = run_task(task.description, task.scenario,
                                            re.variation_seed, task.goal, base, gateway,
                                            embedder, eopts);
            re.success = result.success;
            re.plan_rounds = result.plan_rounds;
            re.exec_corrections = result.exec_corrections;
            re.gateway_calls = result.gateway_calls;
            re.failure = result.failure_cause;
            if (re.success) ++successes;
            tr.episodes.push_back(re);
        }
        tr.success_rate =
            episodes ? static_cast<double>(successes) / episodes : 0.0;
        total += successes;
        count += episodes;
        report.tasks.push_back(tr);
    }
    report.overall_success_rate = count ? total / count : 0.0;
    return report;
}

std::vector<std::string> ablation_variant_names() {
    return {"full", "no_kb", "no_sg", "no_pc", "no_ec"};
}

RunOptions apply_variant(const RunOptions& opts, const std::string& variant) {
    RunOptions out = opts;
    if (variant == "no_kb") out.ablation.no_kb = true;
    else if (variant == "no_sg") out.ablation.no_sg = true;
    else if (variant == "no_pc") out.ablation.no_pc = true;
    else if (variant == "no_ec") out.ablation.no_ec = true;
    else if (variant != "full")
        throw Error("unknown ablation variant: " + variant);
    return out;
}

AblationReport run_ablation(const std::vector<TaskSpec>& tasks, KnowledgeBase* base,
                            ChatClient& gateway, const Embedder* embedder,
                            const RunOptions& opts, int episodes, uint64_t base_seed) {
    AblationReport report;
    for (const auto& variant : ablation_variant_names())
        report.variants.emplace_back(
            variant, run_robot_suite(tasks, base, gateway, embedder,
                                     apply_variant(opts, variant), episodes, base_seed));
    return report;
}

nlohmann::json planning_report_to_json(const PlanningReport& r) {
    json tasks = json::array();
    for (const auto& t : r.tasks) {
        json cells = json::array();
        for (const auto& c : t.cells)
            cells.push_back(json{{"seed", c.seed},
                                 {"rep", c.rep},
                                 {"score", c.score},
                                 {"gateway_calls", c.gateway_calls},
                                 {"failure", c.failure}});
        tasks.push_back(json{{"task_id", t.task_id},
                             {"mean_score", t.mean_score},
                             {"cells", cells}});
    }
    return json{{"suite", "planning"}, {"tasks", tasks},
                {"overall_mean", r.overall_mean}};
}

nlohmann::json robot_report_to_json(const RobotReport& r) {
    json tasks = json::array();
    for (const auto& t : r.tasks) {
        json eps = json::array();
        for (const auto& e : t.episodes)
            eps.push_back(json{{"episode", e.episode},
                               {"variation_seed", e.variation_seed},
                               {"success", e.success},
                               {"plan_rounds", e.plan_rounds},
                               {"exec_corrections", e.exec_corrections},
                               {"gateway_calls", e.gateway_calls},
                               {"failure", e.failure}});
        tasks.push_back(json{{"task_id", t.task_id},
                             {"success_rate", t.success_rate},
                             {"episodes", eps}});
    }
    return json{{"suite", "robot"}, {"tasks", tasks},
                {"overall_success_rate", r.overall_success_rate}};
}

nlohmann::json ablation_report_to_json(const AblationReport& r) {
    json variants = json::array();
    for (const auto& [name, rr] : r.variants)
        variants.push_back(json{{"variant", name}, {"report", robot_report_to_json(rr)}});
    return json{{"suite", "ablation"}, {"variants", variants}};
}

namespace {

std::string fixed3(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3f", v);
    return buf;
}

} // namespace

std::string planning_report_table(const PlanningReport& r) {
    std::ostringstream out;
    out << "task  mean_score\n";
    for (const auto& t : r.tasks)
        out << "T" << t.task_id << (t.task_id < 10 ? "    " : "   ")
            << fixed3(t.mean_score) << "\n";
    out << "overall  " << fixed3(r.overall_mean) << "\n";
    return out.str();
}

std::string robot_report_table(const RobotReport& r) {
    std::ostringstream out;
    out << "task  success_rate\n";
    for (const auto& t : r.tasks)
        out << "T" << t.task_id << (t.task_id < 10 ? "    " : "   ")
            << fixed3(t.success_rate) << "\n";
    out << "overall  " << fixed3(r.overall_success_rate) << "\n";
    return out.str();
}

std::string ablation_report_table(const AblationReport& r) {
    std::ostringstream out;
    out << "variant  overall_success_rate\n";
    for (const auto& [name, rr] : r.variants)
        out << name << std::string(name.size() < 9 ? 9 - name.size() : 1, ' ')
            << fixed3(rr.overall_success_rate) << "\n";
    return out.str();
}

} // namespace digknow
