#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "digknow/knowledge_base.hpp"
#include "digknow/planner.hpp"
#include "digknow/simulator.hpp"

#include <nlohmann/json_fwd.hpp>

namespace digknow {

struct TaskSpec {
    int task_id = 0;
    std::string description;
    int step_count = 0;
    std::string scene;
    bool seen = true;
    Scenario scenario;
    GoalSpec goal;
    // One canonical ground-truth plan per variation seed 0..N-1.
    std::vector<std::vector<std::string>> ground_truth;
};

nlohmann::json task_to_json(const TaskSpec& t);
TaskSpec task_from_json(const nlohmann::json& j);
std::vector<TaskSpec> load_tasks(const std::string& path);

// 1 - lev(a, b) / max(|a|, |b|, 1) with exact string equality per element.
double normalized_levenshtein(const std::vector<std::string>& a,
                              const std::vector<std::string>& b);

// Distills each recording and stores the result; entry ids are the file stems.
KnowledgeBase build_knowledge_base(const std::string& dir,
                                   const std::vector<std::string>& recording_paths,
                                   int downsample_scale, ChatClient& gateway,
                                   const Embedder& embedder,
                                   const nlohmann::json& embedder_config);

struct PlanningCell {
    uint64_t seed = 0;
    int rep = 0;
    double score = 0.0;
    int gateway_calls = 0;
    std::string failure;
};

struct PlanningTaskResult {
    int task_id = 0;
    double mean_score = 0.0;
    std::vector<PlanningCell> cells;
};

struct PlanningReport {
    std::vector<PlanningTaskResult> tasks;
    double overall_mean = 0.0;
};

PlanningReport run_planning_suite(const std::vector<TaskSpec>& tasks,
                                  KnowledgeBase* base, ChatClient& gateway,
                                  const Embedder* embedder, const RunOptions& opts,
                                  int reps = 10);

struct RobotEpisode {
    int episode = 0;
    uint64_t variation_seed = 0;
    bool success = false;
    int plan_rounds = 0;
    int exec_corrections = 0;
    int gateway_calls = 0;
    std::string failure;
};

struct RobotTaskResult {
    int task_id = 0;
    double success_rate = 0.0;
    std::vector<RobotEpisode> episodes;
};

struct RobotReport {
    std::vector<RobotTaskResult> tasks;
    double overall_success_rate = 0.0;
};

RobotReport run_robot_suite(const std::vector<TaskSpec>& tasks, KnowledgeBase* base,
                            ChatClient& gateway, const Embedder* embedder,
                            const RunOptions& opts, int episodes = 20,
                            uint64_t base_seed = 0);

// "full" plus one run per single-ablation variant.
std::vector<std::string> ablation_variant_names();
RunOptions apply_variant(const RunOptions& opts, const std::string& variant);

struct AblationReport {
    std::vector<std::pair<std::string, RobotReport>> variants;
};

AblationReport run_ablation(const std::vector<TaskSpec>& tasks, KnowledgeBase* base,
                            ChatClient& gateway, const Embedder* embedder,
                            const RunOptions& opts, int episodes = 20,
                            uint64_t base_seed = 0);

nlohmann::json planning_report_to_json(const PlanningReport& r);
nlohmann::json robot_report_to_json(const RobotReport& r);
nlohmann::json ablation_report_to_json(const AblationReport& r);

std::string planning_report_table(const PlanningReport& r);
std::string robot_report_table(const RobotReport& r);
std::string ablation_report_table(const AblationReport& r);

} // namespace digknow
