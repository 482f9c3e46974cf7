#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "digknow/action.hpp"
#include "digknow/gateway.hpp"
#include "digknow/knowledge_base.hpp"
#include "digknow/simulator.hpp"
#include "digknow/transitions.hpp"

namespace digknow {

struct Discrepancy {
    enum class Kind { KnowledgeMismatch, PreconditionViolation };
    Kind kind = Kind::KnowledgeMismatch;
    std::string text;
    std::optional<int> step_index; // 0-based
};

struct CorrectionConfig {
    int max_plan_rounds = 3;
    int max_exec_corrections_per_step = 2;
    bool use_deterministic_validator = true;
};

struct AblationFlags {
    bool no_kb = false;
    bool no_sg = false;
    bool no_pc = false;
    bool no_ec = false;
};

// "- <pattern text>" lines, "(none)" when empty.
std::string render_pattern_knowledge(const std::vector<TaskPattern>& task_patterns,
                                     const std::vector<ObjectPattern>& object_patterns);

// Degenerate frame carrying only node classes; enough for class-bag embedders.
FrameObservation frame_from_graph(const SceneGraph& g);

Plan plan(const std::string& instruction, const SceneGraph& g0,
          const std::vector<TaskPattern>& task_patterns,
          const std::vector<ObjectPattern>& object_patterns, ChatClient& gateway,
          bool objects_only = false);

std::optional<Discrepancy> check_knowledge_consistency(
    const std::string& instruction, const Plan& p,
    const std::vector<TaskPattern>& task_patterns,
    const std::vector<ObjectPattern>& object_patterns, ChatClient& gateway);

// Inferred preceding graphs plus the first violation, if any. The
// deterministic path replays the shared transition table from g0; the gateway
// path renders the precondition prompt with knowledge records as exemplars.
std::pair<std::vector<SceneGraph>, std::optional<Discrepancy>> check_preconditions(
    const Plan& p, const SceneGraph& g0, const std::vector<ActionRecord>& records,
    ChatClient& gateway, const CorrectionConfig& config);

Plan revise_plan(const Plan& p, const std::vector<Discrepancy>& discrepancies,
                 const SceneGraph& g0, ChatClient& gateway);

// Expected-effect test used by the deterministic execution check.
bool step_effect_holds(const ActionStep& s, const SceneGraph& g);

Verdict correct_execution(const ActionStep& executed, const SceneGraph& resulting,
                          const std::vector<ActionRecord>& records, ChatClient& gateway);

struct RunOptions {
    CorrectionConfig correction;
    FaultConfig fault;
    AblationFlags ablation;
    int retrieval_n = 3;
};

struct PlanningOutcome {
    Plan plan;
    int gateway_calls = 0;
    int plan_rounds = 0;
    std::string failure;
};

PlanningOutcome plan_for_task(const std::string& instruction, const SceneGraph& g0,
                              KnowledgeBase* base, ChatClient& gateway,
                              const Embedder* embedder, const RunOptions& opts);

struct EpisodeResult {
    bool success = false;
    Plan plan;
    std::vector<ActionStep> executed;
    int plan_rounds = 0;
    int exec_corrections = 0;
    int gateway_calls = 0;
    std::string failure_cause;
};

EpisodeResult run_task(const std::string& instruction, const Scenario& scenario,
                       uint64_t seed, const GoalSpec& goal, KnowledgeBase* base,
                       ChatClient& gateway, const Embedder* embedder,
                       const RunOptions& opts = {});

} // namespace digknow
