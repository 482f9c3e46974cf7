#include "digknow/planner.hpp"

#include <algorithm>
#include <sstream>

#include "digknow/errors.hpp"

namespace digknow {

namespace {

class CountingClient : public ChatClient {
public:
    explicit CountingClient(ChatClient& inner) : inner_(inner) {}

    std::string complete(const std::string& template_id,
                         const std::map<std::string, std::string>& placeholders,
                         const DecodingParams& params = {}) override {
        ++calls;
        return inner_.complete(template_id, placeholders, params);
    }

    int calls = 0;

private:
    ChatClient& inner_;
};

std::string relations_line(const SceneGraph& g) {
    const std::string text = serialize_text(g);
    const size_t start = text.find('\n') + 1;
    const size_t end = text.find('\n', start);
    std::string line = text.substr(start, end - start);
    const std::string header = "Inter-object relations: ";
    return line.size() > header.size() ? line.substr(header.size()) : "";
}

std::vector<std::string> numbered_sentences(const Plan& p) {
    std::vector<std::string> out;
    for (const auto& s : p.steps) out.push_back(step_sentence(s));
    return out;
}

std::map<std::string, std::string> classes_of(const SceneGraph& g) {
    std::map<std::string, std::string> out;
    for (const auto& n : g.nodes) out[n.id] = n.class_label;
    return out;
}

std::string violation_explanation(const SymbolicState& before, const ActionStep& step,
                                  PreconditionKind kind,
                                  const std::vector<ActionStep>& steps, int index) {
    const std::string prefix = "Action " + std::to_string(index + 1) + ": ";
    if (kind == PreconditionKind::GripperOccupied && step.verb == Verb::Close) {
        if (auto held = before.held_object()) {
            for (size_t j = static_cast<size_t>(index) + 1; j < steps.size(); ++j) {
                const auto& later = steps[j];
                if ((later.verb == Verb::PlaceIn || later.verb == Verb::PlaceOn ||
                     later.verb == Verb::Give) &&
                    later.args[0] == *held) {
                    return prefix + "You should first place the " + *held +
                           " and then close the " + step.args[0] + ".";
                }
            }
        }
    }
    if (kind == PreconditionKind::ContainerClosed) {
        std::string container = step.args.back();
        if (step.verb == Verb::Pick) {
            auto it = before.object_location.find(step.args[0]);
            if (it != before.object_location.end())
                if (const auto* c = std::get_if<InContainer>(&it->second))
                    container = c->container;
        }
        return prefix + "The " + container + " is closed, so " + step_text(step) +
               " cannot be executed. You should first open the " + container + ".";
    }
    return prefix + precondition_text(kind, step);
}

std::vector<std::string> record_items(const std::vector<ActionRecord>& records,
                                      bool preceding) {
    std::vector<std::string> items;
    for (const auto& r : records)
        items.push_back(r.description + ";\n" +
                        serialize_text(preceding ? r.preceding_graph : r.resulting_graph));
    return items;
}

ActionStep parse_step_or_throw(const std::string& sentence, const SceneGraph& g0) {
    auto step = parse_action_sentence(sentence, g0);
    if (!step)
        throw UnparseableResponse("response line is not an action: " + sentence);
    return *step;
}

} // namespace

std::string render_pattern_knowledge(const std::vector<TaskPattern>& task_patterns,
                                     const std::vector<ObjectPattern>& object_patterns) {
    std::vector<std::string> lines;
    for (const auto& t : task_patterns) lines.push_back("- " + t.text);
    for (const auto& o : object_patterns) {
        if (o.text)
            lines.push_back("- " + *o.text);
        else if (o.graph_snippet)
            lines.push_back("- " + o.object_class + ": " + relations_line(*o.graph_snippet));
    }
    if (lines.empty()) return "(none)";
    std::string out;
    for (size_t i = 0; i < lines.size(); ++i) {
        if (i) out += "\n";
        out += lines[i];
    }
    return out;
}

FrameObservation frame_from_graph(const SceneGraph& g) {
    FrameObservation f;
    for (const auto& n : g.nodes) {
        if (n.class_label == "hand") continue;
        f.objects.push_back({n.id, n.class_label, n.state, Aabb{}});
    }
    return f;
}

Plan plan(const std::string& instruction, const SceneGraph& g0,
          const std::vector<TaskPattern>& task_patterns,
          const std::vector<ObjectPattern>& object_patterns, ChatClient& gateway,
          bool objects_only) {
    const std::string response = gateway.complete(
        "plan", {{"instruction", instruction},
                 {"initial_graph",
                  objects_only ? serialize_text_objects_only(g0) : serialize_text(g0)},
                 {"pattern_knowledge",
                  render_pattern_knowledge(task_patterns, object_patterns)},
                 {"format_reminder", ""}});
    Plan p;
    p.raw_text = response;
    for (const auto& item : parse_action_list(response))
        p.steps.push_back(parse_step_or_throw(item, g0));
    return p;
}

std::optional<Discrepancy> check_knowledge_consistency(
    const std::string& instruction, const Plan& p,
    const std::vector<TaskPattern>& task_patterns,
    const std::vector<ObjectPattern>& object_patterns, ChatClient& gateway) {
    if (task_patterns.empty() && object_patterns.empty()) return std::nullopt;
    const std::string response = gateway.complete(
        "plan_consistency",
        {{"instruction", instruction},
         {"pattern_knowledge", render_pattern_knowledge(task_patterns, object_patterns)},
         {"planned_actions", render_numbered(numbered_sentences(p))}});
    const Verdict v = parse_verdict(response);
    if (v.success) return std::nullopt;
    return Discrepancy{Discrepancy::Kind::KnowledgeMismatch, v.explanation, std::nullopt};
}

std::pair<std::vector<SceneGraph>, std::optional<Discrepancy>> check_preconditions(
    const Plan& p, const SceneGraph& g0, const std::vector<ActionRecord>& records,
    ChatClient& gateway, const CorrectionConfig& config) {
    if (config.use_deterministic_validator) {
        SymbolicState state = state_from_graph(g0, default_surface_classes());
        const auto classes = classes_of(g0);
        std::vector<SceneGraph> inferred;
        std::optional<Discrepancy> disc;
        for (size_t i = 0; i < p.steps.size(); ++i) {
            inferred.push_back(state_to_graph(state, classes));
            if (disc) continue;
            if (auto kind = check_precondition(state, p.steps[i])) {
                disc = Discrepancy{
                    Discrepancy::Kind::PreconditionViolation,
                    violation_explanation(state, p.steps[i], *kind, p.steps,
                                          static_cast<int>(i)),
                    static_cast<int>(i)};
                continue;
            }
            apply_transition(state, p.steps[i]);
        }
        return {inferred, disc};
    }

    const std::string response = gateway.complete(
        "plan_precondition",
        {{"knowledge_actions", render_numbered(record_items(records, true))},
         {"initial_graph", serialize_text(g0)},
         {"planned_actions", render_numbered(numbered_sentences(p))}});
    std::vector<SceneGraph> inferred = parse_graph_sequence(response);
    const Verdict v = parse_verdict(response);
    if (v.success) return {inferred, std::nullopt};
    std::optional<int> index;
    const size_t at = v.explanation.find("Action ");
    if (at != std::string::npos)
        index = std::atoi(v.explanation.c_str() + at + 7) - 1;
    return {inferred, Discrepancy{Discrepancy::Kind::PreconditionViolation, v.explanation,
                                  index}};
}

Plan revise_plan(const Plan& p, const std::vector<Discrepancy>& discrepancies,
                 const SceneGraph& g0, ChatClient& gateway) {
    if (discrepancies.empty())
        throw Error("revise_plan called without a discrepancy");
    std::string why;
    for (size_t i = 0; i < discrepancies.size(); ++i) {
        if (i) why += "\n";
        why += discrepancies[i].text;
    }
    const std::string response = gateway.complete(
        "plan_revise", {{"planned_actions", render_numbered(numbered_sentences(p))},
                        {"failure_explanations", why},
                        {"format_reminder", ""}});
    Plan revised;
    revised.raw_text = response;
    revised.correction_round = p.correction_round + 1;
    for (const auto& item : parse_action_list(response))
        revised.steps.push_back(parse_step_or_throw(item, g0));
    if (revised.steps.empty()) throw UnparseableResponse("revised plan is empty");
    return revised;
}

bool step_effect_holds(const ActionStep& s, const SceneGraph& g) {
    auto edge = [&](const std::string& subject, Relation rel,
                    const std::optional<std::string>& object) {
        for (const auto& e : g.edges) {
            if (e.subject != subject || e.relation != rel) continue;
            if (!object || e.object == *object) return true;
        }
        return false;
    };
    switch (s.verb) {
        case Verb::Pick: return edge(s.args[0], Relation::Held, std::nullopt);
        case Verb::PlaceIn: return edge(s.args[0], Relation::In, s.args[1]);
        case Verb::PlaceOn: return edge(s.args[0], Relation::On, s.args[1]);
        case Verb::Open: {
            const SceneNode* n = g.find_node(s.args[0]);
            return n && n->state == std::optional<std::string>("open");
        }
        case Verb::Close: {
            const SceneNode* n = g.find_node(s.args[0]);
            return n && n->state == std::optional<std::string>("closed");
        }
        case Verb::Give: return edge(s.args[0], Relation::In, std::string("human zone"));
    }
    return false;
}

namespace {

std::vector<ActionRecord> analogous_records(const ActionStep& step,
                                            const std::vector<ActionRecord>& records) {
    std::vector<ActionRecord> same_verb;
    std::vector<ActionRecord> same_class;
    const std::string cls = class_of_name(step.args[0]);
    for (const auto& r : records) {
        if (!r.step) continue;
        if (r.step->verb == step.verb) same_verb.push_back(r);
        else if (class_of_name(r.step->args[0]) == cls) same_class.push_back(r);
    }
    return same_verb.empty() ? same_class : same_verb;
}

Verdict deterministic_verdict(const ActionStep& step, const SceneGraph& resulting) {
    Verdict v;
    if (step_effect_holds(step, resulting)) {
        v.success = true;
        return v;
    }
    v.success = false;
    v.explanation = "Expected effect of " + step_text(step) + " is not observed";
    std::vector<std::string> correction;
    const bool still_held = [&] {
        for (const auto& e : resulting.edges)
            if (e.subject == step.args[0] && e.relation == Relation::Held) return true;
        return false;
    }();
    if ((step.verb == Verb::PlaceIn || step.verb == Verb::PlaceOn) && !still_held)
        correction = {step_sentence({Verb::Pick, {step.args[0]}}), step_sentence(step)};
    else
        correction = {step_sentence(step)};
    v.correction = correction;
    return v;
}

} // namespace

Verdict correct_execution(const ActionStep& executed, const SceneGraph& resulting,
                          const std::vector<ActionRecord>& records, ChatClient& gateway) {
    const auto exemplars = analogous_records(executed, records);
    if (exemplars.empty()) return deterministic_verdict(executed, resulting);
    const std::string response = gateway.complete(
        "execution_check",
        {{"knowledge_actions", render_numbered(record_items(exemplars, false))},
         {"executed_action", step_sentence(executed)},
         {"resulting_graph", serialize_text(resulting)}});
    return parse_verdict(response);
}

PlanningOutcome plan_for_task(const std::string& instruction, const SceneGraph& g0,
                              KnowledgeBase* base, ChatClient& gateway,
                              const Embedder* embedder, const RunOptions& opts) {
    CountingClient counting(gateway);
    PlanningOutcome out;
    try {
        std::vector<TaskPattern> task_patterns;
        std::vector<ObjectPattern> object_patterns;
        std::vector<ActionRecord> records;
        if (base && !opts.ablation.no_kb) {
            task_patterns = retrieve_task_knowledge(*base, instruction, counting);
            if (embedder) {
                std::set<std::string> classes;
                for (const auto& n : g0.nodes)
                    if (n.class_label != "hand") classes.insert(n.class_label);
                object_patterns =
                    retrieve_object_knowledge(*base, frame_from_graph(g0), classes,
                                              *embedder, opts.retrieval_n);
            }
            for (const auto& e : base->load_all())
                records.insert(records.end(), e.action_records.begin(),
                               e.action_records.end());
        }

        out.plan = plan(instruction, g0, task_patterns, object_patterns, counting,
                        opts.ablation.no_sg);

        if (!opts.ablation.no_pc) {
            for (int round = 0;; ++round) {
                std::vector<Discrepancy> discs;
                if (auto d = check_knowledge_consistency(instruction, out.plan,
                                                         task_patterns, object_patterns,
                                                         counting))
                    discs.push_back(*d);
                if (discs.empty()) {
                    auto [inferred, d] = check_preconditions(out.plan, g0, records,
                                                             counting, opts.correction);
                    if (d) discs.push_back(*d);
                }
                if (discs.empty()) break;
                if (round >= opts.correction.max_plan_rounds) {
                    out.failure = "max planning correction rounds exceeded: " +
                                  discs.front().text;
                    break;
                }
                out.plan = revise_plan(out.plan, discs, g0, counting);
                out.plan_rounds = out.plan.correction_round;
            }
        }
    } catch (const Error& e) {
        out.failure = e.what();
    }
    out.gateway_calls = counting.calls;
    return out;
}

EpisodeResult run_task(const std::string& instruction, const Scenario& scenario,
                       uint64_t seed, const GoalSpec& goal, KnowledgeBase* base,
                       ChatClient& gateway, const Embedder* embedder,
                       const RunOptions& opts) {
    CountingClient counting(gateway);
    EpisodeResult result;
    try {
        WorldState world = reset(scenario, seed);
        const SceneGraph g0 = observe(world);

        PlanningOutcome planned =
            plan_for_task(instruction, g0, base, counting, embedder, opts);
        result.plan = planned.plan;
        result.plan_rounds = planned.plan_rounds;
        if (!planned.failure.empty()) {
            result.failure_cause = planned.failure;
            result.gateway_calls = counting.calls;
            return result;
        }

        std::vector<ActionRecord> records;
        if (base && !opts.ablation.no_kb)
            for (const auto& e : base->load_all())
                records.insert(records.end(), e.action_records.begin(),
                               e.action_records.end());

        for (const auto& step : result.plan.steps) {
            apply_action(world, step, opts.fault);
            result.executed.push_back(step);
            if (opts.ablation.no_ec) continue;

            for (int attempt = 0;; ++attempt) {
                std::set<std::string> relevant(step.args.begin(), step.args.end());
                const SceneGraph resulting = prune(observe(world), relevant);
                const Verdict v = correct_execution(step, resulting, records, counting);
                if (v.success) break;
                if (attempt >= opts.correction.max_exec_corrections_per_step) {
                    result.failure_cause = "execution correction budget exhausted at " +
                                           step_text(step);
                    break;
                }
                if (!v.correction || v.correction->empty()) {
                    result.failure_cause = "execution check failed without correction at " +
                                           step_text(step);
                    break;
                }
                ++result.exec_corrections;
                for (const auto& sentence : *v.correction) {
                    const ActionStep corr = parse_step_or_throw(sentence, g0);
                    apply_action(world, corr, opts.fault);
                    result.executed.push_back(corr);
                }
            }
        }

        result.success = goal_satisfied(world, goal);
    } catch (const Error& e) {
        result.failure_cause = e.what();
        result.success = false;
    }
    result.gateway_calls = counting.calls;
    return result;
}

} // namespace digknow
