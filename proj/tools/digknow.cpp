#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "digknow/config.hpp"
#include "digknow/distiller.hpp"
#include "digknow/errors.hpp"
#include "digknow/eval.hpp"
#include "digknow/planner.hpp"
#include "digknow/scripted_oracle.hpp"
#include "digknow/simulator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace digknow;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Session {
    AppConfig config;
    std::shared_ptr<const TemplateRegistry> registry;
    std::shared_ptr<ChatClient> gateway;
    BagOfClassesEmbedder embedder{BagOfClassesEmbedder::default_vocabulary()};

    explicit Session(const std::string& config_path) {
        if (!config_path.empty()) config = load_config(config_path);
        registry = make_registry(config);
        gateway = make_backend(config, registry);
    }

    json embedder_config() const {
        return json{{"name", config.embedder},
                    {"vocabulary", embedder.vocabulary()}};
    }

    bool kb_exists() const {
        return fs::exists(fs::path(config.kb_dir) / "manifest.json");
    }

    KnowledgeBase open_or_create_kb() {
        if (kb_exists()) return KnowledgeBase::open(config.kb_dir);
        return KnowledgeBase::create(config.kb_dir, embedder.dimension(),
                                     embedder_config());
    }

    // Distills the bundled demonstrations when the knowledge base is empty.
    KnowledgeBase ensure_kb(const std::string& recordings_dir) {
        if (kb_exists()) {
            KnowledgeBase base = KnowledgeBase::open(config.kb_dir);
            if (!base.empty()) return base;
        }
        std::vector<std::string> recordings;
        if (fs::is_directory(recordings_dir)) {
            for (const auto& entry : fs::directory_iterator(recordings_dir))
                if (entry.path().extension() == ".json")
                    recordings.push_back(entry.path().string());
            std::sort(recordings.begin(), recordings.end(),
                      [](const std::string& a, const std::string& b) {
                          auto key = [](const std::string& p) {
                              const std::string stem = fs::path(p).stem().string();
                              size_t digits = stem.find_first_of("0123456789");
                              return std::pair<std::string, int>(
                                  stem.substr(0, digits),
                                  digits == std::string::npos
                                      ? 0
                                      : std::atoi(stem.c_str() + digits));
                          };
                          return key(a) < key(b);
                      });
        }
        if (recordings.empty()) {
            if (kb_exists()) return KnowledgeBase::open(config.kb_dir);
            throw IoError("no knowledge base at " + config.kb_dir +
                          " and no recordings under " + recordings_dir);
        }
        std::cerr << "distilling " << recordings.size() << " recordings into "
                  << config.kb_dir << "\n";
        fs::remove_all(config.kb_dir);
        return build_knowledge_base(config.kb_dir, recordings, config.downsample,
                                    *gateway, embedder, embedder_config());
    }

    RunOptions run_options(double fault_prob, const std::string& fault_mode,
                           const std::string& ablation) const {
        RunOptions opts;
        opts.correction = config.correction;
        opts.retrieval_n = config.retrieval_n;
        opts.fault.probability = fault_prob;
        opts.fault.seed = config.seed;
        if (!fault_mode.empty()) {
            auto mode = fault_mode_from_name(fault_mode);
            if (!mode) throw ConfigError("unknown fault mode: " + fault_mode);
            opts.fault.mode = *mode;
        }
        if (!ablation.empty()) opts = apply_variant(opts, ablation);
        return opts;
    }
};

const TaskSpec& find_task(const std::vector<TaskSpec>& tasks, int task_id) {
    for (const auto& t : tasks)
        if (t.task_id == task_id) return t;
    throw Error("no task with id " + std::to_string(task_id));
}

void write_report(const std::string& path, const json& body) {
    if (path.empty()) return;
    std::ofstream out(path);
    if (!out) throw IoError("cannot write report: " + path);
    out << body.dump(2) << "\n";
    std::cerr << "report written to " << path << "\n";
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hierarchical task-knowledge distillation and planning"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    std::string config_path, backend_override;
    app.add_option("--config", config_path, "Config file (JSON)");
    app.add_option("--backend", backend_override,
                   "Override the gateway backend (scripted, replay, live)");

    // distill
    auto* distill = app.add_subcommand("distill", "Distill a recording into the KB");
    distill->fallthrough();
    std::string recording_path, entry_id;
    distill->add_option("--recording", recording_path, "Recording JSON file")
        ->required();
    distill->add_option("--entry-id", entry_id, "Entry id (default: file stem)");

    // kb list / show
    auto* kb = app.add_subcommand("kb", "Inspect the knowledge base");
    kb->fallthrough();
    auto* kb_list = kb->add_subcommand("list", "List entry ids");
    auto* kb_show = kb->add_subcommand("show", "Print one entry as JSON");
    std::string show_id;
    kb_show->add_option("id", show_id, "Entry id")->required();
    kb->require_subcommand(1);

    // shared task-suite options
    std::string tasks_path = "fixtures/tasks.json";
    std::string recordings_dir = "fixtures/recordings";
    int task_id = 1;
    uint64_t seed = 0;
    double fault_prob = 0.0;
    std::string fault_mode, ablation, out_path;
    std::string suite = "all";
    int episodes = 20;

    auto add_suite_options = [&](CLI::App* cmd, bool single_task) {
        cmd->add_option("--tasks", tasks_path, "Task suite JSON");
        cmd->add_option("--suite", suite, "Task subset (seen, unseen, all)")
            ->check(CLI::IsMember({"seen", "unseen", "all"}));
        cmd->add_option("--recordings", recordings_dir,
                        "Demonstrations used to seed an empty KB");
        if (single_task) {
            cmd->add_option("--task-id", task_id, "Task id");
            cmd->add_option("--seed", seed, "Variation seed");
        }
        cmd->add_option("--fault-prob", fault_prob, "Fault injection probability");
        cmd->add_option("--fault-mode", fault_mode,
                        "Fault mode (drop_after_pick, no_op, wrong_placement)");
        cmd->add_option("--ablate", ablation,
                        "Ablation variant (no_kb, no_sg, no_pc, no_ec)");
        cmd->add_option("--out", out_path, "Write the JSON report here");
    };

    auto* plan_cmd = app.add_subcommand("plan", "Plan one task and print the steps");
    plan_cmd->fallthrough();
    add_suite_options(plan_cmd, true);
    auto* run_cmd = app.add_subcommand("run", "Execute one task episode");
    run_cmd->fallthrough();
    add_suite_options(run_cmd, true);
    auto* eval_cmd = app.add_subcommand("eval", "Planning suite over the task table");
    eval_cmd->fallthrough();
    add_suite_options(eval_cmd, false);
    eval_cmd->add_option("--episodes", episodes, "Robot episodes per task (robot suite)");
    auto* robot_cmd = app.add_subcommand("robot", "Robot suite over the task table");
    robot_cmd->fallthrough();
    add_suite_options(robot_cmd, false);
    robot_cmd->add_option("--episodes", episodes, "Episodes per task");
    auto* ablate_cmd = app.add_subcommand("ablate", "Robot suite across ablations");
    ablate_cmd->fallthrough();
    add_suite_options(ablate_cmd, false);
    ablate_cmd->add_option("--episodes", episodes, "Episodes per task");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Session session(config_path);
        if (!backend_override.empty()) {
            session.config.backend = backend_override;
            session.gateway = make_backend(session.config, session.registry);
        }

        if (distill->parsed()) {
            KnowledgeBase base = session.open_or_create_kb();
            const auto frames = load_recording(recording_path);
            DistilledKnowledge k = distill_recording(
                frames, session.config.downsample, *session.gateway);
            KnowledgeEntry entry;
            entry.entry_id = entry_id.empty()
                                 ? fs::path(recording_path).stem().string()
                                 : entry_id;
            entry.text_key = k.task_pattern.text;
            entry.visual_key = session.embedder.embed(frames.front());
            entry.keyframe_graphs = k.keyframe_graphs;
            entry.action_records = k.action_records;
            entry.task_pattern = k.task_pattern;
            entry.object_patterns = k.object_patterns;
            std::cout << base.store(entry) << "\n";
            return 0;
        }

        if (kb->parsed()) {
            KnowledgeBase base = KnowledgeBase::open(session.config.kb_dir);
            if (kb_list->parsed()) {
                for (const auto& id : base.list()) std::cout << id << "\n";
            } else if (kb_show->parsed()) {
                std::cout << entry_to_json(base.load(show_id)).dump(2) << "\n";
            }
            return 0;
        }

        auto tasks = load_tasks(tasks_path);
        if (suite != "all") {
            std::erase_if(tasks, [&](const TaskSpec& t) {
                return t.seen != (suite == "seen");
            });
        }
        KnowledgeBase base = session.ensure_kb(recordings_dir);
        const RunOptions opts = session.run_options(fault_prob, fault_mode, ablation);
        std::cerr << "config digest " << config_digest(session.config) << "\n";

        if (plan_cmd->parsed()) {
            const TaskSpec& task = find_task(tasks, task_id);
            WorldState world = reset(task.scenario, seed);
            PlanningOutcome out = plan_for_task(task.description, observe(world), &base,
                                                *session.gateway, &session.embedder,
                                                opts);
            if (!out.failure.empty()) throw Error("planning failed: " + out.failure);
            for (size_t i = 0; i < out.plan.steps.size(); ++i)
                std::cout << (i + 1) << ". " << step_sentence(out.plan.steps[i]) << "\n";
            return 0;
        }

        if (run_cmd->parsed()) {
            const TaskSpec& task = find_task(tasks, task_id);
            EpisodeResult result =
                run_task(task.description, task.scenario, seed, task.goal, &base,
                         *session.gateway, &session.embedder, opts);
            std::cout << (result.success ? "success" : "failure") << "\n";
            for (size_t i = 0; i < result.executed.size(); ++i)
                std::cout << (i + 1) << ". " << step_sentence(result.executed[i]) << "\n";
            if (!result.failure_cause.empty())
                std::cerr << "cause: " << result.failure_cause << "\n";
            return result.success ? 0 : 1;
        }

        if (eval_cmd->parsed()) {
            PlanningReport report = run_planning_suite(tasks, &base, *session.gateway,
                                                       &session.embedder, opts);
            std::cout << planning_report_table(report);
            json body = planning_report_to_json(report);
            body["config_digest"] = config_digest(session.config);
            write_report(out_path, body);
            return 0;
        }

        if (robot_cmd->parsed()) {
            RobotReport report =
                run_robot_suite(tasks, &base, *session.gateway, &session.embedder, opts,
                                episodes, session.config.seed);
            std::cout << robot_report_table(report);
            json body = robot_report_to_json(report);
            body["config_digest"] = config_digest(session.config);
            write_report(out_path, body);
            return 0;
        }

        if (ablate_cmd->parsed()) {
            AblationReport report =
                run_ablation(tasks, &base, *session.gateway, &session.embedder, opts,
                             episodes, session.config.seed);
            std::cout << ablation_report_table(report);
            json body = ablation_report_to_json(report);
            body["config_digest"] = config_digest(session.config);
            write_report(out_path, body);
            return 0;
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
