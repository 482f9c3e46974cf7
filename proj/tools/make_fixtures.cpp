// Generates the fixture corpus: demonstration recordings for the nine seen
// tasks, the fifteen-task suite with per-seed ground truths, a scripted-backend
// config, and a golden gateway session for replay tests.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "digknow/config.hpp"
#include "digknow/distiller.hpp"
#include "digknow/errors.hpp"
#include "digknow/eval.hpp"
#include "digknow/planner.hpp"
#include "digknow/scripted_oracle.hpp"
#include "digknow/simulator.hpp"

#include <nlohmann/json.hpp>

using namespace digknow;
using nlohmann::json;

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// scene inventories

struct SceneDef {
    std::string name;
    std::vector<std::string> surfaces;
    std::vector<std::string> containers;
    std::vector<std::string> task_objects;
    std::vector<std::string> distractors;
    HomeMap homes;
};

SceneDef desk_scene() {
    return {"desk",
            {"table", "shelf"},
            {"right drawer", "left drawer"},
            {"pen", "eraser", "cookie", "cake", "chips"},
            {"lamp", "clock", "cup"},
            {{"pen", "right drawer"},
             {"eraser", "right drawer"},
             {"cookie", "left drawer"},
             {"cake", "left drawer"},
             {"chips", "left drawer"}}};
}

SceneDef kitchen_scene() {
    return {"kitchen",
            {"table", "shelf", "plate"},
            {"fridge", "microwave"},
            {"apple", "banana", "sandwich"},
            {"cup", "kettle", "basket"},
            {}};
}

SceneDef toolbox_scene() {
    return {"toolbox",
            {"table", "shelf"},
            {"right box", "left box", "front box"},
            {"screwdriver 1", "screwdriver 2", "tape 1", "tape 2", "pincers"},
            {"hammer", "wrench", "lamp"},
            {{"pincers", "front box"},
             {"screwdriver", "right box"},
             {"tape", "left box"}}};
}

Scenario make_scenario(const SceneDef& scene,
                       const std::map<std::string, Location>& placements,
                       const std::map<std::string, bool>& open_containers,
                       bool human_zone) {
    Scenario s;
    s.name = scene.name;
    s.surfaces = scene.surfaces;
    for (const auto& id : scene.containers) {
        ScenarioContainer c;
        c.id = id;
        auto it = open_containers.find(id);
        c.open = it != open_containers.end() && it->second;
        s.containers.push_back(c);
    }
    for (const auto& id : scene.task_objects) {
        ScenarioObject o;
        o.id = id;
        o.class_label = class_of_name(id);
        auto it = placements.find(id);
        o.location = it != placements.end() ? it->second : Location{OnSurface{"table"}};
        s.objects.push_back(o);
    }
    for (const auto& id : scene.distractors) {
        ScenarioObject o;
        o.id = id;
        o.class_label = class_of_name(id);
        o.location = OnSurface{"table"};
        o.legal_locations = {OnSurface{"table"}, OnSurface{"shelf"}};
        s.objects.push_back(o);
    }
    s.human_zone = human_zone;
    return s;
}

// ---------------------------------------------------------------------------
// geometric renderer for demonstration recordings

struct Slot {
    double x;
    double y;
};

Aabb cube(double cx, double cy, double zlo, double zhi, double half) {
    Aabb b;
    b.min = {cx - half, cy - half, zlo};
    b.max = {cx + half, cy + half, zhi};
    return b;
}

struct FootPrint {
    double cx;
    double cy;
};

FootPrint container_footprint(const std::string& id) {
    const std::string cls = class_of_name(id);
    if (id == "right drawer" || id == "right box" || cls == "fridge")
        return {1.00, 0.60};
    if (id == "left drawer" || id == "left box" || cls == "microwave")
        return {0.20, 0.60};
    if (id == "front box") return {0.60, 0.20};
    throw InvalidScenario("no footprint for container: " + id);
}

class Renderer {
public:
    explicit Renderer(const std::map<std::string, std::string>& classes)
        : classes_(classes) {}

    FrameObservation render(const SymbolicState& s, int frame_index) {
        assign_slots(s);
        FrameObservation f;
        f.frame_index = frame_index;
        for (const auto& id : s.surfaces)
            f.objects.push_back({id, classes_.at(id), std::nullopt, surface_box(id)});
        for (const auto& [id, open] : s.container_open) {
            const auto fp = container_footprint(id);
            f.objects.push_back({id, classes_.at(id),
                                 open ? std::string("open") : std::string("closed"),
                                 cube(fp.cx, fp.cy, 0.72, 0.92, 0.15)});
        }
        for (const auto& [id, loc] : s.object_location) {
            const int slot = slots_.at(id);
            if (const auto* on = std::get_if<OnSurface>(&loc)) {
                f.objects.push_back(
                    {id, classes_.at(id), std::nullopt, object_on(on->surface, slot)});
            } else if (const auto* in = std::get_if<InContainer>(&loc)) {
                const auto fp = container_footprint(in->container);
                const Slot o = kContentOffsets[slot % 8];
                f.objects.push_back({id, classes_.at(id), std::nullopt,
                                     cube(fp.cx + o.x, fp.cy + o.y, 0.77, 0.83, 0.03)});
            } else if (std::holds_alternative<InGripper>(loc)) {
                f.objects.push_back({id, classes_.at(id), std::nullopt,
                                     cube(0.60, 1.05, 1.37, 1.43, 0.03)});
                f.hand = DetectedObject{"hand", "hand", std::nullopt,
                                        cube(0.65, 1.05, 1.36, 1.44, 0.04)};
            } else {
                f.objects.push_back({id, classes_.at(id), std::nullopt,
                                     cube(-0.30 + 0.08 * slot, 0.40, 0.75, 0.81, 0.03)});
            }
        }
        return f;
    }

private:
    static constexpr Slot kTableSlots[8] = {{0.10, 0.15}, {0.30, 0.15}, {0.90, 0.15},
                                            {1.10, 0.15}, {0.10, 0.35}, {0.30, 0.35},
                                            {0.90, 0.35}, {1.10, 0.35}};
    static constexpr Slot kShelfSlots[8] = {{1.55, 0.15}, {1.70, 0.15}, {1.85, 0.15},
                                            {2.00, 0.15}, {1.55, 0.35}, {1.70, 0.35},
                                            {1.85, 0.35}, {2.00, 0.35}};
    static constexpr Slot kPlateSlots[2] = {{0.50, 0.19}, {0.58, 0.19}};
    static constexpr Slot kContentOffsets[8] = {{-0.09, -0.09}, {0.00, -0.09},
                                                {0.09, -0.09},  {-0.09, 0.00},
                                                {0.09, 0.00},   {-0.09, 0.09},
                                                {0.00, 0.09},   {0.09, 0.09}};

    static Aabb surface_box(const std::string& id) {
        const std::string cls = class_of_name(id);
        if (cls == "table") {
            Aabb b;
            b.min = {0.0, 0.0, 0.66};
            b.max = {1.2, 0.8, 0.72};
            return b;
        }
        if (cls == "shelf") {
            Aabb b;
            b.min = {1.5, 0.0, 0.66};
            b.max = {2.1, 0.8, 0.72};
            return b;
        }
        if (cls == "plate") return cube(0.54, 0.19, 0.72, 0.76, 0.09);
        throw InvalidScenario("no geometry for surface: " + id);
    }

    Aabb object_on(const std::string& surface, int slot) const {
        const std::string cls = class_of_name(surface);
        if (cls == "plate") {
            const Slot s = kPlateSlots[slot % 2];
            return cube(s.x, s.y, 0.76, 0.82, 0.03);
        }
        const Slot s = cls == "shelf" ? kShelfSlots[slot % 8] : kTableSlots[slot % 8];
        return cube(s.x, s.y, 0.72, 0.78, 0.03);
    }

    // Fixed slot per object id: objects keep their spot for the whole episode
    // and no two objects ever share one.
    void assign_slots(const SymbolicState& s) {
        if (!slots_.empty()) return;
        int next = 0;
        for (const auto& [id, loc] : s.object_location) slots_[id] = next++;
        if (next > 8) throw InvalidScenario("more loose objects than slots");
    }

    std::map<std::string, std::string> classes_;
    std::map<std::string, int> slots_;
};

std::vector<FrameObservation> make_recording(const Scenario& scenario,
                                             const std::vector<ActionStep>& steps,
                                             int frames_per_state) {
    WorldState world = reset(scenario, 0);
    Renderer renderer(world.classes);
    std::vector<FrameObservation> frames;
    int index = 0;
    auto emit_state = [&] {
        for (int k = 0; k < frames_per_state; ++k)
            frames.push_back(renderer.render(world.state, index++));
    };
    emit_state();
    for (const auto& step : steps) {
        const ActionOutcome out = apply_action(world, step);
        if (!out.success)
            throw InvalidScenario("demonstration step failed: " + step_text(step));
        emit_state();
    }
    return frames;
}

// ---------------------------------------------------------------------------
// task table

struct TaskDef {
    int task_id;
    std::string instruction;
    int step_count;
    SceneDef scene;
    Scenario scenario;
    GoalSpec goal;
    bool seen;
};

GoalLiteral at(const std::string& name, Location loc) {
    GoalLiteral g;
    g.at_name = name;
    g.at_location = loc;
    return g;
}

GoalLiteral closed(const std::string& container) {
    GoalLiteral g;
    g.container_id = container;
    g.container_is_open = false;
    return g;
}

std::vector<TaskDef> task_table() {
    const SceneDef desk = desk_scene();
    const SceneDef kitchen = kitchen_scene();
    const SceneDef toolbox = toolbox_scene();
    const Location table = OnSurface{"table"};
    std::vector<TaskDef> tasks;

    tasks.push_back({1,
                     "Put the pen in the right drawer and close it.",
                     4,
                     desk,
                     make_scenario(desk, {}, {}, false),
                     {{at("pen", InContainer{"right drawer"}), closed("right drawer")}},
                     true});
    tasks.push_back({2,
                     "Put the cookie in the left drawer.",
                     6,
                     desk,
                     make_scenario(desk, {{"cookie", InContainer{"right drawer"}}}, {},
                                   false),
                     {{at("cookie", InContainer{"left drawer"})}},
                     true});
    tasks.push_back({3,
                     "Put the cake in the left drawer and the eraser in the right drawer.",
                     12,
                     desk,
                     make_scenario(desk,
                                   {{"cake", InContainer{"right drawer"}},
                                    {"eraser", InContainer{"left drawer"}}},
                                   {}, false),
                     {{at("cake", InContainer{"left drawer"}),
                       at("eraser", InContainer{"right drawer"})}},
                     true});
    tasks.push_back(
        {4,
         "Put the stationery in the right drawer and the snacks in the left drawer.",
         16,
         desk,
         make_scenario(desk, {}, {}, false),
         {{at("pen", InContainer{"right drawer"}),
           at("eraser", InContainer{"right drawer"}),
           at("cookie", InContainer{"left drawer"}),
           at("chips", InContainer{"left drawer"})}},
         true});
    tasks.push_back({5,
                     "Put the apple on the plate.",
                     2,
                     kitchen,
                     make_scenario(kitchen, {}, {}, false),
                     {{at("apple", OnSurface{"plate"})}},
                     true});
    tasks.push_back({6,
                     "Put the sandwich in the microwave.",
                     6,
                     kitchen,
                     make_scenario(kitchen, {{"sandwich", InContainer{"fridge"}}}, {},
                                   false),
                     {{at("sandwich", InContainer{"microwave"})}},
                     true});
    tasks.push_back({7,
                     "Put the fruits in the fridge and the sandwich in the microwave.",
                     10,
                     kitchen,
                     make_scenario(kitchen, {}, {{"microwave", true}}, false),
                     {{at("apple", InContainer{"fridge"}),
                       at("banana", InContainer{"fridge"}),
                       at("sandwich", InContainer{"microwave"})}},
                     true});
    tasks.push_back({8,
                     "Put the screwdrivers in the right box.",
                     8,
                     toolbox,
                     make_scenario(toolbox, {{"pincers", InContainer{"front box"}}}, {},
                                   false),
                     {{at("screwdriver 1", InContainer{"right box"}),
                       at("screwdriver 2", InContainer{"right box"})}},
                     true});
    tasks.push_back({9,
                     "Put the tapes in the left box and the pincers in the front box.",
                     14,
                     toolbox,
                     make_scenario(toolbox, {{"pincers", InContainer{"right box"}}}, {},
                                   false),
                     {{at("tape 1", InContainer{"left box"}),
                       at("tape 2", InContainer{"left box"}),
                       at("pincers", InContainer{"front box"})}},
                     true});

    tasks.push_back({10,
                     "Tidy up the desk.",
                     12,
                     desk,
                     make_scenario(desk,
                                   {{"cake", InContainer{"left drawer"}},
                                    {"chips", InContainer{"left drawer"}}},
                                   {}, false),
                     {{at("pen", InContainer{"right drawer"}),
                       at("eraser", InContainer{"right drawer"}),
                       at("cookie", InContainer{"left drawer"})}},
                     false});
    tasks.push_back({11,
                     "Give me the cake and the pen.",
                     8,
                     desk,
                     make_scenario(desk,
                                   {{"cake", InContainer{"left drawer"}},
                                    {"pen", InContainer{"right drawer"}}},
                                   {}, true),
                     {{at("cake", InHumanZone{}), at("pen", InHumanZone{})}},
                     false});
    tasks.push_back({12,
                     "Heat the breakfast.",
                     10,
                     kitchen,
                     make_scenario(kitchen, {{"sandwich", InContainer{"fridge"}}}, {},
                                   false),
                     {{at("sandwich", OnSurface{"table"}), closed("microwave"),
                       closed("fridge")}},
                     false});
    tasks.push_back({13,
                     "Give me the banana and the sandwich.",
                     8,
                     kitchen,
                     make_scenario(kitchen,
                                   {{"banana", InContainer{"fridge"}},
                                    {"sandwich", InContainer{"microwave"}}},
                                   {}, true),
                     {{at("banana", InHumanZone{}), at("sandwich", InHumanZone{})}},
                     false});
    tasks.push_back({14,
                     "Organize the toolbox.",
                     12,
                     toolbox,
                     make_scenario(toolbox,
                                   {{"screwdriver 2", InContainer{"right box"}},
                                    {"tape 2", InContainer{"left box"}}},
                                   {}, false),
                     {{at("screwdriver 1", InContainer{"right box"}),
                       at("tape 1", InContainer{"left box"}),
                       at("pincers", InContainer{"front box"})}},
                     false});
    tasks.push_back({15,
                     "Give me the screwdriver and the tape.",
                     8,
                     toolbox,
                     make_scenario(toolbox,
                                   {{"screwdriver 1", InContainer{"right box"}},
                                    {"screwdriver 2", InContainer{"right box"}},
                                    {"tape 1", InContainer{"left box"}},
                                    {"tape 2", InContainer{"left box"}},
                                    {"pincers", InContainer{"front box"}}},
                                   {}, true),
                     {{at("screwdriver", InHumanZone{}), at("tape", InHumanZone{})}},
                     false});
    return tasks;
}

constexpr int kSeeds = 5;
constexpr int kFramesPerState = 5;

std::vector<ActionStep> ground_truth_plan(const TaskDef& t, uint64_t seed) {
    WorldState world = reset(t.scenario, seed);
    const SceneGraph g0 = observe(world);
    const auto steps = rule_based_plan(t.instruction, g0, t.scene.homes);
    if (static_cast<int>(steps.size()) != t.step_count)
        throw InvalidScenario("task " + std::to_string(t.task_id) + " seed " +
                              std::to_string(seed) + ": plan has " +
                              std::to_string(steps.size()) + " steps, expected " +
                              std::to_string(t.step_count));
    for (const auto& step : steps) {
        const ActionOutcome out = apply_action(world, step);
        if (!out.success)
            throw InvalidScenario("task " + std::to_string(t.task_id) +
                                  ": ground-truth step failed: " + step_text(step));
    }
    if (!goal_satisfied(world, t.goal))
        throw InvalidScenario("task " + std::to_string(t.task_id) +
                              ": ground-truth rollout misses the goal");
    return steps;
}

void write_json(const fs::path& path, const json& j) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    out << j.dump(2) << "\n";
}

} // namespace

int main() {
    try {
        const fs::path root = "fixtures";
        const auto tasks = task_table();

        json task_list = json::array();
        for (const auto& t : tasks) {
            TaskSpec spec;
            spec.task_id = t.task_id;
            spec.description = t.instruction;
            spec.step_count = t.step_count;
            spec.scene = t.scene.name;
            spec.seen = t.seen;
            spec.scenario = t.scenario;
            spec.goal = t.goal;
            for (uint64_t seed = 0; seed < kSeeds; ++seed) {
                std::vector<std::string> texts;
                for (const auto& s : ground_truth_plan(t, seed))
                    texts.push_back(step_text(s));
                spec.ground_truth.push_back(texts);
            }
            task_list.push_back(task_to_json(spec));

            if (t.seen) {
                const auto frames =
                    make_recording(t.scenario, ground_truth_plan(t, 0), kFramesPerState);
                write_json(root / "recordings" /
                               ("task" + std::to_string(t.task_id) + ".json"),
                           recording_to_json(frames));
            }
        }
        write_json(root / "tasks.json", json{{"tasks", task_list}});

        AppConfig config;
        config.kb_dir = "fixtures/kb";
        write_json(root / "config.scripted.json", config_to_json(config));

        // golden gateway session: distillation of the first demonstration plus
        // one planning pass, recorded for replay tests
        const fs::path log = root / "replay" / "golden_session.jsonl";
        fs::create_directories(log.parent_path());
        fs::remove(log);
        auto registry = std::make_shared<TemplateRegistry>(TemplateRegistry::builtin());
        RecordingClient recorder(make_scripted_client(), registry, log.string());
        const auto frames = load_recording((root / "recordings" / "task1.json").string());
        distill_recording(frames, kFramesPerState, recorder);
        WorldState world = reset(tasks[0].scenario, 0);
        plan_for_task(tasks[0].instruction, observe(world), nullptr, recorder, nullptr,
                      RunOptions{});

        std::cout << "fixtures written under " << root.string() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "make_fixtures: " << e.what() << "\n";
        return 1;
    }
}
