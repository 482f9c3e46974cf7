#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "digknow/action.hpp"
#include "digknow/transitions.hpp"

#include <nlohmann/json_fwd.hpp>

namespace digknow {

enum class FaultMode { DropAfterPick, NoOp, WrongPlacement };

std::string fault_mode_name(FaultMode m);
std::optional<FaultMode> fault_mode_from_name(const std::string& name);

struct FaultConfig {
    double probability = 0.0;
    FaultMode mode = FaultMode::DropAfterPick;
    uint64_t seed = 0;
};

// Symbolic tabletop scenario: surfaces, lidded containers, loose objects, an
// optional human hand-over zone. Objects may list legal_locations; the
// variation seed picks one per object at reset.
struct ScenarioObject {
    std::string id;
    std::string class_label;
    Location location;
    std::vector<Location> legal_locations;
};

struct ScenarioContainer {
    std::string id;
    bool open = false;
    std::string qualifier;
};

struct Scenario {
    std::string name;
    std::vector<std::string> surfaces;
    std::vector<ScenarioContainer> containers;
    std::vector<ScenarioObject> objects;
    bool human_zone = false;
};

Scenario scenario_from_json(const nlohmann::json& j);
nlohmann::json scenario_to_json(const Scenario& s);
Scenario load_scenario(const std::string& path);

struct ActionOutcome {
    bool success = false;
    std::optional<PreconditionKind> violated;
    bool faulted = false;
};

struct WorldState {
    SymbolicState state;
    std::map<std::string, std::string> classes; // id -> class label
    std::mt19937_64 fault_rng{0};
    bool fault_rng_seeded = false;
};

WorldState reset(const Scenario& scenario, uint64_t variation_seed);

// Applies the precondition/transition table. Violations and injected faults
// corrupt the outcome instead of throwing; only unknown ids throw.
ActionOutcome apply_action(WorldState& world, const ActionStep& step,
                           const FaultConfig& fault = {});

SceneGraph observe(const WorldState& world);

struct GoalLiteral {
    // at(name, location): name matches an instance id exactly, otherwise any
    // instance of the class satisfies it.
    std::optional<std::string> at_name;
    std::optional<Location> at_location;
    // container_state(id, open)
    std::optional<std::string> container_id;
    std::optional<bool> container_is_open;
};

struct GoalSpec {
    std::vector<GoalLiteral> literals;
};

GoalSpec goal_from_json(const nlohmann::json& j);
nlohmann::json goal_to_json(const GoalSpec& g);

bool goal_satisfied(const WorldState& world, const GoalSpec& goal);

Location location_from_json(const nlohmann::json& j);
nlohmann::json location_to_json(const Location& loc);

} // namespace digknow
