#include "digknow/simulator.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "digknow/errors.hpp"

namespace digknow {

std::string fault_mode_name(FaultMode m) {
    switch (m) {
        case FaultMode::DropAfterPick: return "drop_after_pick";
        case FaultMode::NoOp: return "no_op";
        case FaultMode::WrongPlacement: return "wrong_placement";
    }
    return "?";
}

std::optional<FaultMode> fault_mode_from_name(const std::string& name) {
    for (FaultMode m :
         {FaultMode::DropAfterPick, FaultMode::NoOp, FaultMode::WrongPlacement})
        if (name == fault_mode_name(m)) return m;
    return std::nullopt;
}

Location location_from_json(const nlohmann::json& j) {
    if (j.is_string()) {
        const std::string s = j.get<std::string>();
        if (s == "gripper") return InGripper{};
        if (s == "human_zone") return InHumanZone{};
        throw InvalidScenario("unknown location string: " + s);
    }
    if (j.contains("on")) return OnSurface{j.at("on").get<std::string>()};
    if (j.contains("in")) return InContainer{j.at("in").get<std::string>()};
    throw InvalidScenario("bad location json");
}

nlohmann::json location_to_json(const Location& loc) {
    if (const auto* s = std::get_if<OnSurface>(&loc))
        return nlohmann::json{{"on", s->surface}};
    if (const auto* c = std::get_if<InContainer>(&loc))
        return nlohmann::json{{"in", c->container}};
    if (std::get_if<InGripper>(&loc)) return "gripper";
    return "human_zone";
}

Scenario scenario_from_json(const nlohmann::json& j) {
    Scenario s;
    if (j.contains("name")) s.name = j.at("name").get<std::string>();
    for (const auto& js : j.at("surfaces")) s.surfaces.push_back(js.get<std::string>());
    for (const auto& jc : j.at("containers")) {
        ScenarioContainer c;
        c.id = jc.at("id").get<std::string>();
        c.open = jc.at("state").get<std::string>() == "open";
        if (jc.contains("qualifier")) c.qualifier = jc.at("qualifier").get<std::string>();
        s.containers.push_back(std::move(c));
    }
    for (const auto& jo : j.at("objects")) {
        ScenarioObject o;
        o.id = jo.at("id").get<std::string>();
        o.class_label = jo.at("class").get<std::string>();
        o.location = location_from_json(jo.at("location"));
        if (jo.contains("legal_locations"))
            for (const auto& jl : jo.at("legal_locations"))
                o.legal_locations.push_back(location_from_json(jl));
        s.objects.push_back(std::move(o));
    }
    s.human_zone = j.value("human_zone", false);
    return s;
}

nlohmann::json scenario_to_json(const Scenario& s) {
    nlohmann::json j;
    j["name"] = s.name;
    j["surfaces"] = s.surfaces;
    j["containers"] = nlohmann::json::array();
    for (const auto& c : s.containers)
        j["containers"].push_back({{"id", c.id},
                                   {"state", c.open ? "open" : "closed"},
                                   {"qualifier", c.qualifier}});
    j["objects"] = nlohmann::json::array();
    for (const auto& o : s.objects) {
        nlohmann::json jo{{"id", o.id},
                          {"class", o.class_label},
                          {"location", location_to_json(o.location)}};
        if (!o.legal_locations.empty()) {
            jo["legal_locations"] = nlohmann::json::array();
            for (const auto& l : o.legal_locations)
                jo["legal_locations"].push_back(location_to_json(l));
        }
        j["objects"].push_back(std::move(jo));
    }
    j["human_zone"] = s.human_zone;
    return j;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InvalidScenario("cannot open scenario file: " + path);
    nlohmann::json j;
    in >> j;
    return scenario_from_json(j);
}

namespace {

void validate_location(const Scenario& s, const Location& loc, const std::string& obj_id) {
    if (const auto* on = std::get_if<OnSurface>(&loc)) {
        if (std::find(s.surfaces.begin(), s.surfaces.end(), on->surface) ==
            s.surfaces.end())
            throw InvalidScenario("object '" + obj_id + "' on unknown surface '" +
                                  on->surface + "'");
    } else if (const auto* in = std::get_if<InContainer>(&loc)) {
        const bool known = std::any_of(s.containers.begin(), s.containers.end(),
                                       [&](const auto& c) { return c.id == in->container; });
        if (!known)
            throw InvalidScenario("object '" + obj_id + "' in unknown container '" +
                                  in->container + "'");
    } else if (std::get_if<InHumanZone>(&loc) && !s.human_zone) {
        throw InvalidScenario("object '" + obj_id + "' in human zone, but scenario has none");
    }
}

uint64_t coprime_step(uint64_t total) {
    uint64_t g = std::max<uint64_t>(2, total / 2);
    while (std::gcd(g, total) != 1) ++g;
    return g;
}

} // namespace

WorldState reset(const Scenario& scenario, uint64_t variation_seed) {
    WorldState w;
    for (const auto& id : scenario.surfaces) {
        w.state.surfaces.insert(id);
        w.classes[id] = class_of_name(id);
    }
    for (const auto& c : scenario.containers) {
        w.state.container_open[c.id] = c.open;
        w.classes[c.id] = class_of_name(c.id);
    }
    w.state.has_human_zone = scenario.human_zone;

    // Variation: each object with legal_locations takes one slot; the seed
    // indexes the mixed-radix space of combinations through a coprime stride,
    // so small seed ranges are guaranteed distinct placements.
    uint64_t total = 1;
    for (const auto& o : scenario.objects)
        if (!o.legal_locations.empty()) total *= o.legal_locations.size();
    uint64_t combo = 0;
    if (total > 1) combo = ((variation_seed % total) * coprime_step(total)) % total;

    for (const auto& o : scenario.objects) {
        if (w.classes.count(o.id))
            throw InvalidScenario("duplicate id '" + o.id + "'");
        Location loc = o.location;
        if (!o.legal_locations.empty()) {
            const uint64_t n = o.legal_locations.size();
            loc = o.legal_locations[combo % n];
            combo /= n;
        }
        validate_location(scenario, loc, o.id);
        if (std::get_if<InGripper>(&loc))
            throw InvalidScenario("objects may not start in the gripper");
        w.state.object_location[o.id] = loc;
        w.classes[o.id] = o.class_label;
    }
    return w;
}

namespace {

double roll(WorldState& w, const FaultConfig& fault) {
    if (!w.fault_rng_seeded) {
        w.fault_rng.seed(fault.seed);
        w.fault_rng_seeded = true;
    }
    return static_cast<double>(w.fault_rng() >> 11) * 0x1.0p-53;
}

bool fault_applies(FaultMode mode, Verb verb) {
    switch (mode) {
        case FaultMode::DropAfterPick: return verb == Verb::Pick;
        case FaultMode::NoOp: return true;
        case FaultMode::WrongPlacement:
            return verb == Verb::PlaceIn || verb == Verb::PlaceOn;
    }
    return false;
}

} // namespace

ActionOutcome apply_action(WorldState& world, const ActionStep& step,
                           const FaultConfig& fault) {
    for (const auto& arg : step.args)
        if (!world.classes.count(arg))
            throw UnknownEntity("unknown entity '" + arg + "'");

    if (auto violated = check_precondition(world.state, step))
        return {false, violated, false};

    if (fault.probability > 0.0 && fault_applies(fault.mode, step.verb) &&
        roll(world, fault) < fault.probability) {
        switch (fault.mode) {
            case FaultMode::DropAfterPick:
            case FaultMode::NoOp:
                // outcome corrupted, world unchanged
                break;
            case FaultMode::WrongPlacement:
                // object lands on the first surface instead of the target
                world.state.object_location[step.args[0]] =
                    OnSurface{*world.state.surfaces.begin()};
                break;
        }
        return {false, std::nullopt, true};
    }

    apply_transition(world.state, step);
    return {true, std::nullopt, false};
}

SceneGraph observe(const WorldState& world) {
    return state_to_graph(world.state, world.classes);
}

GoalSpec goal_from_json(const nlohmann::json& j) {
    GoalSpec g;
    for (const auto& jl : j) {
        GoalLiteral lit;
        if (jl.contains("at")) {
            lit.at_name = jl.at("at").at("name").get<std::string>();
            lit.at_location = location_from_json(jl.at("at").at("loc"));
        } else if (jl.contains("container_state")) {
            lit.container_id = jl.at("container_state").at("id").get<std::string>();
            lit.container_is_open =
                jl.at("container_state").at("state").get<std::string>() == "open";
        } else {
            throw Error("bad goal literal");
        }
        g.literals.push_back(std::move(lit));
    }
    return g;
}

nlohmann::json goal_to_json(const GoalSpec& g) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& lit : g.literals) {
        if (lit.at_name) {
            arr.push_back({{"at",
                            {{"name", *lit.at_name},
                             {"loc", location_to_json(*lit.at_location)}}}});
        } else {
            arr.push_back({{"container_state",
                            {{"id", *lit.container_id},
                             {"state", *lit.container_is_open ? "open" : "closed"}}}});
        }
    }
    return arr;
}

bool goal_satisfied(const WorldState& world, const GoalSpec& goal) {
    for (const auto& lit : goal.literals) {
        if (lit.container_id) {
            auto it = world.state.container_open.find(*lit.container_id);
            if (it == world.state.container_open.end()) return false;
            if (it->second != *lit.container_is_open) return false;
            continue;
        }
        bool ok = false;
        for (const auto& [id, loc] : world.state.object_location) {
            const bool name_match =
                id == *lit.at_name || world.classes.at(id) == *lit.at_name;
            if (name_match && loc == *lit.at_location) {
                ok = true;
                break;
            }
        }
        if (!ok) return false;
    }
    return true;
}

} // namespace digknow
