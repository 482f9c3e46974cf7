#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "digknow/action.hpp"
#include "digknow/scene_graph.hpp"

namespace digknow {

struct OnSurface {
    std::string surface;
    friend bool operator==(const OnSurface&, const OnSurface&) = default;
};
struct InContainer {
    std::string container;
    friend bool operator==(const InContainer&, const InContainer&) = default;
};
struct InGripper {
    friend bool operator==(const InGripper&, const InGripper&) = default;
};
struct InHumanZone {
    friend bool operator==(const InHumanZone&, const InHumanZone&) = default;
};
using Location = std::variant<OnSurface, InContainer, InGripper, InHumanZone>;

std::string location_text(const Location& loc);

enum class PreconditionKind {
    UnknownEntity,
    GripperOccupied,
    GripperEmpty,
    ContainerClosed,
    AlreadyOpen,
    AlreadyClosed,
    NotAContainer,
    NotASurface,
    NoHumanZone,
};

std::string precondition_text(PreconditionKind k, const ActionStep& step);

// Symbolic world description shared by the simulator and the deterministic
// plan validator. Exactly one location per object; at most one object held.
struct SymbolicState {
    std::set<std::string> surfaces;
    std::map<std::string, bool> container_open; // id -> open?
    std::map<std::string, Location> object_location;
    bool has_human_zone = false;

    std::optional<std::string> held_object() const;
    bool is_container(const std::string& id) const { return container_open.count(id) > 0; }
    bool is_surface(const std::string& id) const { return surfaces.count(id) > 0; }
};

// Precondition table:
//   pick:     gripper empty, object's container (if any) open
//   place_in: object held, container open
//   place_on: object held, surface exists
//   open:     gripper empty, container closed
//   close:    gripper empty, container open
//   give:     object held, human zone present
std::optional<PreconditionKind> check_precondition(const SymbolicState& s,
                                                   const ActionStep& step);

// Applies the step's postcondition transition; call only when the
// precondition check passed.
void apply_transition(SymbolicState& s, const ActionStep& step);

// Canonical observation of a symbolic state: containers carry open/closed
// states, In edges for contents, On for surface residents, Held via a hand
// node, In edges to a "human zone" node for handed-over objects.
SceneGraph state_to_graph(const SymbolicState& s,
                          const std::map<std::string, std::string>& classes);

// Inverse of state_to_graph. Containers are nodes with an open/closed state,
// surfaces are nodes named in surface_classes (by class label); everything
// else with a location edge is an object.
SymbolicState state_from_graph(const SceneGraph& g,
                               const std::set<std::string>& surface_classes);

// Default surface-class vocabulary for graph interpretation.
const std::set<std::string>& default_surface_classes();

} // namespace digknow
