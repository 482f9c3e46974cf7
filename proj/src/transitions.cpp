#include "digknow/transitions.hpp"

#include "digknow/errors.hpp"

namespace digknow {

std::string location_text(const Location& loc) {
    if (const auto* s = std::get_if<OnSurface>(&loc)) return "on the " + s->surface;
    if (const auto* c = std::get_if<InContainer>(&loc)) return "in the " + c->container;
    if (std::get_if<InGripper>(&loc)) return "in the gripper";
    return "in the human zone";
}

std::string precondition_text(PreconditionKind k, const ActionStep& step) {
    const std::string what = step_text(step);
    switch (k) {
        case PreconditionKind::UnknownEntity:
            return "Unknown entity in " + what + ".";
        case PreconditionKind::GripperOccupied:
            return "The gripper is already holding an object, so " + what +
                   " cannot be executed.";
        case PreconditionKind::GripperEmpty:
            return "The gripper is not holding the " + step.args[0] + ", so " + what +
                   " cannot be executed.";
        case PreconditionKind::ContainerClosed:
            return "The " + step.args.back() + " is closed, so " + what +
                   " cannot be executed.";
        case PreconditionKind::AlreadyOpen:
            return "The " + step.args[0] + " is already open.";
        case PreconditionKind::AlreadyClosed:
            return "The " + step.args[0] + " is already closed.";
        case PreconditionKind::NotAContainer:
            return "The " + step.args.back() + " is not a container.";
        case PreconditionKind::NotASurface:
            return "The " + step.args.back() + " is not a surface.";
        case PreconditionKind::NoHumanZone:
            return "There is no one to hand the " + step.args[0] + " to.";
    }
    return what + " violates a precondition.";
}

std::optional<std::string> SymbolicState::held_object() const {
    for (const auto& [id, loc] : object_location)
        if (std::holds_alternative<InGripper>(loc)) return id;
    return std::nullopt;
}

std::optional<PreconditionKind> check_precondition(const SymbolicState& s,
                                                   const ActionStep& step) {
    using K = PreconditionKind;
    auto loc_of = [&](const std::string& id) -> const Location* {
        auto it = s.object_location.find(id);
        return it == s.object_location.end() ? nullptr : &it->second;
    };

    switch (step.verb) {
        case Verb::Pick: {
            const Location* loc = loc_of(step.args[0]);
            if (!loc) return K::UnknownEntity;
            if (s.held_object()) return K::GripperOccupied;
            if (const auto* c = std::get_if<InContainer>(loc)) {
                auto it = s.container_open.find(c->container);
                if (it == s.container_open.end() || !it->second)
                    return K::ContainerClosed;
            }
            return std::nullopt;
        }
        case Verb::PlaceIn: {
            const Location* loc = loc_of(step.args[0]);
            if (!loc) return K::UnknownEntity;
            if (!std::holds_alternative<InGripper>(*loc)) return K::GripperEmpty;
            if (!s.is_container(step.args[1])) return K::NotAContainer;
            if (!s.container_open.at(step.args[1])) return K::ContainerClosed;
            return std::nullopt;
        }
        case Verb::PlaceOn: {
            const Location* loc = loc_of(step.args[0]);
            if (!loc) return K::UnknownEntity;
            if (!std::holds_alternative<InGripper>(*loc)) return K::GripperEmpty;
            if (!s.is_surface(step.args[1])) return K::NotASurface;
            return std::nullopt;
        }
        case Verb::Open: {
            if (!s.is_container(step.args[0])) return K::NotAContainer;
            if (s.held_object()) return K::GripperOccupied;
            if (s.container_open.at(step.args[0])) return K::AlreadyOpen;
            return std::nullopt;
        }
        case Verb::Close: {
            if (!s.is_container(step.args[0])) return K::NotAContainer;
            if (s.held_object()) return K::GripperOccupied;
            if (!s.container_open.at(step.args[0])) return K::AlreadyClosed;
            return std::nullopt;
        }
        case Verb::Give: {
            const Location* loc = loc_of(step.args[0]);
            if (!loc) return K::UnknownEntity;
            if (!std::holds_alternative<InGripper>(*loc)) return K::GripperEmpty;
            if (!s.has_human_zone) return K::NoHumanZone;
            return std::nullopt;
        }
    }
    return K::UnknownEntity;
}

void apply_transition(SymbolicState& s, const ActionStep& step) {
    switch (step.verb) {
        case Verb::Pick:
            s.object_location[step.args[0]] = InGripper{};
            break;
        case Verb::PlaceIn:
            s.object_location[step.args[0]] = InContainer{step.args[1]};
            break;
        case Verb::PlaceOn:
            s.object_location[step.args[0]] = OnSurface{step.args[1]};
            break;
        case Verb::Open:
            s.container_open[step.args[0]] = true;
            break;
        case Verb::Close:
            s.container_open[step.args[0]] = false;
            break;
        case Verb::Give:
            s.object_location[step.args[0]] = InHumanZone{};
            break;
    }
}

SceneGraph state_to_graph(const SymbolicState& s,
                          const std::map<std::string, std::string>& classes) {
    auto class_for = [&](const std::string& id) {
        auto it = classes.find(id);
        return it != classes.end() ? it->second : class_of_name(id);
    };

    SceneGraph g;
    for (const auto& id : s.surfaces) g.nodes.push_back({id, class_for(id), std::nullopt});
    for (const auto& [id, open] : s.container_open)
        g.nodes.push_back({id, class_for(id), open ? "open" : "closed"});

    bool any_held = false;
    bool any_zone = false;
    for (const auto& [id, loc] : s.object_location) {
        g.nodes.push_back({id, class_for(id), std::nullopt});
        if (const auto* on = std::get_if<OnSurface>(&loc))
            g.edges.push_back({id, Relation::On, on->surface});
        else if (const auto* in = std::get_if<InContainer>(&loc))
            g.edges.push_back({id, Relation::In, in->container});
        else if (std::holds_alternative<InGripper>(loc)) {
            g.edges.push_back({id, Relation::Held, "hand"});
            any_held = true;
        } else {
            g.edges.push_back({id, Relation::In, "human zone"});
            any_zone = true;
        }
    }
    if (any_held) g.nodes.push_back({"hand", "hand", std::nullopt});
    if (any_zone || s.has_human_zone)
        g.nodes.push_back({"human zone", "human zone", std::nullopt});
    g.normalize();
    return g;
}

SymbolicState state_from_graph(const SceneGraph& g,
                               const std::set<std::string>& surface_classes) {
    SymbolicState s;
    for (const auto& n : g.nodes) {
        if (n.class_label == "hand") continue;
        if (n.id == "human zone" || n.class_label == "human zone") {
            s.has_human_zone = true;
            continue;
        }
        if (n.state && (*n.state == "open" || *n.state == "closed")) {
            s.container_open[n.id] = (*n.state == "open");
            continue;
        }
        if (surface_classes.count(n.class_label)) {
            s.surfaces.insert(n.id);
            continue;
        }
    }
    for (const auto& e : g.edges) {
        if (s.is_container(e.subject) || s.is_surface(e.subject)) continue;
        switch (e.relation) {
            case Relation::In:
                if (e.object == "human zone") {
                    s.object_location[e.subject] = InHumanZone{};
                    s.has_human_zone = true;
                } else if (s.is_container(e.object)) {
                    s.object_location[e.subject] = InContainer{e.object};
                }
                break;
            case Relation::On:
                if (s.is_surface(e.object))
                    s.object_location[e.subject] = OnSurface{e.object};
                break;
            case Relation::Held:
                s.object_location[e.subject] = InGripper{};
                break;
            default:
                break;
        }
    }
    return s;
}

const std::set<std::string>& default_surface_classes() {
    static const std::set<std::string> classes{"table", "shelf", "plate"};
    return classes;
}

} // namespace digknow
