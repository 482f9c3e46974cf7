#pragma once

#include <optional>
#include <string>
#include <vector>

#include "digknow/scene_graph.hpp"

namespace digknow {

enum class Verb { Pick, PlaceIn, PlaceOn, Open, Close, Give };

std::string verb_name(Verb v);
std::optional<Verb> verb_from_name(const std::string& name);

// pick(obj), place_in(obj, container), place_on(obj, surface),
// open(container), close(container), give(obj)
struct ActionStep {
    Verb verb = Verb::Pick;
    std::vector<std::string> args;

    friend bool operator==(const ActionStep&, const ActionStep&) = default;
};

int verb_arity(Verb v);

// Canonical text form "verb(arg1[, arg2])".
std::string step_text(const ActionStep& s);
std::optional<ActionStep> step_from_text(const std::string& text);

// Natural-language rendering, e.g. "Put the pen in the right drawer."
std::string step_sentence(const ActionStep& s);

// Parses a free-form action sentence against the node ids of a scene graph.
// Object names resolve case-insensitively by longest id match, then by unique
// class label, then by spatial qualifier against directional edges.
// Returns nullopt when no verb is recognized; throws UnresolvableObject when
// the verb is clear but a named object cannot be resolved.
std::optional<ActionStep> parse_action_sentence(const std::string& sentence,
                                                const SceneGraph& g);

// Same, resolving against an explicit id list (no qualifier disambiguation).
std::optional<ActionStep> parse_action_sentence(const std::string& sentence,
                                                const std::vector<std::string>& known_ids);

struct Plan {
    std::vector<ActionStep> steps;
    std::string raw_text;
    int correction_round = 0;
};

std::vector<std::string> plan_texts(const Plan& p);

} // namespace digknow
