#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "digknow/gateway.hpp"
#include "digknow/transitions.hpp"

namespace digknow {

// Destination per object class, e.g. {"pen" -> "right drawer"}. Parsed from
// pattern-knowledge text by the responder, authored directly by fixtures.
using HomeMap = std::map<std::string, std::string>;

HomeMap parse_homes(const std::string& pattern_knowledge);

// Instruction-driven planning rule shared by the scripted responder and the
// fixture ground truths. Understands "put X in/on Y [and close it]",
// "give me ...", "tidy"/"organize", and "heat". Returns an empty plan for
// instructions it cannot interpret.
std::vector<ActionStep> rule_based_plan(const std::string& instruction,
                                        const SceneGraph& g0, const HomeMap& homes);

// Deterministic responder covering every prompt shape. A pure function of
// (template_id, placeholders); returns nullopt for prompts it cannot answer.
std::optional<std::string> oracle_response(
    const std::string& template_id,
    const std::map<std::string, std::string>& placeholders);

// ScriptedClient with oracle_response installed as the fallback.
std::shared_ptr<ScriptedClient> make_scripted_client();

} // namespace digknow
