#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "digknow/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

namespace digknow {

// One detected object in a frame. Symbolic stand-in for a per-object
// semantic point cloud: class, optional state, and an axis-aligned box.
struct DetectedObject {
    std::string instance_id;
    std::string class_label;
    std::optional<std::string> state;
    Aabb aabb;
};

struct FrameObservation {
    int frame_index = 0;
    std::vector<DetectedObject> objects;
    std::optional<DetectedObject> hand;
};

struct SceneNode {
    std::string id;
    std::string class_label;
    std::optional<std::string> state;

    friend bool operator==(const SceneNode&, const SceneNode&) = default;
    friend auto operator<=>(const SceneNode&, const SceneNode&) = default;
};

enum class Relation {
    In,
    On,
    LeftOf,
    RightOf,
    InFrontOf,
    Behind,
    Above,
    Below,
    Held,
};

std::string relation_name(Relation r);
std::string relation_phrase(Relation r);
std::optional<Relation> relation_from_name(const std::string& name);
std::optional<Relation> relation_from_phrase(const std::string& phrase);

struct RelationEdge {
    std::string subject;
    Relation relation = Relation::In;
    std::string object;

    friend bool operator==(const RelationEdge&, const RelationEdge&) = default;
    friend auto operator<=>(const RelationEdge&, const RelationEdge&) = default;
};

// Canonical form: nodes sorted by id, edges sorted by (subject, relation,
// object), no duplicates. All producers in this project emit canonical graphs.
struct SceneGraph {
    std::vector<SceneNode> nodes;
    std::vector<RelationEdge> edges;

    void normalize();
    bool has_node(const std::string& id) const;
    const SceneNode* find_node(const std::string& id) const;

    friend bool operator==(const SceneGraph&, const SceneGraph&) = default;
};

struct GeometryParams {
    double contact_epsilon_m = 0.02;
    // Fraction of the subject's volume that must lie inside the container box.
    double containment_fraction = 0.9;
    double held_distance_m = 0.10;
    // Axis convention: +x = Right, +y = Behind, +z = Above.
};

// Display names double as node ids; the class is the name with positional
// qualifiers ("left", "right", ...) and trailing instance numbers stripped.
std::string class_of_name(const std::string& id);

SceneGraph compute_relations(const FrameObservation& frame,
                             const GeometryParams& params = {});

bool graphs_equal(const SceneGraph& a, const SceneGraph& b);

// Three-line text form used in every prompt:
//   Objects and states: ...
//   Inter-object relations: ...
//   Human-object relations: ...
std::string serialize_text(const SceneGraph& g);

// Ablation variant: object list only, relation lines left empty.
std::string serialize_text_objects_only(const SceneGraph& g);

// Inverse of serialize_text. Node classes are reconstructed via class_of_name.
SceneGraph parse_graph_text(const std::string& text);

SceneGraph prune(const SceneGraph& g, const std::set<std::string>& relevant_ids);

// Node ids touched by any differing node (state change, added/removed) or
// differing edge between the two graphs.
std::set<std::string> diff_node_ids(const SceneGraph& a, const SceneGraph& b);

nlohmann::json graph_to_json(const SceneGraph& g);
SceneGraph graph_from_json(const nlohmann::json& j);

nlohmann::json frame_to_json(const FrameObservation& f);
FrameObservation frame_from_json(const nlohmann::json& j);

std::vector<FrameObservation> recording_from_json(const nlohmann::json& j);
nlohmann::json recording_to_json(const std::vector<FrameObservation>& frames);
std::vector<FrameObservation> load_recording(const std::string& path);

} // namespace digknow
