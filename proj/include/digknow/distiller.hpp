#pragma once

#include <optional>
#include <string>
#include <vector>

#include "digknow/action.hpp"
#include "digknow/gateway.hpp"
#include "digknow/scene_graph.hpp"

namespace digknow {

// One extracted action with its (pruned) preceding and resulting keyframe
// graphs.
struct ActionRecord {
    int index = 0;
    std::string description;
    std::optional<ActionStep> step;
    SceneGraph preceding_graph;
    SceneGraph resulting_graph;
};

struct TaskPattern {
    std::string text;
};

// Exactly one of text / graph_snippet is present: objects with a single
// interaction keep the scene graph, repeatedly used objects get a summary.
struct ObjectPattern {
    std::string object_class;
    std::optional<std::string> text;
    std::optional<SceneGraph> graph_snippet;
};

std::vector<FrameObservation> downsample(const std::vector<FrameObservation>& frames,
                                         int scale);

std::vector<SceneGraph> build_graphs(const std::vector<FrameObservation>& frames,
                                     const GeometryParams& params = {});

struct Keyframe {
    int index = 0;
    SceneGraph graph;
};

// Frame 0 plus every frame whose graph differs from its predecessor's.
std::vector<Keyframe> select_keyframes(const std::vector<SceneGraph>& graphs);

std::vector<ActionRecord> extract_actions(const std::vector<SceneGraph>& keyframes,
                                          ChatClient& gateway);

std::pair<TaskPattern, std::vector<ObjectPattern>> distill_patterns(
    const std::vector<ActionRecord>& records, const SceneGraph& initial,
    ChatClient& gateway);

// Full distillation of one recording.
struct DistilledKnowledge {
    std::vector<SceneGraph> keyframe_graphs;
    std::vector<ActionRecord> action_records;
    TaskPattern task_pattern;
    std::vector<ObjectPattern> object_patterns;
};

DistilledKnowledge distill_recording(const std::vector<FrameObservation>& frames,
                                     int downsample_scale, ChatClient& gateway,
                                     const GeometryParams& params = {});

} // namespace digknow
