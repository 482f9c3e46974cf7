#include "digknow/distiller.hpp"

#include <map>
#include <set>
#include <sstream>

#include "digknow/errors.hpp"

namespace digknow {

namespace {

constexpr int kRetryBudget = 2;

const char* kActionFormatReminder =
    "\nYour previous answer could not be parsed. Answer with exactly one short "
    "imperative sentence naming the objects involved.";

const char* kPatternFormatReminder =
    "\nYour previous answer could not be parsed. Answer as a numbered list, one "
    "item per line; item 1 is the task, each further item is \"<object>: "
    "<pattern>\".";

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

std::vector<FrameObservation> downsample(const std::vector<FrameObservation>& frames,
                                         int scale) {
    if (frames.empty()) throw EmptyRecording("recording has no frames");
    if (scale < 1) throw NonPositiveScale("downsampling scale must be >= 1");
    std::vector<FrameObservation> out;
    for (size_t i = 0; i < frames.size(); i += static_cast<size_t>(scale))
        out.push_back(frames[i]);
    return out;
}

std::vector<SceneGraph> build_graphs(const std::vector<FrameObservation>& frames,
                                     const GeometryParams& params) {
    std::vector<SceneGraph> out;
    out.reserve(frames.size());
    for (const auto& f : frames) out.push_back(compute_relations(f, params));
    return out;
}

std::vector<Keyframe> select_keyframes(const std::vector<SceneGraph>& graphs) {
    if (graphs.empty()) throw EmptyInput("no graphs to select keyframes from");
    std::vector<Keyframe> out;
    out.push_back({0, graphs[0]});
    for (size_t t = 1; t < graphs.size(); ++t) {
        if (!graphs_equal(graphs[t], graphs[t - 1]))
            out.push_back({static_cast<int>(t), graphs[t]});
    }
    return out;
}

namespace {

// Pruned graph around the action-relevant node ids; ids not present in the
// graph are dropped before the one-hop closure.
SceneGraph prune_to(const SceneGraph& g, const std::set<std::string>& relevant) {
    std::set<std::string> present;
    for (const auto& id : relevant)
        if (g.has_node(id)) present.insert(id);
    return prune(g, present);
}

} // namespace

std::vector<ActionRecord> extract_actions(const std::vector<SceneGraph>& keyframes,
                                          ChatClient& gateway) {
    if (keyframes.size() < 2)
        throw EmptyInput("need at least two keyframes to extract actions");

    std::vector<ActionRecord> records;
    for (size_t i = 0; i + 1 < keyframes.size(); ++i) {
        const SceneGraph& before = keyframes[i];
        const SceneGraph& after = keyframes[i + 1];

        // nodes of both frames are the resolution scope for the description
        SceneGraph scope = before;
        for (const auto& n : after.nodes)
            if (!scope.has_node(n.id)) scope.nodes.push_back(n);
        scope.normalize();

        std::map<std::string, std::string> placeholders{
            {"first_graph", serialize_text(before)},
            {"second_graph", serialize_text(after)},
            {"format_reminder", ""},
        };

        ActionRecord rec;
        rec.index = static_cast<int>(i);
        bool ok = false;
        for (int attempt = 0; attempt <= kRetryBudget && !ok; ++attempt) {
            if (attempt > 0) placeholders["format_reminder"] = kActionFormatReminder;
            const std::string response = gateway.complete("action_extract", placeholders);
            std::istringstream in(response);
            std::string first_line;
            std::getline(in, first_line);
            rec.description = strip(first_line);
            if (rec.description.empty()) continue;
            try {
                rec.step = parse_action_sentence(rec.description, scope);
            } catch (const UnresolvableObject&) {
                rec.step = std::nullopt;
            }
            ok = rec.step.has_value();
        }
        if (!ok)
            throw UnparseableResponse("could not extract an action between keyframes " +
                                      std::to_string(i) + " and " + std::to_string(i + 1));

        std::set<std::string> relevant(rec.step->args.begin(), rec.step->args.end());
        if (relevant.empty())
            for (const auto& id : diff_node_ids(before, after)) relevant.insert(id);
        rec.preceding_graph = prune_to(before, relevant);
        rec.resulting_graph = prune_to(after, relevant);
        for (const auto& arg : rec.step->args) {
            if (!rec.preceding_graph.has_node(arg) || !rec.resulting_graph.has_node(arg))
                throw UnparseableResponse("extracted action names node '" + arg +
                                          "' missing from its keyframe graphs");
        }
        records.push_back(std::move(rec));
    }
    return records;
}

std::pair<TaskPattern, std::vector<ObjectPattern>> distill_patterns(
    const std::vector<ActionRecord>& records, const SceneGraph& initial,
    ChatClient& gateway) {
    if (records.empty()) throw EmptyInput("no action records to distill patterns from");

    // interaction counts per node id
    std::map<std::string, int> touched;
    std::map<std::string, int> last_record; // id -> index of last touching record
    for (size_t r = 0; r < records.size(); ++r) {
        std::set<std::string> ids;
        if (records[r].step) {
            ids.insert(records[r].step->args.begin(), records[r].step->args.end());
        } else {
            for (const auto& id :
                 diff_node_ids(records[r].preceding_graph, records[r].resulting_graph))
                ids.insert(id);
        }
        for (const auto& id : ids) {
            ++touched[id];
            last_record[id] = static_cast<int>(r);
        }
    }

    std::vector<std::string> items;
    for (const auto& rec : records)
        items.push_back(rec.description + ";\n" + serialize_text(rec.resulting_graph));

    std::map<std::string, std::string> placeholders{
        {"initial_graph", serialize_text(initial)},
        {"action_graph_list", render_numbered(items)},
        {"format_reminder", ""},
    };

    std::set<std::string> multi_classes;
    for (const auto& [id, n] : touched)
        if (n >= 2) multi_classes.insert(class_of_name(id));

    TaskPattern task;
    std::vector<ObjectPattern> patterns;
    bool ok = false;
    for (int attempt = 0; attempt <= kRetryBudget && !ok; ++attempt) {
        if (attempt > 0) placeholders["format_reminder"] = kPatternFormatReminder;
        const std::string response = gateway.complete("pattern_distill", placeholders);

        task = TaskPattern{};
        patterns.clear();
        std::istringstream in(response);
        std::string line;
        std::vector<std::pair<std::string, std::string>> parsed; // name -> text
        bool bad = false;
        while (std::getline(in, line)) {
            line = strip(line);
            if (line.empty()) continue;
            size_t dot = line.find(". ");
            if (dot == std::string::npos || dot == 0 ||
                line.find_first_not_of("0123456789") != dot) {
                bad = true;
                break;
            }
            std::string body = line.substr(dot + 2);
            if (task.text.empty()) {
                task.text = strip(body);
                continue;
            }
            size_t colon = body.find(": ");
            if (colon == std::string::npos) {
                bad = true;
                break;
            }
            parsed.emplace_back(strip(body.substr(0, colon)), strip(body.substr(colon + 2)));
        }
        if (bad || task.text.empty()) continue;

        std::set<std::string> covered;
        for (const auto& [name, text] : parsed) {
            ObjectPattern p;
            p.object_class = class_of_name(name);
            p.text = text;
            patterns.push_back(std::move(p));
            covered.insert(class_of_name(name));
        }
        ok = true;
        for (const auto& cls : multi_classes) ok = ok && covered.count(cls) > 0;
    }
    if (!ok)
        throw UnparseableResponse("pattern summary response did not cover every "
                                  "repeatedly used object");

    // single-interaction objects: keep the scene graph around the object
    for (const auto& [id, n] : touched) {
        if (n != 1) continue;
        const ActionRecord& rec = records[static_cast<size_t>(last_record[id])];
        if (!rec.resulting_graph.has_node(id)) continue;
        ObjectPattern p;
        p.object_class = class_of_name(id);
        p.graph_snippet = prune(rec.resulting_graph, {id});
        patterns.push_back(std::move(p));
    }
    return {task, patterns};
}

DistilledKnowledge distill_recording(const std::vector<FrameObservation>& frames,
                                     int downsample_scale, ChatClient& gateway,
                                     const GeometryParams& params) {
    const auto sampled = downsample(frames, downsample_scale);
    const auto graphs = build_graphs(sampled, params);
    const auto keyframes = select_keyframes(graphs);

    DistilledKnowledge out;
    for (const auto& kf : keyframes) out.keyframe_graphs.push_back(kf.graph);
    out.action_records = extract_actions(out.keyframe_graphs, gateway);
    auto [task, objects] =
        distill_patterns(out.action_records, out.keyframe_graphs.front(), gateway);
    out.task_pattern = task;
    out.object_patterns = objects;
    return out;
}

} // namespace digknow
