#include "digknow/scene_graph.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "digknow/errors.hpp"

namespace digknow {

namespace {

struct RelationInfo {
    Relation rel;
    const char* name;
    const char* phrase;
};

constexpr std::array<RelationInfo, 9> kRelations{{
    {Relation::In, "In", "in"},
    {Relation::On, "On", "on"},
    {Relation::LeftOf, "LeftOf", "to the left of"},
    {Relation::RightOf, "RightOf", "to the right of"},
    {Relation::InFrontOf, "InFrontOf", "in front of"},
    {Relation::Behind, "Behind", "behind"},
    {Relation::Above, "Above", "above"},
    {Relation::Below, "Below", "below"},
    {Relation::Held, "Held", "held by"},
}};

} // namespace

std::string relation_name(Relation r) {
    for (const auto& info : kRelations)
        if (info.rel == r) return info.name;
    return "?";
}

std::string relation_phrase(Relation r) {
    for (const auto& info : kRelations)
        if (info.rel == r) return info.phrase;
    return "?";
}

std::optional<Relation> relation_from_name(const std::string& name) {
    for (const auto& info : kRelations)
        if (name == info.name) return info.rel;
    return std::nullopt;
}

std::optional<Relation> relation_from_phrase(const std::string& phrase) {
    for (const auto& info : kRelations)
        if (phrase == info.phrase) return info.rel;
    return std::nullopt;
}

void SceneGraph::normalize() {
    std::sort(nodes.begin(), nodes.end(),
              [](const SceneNode& a, const SceneNode& b) { return a.id < b.id; });
    nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

bool SceneGraph::has_node(const std::string& id) const {
    return find_node(id) != nullptr;
}

const SceneNode* SceneGraph::find_node(const std::string& id) const {
    for (const auto& n : nodes)
        if (n.id == id) return &n;
    return nullptr;
}

std::string class_of_name(const std::string& id) {
    static const std::array<const char*, 6> qualifiers{"left",  "right", "front",
                                                       "back",  "middle", "rear"};
    std::string s = id;
    for (const char* q : qualifiers) {
        const std::string prefix = std::string(q) + " ";
        if (s.rfind(prefix, 0) == 0) {
            s = s.substr(prefix.size());
            break;
        }
    }
    // strip a trailing " <digits>" instance number
    auto pos = s.find_last_of(' ');
    if (pos != std::string::npos && pos + 1 < s.size()) {
        bool digits = true;
        for (size_t i = pos + 1; i < s.size(); ++i)
            digits = digits && std::isdigit(static_cast<unsigned char>(s[i]));
        if (digits) s = s.substr(0, pos);
    }
    return s;
}

SceneGraph compute_relations(const FrameObservation& frame, const GeometryParams& params) {
    SceneGraph g;
    std::unordered_set<std::string> seen;

    auto check = [&](const DetectedObject& o) {
        if (!o.aabb.valid())
            throw MalformedBox("malformed box for '" + o.instance_id + "'");
        if (!seen.insert(o.instance_id).second)
            throw DuplicateInstanceId("duplicate instance id '" + o.instance_id + "'");
    };

    for (const auto& o : frame.objects) {
        check(o);
        g.nodes.push_back({o.instance_id, o.class_label, o.state});
    }
    if (frame.hand) {
        check(*frame.hand);
        g.nodes.push_back({frame.hand->instance_id, frame.hand->class_label, frame.hand->state});
    }

    const auto& objs = frame.objects;
    const size_t n = objs.size();

    // In / On per ordered pair; In wins when both fire.
    std::vector<std::vector<bool>> topo(n, std::vector<bool>(n, false));
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const auto& s = objs[i];
            const auto& o = objs[j];
            if (containment_fraction(s.aabb, o.aabb) >= params.containment_fraction) {
                g.edges.push_back({s.instance_id, Relation::In, o.instance_id});
                topo[i][j] = true;
                continue;
            }
            if (footprints_overlap(s.aabb, o.aabb) &&
                std::abs(s.aabb.min.z - o.aabb.max.z) <= params.contact_epsilon_m) {
                g.edges.push_back({s.instance_id, Relation::On, o.instance_id});
                topo[i][j] = true;
            }
        }
    }

    // Directional relations between unordered pairs with no In/On edge either
    // way, only when the boxes are near each other. One edge per pair, subject
    // = lexicographically smaller id.
    for (size_t i = 0; i < n; ++i) {
        for (size_t j = i + 1; j < n; ++j) {
            if (topo[i][j] || topo[j][i]) continue;
            const auto& a = objs[i];
            const auto& b = objs[j];
            const Vec3 da = a.aabb.centroid() - b.aabb.centroid();
            const Vec3 ha = a.aabb.half_extents();
            const Vec3 hb = b.aabb.half_extents();
            const bool near = std::abs(da.x) <= 3.0 * (ha.x + hb.x) &&
                              std::abs(da.y) <= 3.0 * (ha.y + hb.y) &&
                              std::abs(da.z) <= 3.0 * (ha.z + hb.z);
            if (!near) continue;

            const DetectedObject* subj = &a;
            const DetectedObject* obj = &b;
            Vec3 d = da;
            if (!(a.instance_id < b.instance_id)) {
                subj = &b;
                obj = &a;
                d = {-da.x, -da.y, -da.z};
            }
            Relation rel;
            const double ax = std::abs(d.x), ay = std::abs(d.y), az = std::abs(d.z);
            if (ax >= ay && ax >= az)
                rel = d.x > 0 ? Relation::RightOf : Relation::LeftOf;
            else if (ay >= az)
                rel = d.y > 0 ? Relation::Behind : Relation::InFrontOf;
            else
                rel = d.z > 0 ? Relation::Above : Relation::Below;
            g.edges.push_back({subj->instance_id, rel, obj->instance_id});
        }
    }

    if (frame.hand) {
        const Vec3 hc = frame.hand->aabb.centroid();
        for (const auto& o : objs) {
            if (norm(o.aabb.centroid() - hc) <= params.held_distance_m)
                g.edges.push_back({o.instance_id, Relation::Held, frame.hand->instance_id});
        }
    }

    g.normalize();
    return g;
}

bool graphs_equal(const SceneGraph& a, const SceneGraph& b) {
    SceneGraph ca = a;
    SceneGraph cb = b;
    ca.normalize();
    cb.normalize();
    return ca == cb;
}

namespace {

bool involves_hand(const SceneGraph& g, const RelationEdge& e) {
    auto is_hand = [&](const std::string& id) {
        const SceneNode* n = g.find_node(id);
        return (n && n->class_label == "hand") || id == "hand";
    };
    return is_hand(e.subject) || is_hand(e.object);
}

std::string render_lines(const SceneGraph& g, bool with_relations) {
    std::ostringstream out;
    out << "Objects and states: ";
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        if (i) out << ", ";
        out << g.nodes[i].id;
        if (g.nodes[i].state) out << " [" << *g.nodes[i].state << "]";
    }
    out << "\nInter-object relations: ";
    bool first = true;
    if (with_relations) {
        for (const auto& e : g.edges) {
            if (involves_hand(g, e)) continue;
            if (!first) out << ", ";
            first = false;
            out << e.subject << " is " << relation_phrase(e.relation) << " " << e.object;
        }
    }
    out << "\nHuman-object relations: ";
    first = true;
    if (with_relations) {
        for (const auto& e : g.edges) {
            if (!involves_hand(g, e)) continue;
            if (!first) out << ", ";
            first = false;
            out << e.subject << " is " << relation_phrase(e.relation) << " " << e.object;
        }
    }
    return out.str();
}

} // namespace

std::string serialize_text(const SceneGraph& g) {
    SceneGraph c = g;
    c.normalize();
    return render_lines(c, true);
}

std::string serialize_text_objects_only(const SceneGraph& g) {
    SceneGraph c = g;
    c.normalize();
    return render_lines(c, false);
}

namespace {

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_clauses(const std::string& body) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= body.size()) {
        size_t next = body.find(", ", pos);
        if (next == std::string::npos) {
            std::string part = strip(body.substr(pos));
            if (!part.empty()) out.push_back(part);
            break;
        }
        std::string part = strip(body.substr(pos, next - pos));
        if (!part.empty()) out.push_back(part);
        pos = next + 2;
    }
    return out;
}

void parse_relation_clause(const std::string& clause, SceneGraph& g) {
    const size_t is_pos = clause.find(" is ");
    if (is_pos == std::string::npos)
        throw UnparseableResponse("bad relation clause: " + clause);
    const std::string subject = clause.substr(0, is_pos);
    const std::string rest = clause.substr(is_pos + 4);
    // longest phrase first so "in front of" is not read as "in"
    const RelationInfo* best = nullptr;
    size_t best_len = 0;
    for (const auto& info : kRelations) {
        const std::string p = std::string(info.phrase) + " ";
        if (rest.rfind(p, 0) == 0 && p.size() > best_len) {
            best = &info;
            best_len = p.size();
        }
    }
    if (!best) throw UnparseableResponse("unknown relation phrase in: " + clause);
    g.edges.push_back({subject, best->rel, rest.substr(best_len)});
}

} // namespace

SceneGraph parse_graph_text(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
    if (lines.size() != 3)
        throw UnparseableResponse("scene graph text must have exactly 3 lines");

    auto body_of = [](const std::string& l, const char* header) {
        const std::string h = std::string(header) + ": ";
        if (l.rfind(std::string(header) + ":", 0) != 0)
            throw UnparseableResponse("missing header: " + std::string(header));
        return l.size() > h.size() ? l.substr(h.size()) : std::string();
    };

    SceneGraph g;
    for (const auto& clause : split_clauses(body_of(lines[0], "Objects and states"))) {
        SceneNode n;
        const size_t br = clause.find(" [");
        if (br != std::string::npos && clause.back() == ']') {
            n.id = clause.substr(0, br);
            n.state = clause.substr(br + 2, clause.size() - br - 3);
        } else {
            n.id = clause;
        }
        n.class_label = class_of_name(n.id);
        g.nodes.push_back(n);
    }
    for (const auto& clause : split_clauses(body_of(lines[1], "Inter-object relations")))
        parse_relation_clause(clause, g);
    for (const auto& clause : split_clauses(body_of(lines[2], "Human-object relations")))
        parse_relation_clause(clause, g);
    g.normalize();
    return g;
}

SceneGraph prune(const SceneGraph& g, const std::set<std::string>& relevant_ids) {
    for (const auto& id : relevant_ids)
        if (!g.has_node(id)) throw UnknownNodeId("unknown node id '" + id + "'");

    std::set<std::string> keep = relevant_ids;
    for (const auto& e : g.edges) {
        if (relevant_ids.count(e.subject)) keep.insert(e.object);
        if (relevant_ids.count(e.object)) keep.insert(e.subject);
    }

    SceneGraph out;
    for (const auto& n : g.nodes)
        if (keep.count(n.id)) out.nodes.push_back(n);
    for (const auto& e : g.edges)
        if (keep.count(e.subject) && keep.count(e.object)) out.edges.push_back(e);
    out.normalize();
    return out;
}

std::set<std::string> diff_node_ids(const SceneGraph& a, const SceneGraph& b) {
    SceneGraph ca = a, cb = b;
    ca.normalize();
    cb.normalize();
    std::set<std::string> out;
    for (const auto& n : ca.nodes) {
        const SceneNode* m = cb.find_node(n.id);
        if (!m || *m != n) out.insert(n.id);
    }
    for (const auto& n : cb.nodes) {
        const SceneNode* m = ca.find_node(n.id);
        if (!m || *m != n) out.insert(n.id);
    }
    auto edge_diff = [&](const SceneGraph& x, const SceneGraph& y) {
        for (const auto& e : x.edges) {
            if (std::find(y.edges.begin(), y.edges.end(), e) == y.edges.end()) {
                out.insert(e.subject);
                out.insert(e.object);
            }
        }
    };
    edge_diff(ca, cb);
    edge_diff(cb, ca);
    return out;
}

nlohmann::json graph_to_json(const SceneGraph& g) {
    SceneGraph c = g;
    c.normalize();
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : c.nodes) {
        nlohmann::json jn{{"id", n.id}, {"class", n.class_label}};
        if (n.state) jn["state"] = *n.state;
        nodes.push_back(std::move(jn));
    }
    nlohmann::json edges = nlohmann::json::array();
    for (const auto& e : c.edges)
        edges.push_back({{"subject", e.subject},
                         {"relation", relation_name(e.relation)},
                         {"object", e.object}});
    return {{"nodes", nodes}, {"edges", edges}};
}

SceneGraph graph_from_json(const nlohmann::json& j) {
    SceneGraph g;
    for (const auto& jn : j.at("nodes")) {
        SceneNode n;
        n.id = jn.at("id").get<std::string>();
        n.class_label = jn.at("class").get<std::string>();
        if (jn.contains("state")) n.state = jn.at("state").get<std::string>();
        g.nodes.push_back(std::move(n));
    }
    for (const auto& je : j.at("edges")) {
        auto rel = relation_from_name(je.at("relation").get<std::string>());
        if (!rel) throw Error("unknown relation name in graph json");
        g.edges.push_back({je.at("subject").get<std::string>(), *rel,
                           je.at("object").get<std::string>()});
    }
    g.normalize();
    return g;
}

namespace {

nlohmann::json object_to_json(const DetectedObject& o) {
    nlohmann::json j{{"id", o.instance_id},
                     {"class", o.class_label},
                     {"aabb",
                      {{"min", {o.aabb.min.x, o.aabb.min.y, o.aabb.min.z}},
                       {"max", {o.aabb.max.x, o.aabb.max.y, o.aabb.max.z}}}}};
    if (o.state) j["state"] = *o.state;
    return j;
}

DetectedObject object_from_json(const nlohmann::json& j) {
    DetectedObject o;
    o.instance_id = j.at("id").get<std::string>();
    o.class_label = j.at("class").get<std::string>();
    if (j.contains("state") && !j.at("state").is_null())
        o.state = j.at("state").get<std::string>();
    const auto& mn = j.at("aabb").at("min");
    const auto& mx = j.at("aabb").at("max");
    o.aabb.min = {mn.at(0).get<double>(), mn.at(1).get<double>(), mn.at(2).get<double>()};
    o.aabb.max = {mx.at(0).get<double>(), mx.at(1).get<double>(), mx.at(2).get<double>()};
    return o;
}

} // namespace

nlohmann::json frame_to_json(const FrameObservation& f) {
    nlohmann::json objs = nlohmann::json::array();
    for (const auto& o : f.objects) objs.push_back(object_to_json(o));
    nlohmann::json j{{"frame_index", f.frame_index}, {"objects", objs}};
    j["hand"] = f.hand ? object_to_json(*f.hand) : nlohmann::json(nullptr);
    return j;
}

FrameObservation frame_from_json(const nlohmann::json& j) {
    FrameObservation f;
    f.frame_index = j.at("frame_index").get<int>();
    for (const auto& jo : j.at("objects")) f.objects.push_back(object_from_json(jo));
    if (j.contains("hand") && !j.at("hand").is_null())
        f.hand = object_from_json(j.at("hand"));
    return f;
}

std::vector<FrameObservation> recording_from_json(const nlohmann::json& j) {
    std::vector<FrameObservation> frames;
    int prev = -1;
    for (const auto& jf : j.at("frames")) {
        FrameObservation f = frame_from_json(jf);
        if (f.frame_index <= prev)
            throw Error("frame_index must be strictly increasing");
        prev = f.frame_index;
        frames.push_back(std::move(f));
    }
    return frames;
}

nlohmann::json recording_to_json(const std::vector<FrameObservation>& frames) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& f : frames) arr.push_back(frame_to_json(f));
    return {{"frames", arr}};
}

std::vector<FrameObservation> load_recording(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open recording file: " + path);
    nlohmann::json j;
    in >> j;
    return recording_from_json(j);
}

} // namespace digknow
