#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "digknow/errors.hpp"
#include "digknow/scene_graph.hpp"

using namespace digknow;

namespace {

DetectedObject box(const std::string& id, double x0, double y0, double z0, double x1,
                   double y1, double z1,
                   const std::optional<std::string>& state = std::nullopt) {
    DetectedObject o;
    o.instance_id = id;
    o.class_label = class_of_name(id);
    o.state = state;
    o.aabb = {{x0, y0, z0}, {x1, y1, z1}};
    return o;
}

bool has_edge(const SceneGraph& g, const std::string& s, Relation r,
              const std::string& o) {
    for (const auto& e : g.edges)
        if (e.subject == s && e.relation == r && e.object == o) return true;
    return false;
}

SceneGraph random_graph(std::mt19937& rng) {
    static const std::vector<std::string> pool{
        "table", "shelf",  "left drawer", "right drawer", "pen",   "pen 2",
        "eraser", "cookie", "front box",   "box 1",        "apple", "plate",
        "cup",    "human zone"};
    std::uniform_int_distribution<int> count(1, 6);
    std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
    std::uniform_int_distribution<int> coin(0, 3);

    SceneGraph g;
    std::set<std::string> used;
    const int n = count(rng);
    for (int i = 0; i < n; ++i) {
        const std::string id = pool[pick(rng)];
        if (!used.insert(id).second) continue;
        SceneNode node{id, class_of_name(id), std::nullopt};
        if (coin(rng) == 0) node.state = (coin(rng) % 2) ? "open" : "closed";
        g.nodes.push_back(node);
    }
    std::vector<std::string> ids;
    for (const auto& node : g.nodes) ids.push_back(node.id);
    if (ids.size() >= 2) {
        std::uniform_int_distribution<size_t> ni(0, ids.size() - 1);
        std::uniform_int_distribution<int> rel(0, 8);
        const int edges = count(rng);
        for (int i = 0; i < edges; ++i) {
            const std::string a = ids[ni(rng)];
            const std::string b = ids[ni(rng)];
            if (a == b) continue;
            g.edges.push_back({a, static_cast<Relation>(rel(rng)), b});
        }
    }
    g.normalize();
    return g;
}

} // namespace

TEST_CASE("class is the id without qualifiers and instance numbers") {
    CHECK(class_of_name("pen") == "pen");
    CHECK(class_of_name("right drawer") == "drawer");
    CHECK(class_of_name("left drawer") == "drawer");
    CHECK(class_of_name("front box") == "box");
    CHECK(class_of_name("screwdriver 2") == "screwdriver");
    CHECK(class_of_name("middle shelf") == "shelf");
    CHECK(class_of_name("human zone") == "human zone");
}

TEST_CASE("resting contact yields On") {
    FrameObservation f;
    f.objects.push_back(box("table", 0, 0, 0.66, 1.2, 0.8, 0.72));
    f.objects.push_back(box("cup", 0.1, 0.1, 0.72, 0.2, 0.2, 0.82));
    const SceneGraph g = compute_relations(f);
    CHECK(has_edge(g, "cup", Relation::On, "table"));
    CHECK_FALSE(has_edge(g, "table", Relation::On, "cup"));
}

TEST_CASE("containment yields In and suppresses On") {
    FrameObservation f;
    f.objects.push_back(box("right drawer", 0.9, 0.5, 0.72, 1.2, 0.8, 0.92, "open"));
    // resting on the drawer floor and fully contained
    f.objects.push_back(box("pen", 1.0, 0.6, 0.72, 1.1, 0.62, 0.75));
    const SceneGraph g = compute_relations(f);
    CHECK(has_edge(g, "pen", Relation::In, "right drawer"));
    CHECK_FALSE(has_edge(g, "pen", Relation::On, "right drawer"));
    CHECK(g.find_node("right drawer")->state == std::optional<std::string>("open"));
}

TEST_CASE("a near hand yields Held") {
    FrameObservation f;
    f.objects.push_back(box("chips", 0.60, 1.00, 1.37, 0.66, 1.06, 1.40));
    f.hand = box("hand", 0.60, 1.00, 1.36, 0.66, 1.06, 1.44);
    const SceneGraph g = compute_relations(f);
    CHECK(has_edge(g, "chips", Relation::Held, "hand"));
}

TEST_CASE("directional relations fire only for nearby pairs") {
    FrameObservation f;
    f.objects.push_back(box("apple", 0.0, 0.0, 0.0, 0.1, 0.1, 0.1));
    f.objects.push_back(box("cookie", 0.3, 0.0, 0.0, 0.4, 0.1, 0.1));
    SceneGraph g = compute_relations(f);
    // subject is the lexicographically smaller id; cookie sits at larger x
    CHECK(has_edge(g, "apple", Relation::LeftOf, "cookie"));
    CHECK(g.edges.size() == 1);

    f.objects[1] = box("cookie", 5.0, 0.0, 0.0, 5.1, 0.1, 0.1);
    g = compute_relations(f);
    CHECK(g.edges.empty());
}

TEST_CASE("vertical offset beyond the contact epsilon is Above, not On") {
    FrameObservation f;
    f.objects.push_back(box("table", 0, 0, 0.66, 1.2, 0.8, 0.72));
    f.objects.push_back(box("cup", 0.55, 0.35, 0.80, 0.65, 0.45, 0.90));
    const SceneGraph g = compute_relations(f);
    CHECK_FALSE(has_edge(g, "cup", Relation::On, "table"));
    CHECK(has_edge(g, "cup", Relation::Above, "table"));
}

TEST_CASE("malformed boxes and duplicate ids are rejected") {
    FrameObservation f;
    f.objects.push_back(box("pen", 1.0, 0.0, 0.0, 0.0, 0.1, 0.1));
    CHECK_THROWS_AS(compute_relations(f), MalformedBox);

    f.objects.clear();
    f.objects.push_back(box("pen", 0, 0, 0, 0.1, 0.1, 0.1));
    f.objects.push_back(box("pen", 0.5, 0, 0, 0.6, 0.1, 0.1));
    CHECK_THROWS_AS(compute_relations(f), DuplicateInstanceId);
}

TEST_CASE("relation generation is deterministic") {
    FrameObservation f;
    f.objects.push_back(box("table", 0, 0, 0.66, 1.2, 0.8, 0.72));
    f.objects.push_back(box("cup", 0.1, 0.1, 0.72, 0.2, 0.2, 0.82));
    f.objects.push_back(box("pen", 0.4, 0.1, 0.72, 0.5, 0.12, 0.73));
    CHECK(serialize_text(compute_relations(f)) == serialize_text(compute_relations(f)));
}

TEST_CASE("graph equality ignores order, sees state changes") {
    SceneGraph a;
    a.nodes = {{"pen", "pen", std::nullopt}, {"drawer", "drawer", "open"}};
    a.edges = {{"pen", Relation::In, "drawer"}};
    SceneGraph b;
    b.nodes = {{"drawer", "drawer", "open"}, {"pen", "pen", std::nullopt}};
    b.edges = {{"pen", Relation::In, "drawer"}};
    CHECK(graphs_equal(a, b));

    b.nodes[0].state = "closed";
    CHECK_FALSE(graphs_equal(a, b));
}

TEST_CASE("three-line serialization with states, relations, and hand edges") {
    SceneGraph g;
    g.nodes = {{"pen", "pen", std::nullopt},
               {"right drawer", "drawer", "open"},
               {"table", "table", std::nullopt}};
    g.edges = {{"pen", Relation::In, "right drawer"},
               {"right drawer", Relation::On, "table"}};
    CHECK(serialize_text(g) ==
          "Objects and states: pen, right drawer [open], table\n"
          "Inter-object relations: pen is in right drawer, right drawer is on table\n"
          "Human-object relations: ");

    g.nodes.push_back({"hand", "hand", std::nullopt});
    g.edges = {{"pen", Relation::Held, "hand"}};
    CHECK(serialize_text(g) ==
          "Objects and states: hand, pen, right drawer [open], table\n"
          "Inter-object relations: \n"
          "Human-object relations: pen is held by hand");
}

TEST_CASE("empty graph serializes to bare headers") {
    CHECK(serialize_text(SceneGraph{}) ==
          "Objects and states: \nInter-object relations: \nHuman-object relations: ");
}

TEST_CASE("objects-only serialization leaves relation lines empty") {
    SceneGraph g;
    g.nodes = {{"pen", "pen", std::nullopt}, {"table", "table", std::nullopt}};
    g.edges = {{"pen", Relation::On, "table"}};
    CHECK(serialize_text_objects_only(g) ==
          "Objects and states: pen, table\n"
          "Inter-object relations: \n"
          "Human-object relations: ");
}

TEST_CASE("text serialization round-trips random graphs") {
    std::mt19937 rng(7);
    for (int i = 0; i < 300; ++i) {
        const SceneGraph g = random_graph(rng);
        const SceneGraph back = parse_graph_text(serialize_text(g));
        CHECK(graphs_equal(g, back));
    }
}

TEST_CASE("graph text parser rejects malformed input") {
    CHECK_THROWS_AS(parse_graph_text("just one line"), UnparseableResponse);
    CHECK_THROWS_AS(parse_graph_text("Objects and states: pen\n"
                                     "Inter-object relations: pen floats near table\n"
                                     "Human-object relations: "),
                    UnparseableResponse);
}

TEST_CASE("json serialization round-trips random graphs") {
    std::mt19937 rng(11);
    for (int i = 0; i < 200; ++i) {
        const SceneGraph g = random_graph(rng);
        CHECK(graph_from_json(graph_to_json(g)) == g);
    }
}

TEST_CASE("prune keeps the one-hop closure of the relevant ids") {
    SceneGraph g;
    g.nodes = {{"pen", "pen", std::nullopt},
               {"right drawer", "drawer", "open"},
               {"table", "table", std::nullopt},
               {"lamp", "lamp", std::nullopt}};
    g.edges = {{"pen", Relation::In, "right drawer"},
               {"right drawer", Relation::On, "table"},
               {"lamp", Relation::On, "table"}};
    const SceneGraph p = prune(g, {"pen"});
    CHECK(p.nodes.size() == 2);
    CHECK(p.has_node("pen"));
    CHECK(p.has_node("right drawer"));
    CHECK(p.edges.size() == 1);
    CHECK(has_edge(p, "pen", Relation::In, "right drawer"));

    CHECK(prune(g, {}).nodes.empty());
    CHECK_THROWS_AS(prune(g, {"ghost"}), UnknownNodeId);
}

TEST_CASE("prune matches a brute-force closure on random graphs") {
    std::mt19937 rng(23);
    for (int i = 0; i < 200; ++i) {
        const SceneGraph g = random_graph(rng);
        if (g.nodes.empty()) continue;
        std::uniform_int_distribution<size_t> ni(0, g.nodes.size() - 1);
        std::set<std::string> relevant{g.nodes[ni(rng)].id, g.nodes[ni(rng)].id};

        std::set<std::string> keep = relevant;
        for (const auto& e : g.edges) {
            if (relevant.count(e.subject)) keep.insert(e.object);
            if (relevant.count(e.object)) keep.insert(e.subject);
        }
        const SceneGraph p = prune(g, relevant);
        std::set<std::string> got;
        for (const auto& n : p.nodes) got.insert(n.id);
        CHECK(got == keep);
        for (const auto& e : p.edges) {
            CHECK(keep.count(e.subject));
            CHECK(keep.count(e.object));
        }
        for (const auto& e : g.edges)
            if (keep.count(e.subject) && keep.count(e.object))
                CHECK(has_edge(p, e.subject, e.relation, e.object));
    }
}

TEST_CASE("diff_node_ids names every touched node") {
    SceneGraph a;
    a.nodes = {{"drawer", "drawer", "closed"}, {"pen", "pen", std::nullopt}};
    a.edges = {{"pen", Relation::In, "drawer"}};
    SceneGraph b = a;
    CHECK(diff_node_ids(a, b).empty());

    b.nodes[0].state = "open";
    CHECK(diff_node_ids(a, b) == std::set<std::string>{"drawer"});

    b = a;
    b.edges = {{"pen", Relation::On, "drawer"}};
    CHECK(diff_node_ids(a, b) == std::set<std::string>{"drawer", "pen"});
}

TEST_CASE("relation names and phrases round-trip") {
    for (int i = 0; i < 9; ++i) {
        const Relation r = static_cast<Relation>(i);
        CHECK(relation_from_name(relation_name(r)) == r);
        CHECK(relation_from_phrase(relation_phrase(r)) == r);
    }
    CHECK_FALSE(relation_from_name("NextTo").has_value());
}

TEST_CASE("recordings reject non-increasing frame indices") {
    FrameObservation f0;
    f0.frame_index = 0;
    FrameObservation f1;
    f1.frame_index = 0;
    const nlohmann::json j = recording_to_json({f0, f1});
    CHECK_THROWS_AS(recording_from_json(j), Error);
}
