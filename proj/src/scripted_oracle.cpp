#include "digknow/scripted_oracle.hpp"

#include <algorithm>
#include <cctype>
#include <set>
#include <sstream>

#include "digknow/errors.hpp"

namespace digknow {

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

std::string strip(const std::string& s) {
    size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, const std::string& sep) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (true) {
        size_t next = s.find(sep, pos);
        if (next == std::string::npos) {
            out.push_back(strip(s.substr(pos)));
            break;
        }
        out.push_back(strip(s.substr(pos, next - pos)));
        pos = next + sep.size();
    }
    return out;
}

// "1. line one\n2. line two" -> items without markers
std::vector<std::string> numbered_items(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        line = strip(line);
        size_t dot = line.find(". ");
        if (dot == std::string::npos || dot == 0) continue;
        if (line.find_first_not_of("0123456789") != dot) continue;
        out.push_back(strip(line.substr(dot + 2)));
    }
    return out;
}

const std::map<std::string, std::vector<std::string>>& category_classes() {
    static const std::map<std::string, std::vector<std::string>> m{
        {"stationery", {"pen", "eraser"}},
        {"snack", {"cookie", "chips"}},
        {"snacks", {"cookie", "chips"}},
        {"fruit", {"apple", "banana"}},
        {"fruits", {"apple", "banana"}},
        {"breakfast", {"sandwich"}},
        {"tapes", {"tape"}},
        {"drinks", {"drink"}},
    };
    return m;
}

std::vector<std::string> instances_of_class(const SceneGraph& g, const std::string& cls) {
    std::vector<std::string> out;
    for (const auto& n : g.nodes)
        if (n.class_label != "hand" && class_of_name(n.id) == cls) out.push_back(n.id);
    return out;
}

// "right open drawer" -> node id "right drawer"
std::optional<std::string> resolve_entity(const SceneGraph& g, const std::string& phrase) {
    std::vector<std::string> words;
    for (const auto& w : split_on(lower(phrase), " ")) {
        if (w.empty() || w == "the" || w == "a" || w == "an" || w == "open" ||
            w == "closed")
            continue;
        words.push_back(w);
    }
    std::string cleaned;
    for (const auto& w : words) {
        if (!cleaned.empty()) cleaned += " ";
        cleaned += w;
    }
    for (const auto& n : g.nodes)
        if (lower(n.id) == cleaned) return n.id;
    return std::nullopt;
}

// object phrase -> instance ids (category word, class name, or exact id)
std::vector<std::string> resolve_objects(const SceneGraph& g, const std::string& phrase) {
    if (auto id = resolve_entity(g, phrase)) return {*id};
    std::string cleaned = strip(lower(phrase));
    for (const char* art : {"the ", "a ", "an "}) {
        if (cleaned.rfind(art, 0) == 0) cleaned = cleaned.substr(std::string(art).size());
    }
    auto cat = category_classes().find(cleaned);
    std::vector<std::string> classes =
        cat != category_classes().end() ? cat->second : std::vector<std::string>{cleaned};
    std::vector<std::string> out;
    for (const auto& cls : classes)
        for (const auto& id : instances_of_class(g, cls)) out.push_back(id);
    if (out.empty() && cleaned.size() > 1 && cleaned.back() == 's') {
        const std::string singular = cleaned.substr(0, cleaned.size() - 1);
        for (const auto& id : instances_of_class(g, singular)) out.push_back(id);
    }
    return out;
}

struct PlanBuilder {
    SymbolicState state;
    std::vector<ActionStep> steps;

    void emit(const ActionStep& s) {
        steps.push_back(s);
        apply_transition(state, s);
    }

    bool container_closed(const std::string& id) const {
        auto it = state.container_open.find(id);
        return it != state.container_open.end() && !it->second;
    }

    std::optional<std::string> closed_container_of(const std::string& obj) const {
        auto it = state.object_location.find(obj);
        if (it == state.object_location.end()) return std::nullopt;
        if (const auto* c = std::get_if<InContainer>(&it->second))
            if (container_closed(c->container)) return c->container;
        return std::nullopt;
    }

    // open what is in the way, move, close what was opened (reverse order)
    void transfer(const std::string& obj, const std::string& dest) {
        std::vector<std::string> opened;
        if (auto src = closed_container_of(obj)) {
            emit({Verb::Open, {*src}});
            opened.push_back(*src);
        }
        const bool dest_is_container = state.is_container(dest);
        if (dest_is_container && container_closed(dest)) {
            emit({Verb::Open, {dest}});
            opened.push_back(dest);
        }
        emit({Verb::Pick, {obj}});
        emit({dest_is_container ? Verb::PlaceIn : Verb::PlaceOn, {obj, dest}});
        for (auto it = opened.rbegin(); it != opened.rend(); ++it)
            emit({Verb::Close, {*it}});
    }

    void hand_over(const std::string& obj) {
        std::vector<std::string> opened;
        if (auto src = closed_container_of(obj)) {
            emit({Verb::Open, {*src}});
            opened.push_back(*src);
        }
        emit({Verb::Pick, {obj}});
        emit({Verb::Give, {obj}});
        for (auto it = opened.rbegin(); it != opened.rend(); ++it)
            emit({Verb::Close, {*it}});
    }

    void close_if_open(const std::string& id) {
        if (state.is_container(id) && !container_closed(id)) emit({Verb::Close, {id}});
    }

    bool at_home(const std::string& obj, const std::string& dest) const {
        auto it = state.object_location.find(obj);
        if (it == state.object_location.end()) return false;
        if (state.is_container(dest)) return it->second == Location{InContainer{dest}};
        return it->second == Location{OnSurface{dest}};
    }
};

std::string first_surface(const SymbolicState& s) {
    std::string table;
    for (const auto& id : s.surfaces) {
        if (id == "table") return id;
        if (table.empty()) table = id;
    }
    return table;
}

} // namespace

HomeMap parse_homes(const std::string& pattern_knowledge) {
    HomeMap homes;
    std::istringstream in(pattern_knowledge);
    std::string line;
    while (std::getline(in, line)) {
        for (const char* marker : {"tends to be stored in the ", "tends to be placed on the "}) {
            size_t pos = line.find(marker);
            if (pos == std::string::npos) continue;
            size_t name_start = line.rfind("The ", pos);
            if (name_start == std::string::npos) continue;
            std::string name =
                strip(line.substr(name_start + 4, line.find(" tends") - name_start - 4));
            std::string dest = strip(line.substr(pos + std::string(marker).size()));
            while (!dest.empty() && dest.back() == '.') dest.pop_back();
            const std::string cls = class_of_name(name);
            if (!homes.count(cls)) homes[cls] = dest;
        }
    }
    return homes;
}

std::vector<ActionStep> rule_based_plan(const std::string& instruction,
                                        const SceneGraph& g0, const HomeMap& homes) {
    std::string lc = lower(strip(instruction));
    while (!lc.empty() && lc.back() == '.') lc.pop_back();
    if (lc.rfind("please ", 0) == 0) lc = lc.substr(7);

    PlanBuilder b;
    b.state = state_from_graph(g0, default_surface_classes());

    const size_t give_pos = lc.find("give me ");
    if (give_pos != std::string::npos) {
        for (const auto& phrase : split_on(lc.substr(give_pos + 8), " and "))
            for (const auto& obj : resolve_objects(g0, phrase)) {
                b.hand_over(obj);
                break; // "a cake" asks for one instance
            }
        return b.steps;
    }

    if (lc.find("tidy") != std::string::npos || lc.find("organize") != std::string::npos) {
        for (const auto& [cls, dest] : homes) {
            if (auto did = resolve_entity(g0, dest)) {
                for (const auto& obj : instances_of_class(g0, cls))
                    if (!b.at_home(obj, *did)) b.transfer(obj, *did);
            }
        }
        return b.steps;
    }

    if (lc.find("heat ") != std::string::npos) {
        auto micro = resolve_entity(g0, "microwave");
        if (!micro) return {};
        const std::string items = lc.substr(lc.find("heat ") + 5);
        for (const auto& obj : resolve_objects(g0, items)) {
            b.transfer(obj, *micro);
            b.close_if_open(*micro);
            // retrieve the heated item
            if (b.container_closed(*micro)) b.emit({Verb::Open, {*micro}});
            b.emit({Verb::Pick, {obj}});
            b.emit({Verb::PlaceOn, {obj, first_surface(b.state)}});
            b.close_if_open(*micro);
        }
        return b.steps;
    }

    if (lc.rfind("put ", 0) == 0) {
        std::string last_dest;
        bool close_dest = false;
        for (const auto& raw : split_on(lc, " and ")) {
            std::string clause = raw;
            if (clause.rfind("put ", 0) == 0) clause = clause.substr(4);
            if (clause == "close it") {
                close_dest = true;
                continue;
            }
            size_t in_pos = clause.rfind(" in ");
            size_t on_pos = clause.rfind(" on ");
            size_t sep = std::string::npos;
            size_t sep_len = 4;
            if (in_pos != std::string::npos) sep = in_pos;
            if (on_pos != std::string::npos && (sep == std::string::npos || on_pos > sep))
                sep = on_pos;
            if (sep == std::string::npos) return {};
            auto dest = resolve_entity(g0, clause.substr(sep + sep_len));
            if (!dest) return {};
            for (const auto& obj : resolve_objects(g0, clause.substr(0, sep)))
                b.transfer(obj, *dest);
            last_dest = *dest;
        }
        if (close_dest && !last_dest.empty()) b.close_if_open(last_dest);
        return b.steps;
    }

    return {};
}

namespace {

std::map<std::string, std::string> classes_of(const SceneGraph& g) {
    std::map<std::string, std::string> out;
    for (const auto& n : g.nodes) out[n.id] = n.class_label;
    return out;
}

bool has_edge(const SceneGraph& g, const std::string& subject, Relation rel) {
    for (const auto& e : g.edges)
        if (e.subject == subject && e.relation == rel) return true;
    return false;
}

std::optional<RelationEdge> gained_edge(const SceneGraph& before, const SceneGraph& after,
                                        Relation rel) {
    for (const auto& e : after.edges) {
        if (e.relation != rel) continue;
        if (rel != Relation::Held && after.find_node(e.object) &&
            after.find_node(e.object)->class_label == "hand")
            continue;
        if (std::find(before.edges.begin(), before.edges.end(), e) == before.edges.end())
            return e;
    }
    return std::nullopt;
}

std::string describe_transition(const SceneGraph& before, const SceneGraph& after) {
    if (auto held = gained_edge(before, after, Relation::Held))
        return "Pick up the " + held->subject + ".";
    if (auto in = gained_edge(before, after, Relation::In)) {
        if (in->object == "human zone")
            return "Give the " + in->subject + " to the human.";
        return "Put the " + in->subject + " in the " + in->object + ".";
    }
    if (auto on = gained_edge(before, after, Relation::On))
        return "Put the " + on->subject + " on the " + on->object + ".";
    for (const auto& n : after.nodes) {
        const SceneNode* prev = before.find_node(n.id);
        if (!prev || !prev->state || !n.state || *prev->state == *n.state) continue;
        if (*n.state == "open") return "Open the " + n.id + ".";
        if (*n.state == "closed") return "Close the " + n.id + ".";
    }
    return "";
}

// "desc;\n<3 graph lines>" items from a numbered block
struct DescribedGraph {
    std::string description;
    SceneGraph graph;
};

std::vector<DescribedGraph> parse_action_graph_list(const std::string& text) {
    std::vector<std::string> lines;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);

    std::vector<DescribedGraph> out;
    for (size_t i = 0; i < lines.size(); ++i) {
        const std::string t = strip(lines[i]);
        size_t dot = t.find(". ");
        if (dot == std::string::npos || dot == 0 ||
            t.find_first_not_of("0123456789") != dot)
            continue;
        if (i + 3 >= lines.size()) continue;
        DescribedGraph dg;
        dg.description = strip(t.substr(dot + 2));
        while (!dg.description.empty() &&
               (dg.description.back() == ';' || dg.description.back() == ':'))
            dg.description.pop_back();
        dg.graph = parse_graph_text(lines[i + 1] + "\n" + lines[i + 2] + "\n" + lines[i + 3]);
        out.push_back(std::move(dg));
        i += 3;
    }
    return out;
}

std::string answer_action_extract(const std::map<std::string, std::string>& p) {
    const SceneGraph before = parse_graph_text(p.at("first_graph"));
    const SceneGraph after = parse_graph_text(p.at("second_graph"));
    return describe_transition(before, after);
}

std::string answer_pattern_distill(const std::map<std::string, std::string>& p) {
    const SceneGraph initial = parse_graph_text(p.at("initial_graph"));
    const auto items = parse_action_graph_list(p.at("action_graph_list"));
    if (items.empty()) return "";

    // reconstruct canonical steps from the descriptions
    std::vector<ActionStep> steps;
    std::map<std::string, int> touched;
    for (const auto& item : items) {
        SceneGraph scope = initial;
        for (const auto& n : item.graph.nodes)
            if (!scope.has_node(n.id)) scope.nodes.push_back(n);
        scope.normalize();
        auto step = parse_action_sentence(item.description, scope);
        if (!step) return "";
        for (const auto& arg : step->args) ++touched[arg];
        steps.push_back(*step);
    }

    // task text: the sequence of placements, plus a trailing close
    std::vector<std::string> clauses;
    std::map<std::string, std::string> moved_to; // object -> final destination
    std::map<std::string, std::vector<std::string>> contains; // container -> classes
    for (const auto& s : steps) {
        if (s.verb == Verb::PlaceIn || s.verb == Verb::PlaceOn) {
            clauses.push_back("put the " + s.args[0] + (s.verb == Verb::PlaceIn ? " in the " : " on the ") + s.args[1]);
            moved_to[s.args[0]] = s.args[1];
            if (s.verb == Verb::PlaceIn) {
                auto& list = contains[s.args[1]];
                const std::string cls = class_of_name(s.args[0]);
                if (std::find(list.begin(), list.end(), cls) == list.end())
                    list.push_back(cls);
            }
        } else if (s.verb == Verb::Give) {
            clauses.push_back("give the " + s.args[0] + " to the human");
            moved_to[s.args[0]] = "human zone";
        }
    }
    std::string task;
    for (size_t i = 0; i < clauses.size(); ++i) {
        if (i) task += " and ";
        task += clauses[i];
    }
    if (!steps.empty() && steps.back().verb == Verb::Close) task += " and close it";
    if (task.empty()) return "";
    task[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(task[0])));
    task += ".";

    std::vector<std::string> out_items{task};
    for (const auto& [id, n] : touched) {
        if (n < 2) continue;
        if (moved_to.count(id)) {
            const auto& dest = moved_to[id];
            const bool surface = default_surface_classes().count(class_of_name(dest)) > 0;
            out_items.push_back(id + ": The " + id +
                                (surface ? " tends to be placed on the "
                                         : " tends to be stored in the ") +
                                dest + ".");
        } else if (contains.count(id) && !contains[id].empty()) {
            std::string what;
            for (size_t i = 0; i < contains[id].size(); ++i) {
                if (i) what += " and ";
                what += contains[id][i];
            }
            out_items.push_back(id + ": The " + id + " tends to contain " + what + ".");
        } else {
            out_items.push_back(id + ": The " + id + " tends to stay closed.");
        }
    }
    return render_numbered(out_items);
}

const std::set<std::string>& retrieval_vocabulary() {
    static const std::set<std::string> vocab{
        "pen",    "eraser",  "cookie",      "cake",   "chips", "drawer",
        "apple",  "banana",  "sandwich",    "fridge", "microwave", "plate",
        "screwdriver", "tape", "pincers",   "box",    "drink",
    };
    return vocab;
}

std::set<std::string> content_words(const std::string& text) {
    std::set<std::string> out;
    std::string word;
    auto flush = [&] {
        if (word.empty()) return;
        auto cat = category_classes().find(word);
        if (cat != category_classes().end()) {
            for (const auto& c : cat->second)
                if (retrieval_vocabulary().count(c)) out.insert(c);
        } else {
            std::string w = word;
            if (!retrieval_vocabulary().count(w) && w.size() > 1 && w.back() == 's')
                w.pop_back();
            if (retrieval_vocabulary().count(w)) out.insert(w);
        }
        word.clear();
    };
    for (char c : lower(text)) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            word += c;
        else
            flush();
    }
    flush();
    return out;
}

std::string answer_task_retrieve(const std::map<std::string, std::string>& p) {
    const std::set<std::string> wanted = content_words(p.at("instruction"));
    std::vector<int> hits;
    const auto previous = numbered_items(p.at("previous_tasks"));
    for (size_t i = 0; i < previous.size(); ++i) {
        const std::set<std::string> have = content_words(previous[i]);
        bool shared = false;
        for (const auto& w : wanted) shared = shared || have.count(w) > 0;
        if (shared) hits.push_back(static_cast<int>(i + 1));
    }
    if (hits.empty()) return "1: No.";
    std::string list;
    for (size_t i = 0; i < hits.size(); ++i) {
        if (i) list += ", ";
        list += std::to_string(hits[i]);
    }
    return "1: Yes, 2: [" + list + "]";
}

std::string answer_plan(const std::map<std::string, std::string>& p) {
    const SceneGraph g0 = parse_graph_text(p.at("initial_graph"));
    const HomeMap homes = parse_homes(p.at("pattern_knowledge"));
    const auto steps = rule_based_plan(p.at("instruction"), g0, homes);
    if (steps.empty()) return "";
    std::vector<std::string> sentences;
    for (const auto& s : steps) sentences.push_back(step_sentence(s));
    return render_numbered(sentences);
}

std::string answer_plan_consistency(const std::map<std::string, std::string>& p) {
    const HomeMap homes = parse_homes(p.at("pattern_knowledge"));
    const std::string instruction = lower(p.at("instruction"));
    for (const auto& action : numbered_items(p.at("planned_actions"))) {
        // resolution-free scan: "Put the X in the Y."
        std::string lc = lower(action);
        while (!lc.empty() && lc.back() == '.') lc.pop_back();
        if (lc.rfind("put the ", 0) != 0) continue;
        // Only container placements are policed; surface placements are
        // legitimate intermediate steps (e.g. setting a heated item down).
        size_t sep = lc.rfind(" in the ");
        size_t sep_len = 8;
        if (sep == std::string::npos) continue;
        const std::string obj = lc.substr(8, sep - 8);
        const std::string dest = lc.substr(sep + sep_len);
        auto home = homes.find(class_of_name(obj));
        if (home == homes.end()) continue;
        if (lower(home->second) == dest) continue;
        if (instruction.find(dest) != std::string::npos) continue;
        return "1: No. 2: Explanation: The " + obj + " should be in the " +
               lower(home->second) + ", not in the " + dest + ".";
    }
    return "1: Yes.";
}

std::string answer_plan_precondition(const std::map<std::string, std::string>& p) {
    const SceneGraph g0 = parse_graph_text(p.at("initial_graph"));
    SymbolicState state = state_from_graph(g0, default_surface_classes());
    const auto classes = classes_of(g0);

    std::vector<ActionStep> steps;
    for (const auto& action : numbered_items(p.at("planned_actions"))) {
        auto step = parse_action_sentence(action, g0);
        if (!step) return "";
        steps.push_back(*step);
    }

    std::ostringstream out;
    out << "Inferred preceding scene graphs:\n";
    std::optional<int> violated_at;
    std::string explanation;
    for (size_t i = 0; i < steps.size(); ++i) {
        out << (i + 1) << ".\n" << serialize_text(state_to_graph(state, classes)) << "\n\n";
        if (violated_at) continue;
        if (auto kind = check_precondition(state, steps[i])) {
            violated_at = static_cast<int>(i + 1);
            if (*kind == PreconditionKind::GripperOccupied &&
                steps[i].verb == Verb::Close) {
                const std::string held = state.held_object().value_or("object");
                explanation = "Action " + std::to_string(*violated_at) +
                              ": You should first place the " + held +
                              " and then close the " + steps[i].args[0] + ".";
            } else if (*kind == PreconditionKind::ContainerClosed) {
                std::string container = steps[i].args.back();
                if (steps[i].verb == Verb::Pick) {
                    auto it = state.object_location.find(steps[i].args[0]);
                    if (it != state.object_location.end())
                        if (const auto* c = std::get_if<InContainer>(&it->second))
                            container = c->container;
                }
                explanation = "Action " + std::to_string(*violated_at) + ": The " +
                              container + " is closed, so " + step_text(steps[i]) +
                              " cannot be executed. You should first open the " +
                              container + ".";
            } else {
                explanation = "Action " + std::to_string(*violated_at) + ": " +
                              precondition_text(*kind, steps[i]);
            }
            continue;
        }
        apply_transition(state, steps[i]);
    }
    if (violated_at)
        out << "A: 2: No. 3: Explanation: " << explanation;
    else
        out << "A: 2: Yes.";
    return out.str();
}

std::string answer_plan_revise(const std::map<std::string, std::string>& p) {
    std::vector<std::string> actions = numbered_items(p.at("planned_actions"));
    const std::string why = p.at("failure_explanations");
    const std::string why_lc = lower(why);

    auto renumber = [&] {
        std::vector<std::string> out = actions;
        return render_numbered(out);
    };

    size_t reorder = why_lc.find("first place the ");
    if (reorder != std::string::npos) {
        size_t and_pos = why_lc.find(" and then close the ", reorder);
        if (and_pos != std::string::npos) {
            std::string obj = strip(why_lc.substr(reorder + 16, and_pos - reorder - 16));
            std::string container = strip(why_lc.substr(and_pos + 20));
            while (!container.empty() && container.back() == '.') container.pop_back();
            int close_idx = -1, place_idx = -1;
            for (size_t i = 0; i < actions.size(); ++i) {
                const std::string lc = lower(actions[i]);
                if (lc.rfind("close the " + container, 0) == 0) close_idx = (int)i;
                if (lc.rfind("put the " + obj, 0) == 0 ||
                    lc.rfind("place the " + obj, 0) == 0)
                    place_idx = (int)i;
            }
            if (close_idx >= 0 && place_idx > close_idx) {
                std::string close_action = actions[(size_t)close_idx];
                actions.erase(actions.begin() + close_idx);
                actions.insert(actions.begin() + place_idx, close_action);
                return renumber();
            }
        }
    }

    size_t open_fix = why.find("You should first open the ");
    if (open_fix != std::string::npos) {
        std::string container = strip(why.substr(open_fix + 26));
        size_t stop = container.find_first_of(".\n");
        if (stop != std::string::npos) container = container.substr(0, stop);
        int at = 0;
        size_t act_pos = why.find("Action ");
        if (act_pos != std::string::npos)
            at = std::atoi(why.c_str() + act_pos + 7) - 1;
        if (at < 0 || at > static_cast<int>(actions.size())) at = 0;
        actions.insert(actions.begin() + at, "Open the " + container + ".");
        return renumber();
    }

    size_t retarget = why.find(" should be in the ");
    if (retarget != std::string::npos) {
        size_t not_pos = why.find(", not in the ", retarget);
        if (not_pos != std::string::npos) {
            std::string good = strip(why.substr(retarget + 18, not_pos - retarget - 18));
            std::string bad = strip(why.substr(not_pos + 13));
            while (!bad.empty() && bad.back() == '.') bad.pop_back();
            for (auto& a : actions) {
                size_t pos = lower(a).find(" in the " + lower(bad));
                if (pos != std::string::npos)
                    a = a.substr(0, pos) + " in the " + good +
                        a.substr(pos + 8 + bad.size());
            }
            return renumber();
        }
    }

    return renumber();
}

std::string answer_execution_check(const std::map<std::string, std::string>& p) {
    const SceneGraph g = parse_graph_text(p.at("resulting_graph"));
    std::string sentence = strip(p.at("executed_action"));

    std::vector<std::string> ids;
    for (const auto& n : g.nodes) ids.push_back(n.id);
    auto step = parse_action_sentence(sentence, ids);
    if (!step) return "";

    auto node_state = [&](const std::string& id) -> std::optional<std::string> {
        const SceneNode* n = g.find_node(id);
        return n ? n->state : std::nullopt;
    };
    auto in_edge = [&](const std::string& subject, const std::string& object) {
        for (const auto& e : g.edges)
            if (e.subject == subject && e.relation == Relation::In && e.object == object)
                return true;
        return false;
    };
    auto on_edge = [&](const std::string& subject, const std::string& object) {
        for (const auto& e : g.edges)
            if (e.subject == subject && e.relation == Relation::On && e.object == object)
                return true;
        return false;
    };

    bool ok = false;
    std::string explanation;
    std::vector<std::string> correction;
    const std::string obj = step->args[0];
    switch (step->verb) {
        case Verb::Pick:
            ok = has_edge(g, obj, Relation::Held);
            explanation = "Failed to successfully grasp the " + obj;
            correction = {step_sentence(*step)};
            break;
        case Verb::PlaceIn:
        case Verb::PlaceOn:
            ok = step->verb == Verb::PlaceIn ? in_edge(obj, step->args[1])
                                             : on_edge(obj, step->args[1]);
            explanation = "Failed to place the " + obj + " correctly";
            if (has_edge(g, obj, Relation::Held))
                correction = {step_sentence(*step)};
            else
                correction = {step_sentence({Verb::Pick, {obj}}), step_sentence(*step)};
            break;
        case Verb::Open:
            ok = node_state(obj) == std::optional<std::string>("open");
            explanation = "Failed to open the " + obj;
            correction = {step_sentence(*step)};
            break;
        case Verb::Close:
            ok = node_state(obj) == std::optional<std::string>("closed");
            explanation = "Failed to close the " + obj;
            correction = {step_sentence(*step)};
            break;
        case Verb::Give:
            ok = in_edge(obj, "human zone");
            explanation = "Failed to hand over the " + obj;
            correction = {step_sentence(*step)};
            break;
    }
    if (ok) return "1. Yes.";
    std::string plan;
    for (size_t i = 0; i < correction.size(); ++i) {
        if (i) plan += "; ";
        plan += std::to_string(i + 1) + ". " + correction[i];
    }
    return "1. No. 2. Explanation: " + explanation + ". Correction plan: " + plan;
}

} // namespace

std::optional<std::string> oracle_response(
    const std::string& template_id,
    const std::map<std::string, std::string>& placeholders) {
    try {
        std::string answer;
        if (template_id == "action_extract") answer = answer_action_extract(placeholders);
        else if (template_id == "pattern_distill") answer = answer_pattern_distill(placeholders);
        else if (template_id == "task_retrieve") answer = answer_task_retrieve(placeholders);
        else if (template_id == "plan") answer = answer_plan(placeholders);
        else if (template_id == "plan_consistency") answer = answer_plan_consistency(placeholders);
        else if (template_id == "plan_precondition") answer = answer_plan_precondition(placeholders);
        else if (template_id == "plan_revise") answer = answer_plan_revise(placeholders);
        else if (template_id == "execution_check") answer = answer_execution_check(placeholders);
        else return std::nullopt;
        if (answer.empty()) return std::nullopt;
        return answer;
    } catch (const Error&) {
        return std::nullopt;
    }
}

std::shared_ptr<ScriptedClient> make_scripted_client() {
    auto client = std::make_shared<ScriptedClient>();
    client->set_fallback(oracle_response);
    return client;
}

} // namespace digknow
