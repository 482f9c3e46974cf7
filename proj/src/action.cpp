#include "digknow/action.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "digknow/errors.hpp"

namespace digknow {

namespace {

std::string lower(const std::string& s) {
    std::string out = s;
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

bool word_boundary(const std::string& s, size_t pos, size_t len) {
    auto alnum = [](char c) { return std::isalnum(static_cast<unsigned char>(c)); };
    if (pos > 0 && alnum(s[pos - 1])) return false;
    if (pos + len < s.size() && alnum(s[pos + len])) return false;
    return true;
}

} // namespace

std::string verb_name(Verb v) {
    switch (v) {
        case Verb::Pick: return "pick";
        case Verb::PlaceIn: return "place_in";
        case Verb::PlaceOn: return "place_on";
        case Verb::Open: return "open";
        case Verb::Close: return "close";
        case Verb::Give: return "give";
    }
    return "?";
}

std::optional<Verb> verb_from_name(const std::string& name) {
    for (Verb v : {Verb::Pick, Verb::PlaceIn, Verb::PlaceOn, Verb::Open, Verb::Close,
                   Verb::Give})
        if (name == verb_name(v)) return v;
    return std::nullopt;
}

int verb_arity(Verb v) {
    return (v == Verb::PlaceIn || v == Verb::PlaceOn) ? 2 : 1;
}

std::string step_text(const ActionStep& s) {
    std::string out = verb_name(s.verb) + "(";
    for (size_t i = 0; i < s.args.size(); ++i) {
        if (i) out += ", ";
        out += s.args[i];
    }
    return out + ")";
}

std::optional<ActionStep> step_from_text(const std::string& text) {
    const size_t open = text.find('(');
    if (open == std::string::npos || text.back() != ')') return std::nullopt;
    auto verb = verb_from_name(text.substr(0, open));
    if (!verb) return std::nullopt;
    ActionStep s;
    s.verb = *verb;
    std::string args = text.substr(open + 1, text.size() - open - 2);
    size_t pos = 0;
    while (!args.empty()) {
        size_t comma = args.find(", ", pos);
        if (comma == std::string::npos) {
            s.args.push_back(args.substr(pos));
            break;
        }
        s.args.push_back(args.substr(pos, comma - pos));
        pos = comma + 2;
    }
    if (static_cast<int>(s.args.size()) != verb_arity(s.verb)) return std::nullopt;
    return s;
}

std::string step_sentence(const ActionStep& s) {
    switch (s.verb) {
        case Verb::Pick: return "Pick up the " + s.args[0] + ".";
        case Verb::PlaceIn: return "Put the " + s.args[0] + " in the " + s.args[1] + ".";
        case Verb::PlaceOn: return "Put the " + s.args[0] + " on the " + s.args[1] + ".";
        case Verb::Open: return "Open the " + s.args[0] + ".";
        case Verb::Close: return "Close the " + s.args[0] + ".";
        case Verb::Give: return "Give the " + s.args[0] + " to the human.";
    }
    return "";
}

namespace {

struct Mention {
    size_t pos = 0;
    size_t len = 0;
    std::vector<std::string> candidate_ids; // >1 means ambiguous class mention
};

std::vector<Mention> find_mentions(const std::string& sentence_lc,
                                   const std::vector<std::string>& ids,
                                   const SceneGraph* graph) {
    // vocabulary: every id, plus every class label shared by ids
    std::map<std::string, std::vector<std::string>> vocab;
    for (const auto& id : ids) vocab[lower(id)].push_back(id);
    for (const auto& id : ids) {
        const std::string cls = lower(class_of_name(id));
        if (!vocab.count(cls)) {}
        if (cls != lower(id)) vocab[cls].push_back(id);
    }

    std::vector<std::pair<std::string, std::vector<std::string>>> entries(vocab.begin(),
                                                                          vocab.end());
    std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
        return a.first.size() > b.first.size();
    });

    std::vector<bool> taken(sentence_lc.size(), false);
    std::vector<Mention> mentions;
    for (const auto& [name, cids] : entries) {
        size_t from = 0;
        while (true) {
            size_t pos = sentence_lc.find(name, from);
            if (pos == std::string::npos) break;
            from = pos + 1;
            if (!word_boundary(sentence_lc, pos, name.size())) continue;
            bool overlap = false;
            for (size_t i = pos; i < pos + name.size(); ++i) overlap = overlap || taken[i];
            if (overlap) continue;
            for (size_t i = pos; i < pos + name.size(); ++i) taken[i] = true;
            mentions.push_back({pos, name.size(), cids});
        }
    }
    std::sort(mentions.begin(), mentions.end(),
              [](const Mention& a, const Mention& b) { return a.pos < b.pos; });
    (void)graph;
    return mentions;
}

std::string resolve_mention(const Mention& m, const std::string& sentence_lc,
                            const SceneGraph* graph) {
    if (m.candidate_ids.size() == 1) return m.candidate_ids[0];

    // Ambiguous class mention: look for a spatial qualifier in the sentence
    // and match it against ids or directional edges between the candidates.
    static const std::vector<std::pair<std::string, Relation>> quals{
        {"right", Relation::RightOf},
        {"left", Relation::LeftOf},
        {"front", Relation::InFrontOf},
        {"back", Relation::Behind},
    };
    for (const auto& [word, rel] : quals) {
        if (sentence_lc.find(word) == std::string::npos) continue;
        for (const auto& id : m.candidate_ids)
            if (lower(id).find(word) != std::string::npos) return id;
        if (graph) {
            for (const auto& id : m.candidate_ids) {
                for (const auto& other : m.candidate_ids) {
                    if (other == id) continue;
                    for (const auto& e : graph->edges) {
                        if (e.subject == id && e.object == other && e.relation == rel)
                            return id;
                    }
                }
            }
        }
    }
    throw UnresolvableObject("ambiguous object mention in sentence");
}

std::optional<ActionStep> parse_impl(const std::string& sentence,
                                     const std::vector<std::string>& ids,
                                     const SceneGraph* graph) {
    const std::string lc = lower(sentence);
    const auto mentions = find_mentions(lc, ids, graph);

    auto mention_at_or_after = [&](size_t pos) -> const Mention* {
        for (const auto& m : mentions)
            if (m.pos >= pos) return &m;
        return nullptr;
    };
    auto first_mention = [&]() -> const Mention* {
        return mentions.empty() ? nullptr : &mentions.front();
    };
    auto require = [&](const Mention* m) -> std::string {
        if (!m) throw UnresolvableObject("no known object named in: " + sentence);
        return resolve_mention(*m, lc, graph);
    };

    auto find_kw = [&](std::initializer_list<const char*> kws) -> size_t {
        for (const char* kw : kws) {
            size_t p = lc.find(kw);
            if (p != std::string::npos) return p;
        }
        return std::string::npos;
    };

    // "open"/"close" only as the leading verb, so the adjective in
    // "the right open drawer" is not mistaken for a command
    if (lc.rfind("open ", 0) == 0)
        return ActionStep{Verb::Open, {require(first_mention())}};
    if (lc.rfind("close ", 0) == 0)
        return ActionStep{Verb::Close, {require(first_mention())}};
    if (find_kw({"pick up", "pick ", "grasp ", "take out"}) != std::string::npos)
        return ActionStep{Verb::Pick, {require(first_mention())}};
    if (find_kw({"give", "hand over", "hand me"}) != std::string::npos)
        return ActionStep{Verb::Give, {require(first_mention())}};

    if (find_kw({"put ", "place ", "move ", "return "}) != std::string::npos) {
        const Mention* obj = first_mention();
        std::string obj_id = require(obj);
        size_t after_obj = obj->pos + obj->len;
        size_t in_pos = std::min(lc.find(" in ", after_obj), lc.find(" into ", after_obj));
        size_t on_pos = std::min(lc.find(" on ", after_obj), lc.find(" onto ", after_obj));
        if (in_pos == std::string::npos && on_pos == std::string::npos)
            return std::nullopt;
        const bool is_in = in_pos < on_pos;
        const size_t prep = is_in ? in_pos : on_pos;
        std::string target = require(mention_at_or_after(prep));
        return ActionStep{is_in ? Verb::PlaceIn : Verb::PlaceOn, {obj_id, target}};
    }
    return std::nullopt;
}

} // namespace

std::optional<ActionStep> parse_action_sentence(const std::string& sentence,
                                                const SceneGraph& g) {
    std::vector<std::string> ids;
    for (const auto& n : g.nodes)
        if (n.class_label != "hand") ids.push_back(n.id);
    return parse_impl(sentence, ids, &g);
}

std::optional<ActionStep> parse_action_sentence(const std::string& sentence,
                                                const std::vector<std::string>& known_ids) {
    return parse_impl(sentence, known_ids, nullptr);
}

std::vector<std::string> plan_texts(const Plan& p) {
    std::vector<std::string> out;
    out.reserve(p.steps.size());
    for (const auto& s : p.steps) out.push_back(step_text(s));
    return out;
}

} // namespace digknow
