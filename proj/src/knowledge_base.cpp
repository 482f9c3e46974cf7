#include "digknow/knowledge_base.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <nlohmann/json.hpp>

#include "digknow/errors.hpp"

namespace fs = std::filesystem;

namespace digknow {

namespace {

nlohmann::json step_json(const std::optional<ActionStep>& step) {
    if (!step) return nullptr;
    return step_text(*step);
}

std::optional<ActionStep> step_from(const nlohmann::json& j) {
    if (j.is_null()) return std::nullopt;
    return step_from_text(j.get<std::string>());
}

nlohmann::json record_to_json(const ActionRecord& r) {
    return nlohmann::json{
        {"index", r.index},
        {"description", r.description},
        {"step", step_json(r.step)},
        {"preceding_graph", graph_to_json(r.preceding_graph)},
        {"resulting_graph", graph_to_json(r.resulting_graph)},
    };
}

ActionRecord record_from_json(const nlohmann::json& j) {
    ActionRecord r;
    r.index = j.at("index").get<int>();
    r.description = j.at("description").get<std::string>();
    r.step = step_from(j.at("step"));
    r.preceding_graph = graph_from_json(j.at("preceding_graph"));
    r.resulting_graph = graph_from_json(j.at("resulting_graph"));
    return r;
}

nlohmann::json pattern_to_json(const ObjectPattern& p) {
    nlohmann::json j{{"object_class", p.object_class}};
    j["text"] = p.text ? nlohmann::json(*p.text) : nlohmann::json(nullptr);
    j["graph_snippet"] =
        p.graph_snippet ? graph_to_json(*p.graph_snippet) : nlohmann::json(nullptr);
    return j;
}

ObjectPattern pattern_from_json(const nlohmann::json& j) {
    ObjectPattern p;
    p.object_class = j.at("object_class").get<std::string>();
    if (!j.at("text").is_null()) p.text = j.at("text").get<std::string>();
    if (!j.at("graph_snippet").is_null())
        p.graph_snippet = graph_from_json(j.at("graph_snippet"));
    return p;
}

// Canonical serialization keeps stored files byte-stable across round trips.
void write_json_atomic(const fs::path& path, const nlohmann::json& j) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + tmp.string());
        out << j.dump(2) << '\n';
    }
    fs::rename(tmp, path);
}

nlohmann::json read_json(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return nlohmann::json::parse(in);
}

// Exclusive advisory lock held for the duration of a store().
class ScopedFileLock {
public:
    explicit ScopedFileLock(const fs::path& path) {
        fd_ = ::open(path.c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0 || ::flock(fd_, LOCK_EX) != 0)
            throw Error("cannot lock " + path.string());
    }
    ~ScopedFileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    ScopedFileLock(const ScopedFileLock&) = delete;
    ScopedFileLock& operator=(const ScopedFileLock&) = delete;

private:
    int fd_ = -1;
};

} // namespace

nlohmann::json entry_to_json(const KnowledgeEntry& e) {
    nlohmann::json graphs = nlohmann::json::array();
    for (const auto& g : e.keyframe_graphs) graphs.push_back(graph_to_json(g));
    nlohmann::json records = nlohmann::json::array();
    for (const auto& r : e.action_records) records.push_back(record_to_json(r));
    nlohmann::json patterns = nlohmann::json::array();
    for (const auto& p : e.object_patterns) patterns.push_back(pattern_to_json(p));
    return nlohmann::json{
        {"entry_id", e.entry_id},
        {"text_key", e.text_key},
        {"visual_key", e.visual_key},
        {"keyframe_graphs", graphs},
        {"action_records", records},
        {"task_pattern", e.task_pattern.text},
        {"object_patterns", patterns},
    };
}

KnowledgeEntry entry_from_json(const nlohmann::json& j) {
    KnowledgeEntry e;
    e.entry_id = j.at("entry_id").get<std::string>();
    e.text_key = j.at("text_key").get<std::string>();
    e.visual_key = j.at("visual_key").get<std::vector<double>>();
    for (const auto& g : j.at("keyframe_graphs")) e.keyframe_graphs.push_back(graph_from_json(g));
    for (const auto& r : j.at("action_records")) e.action_records.push_back(record_from_json(r));
    e.task_pattern.text = j.at("task_pattern").get<std::string>();
    for (const auto& p : j.at("object_patterns")) e.object_patterns.push_back(pattern_from_json(p));
    return e;
}

BagOfClassesEmbedder::BagOfClassesEmbedder(std::vector<std::string> vocabulary)
    : vocabulary_(std::move(vocabulary)) {}

std::vector<double> BagOfClassesEmbedder::embed(const FrameObservation& frame) const {
    std::vector<double> v(vocabulary_.size(), 0.0);
    for (const auto& obj : frame.objects) {
        auto it = std::find(vocabulary_.begin(), vocabulary_.end(), obj.class_label);
        if (it != vocabulary_.end()) v[static_cast<size_t>(it - vocabulary_.begin())] += 1.0;
    }
    double norm = 0.0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm > 0.0)
        for (double& x : v) x /= norm;
    return v;
}

std::vector<std::string> BagOfClassesEmbedder::default_vocabulary() {
    return {
        "apple",  "banana", "basket",  "box",     "cake",        "chips",
        "clock",  "cookie", "cup",     "drawer",  "drink",       "eraser",
        "fridge", "hammer", "kettle",  "lamp",    "microwave",   "pen",
        "pincers", "plate", "sandwich", "screwdriver", "shelf",  "table",
        "tape",   "wrench",
    };
}

double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size())
        throw DimensionMismatch("cosine similarity on vectors of different dimension");
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

KnowledgeBase KnowledgeBase::create(const std::string& dir, int dimension,
                                    const nlohmann::json& embedder_config) {
    if (dimension <= 0) throw DimensionMismatch("knowledge base dimension must be positive");
    fs::create_directories(fs::path(dir) / "entries");
    KnowledgeBase kb;
    kb.dir_ = dir;
    kb.dimension_ = dimension;
    kb.embedder_config_ = std::make_shared<nlohmann::json>(embedder_config);
    kb.write_manifest();
    return kb;
}

KnowledgeBase KnowledgeBase::open(const std::string& dir) {
    const nlohmann::json m = read_json(fs::path(dir) / "manifest.json");
    KnowledgeBase kb;
    kb.dir_ = dir;
    kb.dimension_ = m.at("dimension").get<int>();
    kb.embedder_config_ = std::make_shared<nlohmann::json>(m.at("embedder"));
    kb.order_ = m.at("entries").get<std::vector<std::string>>();
    return kb;
}

const nlohmann::json& KnowledgeBase::embedder_config() const { return *embedder_config_; }

void KnowledgeBase::write_manifest() const {
    write_json_atomic(fs::path(dir_) / "manifest.json",
                      nlohmann::json{{"dimension", dimension_},
                                     {"embedder", *embedder_config_},
                                     {"entries", order_}});
}

std::string KnowledgeBase::store(const KnowledgeEntry& entry) {
    if (entry.entry_id.empty()) throw Error("entry id must not be empty");
    if (static_cast<int>(entry.visual_key.size()) != dimension_)
        throw DimensionMismatch("visual key has dimension " +
                                std::to_string(entry.visual_key.size()) + ", expected " +
                                std::to_string(dimension_));

    ScopedFileLock lock(fs::path(dir_) / ".lock");
    // re-read under the lock so concurrent writers append consistently
    const nlohmann::json m = read_json(fs::path(dir_) / "manifest.json");
    order_ = m.at("entries").get<std::vector<std::string>>();
    if (std::find(order_.begin(), order_.end(), entry.entry_id) != order_.end())
        throw DuplicateId("entry '" + entry.entry_id + "' already stored");

    write_json_atomic(fs::path(dir_) / "entries" / (entry.entry_id + ".json"),
                      entry_to_json(entry));
    order_.push_back(entry.entry_id);
    write_manifest();
    return entry.entry_id;
}

KnowledgeEntry KnowledgeBase::load(const std::string& entry_id) const {
    return entry_from_json(read_json(fs::path(dir_) / "entries" / (entry_id + ".json")));
}

std::vector<KnowledgeEntry> KnowledgeBase::load_all() const {
    std::vector<KnowledgeEntry> out;
    out.reserve(order_.size());
    for (const auto& id : order_) out.push_back(load(id));
    return out;
}

std::vector<TaskPattern> retrieve_task_knowledge(const KnowledgeBase& base,
                                                 const std::string& instruction,
                                                 ChatClient& gateway) {
    if (base.empty()) return {};

    std::vector<std::string> keys;
    std::vector<KnowledgeEntry> entries = base.load_all();
    for (const auto& e : entries) keys.push_back(e.text_key);

    const std::string response = gateway.complete(
        "task_retrieve",
        {{"instruction", instruction}, {"previous_tasks", render_numbered(keys)}});
    auto [relevant, indices] = parse_yes_no_indices(response);
    if (!relevant) return {};

    std::vector<TaskPattern> out;
    std::set<int> seen;
    for (int idx : indices) {
        if (idx < 1 || idx > static_cast<int>(entries.size())) {
            std::cerr << "warning: dropping out-of-range retrieval index " << idx << "\n";
            continue;
        }
        if (!seen.insert(idx).second) continue;
        out.push_back(entries[static_cast<size_t>(idx - 1)].task_pattern);
    }
    return out;
}

std::vector<std::string> rank_entries_by_similarity(const KnowledgeBase& base,
                                                    const std::vector<double>& query) {
    std::vector<std::pair<double, size_t>> scored;
    const auto& ids = base.list();
    for (size_t i = 0; i < ids.size(); ++i)
        scored.emplace_back(cosine_similarity(query, base.load(ids[i]).visual_key), i);
    std::stable_sort(scored.begin(), scored.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<std::string> out;
    for (const auto& [sim, i] : scored) out.push_back(ids[i]);
    return out;
}

std::vector<ObjectPattern> retrieve_object_knowledge(
    const KnowledgeBase& base, const FrameObservation& current_frame,
    const std::set<std::string>& detected_classes, const Embedder& embedder, int n) {
    if (base.empty() || n <= 0) return {};
    const std::vector<double> query = embedder.embed(current_frame);
    const std::vector<std::string> ranked = rank_entries_by_similarity(base, query);

    std::vector<ObjectPattern> out;
    const size_t take = std::min(ranked.size(), static_cast<size_t>(n));
    for (size_t i = 0; i < take; ++i) {
        const KnowledgeEntry e = base.load(ranked[i]);
        for (const auto& p : e.object_patterns)
            if (detected_classes.count(p.object_class)) out.push_back(p);
    }
    return out;
}

} // namespace digknow
