#pragma once

#include <memory>
#include <string>
#include <vector>

#include "digknow/distiller.hpp"

#include <nlohmann/json_fwd.hpp>

namespace digknow {

// One distilled demonstration, keyed by its task-pattern text and a scene
// embedding vector.
struct KnowledgeEntry {
    std::string entry_id;
    std::string text_key;
    std::vector<double> visual_key;
    std::vector<SceneGraph> keyframe_graphs;
    std::vector<ActionRecord> action_records;
    TaskPattern task_pattern;
    std::vector<ObjectPattern> object_patterns;
};

nlohmann::json entry_to_json(const KnowledgeEntry& e);
KnowledgeEntry entry_from_json(const nlohmann::json& j);

class Embedder {
public:
    virtual ~Embedder() = default;
    virtual int dimension() const = 0;
    virtual std::vector<double> embed(const FrameObservation& frame) const = 0;
};

// Test/default embedder: one slot per class in a fixed vocabulary, value =
// instance count, L2-normalized.
class BagOfClassesEmbedder : public Embedder {
public:
    explicit BagOfClassesEmbedder(std::vector<std::string> vocabulary);

    int dimension() const override { return static_cast<int>(vocabulary_.size()); }
    std::vector<double> embed(const FrameObservation& frame) const override;
    const std::vector<std::string>& vocabulary() const { return vocabulary_; }

    static std::vector<std::string> default_vocabulary();

private:
    std::vector<std::string> vocabulary_;
};

// Zero vectors compare with similarity 0 by convention.
double cosine_similarity(const std::vector<double>& a, const std::vector<double>& b);

// Directory-backed store: manifest.json (dimension, embedder, insertion
// order) plus entries/<entry_id>.json. Writers take an exclusive file lock;
// entries land via write-to-temp + atomic rename.
class KnowledgeBase {
public:
    static KnowledgeBase create(const std::string& dir, int dimension,
                                const nlohmann::json& embedder_config);
    static KnowledgeBase open(const std::string& dir);

    const std::string& dir() const { return dir_; }
    int dimension() const { return dimension_; }
    const nlohmann::json& embedder_config() const;
    const std::vector<std::string>& list() const { return order_; }
    bool empty() const { return order_.empty(); }

    std::string store(const KnowledgeEntry& entry);
    KnowledgeEntry load(const std::string& entry_id) const;
    std::vector<KnowledgeEntry> load_all() const;

private:
    KnowledgeBase() = default;
    void write_manifest() const;

    std::string dir_;
    int dimension_ = 0;
    std::shared_ptr<nlohmann::json> embedder_config_;
    std::vector<std::string> order_;
};

std::vector<TaskPattern> retrieve_task_knowledge(const KnowledgeBase& base,
                                                 const std::string& instruction,
                                                 ChatClient& gateway);

// Top-n entries by cosine similarity between the embedded frame and the
// stored visual keys (ties broken by insertion order), with their object
// patterns filtered to the detected classes.
std::vector<ObjectPattern> retrieve_object_knowledge(
    const KnowledgeBase& base, const FrameObservation& current_frame,
    const std::set<std::string>& detected_classes, const Embedder& embedder, int n);

// Ranking helper exposed for tests: entry ids sorted by descending similarity.
std::vector<std::string> rank_entries_by_similarity(const KnowledgeBase& base,
                                                    const std::vector<double>& query);

} // namespace digknow
