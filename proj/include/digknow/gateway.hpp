#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "digknow/scene_graph.hpp"

namespace digknow {

// The eight prompt shapes used by the pipeline.
inline const std::vector<std::string>& template_ids() {
    static const std::vector<std::string> ids{
        "action_extract", "pattern_distill", "task_retrieve",     "plan",
        "plan_consistency", "plan_precondition", "plan_revise",   "execution_check",
    };
    return ids;
}

// Prompt bodies with {name} placeholders. Bodies are plain-text assets so
// wording can be revised without code changes; builtin() carries the same
// defaults compiled in.
class TemplateRegistry {
public:
    static TemplateRegistry builtin();
    static TemplateRegistry load_dir(const std::string& dir);

    const std::string& body(const std::string& template_id) const;
    std::string render(const std::string& template_id,
                       const std::map<std::string, std::string>& placeholders) const;

private:
    std::map<std::string, std::string> bodies_;
};

// 1-based numbered list block: "1. a\n2. b".
std::string render_numbered(const std::vector<std::string>& items);

// Stable digest of sorted placeholder key/value pairs (FNV-1a, hex).
std::string placeholder_digest(const std::map<std::string, std::string>& placeholders);

struct DecodingParams {
    double temperature = 0.0;
    int max_tokens = 1024;
};

class ChatClient {
public:
    virtual ~ChatClient() = default;
    virtual std::string complete(const std::string& template_id,
                                 const std::map<std::string, std::string>& placeholders,
                                 const DecodingParams& params = {}) = 0;
};

// Deterministic backend: canned responses keyed by (template_id, placeholder
// digest), a wildcard response per template, and an optional rule-based
// fallback. A pure function of its inputs.
class ScriptedClient : public ChatClient {
public:
    using Fallback = std::function<std::optional<std::string>(
        const std::string& template_id,
        const std::map<std::string, std::string>& placeholders)>;

    void add_canned(const std::string& template_id,
                    const std::map<std::string, std::string>& placeholders,
                    std::string response);
    void add_wildcard(const std::string& template_id, std::string response);
    void set_fallback(Fallback fb) { fallback_ = std::move(fb); }

    std::string complete(const std::string& template_id,
                         const std::map<std::string, std::string>& placeholders,
                         const DecodingParams& params = {}) override;

private:
    std::map<std::pair<std::string, std::string>, std::string> canned_;
    std::map<std::string, std::string> wildcards_;
    Fallback fallback_;
};

struct ReplayRecord {
    std::string template_id;
    std::string prompt;
    std::string response;
    int latency_ms = 0;
};

// Wraps another client and appends every exchange to a JSON-lines log.
class RecordingClient : public ChatClient {
public:
    RecordingClient(std::shared_ptr<ChatClient> inner,
                    std::shared_ptr<const TemplateRegistry> registry,
                    std::string log_path);

    std::string complete(const std::string& template_id,
                         const std::map<std::string, std::string>& placeholders,
                         const DecodingParams& params = {}) override;

private:
    std::shared_ptr<ChatClient> inner_;
    std::shared_ptr<const TemplateRegistry> registry_;
    std::string log_path_;
    std::mutex mutex_;
};

// Serves a recorded session back without network access.
class ReplayClient : public ChatClient {
public:
    ReplayClient(std::shared_ptr<const TemplateRegistry> registry, std::string log_path);

    std::string complete(const std::string& template_id,
                         const std::map<std::string, std::string>& placeholders,
                         const DecodingParams& params = {}) override;

    size_t remaining() const;

private:
    std::shared_ptr<const TemplateRegistry> registry_;
    std::vector<ReplayRecord> records_;
    std::vector<bool> consumed_;
    mutable std::mutex mutex_;
};

struct LiveConfig {
    std::string base_url;      // e.g. https://api.openai.com
    std::string model;
    std::string api_key;       // from DIGKNOW_API_KEY
    int max_concurrency = 4;
    int max_retries = 3;
};

// HTTP chat-completion backend (OpenAI-compatible wire format).
class LiveClient : public ChatClient {
public:
    LiveClient(std::shared_ptr<const TemplateRegistry> registry, LiveConfig config);
    ~LiveClient() override;

    std::string complete(const std::string& template_id,
                         const std::map<std::string, std::string>& placeholders,
                         const DecodingParams& params = {}) override;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// Response parsers. All throw UnparseableResponse on grammar violations.
std::vector<std::string> parse_action_list(const std::string& text);
std::pair<bool, std::vector<int>> parse_yes_no_indices(const std::string& text);

struct Verdict {
    bool success = false;
    std::string explanation;
    std::optional<std::vector<std::string>> correction;
};

Verdict parse_verdict(const std::string& text);
std::vector<SceneGraph> parse_graph_sequence(const std::string& text);

} // namespace digknow
