#include "digknow/config.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "digknow/errors.hpp"
#include "digknow/scripted_oracle.hpp"

#include <nlohmann/json.hpp>

namespace digknow {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& known,
                    const std::string& scope) {
    for (const auto& [key, value] : j.items())
        if (!known.count(key))
            throw ConfigError("unknown config key: " + scope + key);
}

template <typename T>
void read_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

} // namespace

AppConfig config_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config root must be an object");
    reject_unknown(j,
                   {"kb_dir", "backend", "live", "replay_log", "templates_dir",
                    "downsample", "retrieval_n", "correction", "embedder", "seed"},
                   "");
    AppConfig c;
    read_if(j, "kb_dir", c.kb_dir);
    read_if(j, "backend", c.backend);
    if (c.backend != "scripted" && c.backend != "replay" && c.backend != "live")
        throw ConfigError("unknown backend: " + c.backend);
    if (j.contains("live")) {
        const json& l = j.at("live");
        reject_unknown(l, {"base_url", "model"}, "live.");
        read_if(l, "base_url", c.live.base_url);
        read_if(l, "model", c.live.model);
    }
    read_if(j, "replay_log", c.replay_log);
    read_if(j, "templates_dir", c.templates_dir);
    read_if(j, "downsample", c.downsample);
    read_if(j, "retrieval_n", c.retrieval_n);
    if (c.downsample <= 0) throw ConfigError("downsample must be positive");
    if (c.retrieval_n <= 0) throw ConfigError("retrieval_n must be positive");
    if (j.contains("correction")) {
        const json& k = j.at("correction");
        reject_unknown(k,
                       {"max_plan_rounds", "max_exec_corrections_per_step",
                        "use_deterministic_validator"},
                       "correction.");
        read_if(k, "max_plan_rounds", c.correction.max_plan_rounds);
        read_if(k, "max_exec_corrections_per_step",
                c.correction.max_exec_corrections_per_step);
        read_if(k, "use_deterministic_validator",
                c.correction.use_deterministic_validator);
        if (c.correction.max_plan_rounds < 0 ||
            c.correction.max_exec_corrections_per_step < 0)
            throw ConfigError("correction bounds must be non-negative");
    }
    read_if(j, "embedder", c.embedder);
    if (c.embedder != "bag_of_classes")
        throw ConfigError("unknown embedder: " + c.embedder);
    read_if(j, "seed", c.seed);
    return c;
}

nlohmann::json config_to_json(const AppConfig& c) {
    return json{
        {"kb_dir", c.kb_dir},
        {"backend", c.backend},
        {"live", json{{"base_url", c.live.base_url}, {"model", c.live.model}}},
        {"replay_log", c.replay_log},
        {"templates_dir", c.templates_dir},
        {"downsample", c.downsample},
        {"retrieval_n", c.retrieval_n},
        {"correction",
         json{{"max_plan_rounds", c.correction.max_plan_rounds},
              {"max_exec_corrections_per_step",
               c.correction.max_exec_corrections_per_step},
              {"use_deterministic_validator",
               c.correction.use_deterministic_validator}}},
        {"embedder", c.embedder},
        {"seed", c.seed}};
}

AppConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("invalid config JSON: " + std::string(e.what()));
    }
    return config_from_json(j);
}

std::string config_digest(const AppConfig& c) {
    const std::string canonical = config_to_json(c).dump();
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : canonical) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::shared_ptr<const TemplateRegistry> make_registry(const AppConfig& c) {
    if (c.templates_dir.empty())
        return std::make_shared<TemplateRegistry>(TemplateRegistry::builtin());
    return std::make_shared<TemplateRegistry>(TemplateRegistry::load_dir(c.templates_dir));
}

std::shared_ptr<ChatClient> make_backend(
    const AppConfig& c, std::shared_ptr<const TemplateRegistry> registry) {
    if (c.backend == "scripted") return make_scripted_client();
    if (c.backend == "replay") {
        if (c.replay_log.empty())
            throw ConfigError("replay backend requires replay_log");
        return std::make_shared<ReplayClient>(registry, c.replay_log);
    }
    LiveConfig live;
    live.base_url = c.live.base_url;
    live.model = c.live.model;
    const char* key = std::getenv("DIGKNOW_API_KEY");
    if (!key || !*key)
        throw ConfigError("live backend requires DIGKNOW_API_KEY in the environment");
    live.api_key = key;
    if (live.base_url.empty() || live.model.empty())
        throw ConfigError("live backend requires live.base_url and live.model");
    return std::make_shared<LiveClient>(registry, live);
}

} // namespace digknow
