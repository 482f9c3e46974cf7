#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "digknow/gateway.hpp"
#include "digknow/planner.hpp"

#include <nlohmann/json_fwd.hpp>

namespace digknow {

struct LiveSettings {
    std::string base_url;
    std::string model;
};

struct AppConfig {
    std::string kb_dir = "kb";
    std::string backend = "scripted"; // scripted | replay | live
    LiveSettings live;
    std::string replay_log;
    std::string templates_dir; // empty means compiled-in defaults
    int downsample = 5;
    int retrieval_n = 3;
    CorrectionConfig correction;
    std::string embedder = "bag_of_classes";
    uint64_t seed = 0;
};

// Unknown keys are rejected (ConfigError), not ignored.
AppConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const AppConfig& c);
AppConfig load_config(const std::string& path);

// FNV-1a hex digest of the canonical serialized form.
std::string config_digest(const AppConfig& c);

std::shared_ptr<const TemplateRegistry> make_registry(const AppConfig& c);

// The live backend reads its API key from the DIGKNOW_API_KEY environment
// variable; it is never part of the config file.
std::shared_ptr<ChatClient> make_backend(const AppConfig& c,
                                         std::shared_ptr<const TemplateRegistry> registry);

} // namespace digknow
