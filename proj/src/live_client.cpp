#include "digknow/gateway.hpp"

#include <chrono>
#include <condition_variable>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "digknow/errors.hpp"

namespace digknow {

struct LiveClient::Impl {
    std::shared_ptr<const TemplateRegistry> registry;
    LiveConfig config;
    std::mutex mutex;
    std::condition_variable cv;
    int in_flight = 0;

    std::string post(const std::string& prompt, const DecodingParams& params) {
        nlohmann::json body{
            {"model", config.model},
            {"messages", {{{"role", "user"}, {"content", prompt}}}},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens},
        };

        httplib::Client client(config.base_url);
        client.set_read_timeout(120, 0);
        httplib::Headers headers{{"Authorization", "Bearer " + config.api_key}};

        int backoff_ms = 500;
        for (int attempt = 0; attempt <= config.max_retries; ++attempt) {
            auto res = client.Post("/v1/chat/completions", headers, body.dump(),
                                   "application/json");
            if (res && res->status == 200) {
                nlohmann::json j = nlohmann::json::parse(res->body);
                return j.at("choices").at(0).at("message").at("content").get<std::string>();
            }
            const bool retryable = !res || res->status == 429 || res->status >= 500;
            if (!retryable || attempt == config.max_retries) {
                throw GatewayError("chat completion request failed" +
                                   (res ? " with status " + std::to_string(res->status)
                                        : std::string(" (no response)")));
            }
            std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
            backoff_ms *= 2;
        }
        throw GatewayError("chat completion request failed");
    }
};

LiveClient::LiveClient(std::shared_ptr<const TemplateRegistry> registry, LiveConfig config)
    : impl_(std::make_unique<Impl>()) {
    impl_->registry = std::move(registry);
    impl_->config = std::move(config);
}

LiveClient::~LiveClient() = default;

std::string LiveClient::complete(const std::string& template_id,
                                 const std::map<std::string, std::string>& placeholders,
                                 const DecodingParams& params) {
    const std::string prompt = impl_->registry->render(template_id, placeholders);
    {
        std::unique_lock<std::mutex> lock(impl_->mutex);
        impl_->cv.wait(lock,
                       [&] { return impl_->in_flight < impl_->config.max_concurrency; });
        ++impl_->in_flight;
    }
    std::string response;
    try {
        response = impl_->post(prompt, params);
    } catch (...) {
        std::lock_guard<std::mutex> lock(impl_->mutex);
        --impl_->in_flight;
        impl_->cv.notify_one();
        throw;
    }
    std::lock_guard<std::mutex> lock(impl_->mutex);
    --impl_->in_flight;
    impl_->cv.notify_one();
    return response;
}

} // namespace digknow
