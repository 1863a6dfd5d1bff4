#include "scanloc/backend.hpp"

#include <cmath>
#include <cstdlib>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace scanloc::backend {

using nlohmann::json;

std::string base64_encode(const uint8_t* data, size_t len) {
    static const char* table =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (size_t i = 0; i < len; i += 3) {
        uint32_t chunk = static_cast<uint32_t>(data[i]) << 16;
        if (i + 1 < len) chunk |= static_cast<uint32_t>(data[i + 1]) << 8;
        if (i + 2 < len) chunk |= static_cast<uint32_t>(data[i + 2]);
        out.push_back(table[(chunk >> 18) & 0x3f]);
        out.push_back(table[(chunk >> 12) & 0x3f]);
        out.push_back(i + 1 < len ? table[(chunk >> 6) & 0x3f] : '=');
        out.push_back(i + 2 < len ? table[chunk & 0x3f] : '=');
    }
    return out;
}

void BackendConfig::validate(const char* role) const {
    std::string who = std::string(role) + " backend";
    if (endpoint.empty()) throw ConfigError(who + ": endpoint not configured");
    if (model.empty()) throw ConfigError(who + ": model not configured");
    if (api_key_env.empty()) throw ConfigError(who + ": api key env var not configured");
    const char* key = std::getenv(api_key_env.c_str());
    if (key == nullptr || *key == '\0') {
        throw ConfigError(who + ": environment variable " + api_key_env + " is not set");
    }
    if (max_retries < 0 || timeout_sec < 1 || backoff_ms < 0 || rate_per_sec < 0) {
        throw ConfigError(who + ": invalid retry/timeout/rate settings");
    }
}

std::string BackendConfig::api_key() const {
    const char* key = std::getenv(api_key_env.c_str());
    return key ? key : "";
}

ChatTransport::ChatTransport(BackendConfig config, const char* role)
    : config_(std::move(config)), next_allowed_(std::chrono::steady_clock::now()) {
    config_.validate(role);
    api_key_ = config_.api_key();

    // split the endpoint into scheme://host[:port] and path
    size_t scheme = config_.endpoint.find("://");
    if (scheme == std::string::npos) {
        throw ConfigError(std::string(role) + " backend: endpoint must include a scheme");
    }
    size_t path_start = config_.endpoint.find('/', scheme + 3);
    if (path_start == std::string::npos) {
        base_url_ = config_.endpoint;
        path_ = "/";
    } else {
        base_url_ = config_.endpoint.substr(0, path_start);
        path_ = config_.endpoint.substr(path_start);
    }
}

void ChatTransport::rate_limit() {
    if (config_.rate_per_sec <= 0) return;
    std::chrono::steady_clock::time_point wait_until;
    {
        std::lock_guard<std::mutex> lock(rate_mutex_);
        auto now = std::chrono::steady_clock::now();
        if (next_allowed_ < now) next_allowed_ = now;
        wait_until = next_allowed_;
        next_allowed_ += std::chrono::microseconds(
            static_cast<long>(1e6 / config_.rate_per_sec));
    }
    std::this_thread::sleep_until(wait_until);
}

std::string ChatTransport::post_chat(const std::string& prompt,
                                     const std::vector<agents::AgentImage>& images) {
    json content = json::array();
    content.push_back({{"type", "text"}, {"text", prompt}});
    for (const auto& image : images) {
        if (!image.pixels || image.pixels->empty()) {
            throw BackendError("cannot send an empty image");
        }
        std::vector<uint8_t> png = img::encode_png(*image.pixels);
        content.push_back(
            {{"type", "image_url"},
             {"image_url",
              {{"url", "data:image/png;base64," + base64_encode(png.data(), png.size())}}}});
    }

    json body{{"model", config_.model},
              {"temperature", config_.temperature},
              {"top_p", config_.top_p},
              {"messages", json::array({json{{"role", "user"}, {"content", content}}})}};
    std::string payload = body.dump();

    int attempts = config_.max_retries + 1;
    int last_status = 0;
    std::string last_error = "no attempt made";
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(
                std::chrono::milliseconds(config_.backoff_ms << (attempt - 1)));
        }
        rate_limit();

        httplib::Client client(base_url_);
        client.set_connection_timeout(config_.timeout_sec, 0);
        client.set_read_timeout(config_.timeout_sec, 0);
        client.set_write_timeout(config_.timeout_sec, 0);
        client.set_bearer_token_auth(api_key_);

        httplib::Result res = client.Post(path_, payload, "application/json");
        if (!res) {
            last_status = 0;
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        last_status = res->status;
        if (res->status >= 500) {
            last_error = "server error " + std::to_string(res->status);
            continue;
        }
        if (res->status != 200) {
            throw BackendError("backend rejected request with status " +
                                   std::to_string(res->status),
                               res->status);
        }

        json reply = json::parse(res->body, nullptr, /*allow_exceptions=*/false);
        if (reply.is_discarded() || !reply.contains("choices") || reply["choices"].empty() ||
            !reply["choices"][0].contains("message")) {
            throw BackendError("malformed chat-completion reply", res->status);
        }
        const json& message = reply["choices"][0]["message"];
        if (!message.contains("content") || !message["content"].is_string()) {
            throw BackendError("reply carries no text content", res->status);
        }
        return message["content"].get<std::string>();
    }
    throw BackendError("retries exhausted: " + last_error, last_status);
}

RemoteScanner::RemoteScanner(BackendConfig config)
    : transport_(std::move(config), "scanner") {}

namespace {

// integer factor that brings w*h under the pixel cap
int downscale_factor(const img::Image& image, long cap) {
    if (cap <= 0) return 1;
    long pixels = static_cast<long>(image.width()) * image.height();
    if (pixels <= cap) return 1;
    int factor = static_cast<int>(
        std::ceil(std::sqrt(static_cast<double>(pixels) / static_cast<double>(cap))));
    return std::max(2, factor);
}

agents::AgentImage maybe_downscale(const agents::AgentImage& image, long cap, int& factor_out) {
    factor_out = downscale_factor(*image.pixels, cap);
    if (factor_out == 1) return image;
    auto scaled = std::make_shared<img::Image>(img::downscale_nn(*image.pixels, factor_out));
    return {scaled, image.meta};
}

}  // namespace

std::string RemoteScanner::complete(const std::string& prompt,
                                    const std::vector<agents::AgentImage>& images) {
    std::vector<agents::AgentImage> payload;
    payload.reserve(images.size());
    for (const auto& image : images) {
        int factor = 1;
        payload.push_back(maybe_downscale(image, transport_.config().max_image_px, factor));
    }
    return transport_.post_chat(prompt, payload);
}

RemoteLocator::RemoteLocator(BackendConfig config)
    : transport_(std::move(config), "locator") {}

geometry::PointPx RemoteLocator::ground(const std::string& instruction,
                                        const agents::AgentImage& image) {
    protocol::RenderContext ctx;
    ctx.instruction = instruction;
    ctx.locator_style = transport_.config().locator_style;
    if (ctx.locator_style == protocol::LocatorStyle::Baseline) {
        ctx.application_name = transport_.config().application_hint;
    }
    std::string prompt =
        protocol::render_prompt({protocol::Stage::LocatorGround, protocol::Variant::Normal}, ctx);

    int factor = 1;
    agents::AgentImage payload =
        maybe_downscale(image, transport_.config().max_image_px, factor);

    std::string reply = transport_.post_chat(prompt, {payload});
    auto parsed = protocol::parse_point(reply);
    if (!parsed) {
        throw LocatorParseError("locator reply carries no coordinates: " +
                                reply.substr(0, 120));
    }
    // map back into the original (pre-downscale) frame
    geometry::PointPx p = geometry::scale_point_up(parsed->point, factor);
    return geometry::clamp_point(p, image.pixels->size());
}

}  // namespace scanloc::backend
