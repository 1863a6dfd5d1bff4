#pragma once

#include <chrono>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "scanloc/agents.hpp"
#include "scanloc/protocol.hpp"

namespace scanloc {

// configuration problems -> CLI exit code 2
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace scanloc

namespace scanloc::backend {

struct BackendConfig {
    std::string endpoint;  // full chat-completions URL
    std::string model;
    std::string api_key_env = "SCANLOC_API_KEY";
    double temperature = 0.7;
    double top_p = 0.95;
    int max_retries = 3;
    int timeout_sec = 60;
    int backoff_ms = 500;    // first retry delay; doubles per attempt
    double rate_per_sec = 0;  // 0 = uncapped
    long max_image_px = 0;    // 0 = no cap; otherwise W*H limit before sending
    protocol::LocatorStyle locator_style = protocol::LocatorStyle::OsAtlas;
    std::string application_hint = "desktop";  // only the baseline prompt needs it

    // grounding models decode deterministically
    static BackendConfig locator_defaults() {
        BackendConfig c;
        c.temperature = 0.0;
        c.top_p = 1.0;
        return c;
    }

    // throws ConfigError; checks the key env var is actually set
    void validate(const char* role) const;
    std::string api_key() const;
};

struct BackendError : std::runtime_error {
    explicit BackendError(const std::string& what, int status = 0)
        : std::runtime_error(what), last_status(status) {}
    int last_status;
};

// a reply arrived but carried no usable coordinates; distinct from transport
struct LocatorParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shared chat-completion POST with base64 PNG image parts, retry-on-5xx with
// exponential backoff, and a simple request-rate cap. Thread-safe.
class ChatTransport {
public:
    explicit ChatTransport(BackendConfig config, const char* role);

    std::string post_chat(const std::string& prompt,
                          const std::vector<agents::AgentImage>& images);

    const BackendConfig& config() const { return config_; }

private:
    void rate_limit();

    BackendConfig config_;
    std::string base_url_;
    std::string path_;
    std::string api_key_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point next_allowed_;
};

class RemoteScanner : public agents::ScannerAgent {
public:
    explicit RemoteScanner(BackendConfig config);

    std::string name() const override { return "remote:" + transport_.config().model; }
    std::string complete(const std::string& prompt,
                         const std::vector<agents::AgentImage>& images) override;

private:
    ChatTransport transport_;
};

class RemoteLocator : public agents::LocatorAgent {
public:
    explicit RemoteLocator(BackendConfig config);

    std::string name() const override { return "remote:" + transport_.config().model; }
    geometry::PointPx ground(const std::string& instruction,
                             const agents::AgentImage& image) override;

private:
    ChatTransport transport_;
};

std::string base64_encode(const uint8_t* data, size_t len);

}  // namespace scanloc::backend
