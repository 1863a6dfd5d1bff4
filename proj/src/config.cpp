#include "scanloc/config.hpp"

#include <fstream>

namespace scanloc::config {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

int to_int(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        int v = std::stoi(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects an integer, got '" + value + "'");
    }
}

double to_double(const std::string& key, const std::string& value) {
    try {
        size_t used = 0;
        double v = std::stod(value, &used);
        if (used != value.size()) throw std::invalid_argument("trailing junk");
        return v;
    } catch (const std::exception&) {
        throw ConfigError("config: " + key + " expects a number, got '" + value + "'");
    }
}

bool to_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
    if (value == "false" || value == "0" || value == "no" || value == "off") return false;
    throw ConfigError("config: " + key + " expects a boolean, got '" + value + "'");
}

protocol::LocatorStyle to_style(const std::string& key, const std::string& value) {
    if (value == "os_atlas") return protocol::LocatorStyle::OsAtlas;
    if (value == "uground") return protocol::LocatorStyle::UGround;
    if (value == "uground_v1") return protocol::LocatorStyle::UGroundV1;
    if (value == "baseline") return protocol::LocatorStyle::Baseline;
    throw ConfigError("config: " + key + " expects one of os_atlas|uground|uground_v1|baseline");
}

void apply_backend(backend::BackendConfig& backend, const std::string& section,
                   const std::string& key, const std::string& value) {
    std::string qualified = section + "." + key;
    if (key == "endpoint") backend.endpoint = value;
    else if (key == "model") backend.model = value;
    else if (key == "api_key_env") backend.api_key_env = value;
    else if (key == "temperature") backend.temperature = to_double(qualified, value);
    else if (key == "top_p") backend.top_p = to_double(qualified, value);
    else if (key == "max_retries") backend.max_retries = to_int(qualified, value);
    else if (key == "timeout_sec") backend.timeout_sec = to_int(qualified, value);
    else if (key == "backoff_ms") backend.backoff_ms = to_int(qualified, value);
    else if (key == "rate_per_sec") backend.rate_per_sec = to_double(qualified, value);
    else if (key == "max_image_px") backend.max_image_px = to_int(qualified, value);
    else if (key == "style") backend.locator_style = to_style(qualified, value);
    else if (key == "application_hint") backend.application_hint = value;
    else throw ConfigError("config: unknown key '" + key + "' in [" + section + "]");
}

}  // namespace

void apply_setting(FileConfig& config, const std::string& section, const std::string& key,
                   const std::string& value) {
    std::string qualified = section + "." + key;
    if (section == "pipeline") {
        auto& p = config.pipeline;
        if (key == "top_k") p.top_k = to_int(qualified, value);
        else if (key == "stop_threshold_px") p.stop_threshold_px = to_int(qualified, value);
        else if (key == "crop_side_px") p.crop_side_px = to_int(qualified, value);
        else if (key == "upscale_factor") p.upscale_factor = to_int(qualified, value);
        else if (key == "max_depth") p.max_depth = to_int(qualified, value);
        else if (key == "max_scanner_calls") p.max_scanner_calls = to_int(qualified, value);
        else if (key == "max_candidates") p.max_candidates = to_int(qualified, value);
        else if (key == "enable_verification") p.enable_verification = to_bool(qualified, value);
        else if (key == "enable_consensus") p.enable_consensus = to_bool(qualified, value);
        else if (key == "enable_enhancement") p.enable_enhancement = to_bool(qualified, value);
        else throw ConfigError("config: unknown key '" + key + "' in [pipeline]");
    } else if (section == "oracle") {
        auto& o = config.oracle;
        if (key == "seed") o.seed = static_cast<uint64_t>(std::stoull(value));
        else if (key == "scanner_score_noise") o.scanner_score_noise = to_double(qualified, value);
        else if (key == "scanner_flip_prob") o.scanner_flip_prob = to_double(qualified, value);
        else if (key == "locator_sigma") o.locator_sigma = to_double(qualified, value);
        else if (key == "locator_miss_prob") o.locator_miss_prob = to_double(qualified, value);
        else throw ConfigError("config: unknown key '" + key + "' in [oracle]");
    } else if (section == "scanner-backend") {
        apply_backend(config.scanner_backend, section, key, value);
    } else if (section == "locator-backend") {
        apply_backend(config.locator_backend, section, key, value);
    } else {
        throw ConfigError("config: unknown section [" + section + "]");
    }
}

FileConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());

    FileConfig config;
    std::string line;
    std::string section;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#' || t[0] == ';') continue;
        if (t.front() == '[') {
            if (t.back() != ']') {
                throw ConfigError("config: malformed section header at line " +
                                  std::to_string(line_no));
            }
            section = trim(t.substr(1, t.size() - 2));
            continue;
        }
        size_t eq = t.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config: expected key = value at line " + std::to_string(line_no));
        }
        if (section.empty()) {
            throw ConfigError("config: assignment before any [section] at line " +
                              std::to_string(line_no));
        }
        apply_setting(config, section, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
    }

    try {
        config.pipeline.validate();
        config.oracle.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    return config;
}

}  // namespace scanloc::config
