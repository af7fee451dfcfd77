#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cdp/error.hpp"
#include "cdp/evaluation.hpp"

namespace cdp {

inline constexpr int kConfigSchemaVersion = 1;

/// Flat `key = value` text; '#' starts a comment. Keys may repeat only by
/// error. `schema_version` must be present and supported.
class KeyValueConfig {
public:
    static KeyValueConfig parse(std::string_view text) {
        KeyValueConfig cfg;
        std::size_t line_no = 0;
        while (!text.empty()) {
            const auto nl = text.find('\n');
            std::string_view line = text.substr(0, nl);
            text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
            ++line_no;
            if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
            line = trim(line);
            if (line.empty()) continue;
            const auto eq = line.find('=');
            if (eq == std::string_view::npos)
                throw ParameterError("config line " + std::to_string(line_no) + ": expected key = value");
            const std::string key(trim(line.substr(0, eq)));
            std::string value(trim(line.substr(eq + 1)));
            if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
            if (key.empty()) throw ParameterError("config line " + std::to_string(line_no) + ": empty key");
            if (!cfg.values_.emplace(key, value).second) throw ParameterError("config: duplicate key '" + key + "'");
        }
        if (!cfg.has("schema_version")) throw ParameterError("config: missing schema_version");
        if (cfg.get_int("schema_version") != kConfigSchemaVersion)
            throw ParameterError("config: unsupported schema_version");
        return cfg;
    }

    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::map<std::string, std::string>& values() const { return values_; }

    const std::string& get(const std::string& key) const {
        const auto it = values_.find(key);
        if (it == values_.end()) throw ParameterError("config: missing key '" + key + "'");
        used_.insert(key);
        return it->second;
    }

    long long get_int(const std::string& key) const {
        const std::string& v = get(key);
        long long out = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc{} || p != v.data() + v.size()) throw ParameterError("config: '" + key + "' is not an integer");
        return out;
    }

    double get_double(const std::string& key) const {
        const std::string& v = get(key);
        try {
            std::size_t used = 0;
            const double d = std::stod(v, &used);
            if (used != v.size()) throw std::invalid_argument(v);
            return d;
        } catch (const std::exception&) {
            throw ParameterError("config: '" + key + "' is not a number");
        }
    }

    bool get_bool(const std::string& key) const {
        const std::string& v = get(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ParameterError("config: '" + key + "' is not a boolean");
    }

    std::vector<std::string> get_list(const std::string& key) const {
        std::vector<std::string> out;
        std::string_view v = get(key);
        while (!v.empty()) {
            const auto comma = v.find(',');
            const auto item = trim(v.substr(0, comma));
            if (!item.empty()) out.emplace_back(item);
            v = comma == std::string_view::npos ? std::string_view{} : v.substr(comma + 1);
        }
        return out;
    }

    /// Keys never read through get(); reported as errors by callers.
    std::vector<std::string> unused() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_)
            if (!used_.count(k)) out.push_back(k);
        return out;
    }

private:
    static std::string_view trim(std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
        return s;
    }

    std::map<std::string, std::string> values_;
    mutable std::set<std::string> used_;
};

inline void apply_channel(const KeyValueConfig& kv, const std::string& prefix, ChannelParams& c) {
    if (kv.has(prefix + ".k")) c.k = static_cast<int>(kv.get_int(prefix + ".k"));
    if (kv.has(prefix + ".blur_sigma")) c.blur_sigma = kv.get_double(prefix + ".blur_sigma");
    if (kv.has(prefix + ".dot_gain_gamma")) c.dot_gain_gamma = kv.get_double(prefix + ".dot_gain_gamma");
    if (kv.has(prefix + ".noise_sigma")) c.noise_sigma = kv.get_double(prefix + ".noise_sigma");
}

/// Overlay config keys onto an ExperimentConfig; unknown keys are an error.
inline ExperimentConfig experiment_from_config(const KeyValueConfig& kv, ExperimentConfig cfg = {}) {
    kv.get("schema_version");
    auto size = [&](const char* key, std::size_t& dst) {
        if (!kv.has(key)) return;
        const long long v = kv.get_int(key);
        if (v < 0) throw ParameterError(std::string("config: '") + key + "' must be >= 0");
        dst = static_cast<std::size_t>(v);
    };
    size("n_templates", cfg.n_templates);
    size("L", cfg.L);
    size("n_train", cfg.n_train);
    size("n_val", cfg.n_val);
    size("n_test", cfg.n_test);
    if (kv.has("p")) cfg.density = kv.get_double("p");
    if (kv.has("h")) cfg.h = static_cast<int>(kv.get_int("h"));
    if (kv.has("border")) cfg.border = parse_border_mode(kv.get("border"));
    if (kv.has("mu")) cfg.mu = kv.get_double("mu");
    if (kv.has("mu_search")) cfg.mu_search = kv.get_bool("mu_search");
    if (kv.has("epsilon")) cfg.epsilon = kv.get_double("epsilon");
    if (kv.has("threads")) cfg.threads = static_cast<unsigned>(kv.get_int("threads"));
    if (kv.has("seeds")) {
        cfg.seeds.clear();
        for (const auto& s : kv.get_list("seeds")) {
            std::uint64_t v = 0;
            const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
            if (ec != std::errc{} || p != s.data() + s.size()) throw ParameterError("config: bad seed '" + s + "'");
            cfg.seeds.push_back(v);
        }
    }
    if (kv.has("metrics")) {
        cfg.metrics.clear();
        for (const auto& m : kv.get_list("metrics")) cfg.metrics.push_back(parse_metric(m));
    }
    apply_channel(kv, "printer_a", cfg.printer_a);
    apply_channel(kv, "printer_b", cfg.printer_b);
    if (const auto extra = kv.unused(); !extra.empty()) throw ParameterError("config: unknown key '" + extra.front() + "'");
    return cfg;
}

/// Canonical config text for an ExperimentConfig (used in manifests).
inline std::string to_config_text(const ExperimentConfig& cfg) {
    auto d = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    std::string s = "schema_version = " + std::to_string(kConfigSchemaVersion) + "\n";
    s += "n_templates = " + std::to_string(cfg.n_templates) + "\n";
    s += "L = " + std::to_string(cfg.L) + "\n";
    s += "p = " + d(cfg.density) + "\n";
    s += "n_train = " + std::to_string(cfg.n_train) + "\n";
    s += "n_val = " + std::to_string(cfg.n_val) + "\n";
    s += "n_test = " + std::to_string(cfg.n_test) + "\n";
    s += "h = " + std::to_string(cfg.h) + "\n";
    s += "border = " + std::string(to_string(cfg.border)) + "\n";
    s += "mu = " + d(cfg.mu) + "\n";
    s += std::string("mu_search = ") + (cfg.mu_search ? "true" : "false") + "\n";
    s += "epsilon = " + d(cfg.epsilon) + "\n";
    std::string seeds, metrics;
    for (auto v : cfg.seeds) seeds += (seeds.empty() ? "" : ",") + std::to_string(v);
    for (auto m : cfg.metrics) metrics += (metrics.empty() ? "" : ",") + std::string(to_string(m));
    s += "seeds = " + seeds + "\n";
    s += "metrics = " + metrics + "\n";
    for (const auto& [name, c] : {std::pair{"printer_a", cfg.printer_a}, std::pair{"printer_b", cfg.printer_b}}) {
        s += std::string(name) + ".k = " + std::to_string(c.k) + "\n";
        s += std::string(name) + ".blur_sigma = " + d(c.blur_sigma) + "\n";
        s += std::string(name) + ".dot_gain_gamma = " + d(c.dot_gain_gamma) + "\n";
        s += std::string(name) + ".noise_sigma = " + d(c.noise_sigma) + "\n";
    }
    return s;
}

}  // namespace cdp
