#include "rba/features.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "rba/error.hpp"

namespace rba {

namespace {

constexpr double kWeightSumTolerance = 1e-6;

const std::unordered_set<std::string>& known_subfeatures() {
    static const std::unordered_set<std::string> names = {
        "ip_address", "asn", "country", "region",      "city",
        "user_agent", "os",  "browser", "device_type", "rtt_rounded",
    };
    return names;
}

} // namespace

std::string extract_subfeature(const LoginRecord& r, const std::string& name, int granularity_ms) {
    if (name == "ip_address") return r.ip_address;
    if (name == "asn") return std::to_string(r.asn);
    if (name == "country") return r.country;
    if (name == "region") return r.region;
    if (name == "city") return r.city;
    if (name == "user_agent") return r.user_agent;
    if (name == "os") return r.os;
    if (name == "browser") return r.browser;
    if (name == "device_type") return device_type_name(r.device_type);
    if (name == "rtt_rounded") {
        if (!r.rtt_ms) {
            throw Error(ErrorCode::kRow, "record has no rtt_ms but the config scores rtt_rounded",
                        "rtt_ms");
        }
        return std::to_string(round_rtt(*r.rtt_ms, granularity_ms));
    }
    throw Error(ErrorCode::kConfig, "unknown subfeature '" + name + "'");
}

std::size_t FeatureConfig::slot_count() const {
    std::size_t n = 0;
    for (const auto& f : features) n += f.subfeatures.size();
    return n;
}

std::vector<std::string> FeatureConfig::slot_names() const {
    std::vector<std::string> names;
    names.reserve(slot_count());
    for (const auto& f : features) {
        for (const auto& s : f.subfeatures) names.push_back(s.name);
    }
    return names;
}

std::vector<std::size_t> FeatureConfig::group_offsets() const {
    std::vector<std::size_t> offsets;
    offsets.reserve(features.size() + 1);
    std::size_t n = 0;
    for (const auto& f : features) {
        offsets.push_back(n);
        n += f.subfeatures.size();
    }
    offsets.push_back(n);
    return offsets;
}

FeatureConfig default_feature_config() {
    FeatureConfig config;
    config.features = {
        {"ip", {{"ip_address", 0.6}, {"asn", 0.3}, {"country", 0.1}}},
        {"ua", {{"user_agent", 0.53}, {"browser", 0.27}, {"os", 0.19}, {"device_type", 0.01}}},
    };
    config.rtt_granularity_ms = 5;
    return config;
}

void apply_rtt_replacement(FeatureConfig& config) {
    for (auto& f : config.features) {
        for (auto& s : f.subfeatures) {
            if (s.name == "ip_address") {
                s.name = "rtt_rounded";
                return;
            }
        }
    }
    throw Error(ErrorCode::kConfig, "no ip_address subfeature to replace with rtt_rounded");
}

std::int64_t round_rtt(std::int64_t rtt_ms, int granularity_ms) {
    if (granularity_ms <= 0) {
        throw Error(ErrorCode::kConfig, "rtt granularity must be positive");
    }
    const std::int64_t g = granularity_ms;
    return (rtt_ms + g / 2) / g * g;
}

void validate_feature_config(const FeatureConfig& config) {
    static constexpr int kAllowedGranularities[] = {1, 5, 10, 50};
    bool granularity_ok = false;
    for (int g : kAllowedGranularities) granularity_ok |= (config.rtt_granularity_ms == g);
    if (!granularity_ok) {
        throw Error(ErrorCode::kConfig, "rtt_granularity_ms must be one of 1, 5, 10, 50");
    }
    if (config.features.empty()) {
        throw Error(ErrorCode::kConfig, "feature config has no features");
    }
    std::unordered_set<std::string> seen;
    for (const auto& f : config.features) {
        if (f.subfeatures.empty()) {
            throw Error(ErrorCode::kConfig, "feature '" + f.name + "' has no subfeatures");
        }
        double sum = 0.0;
        for (const auto& s : f.subfeatures) {
            if (!known_subfeatures().count(s.name)) {
                throw Error(ErrorCode::kConfig, "unknown subfeature '" + s.name + "'");
            }
            if (!seen.insert(s.name).second) {
                throw Error(ErrorCode::kConfig, "duplicate subfeature '" + s.name + "'");
            }
            if (!(s.weight > 0.0) || !(s.weight <= 1.0)) {
                throw Error(ErrorCode::kConfig,
                            "subfeature '" + s.name + "' weight must be in (0, 1]");
            }
            sum += s.weight;
        }
        if (std::abs(sum - 1.0) > kWeightSumTolerance) {
            throw Error(ErrorCode::kConfig, "feature '" + f.name + "' weights sum to " +
                                                std::to_string(sum) + ", expected 1");
        }
    }
}

FeatureVector extract_features(const LoginRecord& record, const FeatureConfig& config) {
    FeatureVector values;
    values.reserve(config.slot_count());
    for (const auto& f : config.features) {
        for (const auto& s : f.subfeatures) {
            values.push_back(extract_subfeature(record, s.name, config.rtt_granularity_ms));
        }
    }
    return values;
}

FeatureConfig compute_weights(const LoginDataset& dataset, const FeatureConfig& config,
                              WeightStrategy strategy) {
    if (dataset.records().empty()) {
        throw Error(ErrorCode::kArgument, "cannot compute weights on an empty dataset");
    }
    FeatureConfig out = config;
    if (strategy == WeightStrategy::kUniform) {
        for (auto& f : out.features) {
            const double w = 1.0 / static_cast<double>(f.subfeatures.size());
            for (auto& s : f.subfeatures) s.weight = w;
        }
    }
    validate_feature_config(out);
    return out;
}

std::string feature_config_to_json(const FeatureConfig& config) {
    nlohmann::json j;
    j["features"] = nlohmann::json::array();
    for (const auto& f : config.features) {
        nlohmann::json subs = nlohmann::json::array();
        for (const auto& s : f.subfeatures) {
            subs.push_back({{"name", s.name}, {"weight", s.weight}});
        }
        j["features"].push_back({{"name", f.name}, {"subfeatures", std::move(subs)}});
    }
    j["rtt_granularity_ms"] = config.rtt_granularity_ms;
    return j.dump(2);
}

FeatureConfig feature_config_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, std::string("invalid feature config JSON: ") + e.what());
    }
    FeatureConfig config;
    try {
        if (!j.is_object() || !j.contains("features")) {
            throw Error(ErrorCode::kConfig, "feature config must be an object with 'features'");
        }
        for (const auto& fj : j.at("features")) {
            FeatureGroupConfig group;
            group.name = fj.at("name").get<std::string>();
            for (const auto& sj : fj.at("subfeatures")) {
                group.subfeatures.push_back(
                    {sj.at("name").get<std::string>(), sj.at("weight").get<double>()});
            }
            config.features.push_back(std::move(group));
        }
        config.rtt_granularity_ms = j.value("rtt_granularity_ms", 5);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, std::string("invalid feature config JSON: ") + e.what());
    }
    validate_feature_config(config);
    return config;
}

FeatureConfig load_feature_config_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return feature_config_from_json(buffer.str());
}

void save_feature_config_file(const FeatureConfig& config, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
    out << feature_config_to_json(config) << '\n';
    if (!out) throw Error(ErrorCode::kIo, "failed to write " + path);
}

} // namespace rba
