#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rba/record.hpp"

namespace rba {

struct SubfeatureConfig {
    std::string name;
    double weight = 0.0;
};

struct FeatureGroupConfig {
    std::string name;
    std::vector<SubfeatureConfig> subfeatures;
};

// Which login attributes are scored and how subfeature ratios are blended.
// Subfeature names identify extractors; they must be globally unique so a
// flat slot index can address every subfeature across groups.
struct FeatureConfig {
    std::vector<FeatureGroupConfig> features;
    int rtt_granularity_ms = 5;

    std::size_t slot_count() const;
    // Flat slot names in declaration order.
    std::vector<std::string> slot_names() const;
    // Offset of the first slot of each feature group, plus a trailing
    // end offset, so group i owns slots [offsets[i], offsets[i+1]).
    std::vector<std::size_t> group_offsets() const;
};

// Extracted subfeature values for one login, flat and slot-aligned with the
// config.
using FeatureVector = std::vector<std::string>;

enum class WeightStrategy {
    kFixed,   // the shipped weight vectors, unchanged
    kUniform, // 1/k per subfeature within each group
};

// ip_address/asn/country plus user_agent/browser/os/device_type, weighted as
// shipped by default.
FeatureConfig default_feature_config();

// Swaps the ip_address subfeature for rounded RTT, keeping its weight.
void apply_rtt_replacement(FeatureConfig& config);

// Nearest multiple of granularity_ms, ties rounded up.
std::int64_t round_rtt(std::int64_t rtt_ms, int granularity_ms);

// Throws Error(kConfig) on unknown subfeature names, duplicate names,
// granularity outside {1, 5, 10, 50}, or group weights not summing to 1.
void validate_feature_config(const FeatureConfig& config);

// Throws Error(kRow, field "rtt_ms") if the config uses rtt_rounded and the
// record carries no RTT; callers decide whether to skip such records.
FeatureVector extract_features(const LoginRecord& record, const FeatureConfig& config);

// Extracts a single named subfeature with the same rules.
std::string extract_subfeature(const LoginRecord& record, const std::string& name,
                               int granularity_ms);

// Reweighting hook. The fixed strategy keeps the configured weights; the
// dataset argument exists so data-driven strategies can slot in later.
FeatureConfig compute_weights(const LoginDataset& dataset, const FeatureConfig& config,
                              WeightStrategy strategy = WeightStrategy::kFixed);

std::string feature_config_to_json(const FeatureConfig& config);
FeatureConfig feature_config_from_json(const std::string& json_text);
FeatureConfig load_feature_config_file(const std::string& path);
void save_feature_config_file(const FeatureConfig& config, const std::string& path);

} // namespace rba
