#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rba {

struct StaticThreshold {
    double value = 0.0;
    double target_tpr = 0.0;
    double achieved_tpr = 0.0;
};

enum class ThresholdKind { kLinear, kPoly, kHybrid };

const char* threshold_kind_name(ThresholdKind kind);
ThresholdKind threshold_kind_from_name(const std::string& name);

// Per-history-size access thresholds; table[i] is theta for size i+1.
// Lookups beyond the table clamp to the last entry.
struct DynamicThreshold {
    ThresholdKind kind = ThresholdKind::kHybrid;
    double trim_fraction = 0.05;
    std::vector<double> table;
};

struct TrainingSample {
    std::uint64_t history_size = 0;
    double score = 0.0;
};

// Largest theta keeping the fraction of attacker scores >= theta at or above
// the target: theta = the ceil(target*n)-th largest score.
StaticThreshold calibrate_static(const std::vector<double>& attacker_scores, double target_tpr);

// Fraction of scores >= theta.
double achieved_tpr(const std::vector<double>& attacker_scores, double theta);

struct TrainOptions {
    double trim_fraction = 0.05;
    int poly_degree = 3;
    bool log_space = false; // fit on log(score) instead of raw scores
};

// Drops the globally highest trim fraction of scores, then least-squares
// fits score on history size. Non-positive fitted values carry the previous
// size's threshold forward. Hybrid is the pointwise min of Linear and Poly.
DynamicThreshold train_dynamic(const std::vector<TrainingSample>& samples, ThresholdKind kind,
                               const TrainOptions& options = {});

double threshold_at(const DynamicThreshold& dyn, std::uint64_t history_size);

// Least-squares polynomial fit of y on x, lowest degree coefficient first.
std::vector<double> fit_polynomial(const std::vector<double>& x, const std::vector<double>& y,
                                   int degree);

enum class RiskLevel { kLow, kMedium, kHigh };

const char* risk_level_name(RiskLevel level);

// score < theta_reauth -> LOW; below theta_block -> MEDIUM; else HIGH.
RiskLevel classify_risk(double score, double theta_reauth, double theta_block);

std::string dynamic_threshold_to_json(const DynamicThreshold& dyn);
DynamicThreshold dynamic_threshold_from_json(const std::string& json_text);
std::string static_threshold_to_json(const StaticThreshold& t);
StaticThreshold static_threshold_from_json(const std::string& json_text);

} // namespace rba
