#include "rba/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <set>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "rba/error.hpp"

namespace rba {

namespace {

constexpr double kCountEps = 1e-9;

double evaluate_polynomial(const std::vector<double>& coeffs, double x) {
    double y = 0.0;
    for (std::size_t i = coeffs.size(); i-- > 0;) y = y * x + coeffs[i];
    return y;
}

std::vector<TrainingSample> trim_highest(const std::vector<TrainingSample>& samples,
                                         double trim_fraction) {
    if (!(trim_fraction >= 0.0) || !(trim_fraction < 1.0)) {
        throw Error(ErrorCode::kArgument, "trim fraction must be in [0, 1)");
    }
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (samples[a].score != samples[b].score) return samples[a].score > samples[b].score;
        return a < b;
    });
    const auto drop = static_cast<std::size_t>(
        std::floor(trim_fraction * static_cast<double>(samples.size()) + kCountEps));
    std::vector<char> dropped(samples.size(), 0);
    for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = 1;

    std::vector<TrainingSample> kept;
    kept.reserve(samples.size() - drop);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!dropped[i] && std::isfinite(samples[i].score)) kept.push_back(samples[i]);
    }
    return kept;
}

std::vector<double> fit_table(const std::vector<TrainingSample>& kept, int degree,
                              bool log_space, std::uint64_t max_size) {
    std::vector<double> x, y;
    x.reserve(kept.size());
    y.reserve(kept.size());
    for (const auto& s : kept) {
        if (log_space && !(s.score > 0.0)) continue;
        x.push_back(static_cast<double>(s.history_size));
        y.push_back(log_space ? std::log(s.score) : s.score);
    }
    if (x.size() < static_cast<std::size_t>(degree + 1)) {
        throw Error(ErrorCode::kTraining, "not enough samples for the requested fit");
    }
    const std::vector<double> coeffs = fit_polynomial(x, y, degree);

    std::vector<double> table(max_size);
    double previous = std::numeric_limits<double>::quiet_NaN();
    for (std::uint64_t size = 1; size <= max_size; ++size) {
        double theta = evaluate_polynomial(coeffs, static_cast<double>(size));
        if (log_space) theta = std::exp(theta);
        if (!(theta > 0.0) || !std::isfinite(theta)) theta = previous;
        table[size - 1] = theta;
        previous = table[size - 1];
    }
    // Sizes before the first positive fit borrow the earliest positive one.
    double first_positive = std::numeric_limits<double>::quiet_NaN();
    for (double v : table) {
        if (v > 0.0 && std::isfinite(v)) {
            first_positive = v;
            break;
        }
    }
    if (!(first_positive > 0.0)) {
        throw Error(ErrorCode::kTraining, "fitted thresholds are non-positive at every size");
    }
    for (double& v : table) {
        if (v > 0.0 && std::isfinite(v)) break;
        v = first_positive;
    }
    return table;
}

} // namespace

const char* threshold_kind_name(ThresholdKind kind) {
    switch (kind) {
    case ThresholdKind::kLinear: return "linear";
    case ThresholdKind::kPoly: return "poly";
    case ThresholdKind::kHybrid: return "hybrid";
    }
    return "hybrid";
}

ThresholdKind threshold_kind_from_name(const std::string& name) {
    if (name == "linear") return ThresholdKind::kLinear;
    if (name == "poly") return ThresholdKind::kPoly;
    if (name == "hybrid") return ThresholdKind::kHybrid;
    throw Error(ErrorCode::kArgument, "unknown threshold kind '" + name + "'");
}

StaticThreshold calibrate_static(const std::vector<double>& attacker_scores, double target_tpr) {
    if (attacker_scores.empty()) {
        throw Error(ErrorCode::kArgument, "cannot calibrate on empty attacker scores");
    }
    if (!(target_tpr > 0.0) || !(target_tpr <= 1.0)) {
        throw Error(ErrorCode::kArgument, "target TPR must be in (0, 1]");
    }
    std::vector<double> sorted = attacker_scores;
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    const auto n = sorted.size();
    auto k = static_cast<std::size_t>(
        std::ceil(target_tpr * static_cast<double>(n) - kCountEps));
    k = std::clamp<std::size_t>(k, 1, n);

    StaticThreshold result;
    result.value = sorted[k - 1];
    result.target_tpr = target_tpr;
    result.achieved_tpr = achieved_tpr(attacker_scores, result.value);
    return result;
}

double achieved_tpr(const std::vector<double>& attacker_scores, double theta) {
    if (attacker_scores.empty()) {
        throw Error(ErrorCode::kArgument, "cannot compute TPR on empty attacker scores");
    }
    std::size_t hits = 0;
    for (double s : attacker_scores) {
        if (s >= theta) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(attacker_scores.size());
}

std::vector<double> fit_polynomial(const std::vector<double>& x, const std::vector<double>& y,
                                   int degree) {
    if (x.size() != y.size() || x.empty()) {
        throw Error(ErrorCode::kArgument, "fit_polynomial: x/y length mismatch");
    }
    if (degree < 0) throw Error(ErrorCode::kArgument, "fit_polynomial: negative degree");
    const auto n = static_cast<Eigen::Index>(x.size());
    const auto cols = static_cast<Eigen::Index>(degree) + 1;
    Eigen::MatrixXd design(n, cols);
    Eigen::VectorXd target(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = 1.0;
        for (Eigen::Index j = 0; j < cols; ++j) {
            design(i, j) = v;
            v *= x[static_cast<std::size_t>(i)];
        }
        target(i) = y[static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd coeffs = design.householderQr().solve(target);
    return std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size());
}

DynamicThreshold train_dynamic(const std::vector<TrainingSample>& samples, ThresholdKind kind,
                               const TrainOptions& options) {
    if (samples.size() < 10) {
        throw Error(ErrorCode::kTraining, "dynamic threshold training needs at least 10 samples");
    }
    std::set<std::uint64_t> sizes;
    std::uint64_t max_size = 0;
    for (const auto& s : samples) {
        if (s.history_size == 0) {
            throw Error(ErrorCode::kTraining, "training samples must have history size >= 1");
        }
        sizes.insert(s.history_size);
        max_size = std::max(max_size, s.history_size);
    }
    if (sizes.size() < 2) {
        throw Error(ErrorCode::kTraining, "training samples must span at least 2 history sizes");
    }
    if (options.poly_degree < 1) {
        throw Error(ErrorCode::kArgument, "poly degree must be >= 1");
    }

    const std::vector<TrainingSample> kept = trim_highest(samples, options.trim_fraction);

    DynamicThreshold result;
    result.kind = kind;
    result.trim_fraction = options.trim_fraction;
    switch (kind) {
    case ThresholdKind::kLinear:
        result.table = fit_table(kept, 1, options.log_space, max_size);
        break;
    case ThresholdKind::kPoly:
        result.table = fit_table(kept, options.poly_degree, options.log_space, max_size);
        break;
    case ThresholdKind::kHybrid: {
        const auto linear = fit_table(kept, 1, options.log_space, max_size);
        const auto poly = fit_table(kept, options.poly_degree, options.log_space, max_size);
        result.table.resize(max_size);
        for (std::uint64_t i = 0; i < max_size; ++i) {
            result.table[i] = std::min(linear[i], poly[i]);
        }
        break;
    }
    }
    return result;
}

double threshold_at(const DynamicThreshold& dyn, std::uint64_t history_size) {
    if (history_size == 0) {
        throw Error(ErrorCode::kArgument, "history size must be >= 1");
    }
    if (dyn.table.empty()) {
        throw Error(ErrorCode::kUnconfigured, "dynamic threshold has an empty table");
    }
    const auto idx = std::min<std::uint64_t>(history_size, dyn.table.size()) - 1;
    return dyn.table[idx];
}

const char* risk_level_name(RiskLevel level) {
    switch (level) {
    case RiskLevel::kLow: return "LOW";
    case RiskLevel::kMedium: return "MEDIUM";
    case RiskLevel::kHigh: return "HIGH";
    }
    return "LOW";
}

RiskLevel classify_risk(double score, double theta_reauth, double theta_block) {
    if (!(theta_reauth >= 0.0) || !(theta_block >= theta_reauth)) {
        throw Error(ErrorCode::kArgument, "require 0 <= theta_reauth <= theta_block");
    }
    if (score < theta_reauth) return RiskLevel::kLow;
    if (score < theta_block) return RiskLevel::kMedium;
    return RiskLevel::kHigh;
}

std::string dynamic_threshold_to_json(const DynamicThreshold& dyn) {
    nlohmann::json j;
    j["kind"] = threshold_kind_name(dyn.kind);
    j["trim"] = dyn.trim_fraction;
    j["table"] = nlohmann::json::array();
    for (std::size_t i = 0; i < dyn.table.size(); ++i) {
        j["table"].push_back({{"size", i + 1}, {"theta", dyn.table[i]}});
    }
    return j.dump(2);
}

DynamicThreshold dynamic_threshold_from_json(const std::string& json_text) {
    DynamicThreshold dyn;
    try {
        const auto j = nlohmann::json::parse(json_text);
        dyn.kind = threshold_kind_from_name(j.at("kind").get<std::string>());
        dyn.trim_fraction = j.value("trim", 0.05);
        const auto& table = j.at("table");
        dyn.table.assign(table.size(), 0.0);
        for (const auto& row : table) {
            const auto size = row.at("size").get<std::uint64_t>();
            if (size < 1 || size > dyn.table.size()) {
                throw Error(ErrorCode::kConfig, "threshold table sizes must be contiguous from 1");
            }
            dyn.table[size - 1] = row.at("theta").get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, std::string("invalid threshold JSON: ") + e.what());
    }
    for (double v : dyn.table) {
        if (!(v > 0.0)) throw Error(ErrorCode::kConfig, "threshold table values must be positive");
    }
    return dyn;
}

std::string static_threshold_to_json(const StaticThreshold& t) {
    nlohmann::json j;
    j["theta"] = t.value;
    j["target_tpr"] = t.target_tpr;
    j["achieved_tpr"] = t.achieved_tpr;
    return j.dump(2);
}

StaticThreshold static_threshold_from_json(const std::string& json_text) {
    StaticThreshold t;
    try {
        const auto j = nlohmann::json::parse(json_text);
        t.value = j.at("theta").get<double>();
        t.target_tpr = j.value("target_tpr", 0.0);
        t.achieved_tpr = j.value("achieved_tpr", 0.0);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::kConfig, std::string("invalid threshold JSON: ") + e.what());
    }
    return t;
}

} // namespace rba
