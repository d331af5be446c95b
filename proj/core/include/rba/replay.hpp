#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rba/attacker.hpp"
#include "rba/features.hpp"
#include "rba/history.hpp"
#include "rba/scoring.hpp"
#include "rba/threshold.hpp"

namespace rba {

// Which attack statistics feed the score: none (uniform 1/|U| prior),
// per-user failed counts, or additionally per-value attack likelihoods.
enum class AttackVariant { kNone, kUser, kFull };

const char* attack_variant_name(AttackVariant variant);
AttackVariant attack_variant_from_name(const std::string& name);

enum class Decision { kPass, kReauth };

struct ScoredLogin {
    UserId user = 0;
    TimestampMs ts = 0;
    std::uint64_t history_size = 0; // before this login was recorded
    double score = 0.0;
};

struct ScoredAttempt {
    UserId victim = 0;
    TimestampMs ts = 0;
    std::uint64_t history_size = 0;
    double score = 0.0;
};

struct ReplayOptions {
    AttackVariant attack_data = AttackVariant::kNone;
    // Minimization applied at every UTC day boundary when set.
    std::optional<RetentionPolicy> retention;
    ScoringConfig scoring;
    bool compute_simple = false;
};

// Chronological replay: snapshot, score, record for every successful
// non-takeover login; attacker attempts are scored at their injection time
// against the victim's then-current history and never recorded. Thresholds
// are applied afterwards, so one replay serves any number of them.
struct ScoredReplay {
    std::vector<ScoredLogin> logins;
    std::vector<double> simple_scores; // parallel to logins when requested
    std::vector<ScoredAttempt> attacks;
    std::unordered_map<UserId, FrequencyClass> frequency;
    std::uint64_t skipped_missing_rtt = 0;
    std::uint64_t skipped_attacks_missing_rtt = 0;

    // (history_size, score) pairs for threshold training; cold starts and
    // non-finite scores excluded.
    std::vector<TrainingSample> training_samples() const;
};

ScoredReplay replay_scores(const LoginDataset& dataset, const FeatureConfig& config,
                           const AttackerSample* attacker, const ReplayOptions& options = {});

// Exactly one of the two must be set.
struct ThresholdSource {
    std::optional<double> static_theta;
    std::optional<DynamicThreshold> dynamic;
};

struct TraceRow {
    UserId user = 0;
    TimestampMs ts = 0;
    std::uint64_t history_size = 0;
    double score = 0.0;
    double theta = 0.0;
    Decision decision = Decision::kPass;
    FrequencyClass frequency = FrequencyClass::kUnclassified;
};

struct EvaluationTrace {
    std::vector<TraceRow> rows;
};

// Challenge rule: cold start always re-authenticates; otherwise score >=
// theta for the login's history size.
EvaluationTrace apply_threshold(const ScoredReplay& scored, const ThresholdSource& thresholds);

// Fraction of attacker attempts challenged under the threshold source.
double attacker_tpr(const std::vector<ScoredAttempt>& attacks, const ThresholdSource& thresholds);

enum class GroupBy { kHistorySize, kFrequencyClass, kBoth };

struct MetricRow {
    std::string group; // "history_size" or "frequency_class"
    std::string value;
    double median_count = 0.0;
    double median_rate = 0.0;
    std::uint64_t n_users = 0;
};

// Per group: median per-user re-auth count and per-user re-auth rate.
std::vector<MetricRow> reauth_metrics(const EvaluationTrace& trace, GroupBy group_by);

// Smallest size from which the median re-auth rate stays below 0.5 through
// the end of the curve.
std::optional<std::uint64_t> stable_setup_size(
    const std::vector<std::pair<std::uint64_t, double>>& rate_by_size);

// Median re-auth rate per history size, extracted from metric rows.
std::vector<std::pair<std::uint64_t, double>> rate_curve(const std::vector<MetricRow>& metrics);

struct TprCell {
    std::string model;
    std::string threshold;
    double tpr = 0.0;
};

std::vector<TprCell> tpr_table(
    const std::vector<std::pair<std::string, std::vector<ScoredAttempt>>>& samples,
    const std::vector<std::pair<std::string, ThresholdSource>>& thresholds);

void write_trace_csv(const EvaluationTrace& trace, std::ostream& out);
void write_trace_csv_file(const EvaluationTrace& trace, const std::string& path);
EvaluationTrace read_trace_csv(std::istream& in);
EvaluationTrace read_trace_csv_file(const std::string& path);
void write_metrics_csv(const std::vector<MetricRow>& metrics, std::ostream& out);
void write_metrics_csv_file(const std::vector<MetricRow>& metrics, const std::string& path);

} // namespace rba
