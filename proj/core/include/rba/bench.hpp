#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rba/features.hpp"
#include "rba/record.hpp"
#include "rba/scoring.hpp"

namespace rba {

struct TimingSample {
    std::string backend; // "counters" or "scan"
    std::uint64_t history_size = 0;
    double median_us = 0;
    double stddev_us = 0;
};

struct BenchOptions {
    std::size_t step = 50'000;
    std::size_t reps = 9; // timed repetitions per point, at least 5
    std::uint64_t seed = 0;
    ScoringConfig scoring;
};

// Replays successful logins into a store and pauses every `step` records to
// time one risk-score evaluation on both count backends. The probe login is
// drawn from the records already replayed so the user has history. One
// untimed warmup call precedes the timed repetitions.
std::vector<TimingSample> run_bench(const LoginDataset& dataset, const FeatureConfig& config,
                                    const BenchOptions& options);

struct LatencyFit {
    double intercept_us = 0;
    double slope_us_per_login = 0;
    double r_squared = 0;
};

// Least-squares median_us on history_size. Expects at least two samples,
// typically pre-filtered to one backend.
LatencyFit fit_latency_regression(const std::vector<TimingSample>& samples);

std::vector<TimingSample> filter_backend(const std::vector<TimingSample>& samples,
                                         const std::string& backend);

// Event simulation: login i arrives at arrivals_ms[i] (non-decreasing) and
// occupies one core for durations_us[i]. cores == 0 means no contention.
// Returns completion minus arrival per login, in microseconds.
std::vector<double> simulate_auth_times(const std::vector<TimestampMs>& arrivals_ms,
                                        const std::vector<double>& durations_us, unsigned cores);

struct ConcurrencyStats {
    double median_us = 0;
    double stddev_us = 0;
    std::size_t logins = 0;
};

// Authentication time under load when every login costs the regression
// prediction at the given history size.
ConcurrencyStats estimate_concurrency(const std::vector<TimestampMs>& arrivals_ms,
                                      const LatencyFit& fit, std::uint64_t history_size,
                                      unsigned cores);

// Columns: backend,history_size,median_us,stddev_us
void write_timings_csv(const std::vector<TimingSample>& samples, std::ostream& out);

std::string latency_fit_json(const LatencyFit& scan, const LatencyFit& counters);

} // namespace rba
