#include "rba/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <ostream>
#include <queue>
#include <vector>

#include <nlohmann/json.hpp>

#include "rba/error.hpp"
#include "rba/history.hpp"
#include "rba/rng.hpp"
#include "rba/threshold.hpp"

namespace rba {
namespace {

// Forces the scored value to be materialized so the timed call is not elided.
volatile double g_bench_sink = 0.0;

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    if (n == 0) return 0.0;
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double stddev_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

const char* backend_name(CountBackend backend) {
    return backend == CountBackend::kCounters ? "counters" : "scan";
}

} // namespace

std::vector<TimingSample> run_bench(const LoginDataset& dataset, const FeatureConfig& config,
                                    const BenchOptions& options) {
    if (options.reps < 5) {
        throw Error(ErrorCode::kArgument, "reps must be at least 5", "reps");
    }
    if (options.step == 0) throw Error(ErrorCode::kArgument, "step must be positive", "step");
    if (options.step > dataset.size()) {
        throw Error(ErrorCode::kArgument, "step exceeds the dataset size", "step");
    }

    HistoryStore store(config);
    auto probe_rng = make_rng(options.seed, "bench-probe");
    const auto& records = dataset.records();
    std::vector<std::size_t> usable;
    usable.reserve(records.size());
    std::vector<TimingSample> out;

    using clock = std::chrono::steady_clock;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!r.login_successful) continue;
        FeatureVector fv;
        try {
            fv = extract_features(r, config);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::kRow) continue;
            throw;
        }
        store.record_login(r.user_id, r.login_timestamp, fv);
        usable.push_back(i);

        if (usable.size() % options.step != 0) continue;

        const auto& probe = records[usable[bounded_rand(probe_rng, usable.size())]];
        const auto probe_fv = extract_features(probe, config);
        const auto snapshot = store.snapshot();
        for (const auto backend : {CountBackend::kCounters, CountBackend::kScan}) {
            ScoringConfig scoring = options.scoring;
            scoring.backend = backend;
            g_bench_sink = risk_score(snapshot, probe.user_id, probe_fv, config, scoring);
            std::vector<double> times;
            times.reserve(options.reps);
            for (std::size_t rep = 0; rep < options.reps; ++rep) {
                const auto t0 = clock::now();
                g_bench_sink = risk_score(snapshot, probe.user_id, probe_fv, config, scoring);
                const auto t1 = clock::now();
                times.push_back(std::chrono::duration<double, std::micro>(t1 - t0).count());
            }
            TimingSample sample;
            sample.backend = backend_name(backend);
            sample.history_size = usable.size();
            sample.median_us = median_of(times);
            sample.stddev_us = stddev_of(times);
            out.push_back(std::move(sample));
        }
    }
    if (out.empty()) {
        throw Error(ErrorCode::kArgument, "step exceeds the number of usable logins", "step");
    }
    return out;
}

LatencyFit fit_latency_regression(const std::vector<TimingSample>& samples) {
    if (samples.size() < 2) {
        throw Error(ErrorCode::kArgument, "need at least two timing samples");
    }
    std::vector<double> x;
    std::vector<double> y;
    x.reserve(samples.size());
    y.reserve(samples.size());
    for (const auto& s : samples) {
        x.push_back(static_cast<double>(s.history_size));
        y.push_back(s.median_us);
    }
    if (std::adjacent_find(x.begin(), x.end(), std::not_equal_to<>()) == x.end()) {
        throw Error(ErrorCode::kArgument, "timing samples cover a single history size");
    }
    const auto coeffs = fit_polynomial(x, y, 1);
    LatencyFit fit;
    fit.intercept_us = coeffs[0];
    fit.slope_us_per_login = coeffs[1];

    double mean = 0.0;
    for (double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    double ss_tot = 0.0;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double pred = fit.intercept_us + fit.slope_us_per_login * x[i];
        ss_tot += (y[i] - mean) * (y[i] - mean);
        ss_res += (y[i] - pred) * (y[i] - pred);
    }
    fit.r_squared = ss_tot == 0.0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return fit;
}

std::vector<TimingSample> filter_backend(const std::vector<TimingSample>& samples,
                                         const std::string& backend) {
    std::vector<TimingSample> out;
    for (const auto& s : samples) {
        if (s.backend == backend) out.push_back(s);
    }
    return out;
}

std::vector<double> simulate_auth_times(const std::vector<TimestampMs>& arrivals_ms,
                                        const std::vector<double>& durations_us, unsigned cores) {
    if (arrivals_ms.size() != durations_us.size()) {
        throw Error(ErrorCode::kArgument, "arrivals and durations differ in length");
    }
    if (!std::is_sorted(arrivals_ms.begin(), arrivals_ms.end())) {
        throw Error(ErrorCode::kArgument, "arrivals must be non-decreasing", "arrivals_ms");
    }
    for (double d : durations_us) {
        if (!(d >= 0.0) || !std::isfinite(d)) {
            throw Error(ErrorCode::kArgument, "durations must be finite and non-negative",
                        "durations_us");
        }
    }

    std::vector<double> out;
    out.reserve(arrivals_ms.size());
    std::priority_queue<double, std::vector<double>, std::greater<>> busy_until;
    for (std::size_t i = 0; i < arrivals_ms.size(); ++i) {
        const double arrival = static_cast<double>(arrivals_ms[i]) * 1000.0;
        double start = arrival;
        if (cores != 0) {
            if (busy_until.size() >= cores) {
                start = std::max(arrival, busy_until.top());
                busy_until.pop();
            }
            busy_until.push(start + durations_us[i]);
        }
        out.push_back(start + durations_us[i] - arrival);
    }
    return out;
}

ConcurrencyStats estimate_concurrency(const std::vector<TimestampMs>& arrivals_ms,
                                      const LatencyFit& fit, std::uint64_t history_size,
                                      unsigned cores) {
    if (arrivals_ms.empty()) {
        throw Error(ErrorCode::kArgument, "no arrivals to simulate", "arrivals_ms");
    }
    const double duration =
        fit.intercept_us + fit.slope_us_per_login * static_cast<double>(history_size);
    if (!std::isfinite(duration) || duration < 0.0) {
        throw Error(ErrorCode::kArgument, "regression predicts a negative or non-finite latency");
    }
    const std::vector<double> durations(arrivals_ms.size(), duration);
    const auto times = simulate_auth_times(arrivals_ms, durations, cores);
    ConcurrencyStats stats;
    stats.median_us = median_of(times);
    stats.stddev_us = stddev_of(times);
    stats.logins = times.size();
    return stats;
}

void write_timings_csv(const std::vector<TimingSample>& samples, std::ostream& out) {
    out << "backend,history_size,median_us,stddev_us\n";
    char buf[64];
    for (const auto& s : samples) {
        out << s.backend << ',' << s.history_size << ',';
        std::snprintf(buf, sizeof(buf), "%.3f,%.3f", s.median_us, s.stddev_us);
        out << buf << '\n';
    }
    if (!out) throw Error(ErrorCode::kIo, "failed to write timings CSV");
}

std::string latency_fit_json(const LatencyFit& scan, const LatencyFit& counters) {
    nlohmann::json j;
    const auto fill = [](const LatencyFit& f) {
        return nlohmann::json{{"intercept_us", f.intercept_us},
                              {"slope_us_per_login", f.slope_us_per_login},
                              {"r_squared", f.r_squared}};
    };
    j["scan"] = fill(scan);
    j["counters"] = fill(counters);
    return j.dump(2);
}

} // namespace rba
