#include <benchmark/benchmark.h>

#include "rba/datagen.hpp"
#include "rba/features.hpp"
#include "rba/history.hpp"
#include "rba/scoring.hpp"

namespace {

const rba::LoginDataset& corpus() {
    static const rba::LoginDataset dataset = [] {
        rba::DatagenConfig config;
        config.users = 2000;
        config.seed = 7;
        return rba::generate_corpus(config);
    }();
    return dataset;
}

struct LoadedStore {
    rba::FeatureConfig config = rba::default_feature_config();
    rba::HistoryStore store{config};
    rba::UserId probe_user = 0;
    rba::FeatureVector probe;
};

const LoadedStore& loaded_store() {
    static const LoadedStore* loaded = [] {
        auto* l = new LoadedStore;
        for (const auto& r : corpus().records()) {
            if (!r.login_successful) continue;
            l->store.record_login(r);
            l->probe_user = r.user_id;
            l->probe = rba::extract_features(r, l->config);
        }
        return l;
    }();
    return *loaded;
}

void bm_record_login(benchmark::State& state) {
    const auto& config = loaded_store().config;
    std::vector<std::pair<rba::UserId, rba::FeatureVector>> rows;
    for (const auto& r : corpus().records()) {
        if (r.login_successful) rows.emplace_back(r.user_id, rba::extract_features(r, config));
    }
    std::size_t i = 0;
    rba::HistoryStore store(config);
    for (auto _ : state) {
        const auto& [user, fv] = rows[i++ % rows.size()];
        benchmark::DoNotOptimize(store.record_login(user, 1'000'000 + i, fv));
    }
}
BENCHMARK(bm_record_login);

void bm_risk_score_counters(benchmark::State& state) {
    const auto& l = loaded_store();
    const auto snapshot = l.store.snapshot();
    rba::ScoringConfig scoring;
    scoring.backend = rba::CountBackend::kCounters;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            rba::risk_score(snapshot, l.probe_user, l.probe, l.config, scoring));
    }
}
BENCHMARK(bm_risk_score_counters);

void bm_risk_score_scan(benchmark::State& state) {
    const auto& l = loaded_store();
    const auto snapshot = l.store.snapshot();
    rba::ScoringConfig scoring;
    scoring.backend = rba::CountBackend::kScan;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            rba::risk_score(snapshot, l.probe_user, l.probe, l.config, scoring));
    }
}
BENCHMARK(bm_risk_score_scan);

void bm_snapshot(benchmark::State& state) {
    const auto& l = loaded_store();
    for (auto _ : state) {
        benchmark::DoNotOptimize(l.store.snapshot().seq());
    }
}
BENCHMARK(bm_snapshot);

void bm_extract_features(benchmark::State& state) {
    const auto& l = loaded_store();
    const auto& r = corpus().records().front();
    for (auto _ : state) {
        benchmark::DoNotOptimize(rba::extract_features(r, l.config));
    }
}
BENCHMARK(bm_extract_features);

} // namespace

BENCHMARK_MAIN();
