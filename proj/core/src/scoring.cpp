#include "rba/scoring.hpp"

#include <cmath>
#include <limits>
#include <numeric>

#include "rba/error.hpp"

namespace rba {

namespace {

double global_probability(std::uint64_t count, std::uint64_t total) {
    if (count > 0) return static_cast<double>(count) / static_cast<double>(total);
    return 1.0 / (static_cast<double>(total) + 1.0);
}

double user_probability(std::uint64_t count_u, std::uint64_t n_u, double p_global, double beta) {
    return (static_cast<double>(count_u) + beta * p_global) /
           (static_cast<double>(n_u) + beta);
}

struct Counts {
    std::uint64_t total_logins = 0;
    std::uint64_t user_count = 0;
    std::uint64_t user_logins = 0;
    std::vector<std::uint64_t> global; // per slot
    std::vector<std::uint64_t> user;   // per slot
};

Counts gather_counts(const Snapshot& snapshot, UserId user, const FeatureVector& fv,
                     CountBackend backend) {
    Counts c;
    c.total_logins = snapshot.total_logins();
    c.user_count = snapshot.user_count();
    if (backend == CountBackend::kScan) {
        c.global = snapshot.scan_value_counts(fv);
        auto uc = snapshot.scan_user_value_counts(user, fv);
        c.user_logins = uc.user_logins;
        c.user = std::move(uc.matches);
    } else {
        c.global = snapshot.value_counts(fv);
        auto uc = snapshot.user_value_counts(user, fv);
        c.user_logins = uc.user_logins;
        c.user = std::move(uc.matches);
    }
    return c;
}

enum class AttackPrior { kUniform, kPerUser };

double score_impl(const Snapshot& snapshot, UserId user, const FeatureVector& fv,
                  const FeatureConfig& config, const ScoringConfig& scoring,
                  const AttackStats* stats, AttackPrior prior, bool value_attack_terms) {
    if (fv.size() != config.slot_count()) {
        throw Error(ErrorCode::kArgument, "feature vector does not match the config");
    }
    if (stats && (stats->total_failed == 0 || stats->total_logins == 0)) {
        throw Error(ErrorCode::kArgument, "attack stats are empty");
    }

    const Counts counts = gather_counts(snapshot, user, fv, scoring.backend);
    if (counts.user_logins == 0) return std::numeric_limits<double>::infinity();

    const double beta = scoring.smoothing.backoff_strength;
    if (!(beta > 0.0)) throw Error(ErrorCode::kConfig, "backoff_strength must be > 0");

    double log_score = 0.0;
    std::size_t slot = 0;
    for (const auto& group : config.features) {
        std::vector<double> weights;
        std::vector<double> p_global;
        std::vector<double> p_user;
        std::vector<double> p_attack;
        weights.reserve(group.subfeatures.size());
        p_global.reserve(group.subfeatures.size());
        p_user.reserve(group.subfeatures.size());
        for (const auto& sub : group.subfeatures) {
            const double pg = global_probability(counts.global[slot], counts.total_logins);
            weights.push_back(sub.weight);
            p_global.push_back(pg);
            p_user.push_back(user_probability(counts.user[slot], counts.user_logins, pg, beta));
            if (value_attack_terms) {
                auto it = stats->failed_per_value[slot].find(fv[slot]);
                const double hits = it == stats->failed_per_value[slot].end()
                                        ? 1.0
                                        : static_cast<double>(it->second);
                p_attack.push_back(hits / static_cast<double>(stats->total_failed));
            }
            ++slot;
        }
        const double main_global = combine_probabilities(p_global, weights, scoring.combine);
        const double main_user = combine_probabilities(p_user, weights, scoring.combine);
        log_score += std::log(main_global) - std::log(main_user);
        if (value_attack_terms) {
            log_score += std::log(combine_probabilities(p_attack, weights, scoring.combine));
        }
    }

    double p_u_attack;
    if (prior == AttackPrior::kUniform) {
        p_u_attack = 1.0 / static_cast<double>(counts.user_count);
    } else {
        auto it = stats->failed_per_user.find(user);
        p_u_attack = it == stats->failed_per_user.end()
                         ? 1.0 / static_cast<double>(stats->total_logins)
                         : static_cast<double>(it->second) / static_cast<double>(stats->total_failed);
    }
    const double p_u_legit =
        static_cast<double>(counts.user_logins) / static_cast<double>(counts.total_logins);
    log_score += std::log(p_u_attack) - std::log(p_u_legit);
    return std::exp(log_score);
}

} // namespace

AttackStats build_attack_stats(const LoginDataset& dataset, const FeatureConfig& config) {
    validate_feature_config(config);
    AttackStats stats;
    const auto names = config.slot_names();
    stats.failed_per_value.resize(names.size());
    stats.total_logins = dataset.records().size();
    for (const auto& r : dataset.records()) {
        if (r.login_successful) continue;
        ++stats.total_failed;
        ++stats.failed_per_user[r.user_id];
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == "rtt_rounded" && !r.rtt_ms) continue;
            ++stats.failed_per_value[i][extract_subfeature(r, names[i], config.rtt_granularity_ms)];
        }
    }
    return stats;
}

double subfeature_probability_global(const Snapshot& snapshot, std::size_t slot,
                                     const std::string& value, const SmoothingConfig&) {
    return global_probability(snapshot.value_count(slot, value), snapshot.total_logins());
}

double subfeature_probability_user(const Snapshot& snapshot, UserId user, std::size_t slot,
                                   const std::string& value, const SmoothingConfig& smoothing) {
    const std::uint64_t total = snapshot.total_logins();
    if (total == 0) {
        throw Error(ErrorCode::kArgument, "user-scope probability undefined on empty history");
    }
    if (!(smoothing.backoff_strength > 0.0)) {
        throw Error(ErrorCode::kConfig, "backoff_strength must be > 0");
    }
    const double pg = global_probability(snapshot.value_count(slot, value), total);
    const std::uint64_t n_u = snapshot.user_logins(user);
    const std::uint64_t count_u = snapshot.user_slot_count(user, slot, value);
    return user_probability(count_u, n_u, pg, smoothing.backoff_strength);
}

double combine_probabilities(const std::vector<double>& sub_probs,
                             const std::vector<double>& weights, CombineStrategy strategy) {
    if (sub_probs.size() != weights.size() || sub_probs.empty()) {
        throw Error(ErrorCode::kArgument, "probability/weight length mismatch");
    }
    if (strategy == CombineStrategy::kConvex) {
        double sum = 0.0;
        for (std::size_t i = 0; i < sub_probs.size(); ++i) sum += weights[i] * sub_probs[i];
        return sum;
    }
    double log_sum = 0.0;
    for (std::size_t i = 0; i < sub_probs.size(); ++i) log_sum += weights[i] * std::log(sub_probs[i]);
    return std::exp(log_sum);
}

double risk_score(const Snapshot& snapshot, UserId user, const FeatureVector& fv,
                  const FeatureConfig& config, const ScoringConfig& scoring) {
    return score_impl(snapshot, user, fv, config, scoring, nullptr, AttackPrior::kUniform, false);
}

double risk_score_user_attack(const Snapshot& snapshot, const AttackStats& stats, UserId user,
                              const FeatureVector& fv, const FeatureConfig& config,
                              const ScoringConfig& scoring) {
    return score_impl(snapshot, user, fv, config, scoring, &stats, AttackPrior::kPerUser, false);
}

double risk_score_full_attack(const Snapshot& snapshot, const AttackStats& stats, UserId user,
                              const FeatureVector& fv, const FeatureConfig& config,
                              const ScoringConfig& scoring) {
    return score_impl(snapshot, user, fv, config, scoring, &stats, AttackPrior::kPerUser, true);
}

double simple_score(const Snapshot& snapshot, UserId user, const FeatureVector& fv,
                    const FeatureConfig& config, CountBackend backend) {
    if (fv.size() != config.slot_count()) {
        throw Error(ErrorCode::kArgument, "feature vector does not match the config");
    }
    Snapshot::UserCounts counts = backend == CountBackend::kScan
                                      ? snapshot.scan_user_value_counts(user, fv)
                                      : snapshot.user_value_counts(user, fv);
    double total = 0.0;
    std::size_t slot = 0;
    for (const auto& group : config.features) {
        double matched = 0.0;
        for (const auto& sub : group.subfeatures) {
            if (counts.matches[slot] > 0) matched += sub.weight;
            ++slot;
        }
        total += matched;
    }
    return total / static_cast<double>(config.features.size());
}

double rsr(const std::vector<double>& attacker_scores, const std::vector<double>& legit_scores) {
    if (attacker_scores.empty() || legit_scores.empty()) {
        throw Error(ErrorCode::kArgument, "rsr requires non-empty score lists");
    }
    const double attacker_mean =
        std::accumulate(attacker_scores.begin(), attacker_scores.end(), 0.0) /
        static_cast<double>(attacker_scores.size());
    const double legit_mean = std::accumulate(legit_scores.begin(), legit_scores.end(), 0.0) /
                              static_cast<double>(legit_scores.size());
    if (!(legit_mean > 0.0)) {
        throw Error(ErrorCode::kArgument, "rsr requires a positive legitimate mean");
    }
    return attacker_mean / legit_mean;
}

} // namespace rba
