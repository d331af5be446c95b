#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "rba/features.hpp"
#include "rba/history.hpp"
#include "rba/record.hpp"

namespace rba {

struct SmoothingConfig {
    // Strength of the per-user backoff toward the global probability:
    // p_user = (count_u + beta * p_global) / (n_u + beta).
    double backoff_strength = 1.0;
};

// How a main feature's probability is blended from its subfeatures.
enum class CombineStrategy {
    kConvex,          // sum of weight * p(sub)
    kWeightedProduct, // product of p(sub)^weight
};

// Counter tables vs. a brute-force scan of the login log. Both return the
// same numbers; the scan exists as the oracle and benchmark baseline.
enum class CountBackend { kCounters, kScan };

struct ScoringConfig {
    SmoothingConfig smoothing;
    CombineStrategy combine = CombineStrategy::kConvex;
    CountBackend backend = CountBackend::kCounters;
};

// Failed-attempt statistics backing the attack-informed score variants.
struct AttackStats {
    std::unordered_map<UserId, std::uint64_t> failed_per_user;
    // Per subfeature slot: value -> occurrences among failed attempts.
    std::vector<std::unordered_map<std::string, std::uint64_t>> failed_per_value;
    std::uint64_t total_failed = 0;
    std::uint64_t total_logins = 0; // all attempts, successful and failed
};

AttackStats build_attack_stats(const LoginDataset& dataset, const FeatureConfig& config);

// Global probability of one subfeature value: count/N, unseen floor 1/(N+1).
double subfeature_probability_global(const Snapshot& snapshot, std::size_t slot,
                                     const std::string& value,
                                     const SmoothingConfig& smoothing = {});

// Per-user probability with backoff to the global term. Throws
// Error(kArgument) when the store has no history at all.
double subfeature_probability_user(const Snapshot& snapshot, UserId user, std::size_t slot,
                                   const std::string& value,
                                   const SmoothingConfig& smoothing = {});

// Blends subfeature probabilities into the main-feature probability.
double combine_probabilities(const std::vector<double>& sub_probs,
                             const std::vector<double>& weights, CombineStrategy strategy);

// Risk score with the uniform attacker prior p(u|attack) = 1/|U|.
// A user with no history scores +infinity (cold start).
double risk_score(const Snapshot& snapshot, UserId user, const FeatureVector& fv,
                  const FeatureConfig& config, const ScoringConfig& scoring = {});

// p(u|attack) from per-user failed-attempt counts; users absent from the
// attack data fall back to 1/total_logins.
double risk_score_user_attack(const Snapshot& snapshot, const AttackStats& stats, UserId user,
                              const FeatureVector& fv, const FeatureConfig& config,
                              const ScoringConfig& scoring = {});

// Additionally multiplies per-feature attack likelihoods p(attack|FV^k);
// values unseen in the attack data fall back to 1/total_failed.
double risk_score_full_attack(const Snapshot& snapshot, const AttackStats& stats, UserId user,
                              const FeatureVector& fv, const FeatureConfig& config,
                              const ScoringConfig& scoring = {});

// Exact-match baseline: weight mass of subfeatures whose value appears in
// the user's own history, averaged over main features. Range [0, 1].
double simple_score(const Snapshot& snapshot, UserId user, const FeatureVector& fv,
                    const FeatureConfig& config, CountBackend backend = CountBackend::kCounters);

// Mean attacker score over mean legitimate score.
double rsr(const std::vector<double>& attacker_scores, const std::vector<double>& legit_scores);

} // namespace rba
