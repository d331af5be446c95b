#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "rba/features.hpp"
#include "rba/history.hpp"
#include "rba/record.hpp"
#include "rba/replay.hpp"
#include "rba/scoring.hpp"

namespace rba {

// Runtime-adjustable part of the service configuration. Thresholds follow the
// blocking rule: score < theta_reauth passes, < theta_block re-authenticates,
// otherwise blocks.
struct ServicePolicy {
    double theta_reauth = 0;
    double theta_block = 0;
    AttackVariant attack_data = AttackVariant::kNone;
};

struct ServiceOptions {
    FeatureConfig features;
    ScoringConfig scoring;
    ServicePolicy policy;
    std::int64_t pending_ttl_ms = 15 * 60 * 1000;
    // Wall clock in ms; injectable for tests.
    std::function<TimestampMs()> clock;
};

enum class ServiceDecision { kAllow, kReauth, kBlock };

const char* service_decision_name(ServiceDecision decision);

struct ScoreResponse {
    std::string request_id;
    double score = 0;
    std::uint64_t history_size = 0;
    ServiceDecision decision = ServiceDecision::kReauth;
};

struct HealthReport {
    std::int64_t uptime_ms = 0;
    std::uint64_t total_logins = 0;
    std::uint64_t user_count = 0;
    std::size_t pending = 0;
};

// Two-phase scoring over a live history store. score() evaluates an attempt
// and parks it under a request id; nothing is recorded until the caller
// confirms the outcome. A confirmed success is appended to the store, a
// confirmed failure feeds the failed-attempt statistics. Each request id can
// be confirmed exactly once and expires after the pending TTL.
class DecisionService {
public:
    explicit DecisionService(ServiceOptions options);

    DecisionService(const DecisionService&) = delete;
    DecisionService& operator=(const DecisionService&) = delete;

    ScoreResponse score(const LoginRecord& attempt);

    // Returns true when the outcome was recorded into the store.
    bool confirm(const std::string& request_id, bool login_successful);

    ServicePolicy policy() const;
    void set_policy(const ServicePolicy& policy);

    HealthReport health() const;
    MemoryReport memory() const;

    const FeatureConfig& features() const { return features_; }
    const HistoryStore& store() const { return store_; }
    HistoryStore& store() { return store_; }
    AttackStats attack_stats() const;

private:
    struct Pending {
        UserId user = 0;
        TimestampMs login_timestamp = 0;
        FeatureVector fv;
        TimestampMs created = 0;
    };

    void sweep_expired_locked(TimestampMs now);
    double score_locked(const Snapshot& snapshot, UserId user, const FeatureVector& fv) const;

    FeatureConfig features_;
    ScoringConfig scoring_;
    ServicePolicy policy_;
    std::int64_t pending_ttl_ms_;
    std::function<TimestampMs()> clock_;
    TimestampMs started_at_;

    HistoryStore store_;
    AttackStats stats_;
    std::unordered_map<std::string, Pending> pending_;
    std::unordered_map<std::string, TimestampMs> completed_;
    std::uint64_t next_id_ = 1;
    mutable std::mutex mutex_;
};

void validate_policy(const ServicePolicy& policy);

// Blocking HTTP front end. start() binds (port 0 picks a free port) and
// serves on a background thread until stop() or destruction.
class HttpService {
public:
    explicit HttpService(DecisionService& service);
    ~HttpService();

    HttpService(const HttpService&) = delete;
    HttpService& operator=(const HttpService&) = delete;

    bool start(const std::string& host, int port);
    void stop();
    int port() const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace rba
