#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "rba/features.hpp"
#include "rba/record.hpp"

namespace rba {

enum class FrequencyClass {
    kDaily,
    kSeveralDays,
    kWeekly,
    kSeveralWeeks,
    kLessThanMonthly,
    kUnclassified,
};

const char* frequency_class_name(FrequencyClass c);

// Majority class of successive login gaps: <1 day Daily, [1,7) SeveralDays,
// [7,14) Weekly, [14,30) SeveralWeeks, >=30 LessThanMonthly. Ties go to the
// more frequent class. Users without enough spread are dropped to
// Unclassified: Daily needs >=4 distinct active days, SeveralDays/Weekly
// >=2 distinct weeks, SeveralWeeks/LessThanMonthly >=2 distinct months.
FrequencyClass classify_frequency(const std::vector<TimestampMs>& sorted_timestamps);

// Day index (UTC), Monday-aligned week index, and calendar month index used
// by the frequency drop rule. Exposed for tests.
std::int64_t utc_day_index(TimestampMs ts);
std::int64_t week_index(TimestampMs ts);
std::int64_t month_index(TimestampMs ts);

struct MemoryReport {
    // Counter-table bytes keyed by subfeature slot name, plus "user_logins"
    // for the per-user login-count table.
    std::map<std::string, std::size_t> counter_tables;
    std::size_t counter_total = 0;
    // The per-user entry log (timestamps + interned values). Dominates
    // memory and is reported separately from the counter tables.
    std::size_t login_history = 0;
};

struct RetentionPolicy {
    int window_days = 0;
    int min_user_entries = 1;
};

class HistoryStore;

// Immutable logical view of the store at the sequence number it was taken.
// Cheap to copy; valid until the next minimize() on the parent store, which
// rewrites sequence numbers. Reads on an invalidated snapshot throw
// Error(kConflict). The parent store must outlive the snapshot.
class Snapshot {
public:
    std::uint64_t seq() const { return seq_; }

    std::uint64_t total_logins() const;
    std::uint64_t user_count() const;
    std::uint64_t user_logins(UserId user) const;
    std::uint64_t value_count(std::size_t slot, const std::string& value) const;
    std::uint64_t user_slot_count(UserId user, std::size_t slot, const std::string& value) const;
    // Global occurrence count per slot for one probe vector.
    std::vector<std::uint64_t> value_counts(const FeatureVector& probe) const;

    struct UserCounts {
        std::uint64_t user_logins = 0;
        std::vector<std::uint64_t> matches; // per slot
    };
    UserCounts user_value_counts(UserId user, const FeatureVector& probe) const;

    // Brute-force equivalents that tally by scanning the full login log
    // prefix instead of reading the counter tables. Same answers, O(N).
    std::vector<std::uint64_t> scan_value_counts(const FeatureVector& probe) const;
    UserCounts scan_user_value_counts(UserId user, const FeatureVector& probe) const;

private:
    friend class HistoryStore;
    Snapshot(const HistoryStore* store, std::uint64_t seq, std::uint64_t epoch)
        : store_(store), seq_(seq), epoch_(epoch) {}

    const HistoryStore* store_;
    std::uint64_t seq_;
    std::uint64_t epoch_;
};

// Occurrence counters over subfeature values plus the per-user login log.
// Single writer, many readers: record_login/minimize serialize, reads see
// the latest committed state. Only successful logins are recorded.
class HistoryStore {
public:
    explicit HistoryStore(FeatureConfig config);

    HistoryStore(const HistoryStore&) = delete;
    HistoryStore& operator=(const HistoryStore&) = delete;
    HistoryStore(HistoryStore&&) = delete;
    HistoryStore& operator=(HistoryStore&&) = delete;

    const FeatureConfig& config() const { return config_; }

    // Extracts features and records. Throws Error(kArgument) on a failed
    // login. Returns the entry's sequence number.
    std::uint64_t record_login(const LoginRecord& record);
    // Records a pre-extracted vector (must be slot-aligned with the config).
    std::uint64_t record_login(UserId user, TimestampMs ts, const FeatureVector& values);

    Snapshot snapshot() const;

    std::uint64_t total_logins() const;
    std::uint64_t user_count() const;
    std::uint64_t user_logins(UserId user) const;

    // Drops entries older than now - window_days, except each user keeps
    // their min_user_entries most recent entries regardless of age.
    // Invalidates outstanding snapshots.
    void minimize(int window_days, int min_user_entries, TimestampMs now);
    void set_retention(std::optional<RetentionPolicy> policy);
    const std::optional<RetentionPolicy>& retention() const { return retention_; }
    // Applies the configured retention policy, if any.
    void apply_retention(TimestampMs now);

    MemoryReport memory_report() const;

    // Versioned binary image for service restarts. Not standardized across
    // machines; load rebuilds all counters from the entry log.
    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static std::unique_ptr<HistoryStore> load(std::istream& in);
    static std::unique_ptr<HistoryStore> load_file(const std::string& path);

private:
    friend class Snapshot;

    struct SlotTable {
        std::unordered_map<std::string, std::uint32_t> dict; // value -> id
        std::vector<std::uint64_t> counts;                   // id -> count
    };
    struct Entry {
        std::uint64_t seq;
        TimestampMs ts;
        std::vector<std::uint32_t> values; // per slot, interned
    };
    struct UserState {
        std::vector<Entry> entries; // ascending seq
    };
    struct LogRef {
        UserId user;
        std::uint32_t entry_idx;
    };

    std::uint32_t intern(std::size_t slot, const std::string& value);
    std::optional<std::uint32_t> find_id(std::size_t slot, const std::string& value) const;
    std::uint64_t record_locked(UserId user, TimestampMs ts, const FeatureVector& values);
    void check_epoch(std::uint64_t epoch) const;

    FeatureConfig config_;
    std::vector<std::string> slot_names_;
    std::vector<SlotTable> slots_;
    std::unordered_map<UserId, UserState> users_;
    std::vector<LogRef> log_;             // seq -> entry
    std::vector<std::uint64_t> first_seen_; // ascending seqs of first-time users
    std::uint64_t epoch_ = 0;
    std::optional<RetentionPolicy> retention_;
    mutable std::shared_mutex mutex_;
};

// Users bucketed by power-of-two successful-login count; from each bucket the
// ceil(fraction * size) users with the highest failed-attempt counts are
// taken, seeded tie-break. Returns ascending user ids.
std::vector<UserId> stratify_users(const LoginDataset& dataset, double fraction,
                                   const std::unordered_map<UserId, std::uint64_t>& failed_counts,
                                   std::uint64_t seed);

} // namespace rba
