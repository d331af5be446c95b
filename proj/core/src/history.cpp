#include "rba/history.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <mutex>
#include <set>
#include <sstream>

#include "rba/error.hpp"
#include "rba/rng.hpp"

namespace rba {

namespace {

constexpr std::int64_t kMsPerDay = 86'400'000;
constexpr std::uint32_t kNoId = std::numeric_limits<std::uint32_t>::max();

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if (a % b != 0 && ((a < 0) != (b < 0))) --q;
    return q;
}

// Rough footprint of one unordered_map node beyond the payload: next
// pointer plus cached hash.
constexpr std::size_t kMapNodeOverhead = 2 * sizeof(void*);

std::size_t string_heap_bytes(const std::string& s) {
    // libstdc++ SSO keeps up to 15 chars inline.
    return s.capacity() > 15 ? s.capacity() + 1 : 0;
}

void write_raw(std::ostream& out, const void* p, std::size_t n) {
    out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

void read_raw(std::istream& in, void* p, std::size_t n) {
    in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in.gcount()) != n) {
        throw Error(ErrorCode::kIo, "truncated history store image");
    }
}

template <typename T> void write_pod(std::ostream& out, T v) { write_raw(out, &v, sizeof(v)); }

template <typename T> T read_pod(std::istream& in) {
    T v;
    read_raw(in, &v, sizeof(v));
    return v;
}

void write_str(std::ostream& out, const std::string& s) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
    write_raw(out, s.data(), s.size());
}

std::string read_str(std::istream& in) {
    auto n = read_pod<std::uint32_t>(in);
    std::string s(n, '\0');
    if (n) read_raw(in, s.data(), n);
    return s;
}

constexpr char kMagic[8] = {'R', 'B', 'A', 'H', 'I', 'S', 'T', '1'};

} // namespace

const char* frequency_class_name(FrequencyClass c) {
    switch (c) {
    case FrequencyClass::kDaily: return "daily";
    case FrequencyClass::kSeveralDays: return "several_days";
    case FrequencyClass::kWeekly: return "weekly";
    case FrequencyClass::kSeveralWeeks: return "several_weeks";
    case FrequencyClass::kLessThanMonthly: return "less_than_monthly";
    case FrequencyClass::kUnclassified: return "unclassified";
    }
    return "unclassified";
}

std::int64_t utc_day_index(TimestampMs ts) { return floor_div(ts, kMsPerDay); }

std::int64_t week_index(TimestampMs ts) {
    // 1970-01-01 was a Thursday; +3 aligns the week index to Mondays.
    return floor_div(utc_day_index(ts) + 3, 7);
}

std::int64_t month_index(TimestampMs ts) {
    using namespace std::chrono;
    const sys_days day{days{utc_day_index(ts)}};
    const year_month_day ymd{day};
    return static_cast<std::int64_t>(static_cast<int>(ymd.year())) * 12 +
           (static_cast<std::int64_t>(static_cast<unsigned>(ymd.month())) - 1);
}

FrequencyClass classify_frequency(const std::vector<TimestampMs>& sorted_timestamps) {
    if (sorted_timestamps.size() < 2) return FrequencyClass::kUnclassified;
    std::vector<TimestampMs> ts = sorted_timestamps;
    std::sort(ts.begin(), ts.end());

    std::array<std::size_t, 5> gap_counts{};
    for (std::size_t i = 1; i < ts.size(); ++i) {
        const double gap_days = static_cast<double>(ts[i] - ts[i - 1]) / kMsPerDay;
        std::size_t cls;
        if (gap_days < 1.0) cls = 0;
        else if (gap_days < 7.0) cls = 1;
        else if (gap_days < 14.0) cls = 2;
        else if (gap_days < 30.0) cls = 3;
        else cls = 4;
        ++gap_counts[cls];
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < gap_counts.size(); ++i) {
        if (gap_counts[i] > gap_counts[best]) best = i;
    }
    const auto majority = static_cast<FrequencyClass>(best);

    std::set<std::int64_t> days, weeks, months;
    for (TimestampMs t : ts) {
        days.insert(utc_day_index(t));
        weeks.insert(week_index(t));
        months.insert(month_index(t));
    }
    switch (majority) {
    case FrequencyClass::kDaily:
        if (days.size() < 4) return FrequencyClass::kUnclassified;
        break;
    case FrequencyClass::kSeveralDays:
    case FrequencyClass::kWeekly:
        if (weeks.size() < 2) return FrequencyClass::kUnclassified;
        break;
    case FrequencyClass::kSeveralWeeks:
    case FrequencyClass::kLessThanMonthly:
        if (months.size() < 2) return FrequencyClass::kUnclassified;
        break;
    default:
        break;
    }
    return majority;
}

HistoryStore::HistoryStore(FeatureConfig config) : config_(std::move(config)) {
    validate_feature_config(config_);
    slot_names_ = config_.slot_names();
    slots_.resize(slot_names_.size());
}

std::uint32_t HistoryStore::intern(std::size_t slot, const std::string& value) {
    auto& table = slots_[slot];
    auto [it, inserted] = table.dict.emplace(value, static_cast<std::uint32_t>(table.counts.size()));
    if (inserted) table.counts.push_back(0);
    return it->second;
}

std::optional<std::uint32_t> HistoryStore::find_id(std::size_t slot, const std::string& value) const {
    const auto& dict = slots_[slot].dict;
    auto it = dict.find(value);
    if (it == dict.end()) return std::nullopt;
    return it->second;
}

std::uint64_t HistoryStore::record_login(const LoginRecord& record) {
    if (!record.login_successful) {
        throw Error(ErrorCode::kArgument, "only successful logins are recorded in history");
    }
    FeatureVector values = extract_features(record, config_);
    return record_login(record.user_id, record.login_timestamp, values);
}

std::uint64_t HistoryStore::record_login(UserId user, TimestampMs ts, const FeatureVector& values) {
    if (values.size() != slots_.size()) {
        throw Error(ErrorCode::kArgument, "feature vector does not match the store's config");
    }
    std::unique_lock lock(mutex_);
    return record_locked(user, ts, values);
}

std::uint64_t HistoryStore::record_locked(UserId user, TimestampMs ts, const FeatureVector& values) {
    const std::uint64_t seq = log_.size();
    const bool is_new = users_.find(user) == users_.end();
    auto& state = users_[user];

    Entry entry;
    entry.seq = seq;
    entry.ts = ts;
    entry.values.reserve(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const std::uint32_t id = intern(i, values[i]);
        ++slots_[i].counts[id];
        entry.values.push_back(id);
    }
    state.entries.push_back(std::move(entry));
    log_.push_back({user, static_cast<std::uint32_t>(state.entries.size() - 1)});
    if (is_new) first_seen_.push_back(seq);
    return seq;
}

Snapshot HistoryStore::snapshot() const {
    std::shared_lock lock(mutex_);
    return Snapshot(this, log_.size(), epoch_);
}

std::uint64_t HistoryStore::total_logins() const {
    std::shared_lock lock(mutex_);
    return log_.size();
}

std::uint64_t HistoryStore::user_count() const {
    std::shared_lock lock(mutex_);
    return users_.size();
}

std::uint64_t HistoryStore::user_logins(UserId user) const {
    std::shared_lock lock(mutex_);
    auto it = users_.find(user);
    return it == users_.end() ? 0 : it->second.entries.size();
}

void HistoryStore::check_epoch(std::uint64_t epoch) const {
    if (epoch != epoch_) {
        throw Error(ErrorCode::kConflict, "snapshot invalidated by history minimization");
    }
}

void HistoryStore::minimize(int window_days, int min_user_entries, TimestampMs now) {
    if (window_days <= 0) throw Error(ErrorCode::kArgument, "window_days must be positive");
    if (min_user_entries < 0) throw Error(ErrorCode::kArgument, "min_user_entries must be >= 0");
    std::unique_lock lock(mutex_);

    const TimestampMs cutoff = now - static_cast<TimestampMs>(window_days) * kMsPerDay;

    // Per-user keep flags, indexed like the entries vector.
    std::unordered_map<UserId, std::vector<char>> keep;
    keep.reserve(users_.size());
    for (const auto& [user, state] : users_) {
        auto& flags = keep[user];
        flags.assign(state.entries.size(), 0);
        std::size_t kept = 0;
        for (std::size_t i = 0; i < state.entries.size(); ++i) {
            if (state.entries[i].ts >= cutoff) {
                flags[i] = 1;
                ++kept;
            }
        }
        const std::size_t want =
            std::min<std::size_t>(static_cast<std::size_t>(min_user_entries), state.entries.size());
        if (kept < want) {
            // Top up with the most recent dropped entries.
            std::vector<std::size_t> dropped;
            for (std::size_t i = 0; i < state.entries.size(); ++i) {
                if (!flags[i]) dropped.push_back(i);
            }
            std::sort(dropped.begin(), dropped.end(), [&](std::size_t a, std::size_t b) {
                const auto& ea = state.entries[a];
                const auto& eb = state.entries[b];
                if (ea.ts != eb.ts) return ea.ts > eb.ts;
                return ea.seq > eb.seq;
            });
            for (std::size_t i = 0; i < dropped.size() && kept < want; ++i, ++kept) {
                flags[dropped[i]] = 1;
            }
        }
    }

    // Reverse maps id -> value for re-interning.
    std::vector<std::vector<const std::string*>> id_to_value(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        id_to_value[i].resize(slots_[i].counts.size(), nullptr);
        for (const auto& [value, id] : slots_[i].dict) id_to_value[i][id] = &value;
    }

    std::vector<SlotTable> new_slots(slots_.size());
    std::unordered_map<UserId, UserState> new_users;
    std::vector<LogRef> new_log;
    std::vector<std::uint64_t> new_first_seen;

    auto intern_into = [](SlotTable& table, const std::string& value) {
        auto [it, inserted] = table.dict.emplace(value, static_cast<std::uint32_t>(table.counts.size()));
        if (inserted) table.counts.push_back(0);
        return it->second;
    };

    for (const auto& ref : log_) {
        const auto& state = users_.at(ref.user);
        if (!keep.at(ref.user)[ref.entry_idx]) continue;
        const Entry& old_entry = state.entries[ref.entry_idx];

        const std::uint64_t seq = new_log.size();
        const bool is_new = new_users.find(ref.user) == new_users.end();
        auto& new_state = new_users[ref.user];
        Entry entry;
        entry.seq = seq;
        entry.ts = old_entry.ts;
        entry.values.reserve(slots_.size());
        for (std::size_t i = 0; i < slots_.size(); ++i) {
            const std::uint32_t id = intern_into(new_slots[i], *id_to_value[i][old_entry.values[i]]);
            ++new_slots[i].counts[id];
            entry.values.push_back(id);
        }
        new_state.entries.push_back(std::move(entry));
        new_log.push_back({ref.user, static_cast<std::uint32_t>(new_state.entries.size() - 1)});
        if (is_new) new_first_seen.push_back(seq);
    }

    slots_ = std::move(new_slots);
    users_ = std::move(new_users);
    log_ = std::move(new_log);
    first_seen_ = std::move(new_first_seen);
    ++epoch_;
}

void HistoryStore::set_retention(std::optional<RetentionPolicy> policy) {
    std::unique_lock lock(mutex_);
    if (policy && policy->window_days <= 0) {
        throw Error(ErrorCode::kArgument, "retention window_days must be positive");
    }
    retention_ = policy;
}

void HistoryStore::apply_retention(TimestampMs now) {
    std::optional<RetentionPolicy> policy;
    {
        std::shared_lock lock(mutex_);
        policy = retention_;
    }
    if (policy) minimize(policy->window_days, policy->min_user_entries, now);
}

MemoryReport HistoryStore::memory_report() const {
    std::shared_lock lock(mutex_);
    MemoryReport report;
    for (std::size_t i = 0; i < slots_.size(); ++i) {
        const auto& table = slots_[i];
        std::size_t bytes = 0;
        if (!table.dict.empty()) {
            bytes += table.dict.bucket_count() * sizeof(void*);
            for (const auto& [value, id] : table.dict) {
                bytes += sizeof(std::pair<const std::string, std::uint32_t>) + kMapNodeOverhead;
                bytes += string_heap_bytes(value);
            }
        }
        bytes += table.counts.capacity() * sizeof(std::uint64_t);
        report.counter_tables[slot_names_[i]] = bytes;
        report.counter_total += bytes;
    }
    std::size_t user_table = 0;
    if (!users_.empty()) {
        user_table += users_.bucket_count() * sizeof(void*);
        user_table += users_.size() * (sizeof(UserId) + sizeof(std::uint64_t) + kMapNodeOverhead);
    }
    report.counter_tables["user_logins"] = user_table;
    report.counter_total += user_table;

    std::size_t history = 0;
    for (const auto& [user, state] : users_) {
        history += state.entries.capacity() * sizeof(Entry);
        for (const auto& entry : state.entries) {
            history += entry.values.capacity() * sizeof(std::uint32_t);
        }
    }
    history += log_.capacity() * sizeof(LogRef);
    history += first_seen_.capacity() * sizeof(std::uint64_t);
    report.login_history = history;
    return report;
}

void HistoryStore::save(std::ostream& out) const {
    std::shared_lock lock(mutex_);
    write_raw(out, kMagic, sizeof(kMagic));
    write_pod<std::uint32_t>(out, 1);

    const std::string config_json = feature_config_to_json(config_);
    write_pod<std::uint64_t>(out, config_json.size());
    write_raw(out, config_json.data(), config_json.size());

    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(slots_.size()));
    for (const auto& table : slots_) {
        std::vector<const std::string*> by_id(table.counts.size(), nullptr);
        for (const auto& [value, id] : table.dict) by_id[id] = &value;
        write_pod<std::uint64_t>(out, by_id.size());
        for (const auto* value : by_id) write_str(out, *value);
    }

    write_pod<std::uint64_t>(out, log_.size());
    for (const auto& ref : log_) {
        const Entry& entry = users_.at(ref.user).entries[ref.entry_idx];
        write_pod<std::uint64_t>(out, ref.user);
        write_pod<std::int64_t>(out, entry.ts);
        for (std::uint32_t id : entry.values) write_pod<std::uint32_t>(out, id);
    }

    write_pod<std::uint8_t>(out, retention_ ? 1 : 0);
    if (retention_) {
        write_pod<std::int32_t>(out, retention_->window_days);
        write_pod<std::int32_t>(out, retention_->min_user_entries);
    }
    if (!out) throw Error(ErrorCode::kIo, "failed to write history store image");
}

void HistoryStore::save_file(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
    save(out);
}

std::unique_ptr<HistoryStore> HistoryStore::load(std::istream& in) {
    char magic[8];
    read_raw(in, magic, sizeof(magic));
    if (std::memcmp(magic, kMagic, sizeof(magic)) != 0) {
        throw Error(ErrorCode::kIo, "not a history store image");
    }
    const auto version = read_pod<std::uint32_t>(in);
    if (version != 1) {
        throw Error(ErrorCode::kIo, "unsupported history store version " + std::to_string(version));
    }

    const auto config_len = read_pod<std::uint64_t>(in);
    std::string config_json(config_len, '\0');
    if (config_len) read_raw(in, config_json.data(), config_len);
    auto store = std::make_unique<HistoryStore>(feature_config_from_json(config_json));

    const auto slot_count = read_pod<std::uint32_t>(in);
    if (slot_count != store->slots_.size()) {
        throw Error(ErrorCode::kIo, "history store image slot count mismatch");
    }
    for (auto& table : store->slots_) {
        const auto n = read_pod<std::uint64_t>(in);
        table.counts.assign(n, 0);
        table.dict.reserve(n);
        for (std::uint64_t id = 0; id < n; ++id) {
            table.dict.emplace(read_str(in), static_cast<std::uint32_t>(id));
        }
    }

    const auto log_len = read_pod<std::uint64_t>(in);
    for (std::uint64_t i = 0; i < log_len; ++i) {
        const auto user = read_pod<std::uint64_t>(in);
        const auto ts = read_pod<std::int64_t>(in);
        const std::uint64_t seq = store->log_.size();
        const bool is_new = store->users_.find(user) == store->users_.end();
        auto& state = store->users_[user];
        Entry entry;
        entry.seq = seq;
        entry.ts = ts;
        entry.values.reserve(slot_count);
        for (std::uint32_t s = 0; s < slot_count; ++s) {
            const auto id = read_pod<std::uint32_t>(in);
            if (id >= store->slots_[s].counts.size()) {
                throw Error(ErrorCode::kIo, "history store image references unknown value id");
            }
            ++store->slots_[s].counts[id];
            entry.values.push_back(id);
        }
        state.entries.push_back(std::move(entry));
        store->log_.push_back({user, static_cast<std::uint32_t>(state.entries.size() - 1)});
        if (is_new) store->first_seen_.push_back(seq);
    }

    if (read_pod<std::uint8_t>(in)) {
        RetentionPolicy policy;
        policy.window_days = read_pod<std::int32_t>(in);
        policy.min_user_entries = read_pod<std::int32_t>(in);
        store->retention_ = policy;
    }
    return store;
}

std::unique_ptr<HistoryStore> HistoryStore::load_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    return load(in);
}

std::uint64_t Snapshot::total_logins() const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    return seq_;
}

std::uint64_t Snapshot::user_count() const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    const auto& first_seen = store_->first_seen_;
    return static_cast<std::uint64_t>(
        std::lower_bound(first_seen.begin(), first_seen.end(), seq_) - first_seen.begin());
}

std::uint64_t Snapshot::user_logins(UserId user) const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    auto it = store_->users_.find(user);
    if (it == store_->users_.end()) return 0;
    const auto& entries = it->second.entries;
    auto pos = std::lower_bound(entries.begin(), entries.end(), seq_,
                                [](const HistoryStore::Entry& e, std::uint64_t s) { return e.seq < s; });
    return static_cast<std::uint64_t>(pos - entries.begin());
}

std::uint64_t Snapshot::value_count(std::size_t slot, const std::string& value) const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    auto id = store_->find_id(slot, value);
    if (!id) return 0;
    std::uint64_t count = store_->slots_[slot].counts[*id];
    for (std::uint64_t s = seq_; s < store_->log_.size(); ++s) {
        const auto& ref = store_->log_[s];
        const auto& entry = store_->users_.at(ref.user).entries[ref.entry_idx];
        if (entry.values[slot] == *id) --count;
    }
    return count;
}

std::uint64_t Snapshot::user_slot_count(UserId user, std::size_t slot, const std::string& value) const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    auto id = store_->find_id(slot, value);
    if (!id) return 0;
    auto it = store_->users_.find(user);
    if (it == store_->users_.end()) return 0;
    std::uint64_t count = 0;
    for (const auto& entry : it->second.entries) {
        if (entry.seq >= seq_) break;
        if (entry.values[slot] == *id) ++count;
    }
    return count;
}

std::vector<std::uint64_t> Snapshot::value_counts(const FeatureVector& probe) const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    const std::size_t slots = store_->slots_.size();
    if (probe.size() != slots) {
        throw Error(ErrorCode::kArgument, "probe does not match the store's config");
    }
    std::vector<std::uint32_t> ids(slots, kNoId);
    std::vector<std::uint64_t> counts(slots, 0);
    for (std::size_t i = 0; i < slots; ++i) {
        if (auto id = store_->find_id(i, probe[i])) {
            ids[i] = *id;
            counts[i] = store_->slots_[i].counts[*id];
        }
    }
    for (std::uint64_t s = seq_; s < store_->log_.size(); ++s) {
        const auto& ref = store_->log_[s];
        const auto& entry = store_->users_.at(ref.user).entries[ref.entry_idx];
        for (std::size_t i = 0; i < slots; ++i) {
            if (ids[i] != kNoId && entry.values[i] == ids[i]) --counts[i];
        }
    }
    return counts;
}

Snapshot::UserCounts Snapshot::user_value_counts(UserId user, const FeatureVector& probe) const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    const std::size_t slots = store_->slots_.size();
    if (probe.size() != slots) {
        throw Error(ErrorCode::kArgument, "probe does not match the store's config");
    }
    UserCounts result;
    result.matches.assign(slots, 0);
    auto it = store_->users_.find(user);
    if (it == store_->users_.end()) return result;

    std::vector<std::uint32_t> ids(slots, kNoId);
    for (std::size_t i = 0; i < slots; ++i) {
        if (auto id = store_->find_id(i, probe[i])) ids[i] = *id;
    }
    for (const auto& entry : it->second.entries) {
        if (entry.seq >= seq_) break;
        ++result.user_logins;
        for (std::size_t i = 0; i < slots; ++i) {
            if (entry.values[i] == ids[i]) ++result.matches[i];
        }
    }
    return result;
}

std::vector<std::uint64_t> Snapshot::scan_value_counts(const FeatureVector& probe) const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    const std::size_t slots = store_->slots_.size();
    if (probe.size() != slots) {
        throw Error(ErrorCode::kArgument, "probe does not match the store's config");
    }
    std::vector<std::uint32_t> ids(slots, kNoId);
    for (std::size_t i = 0; i < slots; ++i) {
        if (auto id = store_->find_id(i, probe[i])) ids[i] = *id;
    }
    std::vector<std::uint64_t> counts(slots, 0);
    for (std::uint64_t s = 0; s < seq_; ++s) {
        const auto& ref = store_->log_[s];
        const auto& entry = store_->users_.at(ref.user).entries[ref.entry_idx];
        for (std::size_t i = 0; i < slots; ++i) {
            if (ids[i] != kNoId && entry.values[i] == ids[i]) ++counts[i];
        }
    }
    return counts;
}

Snapshot::UserCounts Snapshot::scan_user_value_counts(UserId user, const FeatureVector& probe) const {
    std::shared_lock lock(store_->mutex_);
    store_->check_epoch(epoch_);
    const std::size_t slots = store_->slots_.size();
    if (probe.size() != slots) {
        throw Error(ErrorCode::kArgument, "probe does not match the store's config");
    }
    std::vector<std::uint32_t> ids(slots, kNoId);
    for (std::size_t i = 0; i < slots; ++i) {
        if (auto id = store_->find_id(i, probe[i])) ids[i] = *id;
    }
    UserCounts result;
    result.matches.assign(slots, 0);
    for (std::uint64_t s = 0; s < seq_; ++s) {
        const auto& ref = store_->log_[s];
        if (ref.user != user) continue;
        const auto& entry = store_->users_.at(ref.user).entries[ref.entry_idx];
        ++result.user_logins;
        for (std::size_t i = 0; i < slots; ++i) {
            if (ids[i] != kNoId && entry.values[i] == ids[i]) ++result.matches[i];
        }
    }
    return result;
}

std::vector<UserId> stratify_users(const LoginDataset& dataset, double fraction,
                                   const std::unordered_map<UserId, std::uint64_t>& failed_counts,
                                   std::uint64_t seed) {
    if (!(fraction > 0.0) || !(fraction <= 1.0)) {
        throw Error(ErrorCode::kArgument, "stratify fraction must be in (0, 1]");
    }
    std::unordered_map<UserId, std::uint64_t> login_counts;
    for (const auto& r : dataset.records()) {
        if (r.login_successful) ++login_counts[r.user_id];
    }

    std::map<unsigned, std::vector<UserId>> buckets;
    for (const auto& [user, count] : login_counts) {
        buckets[std::bit_width(count) - 1].push_back(user);
    }

    const std::uint64_t stream = derive_seed(seed, "stratify");
    auto failed_of = [&](UserId u) -> std::uint64_t {
        auto it = failed_counts.find(u);
        return it == failed_counts.end() ? 0 : it->second;
    };

    std::vector<UserId> selected;
    for (auto& [bucket, users] : buckets) {
        std::sort(users.begin(), users.end(), [&](UserId a, UserId b) {
            const auto fa = failed_of(a);
            const auto fb = failed_of(b);
            if (fa != fb) return fa > fb;
            const auto ta = splitmix64(stream ^ a);
            const auto tb = splitmix64(stream ^ b);
            if (ta != tb) return ta < tb;
            return a < b;
        });
        auto take = static_cast<std::size_t>(
            std::ceil(fraction * static_cast<double>(users.size())));
        take = std::min(take, users.size());
        selected.insert(selected.end(), users.begin(), users.begin() + take);
    }
    std::sort(selected.begin(), selected.end());
    return selected;
}

} // namespace rba
