#include "rba/attacker.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <unordered_map>

#include "rba/error.hpp"
#include "rba/rng.hpp"

namespace rba {

namespace {

// "Top" and "most popular" pools cycle through this many ranked entries.
constexpr std::size_t kTopPool = 10;

struct UaTuple {
    std::string user_agent;
    std::string os;
    std::string browser;
    DeviceType device_type = DeviceType::kUnknown;
};

struct RankedValue {
    std::size_t row = 0; // representative source row (first seen)
    std::uint64_t count = 0;
};

std::string ua_key(const LoginRecord& r) {
    std::string key = r.user_agent;
    key.push_back('\x1f');
    key += r.os;
    key.push_back('\x1f');
    key += r.browser;
    key.push_back('\x1f');
    key += device_type_name(r.device_type);
    return key;
}

// Ranked desc by count; ties by first appearance. Returns representative
// row indices.
template <typename Filter, typename KeyFn>
std::vector<RankedValue> rank_values(const std::vector<LoginRecord>& records, Filter filter,
                                     KeyFn key_fn) {
    std::unordered_map<std::string, RankedValue> counts;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (!filter(records[i])) continue;
        auto [it, inserted] = counts.emplace(key_fn(records[i]), RankedValue{i, 0});
        ++it->second.count;
    }
    std::vector<RankedValue> ranked;
    ranked.reserve(counts.size());
    for (const auto& [key, value] : counts) ranked.push_back(value);
    std::sort(ranked.begin(), ranked.end(), [](const RankedValue& a, const RankedValue& b) {
        if (a.count != b.count) return a.count > b.count;
        return a.row < b.row;
    });
    return ranked;
}

std::unordered_map<UserId, TimestampMs> last_success_times(const std::vector<LoginRecord>& records) {
    std::unordered_map<UserId, TimestampMs> last;
    for (const auto& r : records) {
        if (r.login_successful) last[r.user_id] = r.login_timestamp; // records are time-sorted
    }
    return last;
}

std::vector<UserId> default_victims(const std::unordered_map<UserId, TimestampMs>& last) {
    std::vector<UserId> victims;
    victims.reserve(last.size());
    for (const auto& [user, ts] : last) victims.push_back(user);
    std::sort(victims.begin(), victims.end());
    return victims;
}

std::string most_frequent_country(const std::vector<LoginRecord>& records) {
    std::unordered_map<std::string, std::uint64_t> counts;
    for (const auto& r : records) {
        if (r.login_successful) ++counts[r.country];
    }
    std::string best;
    std::uint64_t best_count = 0;
    for (const auto& [country, count] : counts) {
        if (count > best_count || (count == best_count && country < best)) {
            best = country;
            best_count = count;
        }
    }
    if (best_count == 0) throw Error(ErrorCode::kArgument, "dataset has no successful logins");
    return best;
}

LoginRecord compose_context(const LoginRecord& geo_source, const LoginRecord& ua_source,
                            UserId victim, TimestampMs ts) {
    LoginRecord r;
    r.user_id = victim;
    r.login_timestamp = ts;
    r.ip_address = geo_source.ip_address;
    r.country = geo_source.country;
    r.region = geo_source.region;
    r.city = geo_source.city;
    r.asn = geo_source.asn;
    r.rtt_ms = geo_source.rtt_ms;
    r.user_agent = ua_source.user_agent;
    r.os = ua_source.os;
    r.browser = ua_source.browser;
    r.device_type = ua_source.device_type;
    r.login_successful = true;
    r.is_attack_ip = true;
    r.is_account_takeover = false;
    return r;
}

struct BuildContext {
    const std::vector<LoginRecord>& records;
    std::unordered_map<UserId, TimestampMs> last_login;
    std::vector<UserId> victims;
    TimestampMs fallback_ts = 0;
    std::mt19937_64 rng;

    BuildContext(const LoginDataset& dataset, const AttackerBuildOptions& options,
                 const char* stream)
        : records(dataset.records()), rng(make_rng(options.seed, stream)) {
        if (options.n == 0) throw Error(ErrorCode::kArgument, "attacker sample size must be > 0");
        last_login = last_success_times(records);
        victims = options.victims.empty() ? default_victims(last_login) : options.victims;
        if (victims.empty()) throw Error(ErrorCode::kArgument, "no victim accounts available");
        fallback_ts = records.empty() ? 0 : records.back().login_timestamp;
    }

    UserId pick_victim() { return victims[bounded_rand(rng, victims.size())]; }

    TimestampMs injection_time(UserId victim) const {
        auto it = last_login.find(victim);
        return it == last_login.end() ? fallback_ts : it->second;
    }

    std::size_t pick_index(std::size_t size) {
        return static_cast<std::size_t>(bounded_rand(rng, size));
    }
};

bool is_attack_row(const LoginRecord& r) { return r.is_attack_ip && !r.login_successful; }

} // namespace

const char* attacker_model_name(AttackerModel model) {
    switch (model) {
    case AttackerModel::kNaive: return "naive";
    case AttackerModel::kVpn: return "vpn";
    case AttackerModel::kTargeted: return "targeted";
    case AttackerModel::kVeryTargeted: return "very-targeted";
    }
    return "naive";
}

AttackerModel attacker_model_from_name(const std::string& name) {
    if (name == "naive") return AttackerModel::kNaive;
    if (name == "vpn") return AttackerModel::kVpn;
    if (name == "targeted") return AttackerModel::kTargeted;
    if (name == "very-targeted") return AttackerModel::kVeryTargeted;
    throw Error(ErrorCode::kArgument, "unknown attacker model '" + name + "'");
}

AttackerSample build_naive_sample(const LoginDataset& dataset, const AttackerBuildOptions& options) {
    BuildContext ctx(dataset, options, "naive-attacker");
    const auto& records = ctx.records;

    // Most-occurring attack IP per ASN.
    std::map<int, std::unordered_map<std::string, RankedValue>> per_asn;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (!is_attack_row(r)) continue;
        auto [it, inserted] = per_asn[r.asn].emplace(r.ip_address, RankedValue{i, 0});
        ++it->second.count;
    }
    if (per_asn.empty()) {
        throw Error(ErrorCode::kArgument, "dataset has no flagged attack IPs");
    }
    std::vector<RankedValue> candidates; // one per ASN
    for (const auto& [asn, ips] : per_asn) {
        const RankedValue* best = nullptr;
        for (const auto& [ip, value] : ips) {
            if (!best || value.count > best->count ||
                (value.count == best->count &&
                 records[value.row].ip_address < records[best->row].ip_address)) {
                best = &value;
            }
        }
        candidates.push_back(*best);
    }

    // Candidates grouped by country for the uniform-country half.
    std::map<std::string, std::vector<std::size_t>> by_country;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        by_country[records[candidates[i].row].country].push_back(i);
    }
    std::vector<std::string> countries;
    for (const auto& [country, idx] : by_country) countries.push_back(country);

    std::vector<RankedValue> top_ips = candidates;
    std::sort(top_ips.begin(), top_ips.end(), [&](const RankedValue& a, const RankedValue& b) {
        if (a.count != b.count) return a.count > b.count;
        return records[a.row].ip_address < records[b.row].ip_address;
    });
    const std::size_t ip_pool = std::min(kTopPool, top_ips.size());

    const auto top_uas = rank_values(records, is_attack_row, ua_key);
    const std::size_t ua_pool = std::min(kTopPool, top_uas.size());
    const auto all_uas = rank_values(records, [](const LoginRecord&) { return true; }, ua_key);

    AttackerSample sample;
    sample.model = AttackerModel::kNaive;
    if (top_ips.size() < kTopPool) {
        sample.warnings.push_back("naive attacker IP pool clamped to " +
                                  std::to_string(top_ips.size()) + " candidates");
    }
    std::size_t top_counter = 0;
    for (std::size_t i = 0; i < options.n; ++i) {
        const UserId victim = ctx.pick_victim();
        const LoginRecord* geo;
        const LoginRecord* ua;
        if (i % 2 == 0) {
            const auto& country = countries[ctx.pick_index(countries.size())];
            const auto& pool = by_country[country];
            geo = &records[candidates[pool[ctx.pick_index(pool.size())]].row];
            ua = &records[all_uas[ctx.pick_index(all_uas.size())].row];
        } else {
            geo = &records[top_ips[top_counter % ip_pool].row];
            ua = &records[top_uas[top_counter % ua_pool].row];
            ++top_counter;
        }
        const TimestampMs ts = ctx.injection_time(victim);
        sample.attempts.push_back({victim, ts, compose_context(*geo, *ua, victim, ts)});
    }
    return sample;
}

AttackerSample build_vpn_sample(const LoginDataset& dataset, const AttackerBuildOptions& options) {
    BuildContext ctx(dataset, options, "vpn-attacker");
    const auto& records = ctx.records;
    const std::string country =
        options.main_country.empty() ? most_frequent_country(records) : options.main_country;

    std::vector<std::size_t> ip_rows;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (is_attack_row(records[i]) && records[i].country == country) ip_rows.push_back(i);
    }
    if (ip_rows.empty()) {
        throw Error(ErrorCode::kArgument, "no flagged attack IPs in country '" + country + "'");
    }

    const auto legit_uas = rank_values(
        records, [](const LoginRecord& r) { return r.login_successful; }, ua_key);
    if (legit_uas.empty()) throw Error(ErrorCode::kArgument, "dataset has no successful logins");
    const std::size_t ua_pool = std::min(kTopPool, legit_uas.size());

    AttackerSample sample;
    sample.model = AttackerModel::kVpn;
    if (legit_uas.size() < kTopPool) {
        sample.warnings.push_back("vpn attacker UA pool clamped to " +
                                  std::to_string(legit_uas.size()) + " candidates");
    }
    for (std::size_t i = 0; i < options.n; ++i) {
        const UserId victim = ctx.pick_victim();
        const auto& geo = records[ip_rows[ctx.pick_index(ip_rows.size())]];
        const auto& ua = records[legit_uas[i % ua_pool].row];
        const TimestampMs ts = ctx.injection_time(victim);
        sample.attempts.push_back({victim, ts, compose_context(geo, ua, victim, ts)});
    }
    return sample;
}

AttackerSample build_targeted_sample(const LoginDataset& dataset,
                                     const AttackerBuildOptions& options) {
    BuildContext ctx(dataset, options, "targeted-attacker");
    const auto& records = ctx.records;
    const std::string country =
        options.main_country.empty() ? most_frequent_country(records) : options.main_country;

    auto in_country_failed = [&](const LoginRecord& r) {
        return !r.login_successful && r.country == country;
    };
    const auto top_ips =
        rank_values(records, in_country_failed, [](const LoginRecord& r) { return r.ip_address; });
    const auto top_uas = rank_values(records, in_country_failed, ua_key);
    if (top_ips.empty()) {
        throw Error(ErrorCode::kArgument, "no failed attempts in country '" + country + "'");
    }
    const std::size_t ip_pool = std::min(kTopPool, top_ips.size());
    const std::size_t ua_pool = std::min(kTopPool, top_uas.size());

    AttackerSample sample;
    sample.model = AttackerModel::kTargeted;
    if (top_ips.size() < kTopPool || top_uas.size() < kTopPool) {
        sample.warnings.push_back("targeted attacker pools clamped to " +
                                  std::to_string(top_ips.size()) + " IPs / " +
                                  std::to_string(top_uas.size()) + " UAs");
    }
    for (std::size_t i = 0; i < options.n; ++i) {
        const UserId victim = ctx.pick_victim();
        const auto& geo = records[top_ips[i % ip_pool].row];
        const auto& ua = records[top_uas[i % ua_pool].row];
        const TimestampMs ts = ctx.injection_time(victim);
        sample.attempts.push_back({victim, ts, compose_context(geo, ua, victim, ts)});
    }
    return sample;
}

AttackerSample build_very_targeted_sample(const LoginDataset& dataset) {
    AttackerSample sample;
    sample.model = AttackerModel::kVeryTargeted;
    for (const auto& r : dataset.records()) {
        if (r.is_account_takeover) {
            sample.attempts.push_back({r.user_id, r.login_timestamp, r});
        }
    }
    if (sample.attempts.empty()) {
        throw Error(ErrorCode::kArgument, "dataset has no account-takeover rows");
    }
    return sample;
}

Blocklist Blocklist::load(std::istream& in) {
    Blocklist list;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        // trim
        const auto first = line.find_first_not_of(" \t\r");
        if (first == std::string::npos) continue;
        const auto last = line.find_last_not_of(" \t\r");
        std::string entry = line.substr(first, last - first + 1);

        std::uint32_t base = 0;
        int prefix = 32;
        std::string ip_part = entry;
        if (auto slash = entry.find('/'); slash != std::string::npos) {
            ip_part = entry.substr(0, slash);
            const std::string prefix_part = entry.substr(slash + 1);
            auto [p, ec] = std::from_chars(prefix_part.data(),
                                           prefix_part.data() + prefix_part.size(), prefix);
            if (ec != std::errc() || p != prefix_part.data() + prefix_part.size() || prefix < 0 ||
                prefix > 32) {
                throw Error(ErrorCode::kArgument,
                            "blocklist line " + std::to_string(line_no) + ": bad CIDR prefix");
            }
        }
        // parse dotted quad; fall back to exact-string entries
        unsigned a, b, c, d;
        char extra;
        if (std::sscanf(ip_part.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &extra) == 4 && a < 256 &&
            b < 256 && c < 256 && d < 256) {
            base = (a << 24) | (b << 16) | (c << 8) | d;
            const std::uint32_t mask =
                prefix == 0 ? 0 : (0xFFFFFFFFu << (32 - static_cast<unsigned>(prefix)));
            list.cidrs_.push_back({base & mask, mask});
        } else {
            list.exact_.push_back(entry);
        }
    }
    return list;
}

Blocklist Blocklist::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    return load(in);
}

bool Blocklist::contains(const std::string& ip) const {
    unsigned a, b, c, d;
    char extra;
    if (std::sscanf(ip.c_str(), "%u.%u.%u.%u%c", &a, &b, &c, &d, &extra) == 4 && a < 256 &&
        b < 256 && c < 256 && d < 256) {
        const std::uint32_t value = (a << 24) | (b << 16) | (c << 8) | d;
        for (const auto& cidr : cidrs_) {
            if ((value & cidr.mask) == cidr.base) return true;
        }
    }
    return std::find(exact_.begin(), exact_.end(), ip) != exact_.end();
}

LoginDataset mark_attack_ips(const LoginDataset& dataset, const Blocklist& blocklist) {
    std::vector<LoginRecord> records = dataset.records();
    for (auto& r : records) {
        if (!r.login_successful && blocklist.contains(r.ip_address)) r.is_attack_ip = true;
    }
    return LoginDataset(std::move(records));
}

} // namespace rba
