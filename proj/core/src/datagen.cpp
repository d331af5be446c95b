#include "rba/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "rba/error.hpp"
#include "rba/rng.hpp"

namespace rba {
namespace {

constexpr std::int64_t kDayMs = 86'400'000;
constexpr std::size_t kLeavesPerCountry = 12; // 3 regions x 2 cities x 2 ASNs

const char* const kCountryCodes[] = {
    "US", "DE", "BR", "IN", "JP", "GB", "FR", "CA", "AU", "NL",
    "SE", "PL", "IT", "ES", "MX", "KR", "ZA", "NO", "FI", "DK",
    "AR", "CL", "PT", "GR", "TR", "TH", "VN", "ID", "PH", "NZ",
};

struct GeoLeaf {
    std::string region;
    std::string city;
    int asn = 0;
    std::uint32_t ip_base = 0;
};

struct Country {
    std::string code;
    std::vector<GeoLeaf> leaves;
    std::vector<std::string> ip_pool;
    std::vector<std::uint32_t> ip_leaf; // leaf index per pool entry
    std::int64_t rtt_base = 100;
};

struct UaEntry {
    std::string ua;
    std::string browser;
    std::string os;
    DeviceType device = DeviceType::kUnknown;
};

struct AttackIp {
    std::string ip;
    std::size_t country = 0;
    std::uint32_t leaf = 0;
};

std::string format_ip(std::uint32_t ip) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", ip >> 24, (ip >> 16) & 0xffu, (ip >> 8) & 0xffu,
                  ip & 0xffu);
    return buf;
}

// Precomputed 1/(i+1) weights; draws are a binary search on the cdf.
class ZipfSampler {
public:
    explicit ZipfSampler(std::size_t n) : cdf_(n) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            sum += 1.0 / static_cast<double>(i + 1);
            cdf_[i] = sum;
        }
        for (auto& v : cdf_) v /= sum;
    }

    std::size_t pick(std::mt19937_64& rng) const {
        const double u = unit_real(rng);
        const auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
        return it == cdf_.end() ? cdf_.size() - 1 : static_cast<std::size_t>(it - cdf_.begin());
    }

private:
    std::vector<double> cdf_;
};

std::vector<UaEntry> build_ua_catalog() {
    struct Platform {
        const char* token;
        const char* os_name;
        DeviceType device;
        bool apple;
        bool mobile;
    };
    const Platform platforms[] = {
        {"Windows NT 10.0; Win64; x64", "Windows 10", DeviceType::kDesktop, false, false},
        {"Windows NT 6.1; Win64; x64", "Windows 7", DeviceType::kDesktop, false, false},
        {"Macintosh; Intel Mac OS X 13_2", "macOS 13.2", DeviceType::kDesktop, true, false},
        {"X11; Ubuntu; Linux x86_64", "Ubuntu 22.04", DeviceType::kDesktop, false, false},
        {"Linux; Android 13", "Android 13", DeviceType::kMobile, false, true},
        {"iPhone; CPU iPhone OS 16_5 like Mac OS X", "iOS 16.5", DeviceType::kMobile, true, true},
        {"iPad; CPU OS 16_5 like Mac OS X", "iPadOS 16.5", DeviceType::kTablet, true, true},
    };
    struct Browser {
        const char* token;
        const char* name;
        bool apple_only;
        bool desktop_only;
    };
    const Browser browsers[] = {
        {"Chrome/114.0.5735", "Chrome 114.0", false, false},
        {"Chrome/118.0.5993", "Chrome 118.0", false, false},
        {"Firefox/115.0", "Firefox 115.0", false, false},
        {"Safari/605.1.15", "Safari 16.5", true, false},
        {"Edg/114.0.1823", "Edge 114.0", false, true},
        {"OPR/100.0.4815", "Opera 100.0", false, true},
    };

    std::vector<UaEntry> catalog;
    for (const auto& p : platforms) {
        for (const auto& b : browsers) {
            if (b.apple_only && !p.apple) continue;
            if (b.desktop_only && p.mobile) continue;
            for (int v = 0; v < 16; ++v) {
                UaEntry e;
                e.ua = std::string("Mozilla/5.0 (") + p.token + ") AppleWebKit/537.36 (KHTML, like Gecko) " +
                       b.token + " rv:" + std::to_string(v);
                e.browser = b.name;
                e.os = p.os_name;
                e.device = p.device;
                catalog.push_back(std::move(e));
            }
        }
    }
    return catalog;
}

std::string country_code(std::size_t i) {
    constexpr std::size_t n = sizeof(kCountryCodes) / sizeof(kCountryCodes[0]);
    if (i < n) return kCountryCodes[i];
    return "X" + std::to_string(i);
}

std::vector<Country> build_world(const DatagenConfig& cfg) {
    const char* const city_names[] = {"North", "South"};
    std::vector<Country> world(cfg.countries);
    for (std::size_t i = 0; i < cfg.countries; ++i) {
        auto& c = world[i];
        c.code = country_code(i);
        c.rtt_base = 40 + 13 * static_cast<std::int64_t>(i);
        c.leaves.reserve(kLeavesPerCountry);
        for (int r = 0; r < 3; ++r) {
            for (int city = 0; city < 2; ++city) {
                for (int a = 0; a < 2; ++a) {
                    GeoLeaf leaf;
                    leaf.region = c.code + "-R" + std::to_string(r);
                    leaf.city = leaf.region + "-" + city_names[city];
                    const std::size_t leaf_index = c.leaves.size();
                    leaf.asn = static_cast<int>(1000 + i * kLeavesPerCountry + leaf_index);
                    leaf.ip_base =
                        0x0A000000u + static_cast<std::uint32_t>(i * kLeavesPerCountry + leaf_index)
                                          * 0x10000u;
                    c.leaves.push_back(std::move(leaf));
                }
            }
        }
        // Shared address pool; heavier countries get more addresses so that
        // distinct-IP counts track the user population.
        const double weight = (1.0 / static_cast<double>(i + 1));
        double weight_sum = 0.0;
        for (std::size_t j = 0; j < cfg.countries; ++j) weight_sum += 1.0 / static_cast<double>(j + 1);
        const auto pool_size = static_cast<std::size_t>(
            std::max(40.0, std::ceil(static_cast<double>(cfg.users) * weight / weight_sum * 0.7)));
        c.ip_pool.reserve(pool_size);
        c.ip_leaf.reserve(pool_size);
        for (std::size_t k = 0; k < pool_size; ++k) {
            const auto leaf = static_cast<std::uint32_t>(k % kLeavesPerCountry);
            c.ip_pool.push_back(format_ip(c.leaves[leaf].ip_base + 1 +
                                          static_cast<std::uint32_t>(k / kLeavesPerCountry)));
            c.ip_leaf.push_back(leaf);
        }
    }
    return world;
}

void validate_config(const DatagenConfig& cfg) {
    const auto bad = [](const char* msg, const char* field) {
        throw Error(ErrorCode::kConfig, msg, field);
    };
    if (cfg.users == 0) bad("users must be positive", "users");
    if (cfg.countries < 2) bad("need at least two countries", "countries");
    if (cfg.heavy_fraction < 0 || cfg.medium_fraction < 0 ||
        cfg.heavy_fraction + cfg.medium_fraction > 1.0) {
        bad("login-band fractions must be non-negative and sum to at most 1", "heavy_fraction");
    }
    if (cfg.heavy_max_logins < 20) bad("heavy_max_logins must be at least 20", "heavy_max_logins");
    if (cfg.failed_fraction < 0) bad("failed_fraction must be non-negative", "failed_fraction");
    if (cfg.attack_ip_fraction < 0 || cfg.attack_ip_fraction > 1) {
        bad("attack_ip_fraction must be in [0,1]", "attack_ip_fraction");
    }
    if (cfg.span_days < 1) bad("span_days must be positive", "span_days");
    if (cfg.missing_rtt_fraction < 0 || cfg.missing_rtt_fraction >= 1) {
        bad("missing_rtt_fraction must be in [0,1)", "missing_rtt_fraction");
    }
}

} // namespace

LoginDataset generate_corpus(const DatagenConfig& cfg) {
    validate_config(cfg);

    const auto world = build_world(cfg);
    const auto catalog = build_ua_catalog();
    const ZipfSampler country_sampler(cfg.countries);
    const ZipfSampler ua_sampler(catalog.size());

    // Shared attacker infrastructure: most addresses sit in the main country,
    // the rest are spread out. Offsets keep them distinct from legit pools.
    auto world_rng = make_rng(cfg.seed, "datagen-world");
    std::vector<AttackIp> attack_ips;
    const std::size_t attack_ip_count = std::max<std::size_t>(12, cfg.users / 2000);
    for (std::size_t k = 0; k < attack_ip_count; ++k) {
        AttackIp a;
        a.country = (k % 10) < 6 ? 0 : 1 + bounded_rand(world_rng, cfg.countries - 1);
        a.leaf = static_cast<std::uint32_t>(bounded_rand(world_rng, kLeavesPerCountry));
        a.ip = format_ip(world[a.country].leaves[a.leaf].ip_base + 60000 +
                         static_cast<std::uint32_t>(k));
        attack_ips.push_back(std::move(a));
    }
    std::vector<std::size_t> attacker_uas;
    for (int k = 0; k < 6; ++k) attacker_uas.push_back(bounded_rand(world_rng, catalog.size()));
    std::vector<UaEntry> bot_uas = {
        {"python-requests/2.31.0", "Other", "Other", DeviceType::kBot},
        {"curl/8.1.2", "Other", "Other", DeviceType::kBot},
    };

    struct UserProfile {
        UserId id = 0;
        std::size_t country = 0;
        std::vector<std::size_t> ips;
        std::vector<std::size_t> uas;
        std::size_t count = 0;
        double gap_days = 1.0;
        std::int64_t rtt_offset = 0;
        TimestampMs start = 0;
    };

    const std::int64_t span_ms = static_cast<std::int64_t>(cfg.span_days) * kDayMs;
    auto user_rng = make_rng(cfg.seed, "datagen-users");
    std::vector<UserProfile> users(cfg.users);
    std::size_t total_success = 0;
    for (std::size_t u = 0; u < cfg.users; ++u) {
        auto& p = users[u];
        p.id = 1001 + u;
        const double band = unit_real(user_rng);
        if (band < cfg.heavy_fraction) {
            p.count = 20 + bounded_rand(user_rng, cfg.heavy_max_logins - 19);
        } else if (band < cfg.heavy_fraction + cfg.medium_fraction) {
            p.count = 7 + bounded_rand(user_rng, 13);
        } else {
            p.count = 1 + bounded_rand(user_rng, 6);
        }
        total_success += p.count;
        p.country = country_sampler.pick(user_rng);
        const auto& pool = world[p.country].ip_pool;
        const double r_ip = unit_real(user_rng);
        const std::size_t n_ip = r_ip < 0.7 ? 1 : r_ip < 0.9 ? 2 : 3;
        while (p.ips.size() < n_ip) {
            const auto idx = bounded_rand(user_rng, pool.size());
            if (std::find(p.ips.begin(), p.ips.end(), idx) == p.ips.end()) p.ips.push_back(idx);
        }
        const std::size_t n_ua = unit_real(user_rng) < 0.8 ? 1 : 2;
        while (p.uas.size() < n_ua) {
            const auto idx = ua_sampler.pick(user_rng);
            if (std::find(p.uas.begin(), p.uas.end(), idx) == p.uas.end()) p.uas.push_back(idx);
        }
        const double klass = unit_real(user_rng);
        double gap = klass < 0.25 ? 0.6 : klass < 0.55 ? 3.0 : klass < 0.75 ? 9.0
                     : klass < 0.90 ? 20.0 : 45.0;
        p.gap_days = gap * (0.9 + 0.2 * unit_real(user_rng));
        p.rtt_offset = static_cast<std::int64_t>(bounded_rand(user_rng, 41)) - 20;
        p.start = cfg.start_timestamp + static_cast<std::int64_t>(
            bounded_rand(user_rng, static_cast<std::uint64_t>(span_ms / 4)));
    }

    std::vector<LoginRecord> rows;
    rows.reserve(total_success + static_cast<std::size_t>(cfg.failed_fraction * total_success) +
                 cfg.takeovers);

    auto fill_geo = [&](LoginRecord& rec, std::size_t country, std::uint32_t leaf,
                        const std::string& ip) {
        const auto& c = world[country];
        rec.country = c.code;
        rec.region = c.leaves[leaf].region;
        rec.city = c.leaves[leaf].city;
        rec.asn = c.leaves[leaf].asn;
        rec.ip_address = ip;
    };
    auto fill_ua = [&](LoginRecord& rec, const UaEntry& e) {
        rec.user_agent = e.ua;
        rec.browser = e.browser;
        rec.os = e.os;
        rec.device_type = e.device;
    };
    auto draw_rtt = [&](std::mt19937_64& rng, std::size_t country, std::int64_t offset) {
        const double factor = 0.85 + 0.3 * unit_real(rng);
        const auto base = static_cast<double>(world[country].rtt_base + offset);
        return std::max<std::int64_t>(5, static_cast<std::int64_t>(base * factor));
    };

    auto login_rng = make_rng(cfg.seed, "datagen-logins");
    for (const auto& p : users) {
        TimestampMs ts = p.start;
        for (std::size_t i = 0; i < p.count; ++i) {
            LoginRecord rec;
            rec.user_id = p.id;
            rec.login_timestamp = ts;
            rec.login_successful = true;

            std::size_t geo_country = p.country;
            std::size_t pool_idx = 0;
            const double move = unit_real(login_rng);
            if (move < 0.010) {
                geo_country = bounded_rand(login_rng, cfg.countries);
                pool_idx = bounded_rand(login_rng, world[geo_country].ip_pool.size());
            } else if (move < 0.05) {
                pool_idx = bounded_rand(login_rng, world[p.country].ip_pool.size());
            } else {
                const double which = unit_real(login_rng);
                const std::size_t slot = which < 0.75 || p.ips.size() == 1 ? 0
                                         : which < 0.95 || p.ips.size() == 2 ? 1 : 2;
                pool_idx = p.ips[std::min(slot, p.ips.size() - 1)];
            }
            fill_geo(rec, geo_country, world[geo_country].ip_leaf[pool_idx],
                     world[geo_country].ip_pool[pool_idx]);

            const double ua_r = unit_real(login_rng);
            if (ua_r < 0.90 || p.uas.size() == 1) {
                fill_ua(rec, catalog[p.uas[0]]);
            } else if (ua_r < 0.97) {
                fill_ua(rec, catalog[p.uas[1]]);
            } else {
                fill_ua(rec, catalog[ua_sampler.pick(login_rng)]);
            }

            if (unit_real(login_rng) >= cfg.missing_rtt_fraction) {
                rec.rtt_ms = draw_rtt(login_rng, geo_country, p.rtt_offset);
            }

            rows.push_back(std::move(rec));
            const double jitter = 0.5 + unit_real(login_rng);
            ts += std::max<std::int64_t>(60'000,
                                         static_cast<std::int64_t>(p.gap_days * kDayMs * jitter));
        }
    }

    auto failed_rng = make_rng(cfg.seed, "datagen-failed");
    const ZipfSampler victim_sampler(cfg.users);
    const auto n_failed =
        static_cast<std::size_t>(std::llround(cfg.failed_fraction * static_cast<double>(total_success)));
    for (std::size_t k = 0; k < n_failed; ++k) {
        const auto& victim = users[victim_sampler.pick(failed_rng)];
        LoginRecord rec;
        rec.user_id = victim.id;
        rec.login_timestamp = cfg.start_timestamp + static_cast<std::int64_t>(
            bounded_rand(failed_rng, static_cast<std::uint64_t>(span_ms)));
        rec.login_successful = false;
        if (unit_real(failed_rng) < cfg.attack_ip_fraction) {
            const auto& a = attack_ips[bounded_rand(failed_rng, attack_ips.size())];
            fill_geo(rec, a.country, a.leaf, a.ip);
            rec.is_attack_ip = true;
            const double bot = unit_real(failed_rng);
            if (bot < 0.25) {
                fill_ua(rec, bot_uas[bounded_rand(failed_rng, bot_uas.size())]);
            } else {
                fill_ua(rec, catalog[attacker_uas[bounded_rand(failed_rng, attacker_uas.size())]]);
            }
            rec.rtt_ms = draw_rtt(failed_rng, a.country, 0);
        } else {
            const auto idx = victim.ips[0];
            fill_geo(rec, victim.country, world[victim.country].ip_leaf[idx],
                     world[victim.country].ip_pool[idx]);
            fill_ua(rec, catalog[victim.uas[0]]);
            rec.rtt_ms = draw_rtt(failed_rng, victim.country, victim.rtt_offset);
        }
        rows.push_back(std::move(rec));
    }

    auto takeover_rng = make_rng(cfg.seed, "datagen-takeover");
    std::vector<std::size_t> heavy;
    for (std::size_t u = 0; u < users.size(); ++u) {
        if (users[u].count >= 10) heavy.push_back(u);
    }
    for (std::size_t t = 0; t < cfg.takeovers; ++t) {
        const auto& victim =
            heavy.empty() ? users[bounded_rand(takeover_rng, users.size())]
                          : users[heavy[bounded_rand(takeover_rng, heavy.size())]];
        const auto& a = attack_ips[bounded_rand(takeover_rng, attack_ips.size())];
        LoginRecord rec;
        rec.user_id = victim.id;
        rec.login_timestamp = cfg.start_timestamp + span_ms -
                              static_cast<std::int64_t>(bounded_rand(
                                  takeover_rng, static_cast<std::uint64_t>(span_ms / 10) + 1));
        rec.login_successful = true;
        rec.is_attack_ip = true;
        rec.is_account_takeover = true;
        fill_geo(rec, a.country, a.leaf, a.ip);
        fill_ua(rec, catalog[attacker_uas[bounded_rand(takeover_rng, attacker_uas.size())]]);
        rec.rtt_ms = draw_rtt(takeover_rng, a.country, 0);
        rows.push_back(std::move(rec));
    }

    return LoginDataset(std::move(rows));
}

} // namespace rba
