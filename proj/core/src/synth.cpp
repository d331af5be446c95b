#include "rba/synth.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "rba/csv.hpp"
#include "rba/error.hpp"
#include "rba/rng.hpp"

namespace rba {
namespace {

// Pinned Fisher-Yates; std::shuffle is implementation defined and would break
// cross-toolchain byte determinism.
template <typename T>
void seeded_shuffle(std::vector<T>& v, std::mt19937_64& rng) {
    for (std::size_t i = v.size(); i > 1; --i) {
        std::swap(v[i - 1], v[bounded_rand(rng, i)]);
    }
}

std::string format_ip(std::uint32_t ip) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%u.%u.%u.%u", ip >> 24, (ip >> 16) & 0xffu, (ip >> 8) & 0xffu,
                  ip & 0xffu);
    return buf;
}

enum StringFeature { kIp = 0, kCountry, kRegion, kCity, kUa, kOs, kBrowser, kStringFeatureCount };

// Every value the input uses, per feature. Pseudonym draws skip these so the
// output shares no string value with the input.
struct InputSets {
    std::array<std::unordered_set<std::string>, kStringFeatureCount> strings;
    std::unordered_set<UserId> users;
};

InputSets collect_input_sets(const std::vector<LoginRecord>& records) {
    InputSets sets;
    for (const auto& r : records) {
        sets.strings[kIp].insert(r.ip_address);
        sets.strings[kCountry].insert(r.country);
        sets.strings[kRegion].insert(r.region);
        sets.strings[kCity].insert(r.city);
        sets.strings[kUa].insert(r.user_agent);
        sets.strings[kOs].insert(r.os);
        sets.strings[kBrowser].insert(r.browser);
        sets.users.insert(r.user_id);
    }
    return sets;
}

std::string join_key(std::initializer_list<const std::string*> parts) {
    std::string key;
    for (const auto* p : parts) {
        key += *p;
        key += '\x1f';
    }
    return key;
}

class GeoSource {
public:
    virtual ~GeoSource() = default;
    virtual std::string next_country() = 0;
    virtual std::string next_region(const std::string& country) = 0;
    virtual std::string next_city(const std::string& country, const std::string& region) = 0;
    virtual int next_asn(const std::string& country, const std::string& region,
                         const std::string& city) = 0;
    virtual std::string next_ip(int asn) = 0;
};

[[noreturn]] void throw_exhausted(const char* feature) {
    throw Error(ErrorCode::kConfig,
                std::string("catalog exhausted while assigning pseudonyms for ") + feature,
                feature);
}

// Generative hierarchy used when no catalog file is supplied. Countries come
// from a shuffled fixed pool; regions and cities are counter-derived names
// carrying a seed tag; ASNs and /16 IP blocks come from shuffled pools.
class BuiltinGeoSource final : public GeoSource {
public:
    BuiltinGeoSource(const InputSets& input, std::mt19937_64& shuffle_rng, std::string tag)
        : input_(input), tag_(std::move(tag)) {
        countries_.reserve(26 * 26);
        for (char a = 'A'; a <= 'Z'; ++a) {
            for (char b = 'A'; b <= 'Z'; ++b) {
                countries_.push_back(std::string("X") + a + b);
            }
        }
        seeded_shuffle(countries_, shuffle_rng);

        // ASN values live in a 16 bit space, so overlap with input values is
        // unavoidable in general; the shuffled pool still keeps the mapping a
        // bijection.
        asn_pool_.reserve(kAsnMax + 1);
        for (int a = 0; a <= kAsnMax; ++a) asn_pool_.push_back(a);
        seeded_shuffle(asn_pool_, shuffle_rng);

        block_pool_.resize(65536);
        for (std::uint32_t i = 0; i < block_pool_.size(); ++i) block_pool_[i] = i;
        seeded_shuffle(block_pool_, shuffle_rng);
    }

    std::string next_country() override {
        while (country_cursor_ < countries_.size()) {
            const auto& c = countries_[country_cursor_++];
            if (!input_.strings[kCountry].count(c)) return c;
        }
        throw_exhausted("country");
    }

    std::string next_region(const std::string& country) override {
        auto& n = region_counters_[country];
        while (true) {
            std::string name = country + "-R" + tag_ + "-" + std::to_string(n++);
            if (!input_.strings[kRegion].count(name)) return name;
        }
    }

    std::string next_city(const std::string&, const std::string& region) override {
        auto& n = city_counters_[region];
        while (true) {
            std::string name = region + "-C" + std::to_string(n++);
            if (!input_.strings[kCity].count(name)) return name;
        }
    }

    int next_asn(const std::string&, const std::string&, const std::string&) override {
        if (asn_cursor_ >= asn_pool_.size()) throw_exhausted("asn");
        return asn_pool_[asn_cursor_++];
    }

    std::string next_ip(int asn) override {
        auto& alloc = ip_alloc_[asn];
        while (true) {
            if (!alloc.active || alloc.sub > 0xffff) {
                if (block_cursor_ >= block_pool_.size()) throw_exhausted("ip_address");
                alloc.block = block_pool_[block_cursor_++];
                alloc.sub = 0;
                alloc.active = true;
            }
            const std::uint32_t ip = (alloc.block << 16) | alloc.sub++;
            std::string s = format_ip(ip);
            if (!input_.strings[kIp].count(s)) return s;
        }
    }

private:
    struct IpAlloc {
        bool active = false;
        std::uint32_t block = 0;
        std::uint32_t sub = 0;
    };

    const InputSets& input_;
    std::string tag_;
    std::vector<std::string> countries_;
    std::size_t country_cursor_ = 0;
    std::unordered_map<std::string, std::uint64_t> region_counters_;
    std::unordered_map<std::string, std::uint64_t> city_counters_;
    std::vector<int> asn_pool_;
    std::size_t asn_cursor_ = 0;
    std::vector<std::uint32_t> block_pool_;
    std::size_t block_cursor_ = 0;
    std::unordered_map<int, IpAlloc> ip_alloc_;
};

class CatalogGeoSource final : public GeoSource {
public:
    CatalogGeoSource(const GeoCatalog& catalog, const InputSets& input,
                     std::mt19937_64& shuffle_rng)
        : input_(input) {
        std::unordered_set<std::string> seen;
        for (const auto& leaf : catalog.leaves) {
            if (seen.insert(leaf.country).second) countries_.push_back(leaf.country);
            const auto rkey = join_key({&leaf.country});
            const auto ckey = join_key({&leaf.country, &leaf.region});
            const auto lkey = join_key({&leaf.country, &leaf.region, &leaf.city});
            if (seen.insert("r" + rkey + leaf.region).second) regions_[rkey].push_back(leaf.region);
            if (seen.insert("c" + ckey + leaf.city).second) cities_[ckey].push_back(leaf.city);
            leaves_[lkey].push_back(leaf);
        }
        seeded_shuffle(countries_, shuffle_rng);
        for (const auto& key : sorted_keys(regions_)) seeded_shuffle(regions_[key], shuffle_rng);
        for (const auto& key : sorted_keys(cities_)) seeded_shuffle(cities_[key], shuffle_rng);
        for (const auto& key : sorted_keys(leaves_)) seeded_shuffle(leaves_[key], shuffle_rng);
    }

    std::string next_country() override {
        auto& cur = cursors_["country"];
        while (cur < countries_.size()) {
            const auto& c = countries_[cur++];
            if (!input_.strings[kCountry].count(c)) return c;
        }
        throw_exhausted("country");
    }

    std::string next_region(const std::string& country) override {
        const auto key = join_key({&country});
        auto it = regions_.find(key);
        auto& cur = cursors_["r" + key];
        while (it != regions_.end() && cur < it->second.size()) {
            const auto& r = it->second[cur++];
            if (!input_.strings[kRegion].count(r)) return r;
        }
        throw_exhausted("region");
    }

    std::string next_city(const std::string& country, const std::string& region) override {
        const auto key = join_key({&country, &region});
        auto it = cities_.find(key);
        auto& cur = cursors_["c" + key];
        while (it != cities_.end() && cur < it->second.size()) {
            const auto& c = it->second[cur++];
            if (!input_.strings[kCity].count(c)) return c;
        }
        throw_exhausted("city");
    }

    int next_asn(const std::string& country, const std::string& region,
                 const std::string& city) override {
        const auto key = join_key({&country, &region, &city});
        auto it = leaves_.find(key);
        auto& cur = cursors_["a" + key];
        while (it != leaves_.end() && cur < it->second.size()) {
            const auto& leaf = it->second[cur++];
            if (!used_asns_.insert(leaf.asn).second) continue;
            const std::uint32_t size =
                leaf.prefix_bits >= 32 ? 1u : (1u << (32 - leaf.prefix_bits));
            const std::uint32_t mask = size == 0 ? 0 : ~(size - 1);
            ip_alloc_[leaf.asn] = IpAlloc{leaf.ip_base & mask, size, 0};
            return leaf.asn;
        }
        throw_exhausted("asn");
    }

    std::string next_ip(int asn) override {
        auto it = ip_alloc_.find(asn);
        if (it == ip_alloc_.end()) throw_exhausted("ip_address");
        auto& alloc = it->second;
        while (alloc.cursor < alloc.size) {
            std::string s = format_ip(alloc.base + alloc.cursor++);
            if (!input_.strings[kIp].count(s) && used_ips_.insert(s).second) return s;
        }
        throw_exhausted("ip_address");
    }

private:
    struct IpAlloc {
        std::uint32_t base = 0;
        std::uint32_t size = 0;
        std::uint32_t cursor = 0;
    };

    // Deterministic iteration order for the shuffle pass.
    template <typename M>
    static std::vector<std::string> sorted_keys(const M& m) {
        std::vector<std::string> keys;
        keys.reserve(m.size());
        for (const auto& [k, v] : m) keys.push_back(k);
        std::sort(keys.begin(), keys.end());
        return keys;
    }

    const InputSets& input_;
    std::vector<std::string> countries_;
    std::unordered_map<std::string, std::vector<std::string>> regions_;
    std::unordered_map<std::string, std::vector<std::string>> cities_;
    std::unordered_map<std::string, std::vector<GeoCatalogLeaf>> leaves_;
    std::unordered_map<std::string, std::size_t> cursors_;
    std::unordered_set<int> used_asns_;
    std::unordered_set<std::string> used_ips_;
    std::unordered_map<int, IpAlloc> ip_alloc_;
};

class UaSource {
public:
    virtual ~UaSource() = default;
    virtual std::string next_user_agent() = 0;
    virtual std::string next_os() = 0;
    virtual std::string next_browser() = 0;
};

class BuiltinUaSource final : public UaSource {
public:
    BuiltinUaSource(const InputSets& input, std::string tag) : input_(input), tag_(std::move(tag)) {}

    std::string next_user_agent() override {
        return draw(kUa, "Mozilla/5.0 (Synth; rv:" + tag_ + ") Agent/", &ua_n_);
    }
    std::string next_os() override { return draw(kOs, "SynthOS " + tag_ + ".", &os_n_); }
    std::string next_browser() override { return draw(kBrowser, "SynthBrowser " + tag_ + ".", &browser_n_); }

private:
    std::string draw(StringFeature feature, const std::string& prefix, std::uint64_t* n) {
        while (true) {
            std::string candidate = prefix + std::to_string((*n)++);
            if (!input_.strings[feature].count(candidate)) return candidate;
        }
    }

    const InputSets& input_;
    std::string tag_;
    std::uint64_t ua_n_ = 0;
    std::uint64_t os_n_ = 0;
    std::uint64_t browser_n_ = 0;
};

class CatalogUaSource final : public UaSource {
public:
    CatalogUaSource(const UaCatalog& catalog, const InputSets& input, std::mt19937_64& shuffle_rng)
        : input_(input) {
        std::unordered_set<std::string> seen_ua;
        std::unordered_set<std::string> seen_os;
        std::unordered_set<std::string> seen_browser;
        for (const auto& row : catalog.rows) {
            if (seen_ua.insert(row.user_agent).second) uas_.push_back(row.user_agent);
            if (seen_os.insert(row.os).second) oses_.push_back(row.os);
            if (seen_browser.insert(row.browser).second) browsers_.push_back(row.browser);
        }
        seeded_shuffle(uas_, shuffle_rng);
        seeded_shuffle(oses_, shuffle_rng);
        seeded_shuffle(browsers_, shuffle_rng);
    }

    std::string next_user_agent() override { return draw(uas_, ua_cursor_, kUa, "user_agent"); }
    std::string next_os() override { return draw(oses_, os_cursor_, kOs, "os"); }
    std::string next_browser() override {
        return draw(browsers_, browser_cursor_, kBrowser, "browser");
    }

private:
    std::string draw(const std::vector<std::string>& pool, std::size_t& cursor,
                     StringFeature feature, const char* name) {
        while (cursor < pool.size()) {
            const auto& v = pool[cursor++];
            if (!input_.strings[feature].count(v)) return v;
        }
        throw_exhausted(name);
    }

    const InputSets& input_;
    std::vector<std::string> uas_;
    std::vector<std::string> oses_;
    std::vector<std::string> browsers_;
    std::size_t ua_cursor_ = 0;
    std::size_t os_cursor_ = 0;
    std::size_t browser_cursor_ = 0;
};

template <typename Map, typename Make>
const typename Map::mapped_type& map_get(Map& m, const typename Map::key_type& key, Make make) {
    auto it = m.find(key);
    if (it == m.end()) it = m.emplace(key, make()).first;
    return it->second;
}

std::string rtt_key(const std::string& country, bool success) {
    return country + (success ? "\x1f" "1" : "\x1f" "0");
}

} // namespace

GeoCatalog load_geo_catalog_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open geo catalog '" + path + "'");
    const auto rows = read_csv_rows(in);
    const std::vector<std::string> header = {"Country", "Region", "City", "ASN", "IP Prefix"};
    if (rows.empty() || rows.front() != header) {
        throw Error(ErrorCode::kSchema, "geo catalog header must be Country,Region,City,ASN,IP Prefix");
    }
    GeoCatalog catalog;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = "geo catalog line " + std::to_string(i + 1) + ": ";
        if (row.size() != header.size()) {
            throw Error(ErrorCode::kRow, where + "expected 5 fields");
        }
        GeoCatalogLeaf leaf;
        leaf.country = row[0];
        leaf.region = row[1];
        leaf.city = row[2];
        try {
            std::size_t used = 0;
            leaf.asn = std::stoi(row[3], &used);
            if (used != row[3].size()) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw Error(ErrorCode::kRow, where + "bad ASN '" + row[3] + "'");
        }
        if (leaf.asn < 0 || leaf.asn > kAsnMax) {
            throw Error(ErrorCode::kRow, where + "ASN out of range");
        }
        unsigned a = 0, b = 0, c = 0, d = 0;
        int bits = -1;
        char extra = 0;
        const int n = std::sscanf(row[4].c_str(), "%u.%u.%u.%u/%d%c", &a, &b, &c, &d, &bits, &extra);
        if (n != 5 || a > 255 || b > 255 || c > 255 || d > 255 || bits < 0 || bits > 32) {
            throw Error(ErrorCode::kRow, where + "bad IP prefix '" + row[4] + "'");
        }
        leaf.ip_base = (a << 24) | (b << 16) | (c << 8) | d;
        leaf.prefix_bits = bits;
        catalog.leaves.push_back(std::move(leaf));
    }
    if (catalog.leaves.empty()) throw Error(ErrorCode::kConfig, "geo catalog has no rows");
    return catalog;
}

UaCatalog load_ua_catalog_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open UA catalog '" + path + "'");
    const auto rows = read_csv_rows(in);
    const std::vector<std::string> header = {"User Agent String", "Browser", "OS", "Device Type"};
    if (rows.empty() || rows.front() != header) {
        throw Error(ErrorCode::kSchema,
                    "UA catalog header must be User Agent String,Browser,OS,Device Type");
    }
    UaCatalog catalog;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto& row = rows[i];
        const std::string where = "UA catalog line " + std::to_string(i + 1) + ": ";
        if (row.size() != header.size()) {
            throw Error(ErrorCode::kRow, where + "expected 4 fields");
        }
        UaCatalogRow entry;
        entry.user_agent = row[0];
        entry.browser = row[1];
        entry.os = row[2];
        const auto device = device_type_from_name(row[3]);
        if (!device) throw Error(ErrorCode::kRow, where + "unknown device type '" + row[3] + "'");
        entry.device_type = *device;
        catalog.rows.push_back(std::move(entry));
    }
    if (catalog.rows.empty()) throw Error(ErrorCode::kConfig, "UA catalog has no rows");
    return catalog;
}

LoginDataset generate_synthetic(const LoginDataset& dataset, const SynthConfig& config) {
    if (config.timestamp_noise_ms < 0) {
        throw Error(ErrorCode::kConfig, "timestamp_noise_ms must be >= 0", "timestamp_noise_ms");
    }
    const auto& records = dataset.records();
    const InputSets sets = collect_input_sets(records);

    auto tag_rng = make_rng(config.rng_seed, "synth-tag");
    char tag_buf[8];
    std::snprintf(tag_buf, sizeof(tag_buf), "%04x", static_cast<unsigned>(tag_rng() & 0xffffu));
    const std::string tag = tag_buf;

    auto shuffle_rng = make_rng(config.rng_seed, "synth-shuffle");
    auto user_rng = make_rng(config.rng_seed, "synth-user");
    auto rtt_rng = make_rng(config.rng_seed, "synth-rtt");
    auto ts_rng = make_rng(config.rng_seed, "synth-ts");

    std::unique_ptr<GeoSource> geo;
    if (config.geo_catalog) {
        geo = std::make_unique<CatalogGeoSource>(*config.geo_catalog, sets, shuffle_rng);
    } else {
        geo = std::make_unique<BuiltinGeoSource>(sets, shuffle_rng, tag);
    }
    std::unique_ptr<UaSource> ua;
    if (config.ua_catalog) {
        ua = std::make_unique<CatalogUaSource>(*config.ua_catalog, sets, shuffle_rng);
    } else {
        ua = std::make_unique<BuiltinUaSource>(sets, tag);
    }

    // Empirical RTT pools keyed by the original country and success flag, with
    // a success-only global fallback.
    std::unordered_map<std::string, std::vector<std::int64_t>> rtt_profiles;
    std::array<std::vector<std::int64_t>, 2> rtt_global;
    for (const auto& r : records) {
        if (!r.rtt_ms) continue;
        rtt_profiles[rtt_key(r.country, r.login_successful)].push_back(*r.rtt_ms);
        rtt_global[r.login_successful ? 1 : 0].push_back(*r.rtt_ms);
    }

    std::unordered_map<std::string, std::string> country_map;
    std::unordered_map<std::string, std::string> region_map;
    std::unordered_map<std::string, std::string> city_map;
    std::unordered_map<std::string, std::string> ip_map;
    std::unordered_map<std::string, std::string> ua_map;
    std::unordered_map<std::string, std::string> os_map;
    std::unordered_map<std::string, std::string> browser_map;
    std::unordered_map<int, int> asn_map;
    std::unordered_map<UserId, UserId> user_map;
    std::unordered_set<UserId> used_users;

    std::vector<LoginRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        LoginRecord s = r;
        s.country = map_get(country_map, r.country, [&] { return geo->next_country(); });
        s.region = map_get(region_map, r.region, [&] { return geo->next_region(s.country); });
        s.city = map_get(city_map, r.city, [&] { return geo->next_city(s.country, s.region); });
        s.asn = map_get(asn_map, r.asn, [&] { return geo->next_asn(s.country, s.region, s.city); });
        s.ip_address = map_get(ip_map, r.ip_address, [&] { return geo->next_ip(s.asn); });
        s.user_agent = map_get(ua_map, r.user_agent, [&] { return ua->next_user_agent(); });
        s.os = map_get(os_map, r.os, [&] { return ua->next_os(); });
        s.browser = map_get(browser_map, r.browser, [&] { return ua->next_browser(); });
        s.user_id = map_get(user_map, r.user_id, [&] {
            UserId candidate;
            do {
                candidate = user_rng();
            } while (sets.users.count(candidate) != 0 || used_users.count(candidate) != 0);
            used_users.insert(candidate);
            return candidate;
        });
        if (r.rtt_ms) {
            const auto it = rtt_profiles.find(rtt_key(r.country, r.login_successful));
            const auto& pool = it != rtt_profiles.end() && !it->second.empty()
                                   ? it->second
                                   : rtt_global[r.login_successful ? 1 : 0];
            s.rtt_ms = pool[bounded_rand(rtt_rng, pool.size())];
        }
        if (config.timestamp_noise_ms > 0) {
            const auto span = static_cast<std::uint64_t>(config.timestamp_noise_ms) * 2 + 1;
            s.login_timestamp = r.login_timestamp +
                                static_cast<std::int64_t>(bounded_rand(ts_rng, span)) -
                                config.timestamp_noise_ms;
        }
        out.push_back(std::move(s));
    }
    return LoginDataset(std::move(out));
}

namespace {

template <typename K>
using CountMap = std::unordered_map<K, std::uint64_t>;

template <typename K>
bool multisets_equal(const CountMap<K>& a, const CountMap<K>& b) {
    if (a.size() != b.size()) return false;
    std::vector<std::uint64_t> ca;
    std::vector<std::uint64_t> cb;
    ca.reserve(a.size());
    cb.reserve(b.size());
    for (const auto& [k, n] : a) ca.push_back(n);
    for (const auto& [k, n] : b) cb.push_back(n);
    std::sort(ca.begin(), ca.end());
    std::sort(cb.begin(), cb.end());
    return ca == cb;
}

template <typename K>
bool disjoint_keys(const CountMap<K>& a, const CountMap<K>& b) {
    const auto& small = a.size() <= b.size() ? a : b;
    const auto& large = a.size() <= b.size() ? b : a;
    for (const auto& [k, n] : small) {
        if (large.count(k)) return false;
    }
    return true;
}

struct FeatureCounts {
    std::array<CountMap<std::string>, kStringFeatureCount> strings;
    CountMap<int> asn;
    CountMap<int> device;
    CountMap<UserId> users;
    std::uint64_t attack_rows = 0;
    std::uint64_t takeover_rows = 0;
    std::uint64_t success_rows = 0;
};

FeatureCounts count_features(const std::vector<LoginRecord>& records) {
    FeatureCounts c;
    for (const auto& r : records) {
        ++c.strings[kIp][r.ip_address];
        ++c.strings[kCountry][r.country];
        ++c.strings[kRegion][r.region];
        ++c.strings[kCity][r.city];
        ++c.strings[kUa][r.user_agent];
        ++c.strings[kOs][r.os];
        ++c.strings[kBrowser][r.browser];
        ++c.asn[r.asn];
        ++c.device[static_cast<int>(r.device_type)];
        ++c.users[r.user_id];
        if (r.is_attack_ip) ++c.attack_rows;
        if (r.is_account_takeover) ++c.takeover_rows;
        if (r.login_successful) ++c.success_rows;
    }
    return c;
}

// child value -> parent value must be functional across the dataset.
bool functional_mapping(const std::vector<LoginRecord>& records,
                        const std::string& (*child)(const LoginRecord&),
                        const std::string& (*parent)(const LoginRecord&)) {
    std::unordered_map<std::string, const std::string*> seen;
    for (const auto& r : records) {
        auto [it, inserted] = seen.emplace(child(r), &parent(r));
        if (!inserted && *it->second != parent(r)) return false;
    }
    return true;
}

const std::string& get_region(const LoginRecord& r) { return r.region; }
const std::string& get_country(const LoginRecord& r) { return r.country; }
const std::string& get_city(const LoginRecord& r) { return r.city; }

} // namespace

bool VerificationReport::all_passed() const {
    for (const auto& [name, ok] : count_multisets_equal) {
        if (!ok) return false;
    }
    return leakage_free && hierarchy_consistent && attack_flag_counts_equal;
}

VerificationReport verify_synthesis(const LoginDataset& original, const LoginDataset& synthetic) {
    VerificationReport report;
    const auto orig = count_features(original.records());
    const auto synth = count_features(synthetic.records());

    const std::array<const char*, kStringFeatureCount> names = {
        "ip_address", "country", "region", "city", "user_agent", "os", "browser"};
    for (int f = 0; f < kStringFeatureCount; ++f) {
        const bool ok = multisets_equal(orig.strings[f], synth.strings[f]);
        report.count_multisets_equal[names[f]] = ok;
        if (!ok) report.failures.push_back(std::string("count multiset differs for ") + names[f]);
    }
    const bool asn_ok = multisets_equal(orig.asn, synth.asn);
    report.count_multisets_equal["asn"] = asn_ok;
    if (!asn_ok) report.failures.push_back("count multiset differs for asn");
    const bool device_ok = orig.device == synth.device;
    report.count_multisets_equal["device_type"] = device_ok;
    if (!device_ok) report.failures.push_back("device type counts differ");
    const bool user_ok = multisets_equal(orig.users, synth.users);
    report.count_multisets_equal["user_id"] = user_ok;
    if (!user_ok) report.failures.push_back("count multiset differs for user_id");

    report.leakage_free = true;
    for (int f = 0; f < kStringFeatureCount; ++f) {
        if (!disjoint_keys(orig.strings[f], synth.strings[f])) {
            report.leakage_free = false;
            report.failures.push_back(std::string("value leaked from input for ") + names[f]);
        }
    }
    if (!disjoint_keys(orig.users, synth.users)) {
        report.leakage_free = false;
        report.failures.push_back("user id leaked from input");
    }

    const auto& srec = synthetic.records();
    report.hierarchy_consistent = functional_mapping(srec, get_region, get_country) &&
                                  functional_mapping(srec, get_city, get_region);
    {
        // ASN sits between city and IP; both links must be functional.
        std::unordered_map<int, const std::string*> asn_city;
        std::unordered_map<std::string, int> ip_asn;
        for (const auto& r : srec) {
            auto [it, inserted] = asn_city.emplace(r.asn, &r.city);
            if (!inserted && *it->second != r.city) report.hierarchy_consistent = false;
            auto [it2, inserted2] = ip_asn.emplace(r.ip_address, r.asn);
            if (!inserted2 && it2->second != r.asn) report.hierarchy_consistent = false;
        }
    }
    if (!report.hierarchy_consistent) {
        report.failures.push_back("synthesized geography is not hierarchically consistent");
    }

    report.attack_flag_counts_equal = orig.attack_rows == synth.attack_rows &&
                                      orig.takeover_rows == synth.takeover_rows &&
                                      orig.success_rows == synth.success_rows;
    if (!report.attack_flag_counts_equal) {
        report.failures.push_back("attack or success flag counts differ");
    }
    return report;
}

} // namespace rba
