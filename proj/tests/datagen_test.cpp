#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "doctest.h"
#include "rba/csv.hpp"
#include "rba/datagen.hpp"
#include "rba/error.hpp"

using namespace rba;

namespace {

DatagenConfig small_config(std::uint64_t seed = 1) {
    DatagenConfig cfg;
    cfg.seed = seed;
    cfg.users = 150;
    cfg.countries = 8;
    return cfg;
}

// child -> parent must be single-valued across the corpus.
bool functional(const std::vector<LoginRecord>& rows,
                const std::function<std::string(const LoginRecord&)>& child,
                const std::function<std::string(const LoginRecord&)>& parent) {
    std::unordered_map<std::string, std::string> seen;
    for (const auto& r : rows) {
        auto [it, inserted] = seen.emplace(child(r), parent(r));
        if (!inserted && it->second != parent(r)) return false;
    }
    return true;
}

} // namespace

TEST_CASE("corpus bookkeeping matches the config") {
    auto cfg = small_config();
    auto ds = generate_corpus(cfg);
    const auto& rows = ds.records();
    REQUIRE(!rows.empty());

    std::uint64_t successes = 0;
    std::uint64_t failed = 0;
    std::uint64_t takeovers = 0;
    std::map<UserId, std::uint64_t> per_user_success;
    for (const auto& r : rows) {
        if (r.is_account_takeover) {
            ++takeovers;
            CHECK(r.login_successful);
            CHECK(r.is_attack_ip);
        } else if (r.login_successful) {
            ++successes;
            ++per_user_success[r.user_id];
            CHECK(!r.is_attack_ip);
        } else {
            ++failed;
        }
    }
    CHECK(takeovers == cfg.takeovers);
    CHECK(per_user_success.size() == cfg.users);
    // Failed row count is an exact function of the success count.
    CHECK(failed ==
          static_cast<std::uint64_t>(std::llround(cfg.failed_fraction * double(successes))));

    for (const auto& [user, n] : per_user_success) {
        CHECK(user >= 1001);
        CHECK(user < 1001 + cfg.users);
        CHECK(n >= 1);
        CHECK(n <= cfg.heavy_max_logins);
    }
    // The band mix leaves both tails populated at this corpus size.
    const bool any_heavy = std::any_of(per_user_success.begin(), per_user_success.end(),
                                       [](const auto& kv) { return kv.second >= 20; });
    const bool any_light = std::any_of(per_user_success.begin(), per_user_success.end(),
                                       [](const auto& kv) { return kv.second <= 6; });
    CHECK(any_heavy);
    CHECK(any_light);

    // Takeover victims are established accounts.
    for (const auto& r : rows) {
        if (r.is_account_takeover) CHECK(per_user_success.at(r.user_id) >= 10);
    }
}

TEST_CASE("corpus geography is a strict tree") {
    auto ds = generate_corpus(small_config(3));
    const auto& rows = ds.records();

    CHECK(functional(rows, [](const LoginRecord& r) { return r.region; },
                     [](const LoginRecord& r) { return r.country; }));
    CHECK(functional(rows, [](const LoginRecord& r) { return r.city; },
                     [](const LoginRecord& r) { return r.region; }));
    CHECK(functional(rows, [](const LoginRecord& r) { return std::to_string(r.asn); },
                     [](const LoginRecord& r) { return r.city; }));
    CHECK(functional(rows, [](const LoginRecord& r) { return r.ip_address; },
                     [](const LoginRecord& r) { return std::to_string(r.asn); }));
    // User agents carry consistent browser/os/device annotations.
    CHECK(functional(rows, [](const LoginRecord& r) { return r.user_agent; },
                     [](const LoginRecord& r) {
                         return r.browser + "|" + r.os + "|" + device_type_name(r.device_type);
                     }));
}

TEST_CASE("corpus attack rows share a small infrastructure pool") {
    auto cfg = small_config(5);
    auto ds = generate_corpus(cfg);
    std::set<std::string> attack_ips;
    std::set<std::string> legit_ips;
    std::uint64_t attack_failed = 0;
    std::uint64_t failed = 0;
    std::uint64_t bot_rows = 0;
    for (const auto& r : ds.records()) {
        if (r.is_attack_ip) {
            attack_ips.insert(r.ip_address);
        } else if (r.login_successful) {
            legit_ips.insert(r.ip_address);
        }
        if (!r.login_successful) {
            ++failed;
            if (r.is_attack_ip) ++attack_failed;
        }
        if (r.device_type == DeviceType::kBot) {
            ++bot_rows;
            CHECK(!r.login_successful);
            CHECK(r.is_attack_ip);
        }
    }
    REQUIRE(failed > 0);
    CHECK(attack_ips.size() <= 12);
    // Attacker addresses never appear in legit success rows.
    for (const auto& ip : attack_ips) CHECK(legit_ips.count(ip) == 0);
    const double share = double(attack_failed) / double(failed);
    CHECK(share > 0.4);
    CHECK(share < 0.8);
    CHECK(bot_rows > 0);
}

TEST_CASE("corpus rtt coverage and bounds") {
    auto cfg = small_config(7);
    auto ds = generate_corpus(cfg);
    std::uint64_t missing = 0;
    std::uint64_t successes = 0;
    for (const auto& r : ds.records()) {
        if (r.rtt_ms) {
            CHECK(*r.rtt_ms >= 5);
        } else {
            CHECK(r.login_successful);
            CHECK(!r.is_account_takeover);
            ++missing;
        }
        if (r.login_successful && !r.is_account_takeover) ++successes;
    }
    CHECK(missing > 0);
    CHECK(double(missing) / double(successes) < 0.05);
}

TEST_CASE("corpus rows are time sorted and takeovers land late") {
    auto cfg = small_config(9);
    auto ds = generate_corpus(cfg);
    const auto& rows = ds.records();
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].login_timestamp >= rows[i - 1].login_timestamp);
    }
    const auto span_ms = std::int64_t(cfg.span_days) * 86'400'000;
    for (const auto& r : rows) {
        CHECK(r.login_timestamp >= cfg.start_timestamp);
        if (r.is_account_takeover) {
            CHECK(r.login_timestamp >= cfg.start_timestamp + span_ms - span_ms / 10 - 1);
            CHECK(r.login_timestamp <= cfg.start_timestamp + span_ms);
        }
        if (!r.login_successful) {
            CHECK(r.login_timestamp < cfg.start_timestamp + span_ms);
        }
    }
}

TEST_CASE("corpus generation is deterministic per seed") {
    auto serialize = [](const LoginDataset& ds) {
        std::ostringstream out;
        write_dataset(ds, out);
        return out.str();
    };
    auto cfg = small_config(21);
    CHECK(serialize(generate_corpus(cfg)) == serialize(generate_corpus(cfg)));
    auto other = small_config(22);
    CHECK(serialize(generate_corpus(cfg)) != serialize(generate_corpus(other)));
}

TEST_CASE("degenerate but valid configs work") {
    DatagenConfig cfg;
    cfg.seed = 2;
    cfg.users = 2;
    cfg.countries = 2;
    cfg.failed_fraction = 0.0;
    cfg.takeovers = 0;
    auto ds = generate_corpus(cfg);
    std::set<UserId> users;
    for (const auto& r : ds.records()) {
        CHECK(r.login_successful);
        CHECK(!r.is_attack_ip);
        users.insert(r.user_id);
    }
    CHECK(users.size() == 2);
}

TEST_CASE("config validation names the offending field") {
    auto expect_field = [](DatagenConfig cfg, const std::string& field) {
        try {
            generate_corpus(cfg);
            FAIL_CHECK("expected config error for " << field);
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kConfig);
            CHECK(e.field() == field);
        }
    };
    DatagenConfig cfg;
    cfg.users = 0;
    expect_field(cfg, "users");
    cfg = {};
    cfg.countries = 1;
    expect_field(cfg, "countries");
    cfg = {};
    cfg.heavy_fraction = 0.7;
    cfg.medium_fraction = 0.6;
    expect_field(cfg, "heavy_fraction");
    cfg = {};
    cfg.heavy_fraction = -0.1;
    expect_field(cfg, "heavy_fraction");
    cfg = {};
    cfg.heavy_max_logins = 19;
    expect_field(cfg, "heavy_max_logins");
    cfg = {};
    cfg.failed_fraction = -0.5;
    expect_field(cfg, "failed_fraction");
    cfg = {};
    cfg.attack_ip_fraction = 1.5;
    expect_field(cfg, "attack_ip_fraction");
    cfg = {};
    cfg.span_days = 0;
    expect_field(cfg, "span_days");
    cfg = {};
    cfg.missing_rtt_fraction = 1.0;
    expect_field(cfg, "missing_rtt_fraction");
}
