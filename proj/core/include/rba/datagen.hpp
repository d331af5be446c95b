#pragma once

#include <cstdint>

#include "rba/record.hpp"

namespace rba {

// Knobs for the demo corpus generator. The output mixes login frequencies
// from daily to less-than-monthly, keeps per-user contexts mostly stable with
// occasional travel and device changes, and adds failed rows from a shared
// attack infrastructure plus a few confirmed takeovers. Geography is a strict
// country/region/city/ASN/IP tree.
struct DatagenConfig {
    std::uint64_t seed = 0;
    std::size_t users = 200;
    std::size_t countries = 12;

    // Login-count bands per user: heavy 20..heavy_max, medium 7..19, rest 1..6.
    double heavy_fraction = 0.10;
    double medium_fraction = 0.30;
    std::size_t heavy_max_logins = 60;

    // Failed rows per successful login; the attack_ip share of them comes from
    // the shared attacker pool, the rest look like user typos.
    double failed_fraction = 0.12;
    double attack_ip_fraction = 0.6;
    std::size_t takeovers = 3;

    std::int64_t start_timestamp = 1'735'689'600'000; // 2025-01-01T00:00:00Z
    int span_days = 365;
    double missing_rtt_fraction = 0.02;
};

LoginDataset generate_corpus(const DatagenConfig& config);

} // namespace rba
