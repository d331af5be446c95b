#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "rba/record.hpp"

namespace rba {

// Hierarchical geography pool: each city row carries the ASNs and IP blocks
// available beneath it. When no catalog is supplied, an unbounded generative
// catalog (seed-tagged synthetic names, shuffled ASN/IP pools) is used.
struct GeoCatalogLeaf {
    std::string country;
    std::string region;
    std::string city;
    int asn = 0;
    std::uint32_t ip_base = 0; // network byte-order numeric base
    int prefix_bits = 24;
};

struct GeoCatalog {
    std::vector<GeoCatalogLeaf> leaves;
};

struct UaCatalogRow {
    std::string user_agent;
    std::string browser;
    std::string os;
    DeviceType device_type = DeviceType::kUnknown;
};

struct UaCatalog {
    std::vector<UaCatalogRow> rows;
};

GeoCatalog load_geo_catalog_file(const std::string& path);
UaCatalog load_ua_catalog_file(const std::string& path);

struct SynthConfig {
    std::uint64_t rng_seed = 0;
    std::int64_t timestamp_noise_ms = 60'000;
    // Builtin generative catalogs are used when these are absent.
    std::optional<GeoCatalog> geo_catalog;
    std::optional<UaCatalog> ua_catalog;
};

// Pseudonymizes a dataset: per-feature bijections preserve every value's
// occurrence count; geography is reassigned in backwards hierarchy
// (country, then region/city/ASN/IP beneath the first-seen parent); RTTs are
// redrawn from the (country, success) empirical profile; timestamps get
// bounded jitter and a stable re-sort. Attack and success flags stay on
// their rows. Deterministic for a fixed seed.
LoginDataset generate_synthetic(const LoginDataset& dataset, const SynthConfig& config);

struct VerificationReport {
    // Keyed by feature name (ip_address, country, ..., user_id).
    std::map<std::string, bool> count_multisets_equal;
    bool leakage_free = false;
    bool hierarchy_consistent = false;
    bool attack_flag_counts_equal = false;
    std::vector<std::string> failures;

    bool all_passed() const;
};

VerificationReport verify_synthesis(const LoginDataset& original, const LoginDataset& synthetic);

} // namespace rba
