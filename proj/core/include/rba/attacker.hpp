#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "rba/record.hpp"

namespace rba {

enum class AttackerModel { kNaive, kVpn, kTargeted, kVeryTargeted };

const char* attacker_model_name(AttackerModel model);
AttackerModel attacker_model_from_name(const std::string& name);

// One simulated login attempt against a victim account. The context record
// carries the attacker's IP/geo/UA/RTT fields; scoring extracts features
// from it with whatever config is active.
struct AttackAttempt {
    UserId victim = 0;
    TimestampMs injection_ts = 0;
    LoginRecord context;
};

struct AttackerSample {
    AttackerModel model = AttackerModel::kNaive;
    std::vector<AttackAttempt> attempts;
    std::vector<std::string> warnings;
};

struct AttackerBuildOptions {
    std::size_t n = 0;
    std::uint64_t seed = 0;
    // vpn/targeted country filter; empty picks the country with the most
    // successful logins.
    std::string main_country;
    // Victim accounts; empty uses every user with a successful login.
    std::vector<UserId> victims;
};

// Per-ASN most-occurring attack IPs; half the attempts pick a random attack
// country and a random UA, half replay the top attack IPs and UAs.
AttackerSample build_naive_sample(const LoginDataset& dataset, const AttackerBuildOptions& options);

// Attack IPs sampled from failed attempts in the main country, paired with
// the most popular legitimate user agents.
AttackerSample build_vpn_sample(const LoginDataset& dataset, const AttackerBuildOptions& options);

// Most-occurring IPs and UAs among failed attempts in the main country.
AttackerSample build_targeted_sample(const LoginDataset& dataset,
                                     const AttackerBuildOptions& options);

// Replays every account-takeover row at its original time and context.
AttackerSample build_very_targeted_sample(const LoginDataset& dataset);

// Plain-text blocklist: one IPv4 address or CIDR block per line, '#' starts
// a comment. Non-IPv4 entries match by exact string comparison.
class Blocklist {
public:
    static Blocklist load(std::istream& in);
    static Blocklist load_file(const std::string& path);

    bool contains(const std::string& ip) const;
    std::size_t size() const { return exact_.size() + cidrs_.size(); }

private:
    struct Cidr {
        std::uint32_t base = 0;
        std::uint32_t mask = 0;
    };
    std::vector<std::string> exact_;
    std::vector<Cidr> cidrs_;
};

// Returns a copy of the dataset with is_attack_ip set on failed logins whose
// IP matches the blocklist (existing flags are kept).
LoginDataset mark_attack_ips(const LoginDataset& dataset, const Blocklist& blocklist);

} // namespace rba
