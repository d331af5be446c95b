#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace rba {

using UserId = std::uint64_t;
using TimestampMs = std::int64_t;

inline constexpr std::int64_t kRttMinMs = 1;
inline constexpr std::int64_t kRttMaxMs = 8'600'000;
inline constexpr int kAsnMax = 65535;

enum class DeviceType { kMobile, kDesktop, kTablet, kBot, kUnknown };

const char* device_type_name(DeviceType type);
std::optional<DeviceType> device_type_from_name(std::string_view name);

// One login attempt, successful or not.
struct LoginRecord {
    UserId user_id = 0;
    TimestampMs login_timestamp = 0;
    std::string ip_address;
    std::string country;
    std::string region;
    std::string city;
    int asn = 0;
    std::string user_agent;
    std::string os;
    std::string browser;
    DeviceType device_type = DeviceType::kUnknown;
    std::optional<std::int64_t> rtt_ms;
    bool login_successful = false;
    bool is_attack_ip = false;
    bool is_account_takeover = false;

    bool operator==(const LoginRecord&) const = default;
};

// Throws Error(kRow) naming the offending field if the record violates the
// schema bounds (ASN range, RTT range, takeover-implies-success).
void validate_record(const LoginRecord& record);

struct DatasetMetadata {
    std::size_t record_count = 0;
    std::size_t user_count = 0;
    TimestampMs first_timestamp = 0;
    TimestampMs last_timestamp = 0;
};

// Time-ordered login corpus. Immutable once built; cheap to share read-only.
class LoginDataset {
public:
    LoginDataset() = default;

    // Sorts records by timestamp (stable) and computes metadata.
    explicit LoginDataset(std::vector<LoginRecord> records);

    const std::vector<LoginRecord>& records() const { return records_; }
    const DatasetMetadata& metadata() const { return meta_; }
    std::size_t size() const { return records_.size(); }
    bool empty() const { return records_.empty(); }

    bool operator==(const LoginDataset& other) const { return records_ == other.records_; }

private:
    std::vector<LoginRecord> records_;
    DatasetMetadata meta_;
};

} // namespace rba
