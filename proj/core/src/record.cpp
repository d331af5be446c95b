#include "rba/record.hpp"

#include <algorithm>
#include <unordered_set>

#include "rba/error.hpp"

namespace rba {

const char* device_type_name(DeviceType type) {
    switch (type) {
    case DeviceType::kMobile: return "mobile";
    case DeviceType::kDesktop: return "desktop";
    case DeviceType::kTablet: return "tablet";
    case DeviceType::kBot: return "bot";
    case DeviceType::kUnknown: return "unknown";
    }
    return "unknown";
}

std::optional<DeviceType> device_type_from_name(std::string_view name) {
    if (name == "mobile") return DeviceType::kMobile;
    if (name == "desktop") return DeviceType::kDesktop;
    if (name == "tablet") return DeviceType::kTablet;
    if (name == "bot") return DeviceType::kBot;
    if (name == "unknown") return DeviceType::kUnknown;
    return std::nullopt;
}

void validate_record(const LoginRecord& record) {
    if (record.asn < 0 || record.asn > kAsnMax) {
        throw Error(ErrorCode::kRow, "ASN out of range [0, 65535]: " + std::to_string(record.asn),
                    "asn");
    }
    if (record.rtt_ms) {
        if (*record.rtt_ms < kRttMinMs || *record.rtt_ms > kRttMaxMs) {
            throw Error(ErrorCode::kRow,
                        "RTT out of range [1, 8600000]: " + std::to_string(*record.rtt_ms),
                        "rtt_ms");
        }
    }
    if (record.is_account_takeover && !record.login_successful) {
        throw Error(ErrorCode::kRow, "account takeover flagged on a failed login",
                    "is_account_takeover");
    }
}

LoginDataset::LoginDataset(std::vector<LoginRecord> records) : records_(std::move(records)) {
    std::stable_sort(records_.begin(), records_.end(),
                     [](const LoginRecord& a, const LoginRecord& b) {
                         return a.login_timestamp < b.login_timestamp;
                     });
    meta_.record_count = records_.size();
    if (!records_.empty()) {
        meta_.first_timestamp = records_.front().login_timestamp;
        meta_.last_timestamp = records_.back().login_timestamp;
    }
    std::unordered_set<UserId> users;
    users.reserve(records_.size() / 2 + 1);
    for (const auto& r : records_) users.insert(r.user_id);
    meta_.user_count = users.size();
}

} // namespace rba
