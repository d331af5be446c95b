#include "rba/service.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>
#include <utility>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "rba/error.hpp"
#include "rba/threshold.hpp"

namespace rba {
namespace {

TimestampMs wall_clock_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

} // namespace

const char* service_decision_name(ServiceDecision decision) {
    switch (decision) {
    case ServiceDecision::kAllow: return "ALLOW";
    case ServiceDecision::kReauth: return "REAUTH";
    case ServiceDecision::kBlock: return "BLOCK";
    }
    return "REAUTH";
}

void validate_policy(const ServicePolicy& policy) {
    if (!std::isfinite(policy.theta_reauth) || policy.theta_reauth <= 0.0) {
        throw Error(ErrorCode::kArgument, "theta_reauth must be positive and finite",
                    "theta_reauth");
    }
    if (!std::isfinite(policy.theta_block) || policy.theta_block <= 0.0) {
        throw Error(ErrorCode::kArgument, "theta_block must be positive and finite", "theta_block");
    }
    if (policy.theta_block < policy.theta_reauth) {
        throw Error(ErrorCode::kArgument, "theta_block must be at least theta_reauth",
                    "theta_block");
    }
}

DecisionService::DecisionService(ServiceOptions options)
    : features_(options.features),
      scoring_(options.scoring),
      policy_(options.policy),
      pending_ttl_ms_(options.pending_ttl_ms),
      clock_(options.clock ? std::move(options.clock) : wall_clock_ms),
      started_at_(clock_()),
      store_(features_) {
    validate_policy(policy_);
    if (pending_ttl_ms_ <= 0) {
        throw Error(ErrorCode::kConfig, "pending_ttl_ms must be positive", "pending_ttl_ms");
    }
    stats_.failed_per_value.resize(features_.slot_count());
}

void DecisionService::sweep_expired_locked(TimestampMs now) {
    for (auto it = pending_.begin(); it != pending_.end();) {
        it = now - it->second.created > pending_ttl_ms_ ? pending_.erase(it) : std::next(it);
    }
    for (auto it = completed_.begin(); it != completed_.end();) {
        it = now - it->second > pending_ttl_ms_ ? completed_.erase(it) : std::next(it);
    }
}

double DecisionService::score_locked(const Snapshot& snapshot, UserId user,
                                     const FeatureVector& fv) const {
    switch (policy_.attack_data) {
    case AttackVariant::kNone:
        return risk_score(snapshot, user, fv, features_, scoring_);
    case AttackVariant::kUser:
    case AttackVariant::kFull:
        if (stats_.total_failed == 0) {
            throw Error(ErrorCode::kUnconfigured,
                        "attack-informed scoring needs at least one confirmed failure");
        }
        return policy_.attack_data == AttackVariant::kUser
                   ? risk_score_user_attack(snapshot, stats_, user, fv, features_, scoring_)
                   : risk_score_full_attack(snapshot, stats_, user, fv, features_, scoring_);
    }
    throw Error(ErrorCode::kInternal, "unhandled attack variant");
}

ScoreResponse DecisionService::score(const LoginRecord& attempt) {
    validate_record(attempt);
    const auto fv = extract_features(attempt, features_);

    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = clock_();
    if (next_id_ % 256 == 0 || pending_.size() > 4096) sweep_expired_locked(now);

    const auto snapshot = store_.snapshot();
    ScoreResponse response;
    response.history_size = snapshot.user_logins(attempt.user_id);
    response.score = score_locked(snapshot, attempt.user_id, fv);
    if (response.history_size == 0) {
        response.decision = ServiceDecision::kReauth;
    } else {
        switch (classify_risk(response.score, policy_.theta_reauth, policy_.theta_block)) {
        case RiskLevel::kLow: response.decision = ServiceDecision::kAllow; break;
        case RiskLevel::kMedium: response.decision = ServiceDecision::kReauth; break;
        case RiskLevel::kHigh: response.decision = ServiceDecision::kBlock; break;
        }
    }
    response.request_id = "r-" + std::to_string(next_id_++);

    Pending pending;
    pending.user = attempt.user_id;
    pending.login_timestamp = attempt.login_timestamp;
    pending.fv = fv;
    pending.created = now;
    pending_.emplace(response.request_id, std::move(pending));
    return response;
}

bool DecisionService::confirm(const std::string& request_id, bool login_successful) {
    std::lock_guard<std::mutex> lock(mutex_);
    const auto now = clock_();
    if (completed_.count(request_id)) {
        throw Error(ErrorCode::kConflict, "request already confirmed", "request_id");
    }
    const auto it = pending_.find(request_id);
    if (it == pending_.end()) {
        throw Error(ErrorCode::kNotFound, "unknown request id", "request_id");
    }
    if (now - it->second.created > pending_ttl_ms_) {
        pending_.erase(it);
        throw Error(ErrorCode::kNotFound, "request expired", "request_id");
    }

    const Pending entry = std::move(it->second);
    pending_.erase(it);
    completed_.emplace(request_id, now);

    ++stats_.total_logins;
    if (login_successful) {
        store_.record_login(entry.user, entry.login_timestamp, entry.fv);
        return true;
    }
    ++stats_.total_failed;
    ++stats_.failed_per_user[entry.user];
    for (std::size_t slot = 0; slot < entry.fv.size(); ++slot) {
        ++stats_.failed_per_value[slot][entry.fv[slot]];
    }
    return false;
}

ServicePolicy DecisionService::policy() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return policy_;
}

void DecisionService::set_policy(const ServicePolicy& policy) {
    validate_policy(policy);
    std::lock_guard<std::mutex> lock(mutex_);
    policy_ = policy;
}

HealthReport DecisionService::health() const {
    std::lock_guard<std::mutex> lock(mutex_);
    HealthReport report;
    report.uptime_ms = clock_() - started_at_;
    report.total_logins = store_.total_logins();
    report.user_count = store_.user_count();
    report.pending = pending_.size();
    return report;
}

MemoryReport DecisionService::memory() const { return store_.memory_report(); }

AttackStats DecisionService::attack_stats() const {
    std::lock_guard<std::mutex> lock(mutex_);
    return stats_;
}

namespace {

using nlohmann::json;

json error_json(ErrorCode code, const std::string& message, const std::string& field) {
    json e{{"code", error_code_name(code)}, {"message", message}};
    if (!field.empty()) e["field"] = field;
    return json{{"error", e}};
}

int http_status(ErrorCode code) {
    switch (code) {
    case ErrorCode::kSchema:
    case ErrorCode::kRow:
    case ErrorCode::kArgument:
    case ErrorCode::kConfig:
    case ErrorCode::kTraining: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict: return 409;
    case ErrorCode::kUnconfigured: return 503;
    case ErrorCode::kIo:
    case ErrorCode::kInternal: return 500;
    }
    return 500;
}

void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

const json& require_field(const json& body, const char* name) {
    const auto it = body.find(name);
    if (it == body.end()) {
        throw Error(ErrorCode::kArgument, std::string("missing field '") + name + "'", name);
    }
    return *it;
}

std::string get_string(const json& body, const char* name) {
    const auto& v = require_field(body, name);
    if (!v.is_string()) {
        throw Error(ErrorCode::kArgument, std::string("field '") + name + "' must be a string",
                    name);
    }
    return v.get<std::string>();
}

std::int64_t get_int(const json& body, const char* name) {
    const auto& v = require_field(body, name);
    if (!v.is_number_integer() && !v.is_number_unsigned()) {
        throw Error(ErrorCode::kArgument, std::string("field '") + name + "' must be an integer",
                    name);
    }
    return v.get<std::int64_t>();
}

UserId get_user_id(const json& body) {
    const auto& v = require_field(body, "user_id");
    if (v.is_number_unsigned()) return v.get<UserId>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) {
        return static_cast<UserId>(v.get<std::int64_t>());
    }
    if (v.is_string()) {
        try {
            std::size_t used = 0;
            const auto id = std::stoull(v.get<std::string>(), &used);
            if (used == v.get<std::string>().size()) return id;
        } catch (const std::exception&) {
        }
    }
    throw Error(ErrorCode::kArgument, "user_id must be a non-negative integer", "user_id");
}

LoginRecord parse_attempt(const json& body) {
    LoginRecord rec;
    rec.user_id = get_user_id(body);
    rec.login_timestamp = get_int(body, "login_timestamp");
    rec.ip_address = get_string(body, "ip_address");
    rec.country = get_string(body, "country");
    rec.region = get_string(body, "region");
    rec.city = get_string(body, "city");
    rec.asn = static_cast<int>(get_int(body, "asn"));
    rec.user_agent = get_string(body, "user_agent");
    rec.os = get_string(body, "os");
    rec.browser = get_string(body, "browser");
    const auto device = device_type_from_name(get_string(body, "device_type"));
    if (!device) {
        throw Error(ErrorCode::kArgument, "unknown device_type", "device_type");
    }
    rec.device_type = *device;
    if (body.contains("rtt_ms") && !body["rtt_ms"].is_null()) {
        rec.rtt_ms = get_int(body, "rtt_ms");
    }
    rec.login_successful = true; // outcome is reported later via confirm
    return rec;
}

json score_json(const ScoreResponse& r) {
    json j{{"request_id", r.request_id},
           {"history_size", r.history_size},
           {"decision", service_decision_name(r.decision)}};
    if (std::isfinite(r.score)) {
        j["score"] = r.score;
    } else {
        j["score"] = "Infinity";
    }
    return j;
}

json policy_json(const ServicePolicy& p) {
    return json{{"theta_reauth", p.theta_reauth},
                {"theta_block", p.theta_block},
                {"attack_data", attack_variant_name(p.attack_data)}};
}

template <typename Fn>
void handle(httplib::Response& res, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        reply(res, http_status(e.code()), error_json(e.code(), e.what(), e.field()));
    } catch (const json::exception& e) {
        reply(res, 400, error_json(ErrorCode::kArgument, e.what(), ""));
    } catch (const std::exception& e) {
        reply(res, 500, error_json(ErrorCode::kInternal, e.what(), ""));
    }
}

json parse_body(const std::string& body) {
    json j = json::parse(body, nullptr, false);
    if (j.is_discarded()) throw Error(ErrorCode::kArgument, "request body is not valid JSON");
    return j;
}

} // namespace

struct HttpService::Impl {
    explicit Impl(DecisionService& service) : svc(service) {}

    DecisionService& svc;
    httplib::Server server;
    std::thread thread;
    int port = -1;
};

HttpService::HttpService(DecisionService& service) : impl_(std::make_unique<Impl>(service)) {
    auto& srv = impl_->server;
    auto& svc = impl_->svc;

    srv.Post("/v1/score", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(res, [&] {
            const auto attempt = parse_attempt(parse_body(req.body));
            reply(res, 200, score_json(svc.score(attempt)));
        });
    });

    srv.Post("/v1/confirm", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(res, [&] {
            const auto body = parse_body(req.body);
            const auto id = get_string(body, "request_id");
            const auto& flag = require_field(body, "login_successful");
            if (!flag.is_boolean()) {
                throw Error(ErrorCode::kArgument, "login_successful must be a boolean",
                            "login_successful");
            }
            const bool recorded = svc.confirm(id, flag.get<bool>());
            reply(res, 200, json{{"recorded", recorded}});
        });
    });

    srv.Get("/v1/health", [&svc](const httplib::Request&, httplib::Response& res) {
        handle(res, [&] {
            const auto h = svc.health();
            reply(res, 200,
                  json{{"status", "ok"},
                       {"uptime_ms", h.uptime_ms},
                       {"total_logins", h.total_logins},
                       {"user_count", h.user_count},
                       {"pending", h.pending}});
        });
    });

    srv.Get("/v1/admin/config", [&svc](const httplib::Request&, httplib::Response& res) {
        handle(res, [&] { reply(res, 200, policy_json(svc.policy())); });
    });

    srv.Put("/v1/admin/config", [&svc](const httplib::Request& req, httplib::Response& res) {
        handle(res, [&] {
            const auto body = parse_body(req.body);
            ServicePolicy policy;
            policy.theta_reauth = require_field(body, "theta_reauth").get<double>();
            policy.theta_block = require_field(body, "theta_block").get<double>();
            policy.attack_data = attack_variant_from_name(get_string(body, "attack_data"));
            svc.set_policy(policy);
            reply(res, 200, policy_json(svc.policy()));
        });
    });

    srv.Get("/v1/admin/memory", [&svc](const httplib::Request&, httplib::Response& res) {
        handle(res, [&] {
            const auto report = svc.memory();
            json tables = json::object();
            for (const auto& [name, bytes] : report.counter_tables) tables[name] = bytes;
            reply(res, 200,
                  json{{"counter_tables", tables},
                       {"counter_total", report.counter_total},
                       {"login_history", report.login_history}});
        });
    });
}

HttpService::~HttpService() { stop(); }

bool HttpService::start(const std::string& host, int port) {
    auto& srv = impl_->server;
    if (port == 0) {
        impl_->port = srv.bind_to_any_port(host);
        if (impl_->port < 0) return false;
    } else {
        if (!srv.bind_to_port(host, port)) return false;
        impl_->port = port;
    }
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    srv.wait_until_ready();
    return true;
}

void HttpService::stop() {
    if (impl_ && impl_->thread.joinable()) {
        impl_->server.stop();
        impl_->thread.join();
    }
}

int HttpService::port() const { return impl_->port; }

} // namespace rba
