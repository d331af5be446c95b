#include "rba/replay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "rba/error.hpp"

namespace rba {

namespace {

double median(std::vector<double>& values) {
    if (values.empty()) return 0.0;
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

bool uses_rtt(const FeatureConfig& config) {
    for (const auto& name : config.slot_names()) {
        if (name == "rtt_rounded") return true;
    }
    return false;
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

double theta_for(const ThresholdSource& thresholds, std::uint64_t history_size) {
    if (thresholds.static_theta && thresholds.dynamic) {
        throw Error(ErrorCode::kConfig, "both static and dynamic thresholds set");
    }
    if (thresholds.static_theta) return *thresholds.static_theta;
    if (thresholds.dynamic) return threshold_at(*thresholds.dynamic, history_size);
    throw Error(ErrorCode::kConfig, "no threshold configured");
}

} // namespace

const char* attack_variant_name(AttackVariant variant) {
    switch (variant) {
    case AttackVariant::kNone: return "none";
    case AttackVariant::kUser: return "user";
    case AttackVariant::kFull: return "full";
    }
    return "none";
}

AttackVariant attack_variant_from_name(const std::string& name) {
    if (name == "none") return AttackVariant::kNone;
    if (name == "user") return AttackVariant::kUser;
    if (name == "full") return AttackVariant::kFull;
    throw Error(ErrorCode::kArgument, "unknown attack-data variant '" + name + "'");
}

std::vector<TrainingSample> ScoredReplay::training_samples() const {
    std::vector<TrainingSample> samples;
    samples.reserve(logins.size());
    for (const auto& login : logins) {
        if (login.history_size >= 1 && std::isfinite(login.score)) {
            samples.push_back({login.history_size, login.score});
        }
    }
    return samples;
}

ScoredReplay replay_scores(const LoginDataset& dataset, const FeatureConfig& config,
                           const AttackerSample* attacker, const ReplayOptions& options) {
    validate_feature_config(config);
    const bool rtt_config = uses_rtt(config);

    ScoredReplay result;

    // Legitimate stream: successful, non-takeover, and under an RTT config
    // only records that carry an RTT.
    std::vector<std::size_t> legit;
    legit.reserve(dataset.records().size());
    std::unordered_map<UserId, std::vector<TimestampMs>> user_times;
    for (std::size_t i = 0; i < dataset.records().size(); ++i) {
        const auto& r = dataset.records()[i];
        if (!r.login_successful || r.is_account_takeover) continue;
        if (rtt_config && !r.rtt_ms) {
            ++result.skipped_missing_rtt;
            continue;
        }
        legit.push_back(i);
        user_times[r.user_id].push_back(r.login_timestamp);
    }
    for (const auto& [user, times] : user_times) {
        result.frequency[user] = classify_frequency(times);
    }

    // Attacker attempts ordered by injection time, stable by build order.
    std::vector<std::size_t> attack_order;
    if (attacker) {
        attack_order.resize(attacker->attempts.size());
        for (std::size_t i = 0; i < attack_order.size(); ++i) attack_order[i] = i;
        std::stable_sort(attack_order.begin(), attack_order.end(),
                         [&](std::size_t a, std::size_t b) {
                             return attacker->attempts[a].injection_ts <
                                    attacker->attempts[b].injection_ts;
                         });
    }

    AttackStats stats;
    if (options.attack_data != AttackVariant::kNone) {
        stats = build_attack_stats(dataset, config);
        if (stats.total_failed == 0) {
            throw Error(ErrorCode::kArgument,
                        "attack-data scoring requested but the dataset has no failed attempts");
        }
    }

    HistoryStore store(config);
    auto score_one = [&](const Snapshot& snap, UserId user, const FeatureVector& fv) {
        switch (options.attack_data) {
        case AttackVariant::kNone:
            return risk_score(snap, user, fv, config, options.scoring);
        case AttackVariant::kUser:
            return risk_score_user_attack(snap, stats, user, fv, config, options.scoring);
        case AttackVariant::kFull:
            return risk_score_full_attack(snap, stats, user, fv, config, options.scoring);
        }
        return std::numeric_limits<double>::quiet_NaN();
    };

    std::optional<std::int64_t> current_day;
    auto maybe_minimize = [&](TimestampMs ts) {
        if (!options.retention) return;
        const std::int64_t day = utc_day_index(ts);
        if (current_day && day > *current_day) {
            store.minimize(options.retention->window_days, options.retention->min_user_entries,
                           static_cast<TimestampMs>(day) * 86'400'000);
        }
        current_day = day;
    };

    std::size_t li = 0;
    std::size_t ai = 0;
    result.logins.reserve(legit.size());
    if (attacker) result.attacks.reserve(attack_order.size());

    while (li < legit.size() || ai < attack_order.size()) {
        const bool attack_next =
            ai < attack_order.size() &&
            (li >= legit.size() ||
             attacker->attempts[attack_order[ai]].injection_ts <
                 dataset.records()[legit[li]].login_timestamp);
        if (attack_next) {
            const auto& attempt = attacker->attempts[attack_order[ai]];
            ++ai;
            maybe_minimize(attempt.injection_ts);
            FeatureVector fv;
            try {
                fv = extract_features(attempt.context, config);
            } catch (const Error& e) {
                if (e.code() == ErrorCode::kRow && rtt_config) {
                    ++result.skipped_attacks_missing_rtt;
                    continue;
                }
                throw;
            }
            const Snapshot snap = store.snapshot();
            ScoredAttempt scored;
            scored.victim = attempt.victim;
            scored.ts = attempt.injection_ts;
            scored.history_size = snap.user_logins(attempt.victim);
            scored.score = score_one(snap, attempt.victim, fv);
            result.attacks.push_back(scored);
        } else {
            const auto& r = dataset.records()[legit[li]];
            ++li;
            maybe_minimize(r.login_timestamp);
            const FeatureVector fv = extract_features(r, config);
            const Snapshot snap = store.snapshot();
            ScoredLogin scored;
            scored.user = r.user_id;
            scored.ts = r.login_timestamp;
            scored.history_size = snap.user_logins(r.user_id);
            scored.score = score_one(snap, r.user_id, fv);
            if (options.compute_simple) {
                result.simple_scores.push_back(
                    simple_score(snap, r.user_id, fv, config, options.scoring.backend));
            }
            result.logins.push_back(scored);
            store.record_login(r.user_id, r.login_timestamp, fv);
        }
    }
    return result;
}

EvaluationTrace apply_threshold(const ScoredReplay& scored, const ThresholdSource& thresholds) {
    EvaluationTrace trace;
    trace.rows.reserve(scored.logins.size());
    for (const auto& login : scored.logins) {
        TraceRow row;
        row.user = login.user;
        row.ts = login.ts;
        row.history_size = login.history_size;
        row.score = login.score;
        if (login.history_size == 0) {
            row.theta = std::numeric_limits<double>::infinity();
            row.decision = Decision::kReauth;
        } else {
            row.theta = theta_for(thresholds, login.history_size);
            row.decision = login.score >= row.theta ? Decision::kReauth : Decision::kPass;
        }
        auto it = scored.frequency.find(login.user);
        row.frequency = it == scored.frequency.end() ? FrequencyClass::kUnclassified : it->second;
        trace.rows.push_back(row);
    }
    return trace;
}

double attacker_tpr(const std::vector<ScoredAttempt>& attacks, const ThresholdSource& thresholds) {
    if (attacks.empty()) {
        throw Error(ErrorCode::kArgument, "cannot compute TPR on an empty attacker sample");
    }
    std::size_t challenged = 0;
    for (const auto& a : attacks) {
        if (a.history_size == 0 || a.score >= theta_for(thresholds, a.history_size)) ++challenged;
    }
    return static_cast<double>(challenged) / static_cast<double>(attacks.size());
}

std::vector<MetricRow> reauth_metrics(const EvaluationTrace& trace, GroupBy group_by) {
    struct PerUser {
        std::uint64_t logins = 0;
        std::uint64_t reauths = 0;
    };

    auto summarize = [](const std::string& group, const std::string& value,
                        const std::unordered_map<UserId, PerUser>& users) {
        std::vector<double> counts;
        std::vector<double> rates;
        counts.reserve(users.size());
        rates.reserve(users.size());
        for (const auto& [user, stats] : users) {
            counts.push_back(static_cast<double>(stats.reauths));
            rates.push_back(static_cast<double>(stats.reauths) /
                            static_cast<double>(stats.logins));
        }
        MetricRow row;
        row.group = group;
        row.value = value;
        row.median_count = median(counts);
        row.median_rate = median(rates);
        row.n_users = users.size();
        return row;
    };

    std::vector<MetricRow> rows;
    if (group_by == GroupBy::kHistorySize || group_by == GroupBy::kBoth) {
        std::map<std::uint64_t, std::unordered_map<UserId, PerUser>> by_size;
        for (const auto& row : trace.rows) {
            auto& stats = by_size[row.history_size][row.user];
            ++stats.logins;
            if (row.decision == Decision::kReauth) ++stats.reauths;
        }
        for (const auto& [size, users] : by_size) {
            rows.push_back(summarize("history_size", std::to_string(size), users));
        }
    }
    if (group_by == GroupBy::kFrequencyClass || group_by == GroupBy::kBoth) {
        std::map<int, std::unordered_map<UserId, PerUser>> by_class;
        for (const auto& row : trace.rows) {
            auto& stats = by_class[static_cast<int>(row.frequency)][row.user];
            ++stats.logins;
            if (row.decision == Decision::kReauth) ++stats.reauths;
        }
        for (const auto& [cls, users] : by_class) {
            rows.push_back(summarize("frequency_class",
                                     frequency_class_name(static_cast<FrequencyClass>(cls)),
                                     users));
        }
    }
    return rows;
}

std::optional<std::uint64_t> stable_setup_size(
    const std::vector<std::pair<std::uint64_t, double>>& rate_by_size) {
    if (rate_by_size.empty()) return std::nullopt;
    auto sorted = rate_by_size;
    std::sort(sorted.begin(), sorted.end());
    std::optional<std::uint64_t> result;
    for (std::size_t i = sorted.size(); i-- > 0;) {
        if (sorted[i].second >= 0.5) break;
        result = sorted[i].first;
    }
    return result;
}

std::vector<std::pair<std::uint64_t, double>> rate_curve(const std::vector<MetricRow>& metrics) {
    std::vector<std::pair<std::uint64_t, double>> curve;
    for (const auto& row : metrics) {
        if (row.group == "history_size") {
            curve.emplace_back(std::stoull(row.value), row.median_rate);
        }
    }
    std::sort(curve.begin(), curve.end());
    return curve;
}

std::vector<TprCell> tpr_table(
    const std::vector<std::pair<std::string, std::vector<ScoredAttempt>>>& samples,
    const std::vector<std::pair<std::string, ThresholdSource>>& thresholds) {
    std::vector<TprCell> cells;
    cells.reserve(samples.size() * thresholds.size());
    for (const auto& [model, attacks] : samples) {
        for (const auto& [label, source] : thresholds) {
            cells.push_back({model, label, attacker_tpr(attacks, source)});
        }
    }
    return cells;
}

void write_trace_csv(const EvaluationTrace& trace, std::ostream& out) {
    out << "user,timestamp,history_size,score,theta,decision,frequency_class\n";
    for (const auto& row : trace.rows) {
        out << row.user << ',' << row.ts << ',' << row.history_size << ','
            << format_double(row.score) << ',' << format_double(row.theta) << ','
            << (row.decision == Decision::kReauth ? "reauth" : "pass") << ','
            << frequency_class_name(row.frequency) << '\n';
    }
    if (!out) throw Error(ErrorCode::kIo, "failed to write trace CSV");
}

void write_trace_csv_file(const EvaluationTrace& trace, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
    write_trace_csv(trace, out);
}

EvaluationTrace read_trace_csv(std::istream& in) {
    EvaluationTrace trace;
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::kSchema, "empty trace CSV");
    if (line.size() && line.back() == '\r') line.pop_back();
    if (line != "user,timestamp,history_size,score,theta,decision,frequency_class") {
        throw Error(ErrorCode::kSchema, "unexpected trace CSV header");
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.size() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= line.size(); ++i) {
            if (i == line.size() || line[i] == ',') {
                fields.push_back(line.substr(start, i - start));
                start = i + 1;
            }
        }
        if (fields.size() != 7) {
            throw Error(ErrorCode::kRow, "trace CSV line " + std::to_string(line_no) +
                                             ": expected 7 fields");
        }
        try {
            TraceRow row;
            row.user = std::stoull(fields[0]);
            row.ts = std::stoll(fields[1]);
            row.history_size = std::stoull(fields[2]);
            row.score = std::stod(fields[3]);
            row.theta = std::stod(fields[4]);
            if (fields[5] == "reauth") row.decision = Decision::kReauth;
            else if (fields[5] == "pass") row.decision = Decision::kPass;
            else throw Error(ErrorCode::kRow, "unknown decision '" + fields[5] + "'");
            bool matched = false;
            for (int c = 0; c <= static_cast<int>(FrequencyClass::kUnclassified); ++c) {
                if (fields[6] == frequency_class_name(static_cast<FrequencyClass>(c))) {
                    row.frequency = static_cast<FrequencyClass>(c);
                    matched = true;
                    break;
                }
            }
            if (!matched) throw Error(ErrorCode::kRow, "unknown frequency class '" + fields[6] + "'");
            trace.rows.push_back(row);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::kRow,
                        "trace CSV line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return trace;
}

EvaluationTrace read_trace_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    return read_trace_csv(in);
}

void write_metrics_csv(const std::vector<MetricRow>& metrics, std::ostream& out) {
    out << "group,value,median_count,median_rate,n_users\n";
    for (const auto& row : metrics) {
        out << row.group << ',' << row.value << ',' << format_double(row.median_count) << ','
            << format_double(row.median_rate) << ',' << row.n_users << '\n';
    }
    if (!out) throw Error(ErrorCode::kIo, "failed to write metrics CSV");
}

void write_metrics_csv_file(const std::vector<MetricRow>& metrics, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
    write_metrics_csv(metrics, out);
}

} // namespace rba
