#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <unordered_set>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "rba/attacker.hpp"
#include "rba/bench.hpp"
#include "rba/csv.hpp"
#include "rba/error.hpp"
#include "rba/features.hpp"
#include "rba/history.hpp"
#include "rba/replay.hpp"
#include "rba/scoring.hpp"
#include "rba/service.hpp"
#include "rba/synth.hpp"
#include "rba/threshold.hpp"

namespace {

std::atomic<bool> g_stop{false};

void handle_signal(int) { g_stop.store(true); }

void init_logging() {
    spdlog::set_level(spdlog::level::warn);
    spdlog::set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");
    const char* env = std::getenv("RBA_LOG");
    if (!env || !*env) return;
    const std::string level = env;
    if (level == "trace") spdlog::set_level(spdlog::level::trace);
    else if (level == "debug") spdlog::set_level(spdlog::level::debug);
    else if (level == "info") spdlog::set_level(spdlog::level::info);
    else if (level == "warn") spdlog::set_level(spdlog::level::warn);
    else if (level == "error") spdlog::set_level(spdlog::level::err);
    else if (level == "off") spdlog::set_level(spdlog::level::off);
    else std::cerr << "rba: ignoring unknown RBA_LOG level '" << level << "'\n";
}

// Shared flag bundle; subcommands register the subset they understand.
struct CommonFlags {
    std::string dataset;
    std::string features;
    int rtt_granularity = 5;
    bool rtt_replace_ip = false;
    std::uint64_t seed = 0;
    double stratify = 0.0; // 0 disables
    std::string out;
};

void add_feature_flags(CLI::App* cmd, CommonFlags& flags) {
    cmd->add_option("--features", flags.features, "feature config JSON file");
    cmd->add_option("--rtt-granularity", flags.rtt_granularity,
                    "RTT rounding granularity in ms")
        ->check(CLI::IsMember({1, 5, 10, 50}));
    cmd->add_flag("--rtt-replace-ip", flags.rtt_replace_ip,
                  "replace the IP subfeature with rounded RTT");
}

rba::FeatureConfig make_feature_config(const CommonFlags& flags) {
    auto config = flags.features.empty() ? rba::default_feature_config()
                                         : rba::load_feature_config_file(flags.features);
    config.rtt_granularity_ms = flags.rtt_granularity;
    if (flags.rtt_replace_ip) rba::apply_rtt_replacement(config);
    rba::validate_feature_config(config);
    return config;
}

rba::LoginDataset load_dataset(const std::string& path) {
    rba::ParseReport report;
    auto dataset = rba::parse_dataset_file(path, {}, &report);
    spdlog::info("loaded {} rows from {}", report.rows_parsed, path);
    return dataset;
}

rba::LoginDataset apply_stratify(rba::LoginDataset dataset, double fraction, std::uint64_t seed) {
    if (fraction <= 0.0) return dataset;
    std::unordered_map<rba::UserId, std::uint64_t> failed;
    for (const auto& r : dataset.records()) {
        if (!r.login_successful) ++failed[r.user_id];
    }
    const auto users = rba::stratify_users(dataset, fraction, failed, seed);
    const std::unordered_set<rba::UserId> keep(users.begin(), users.end());
    std::vector<rba::LoginRecord> filtered;
    for (const auto& r : dataset.records()) {
        if (keep.count(r.user_id)) filtered.push_back(r);
    }
    spdlog::info("stratified to {} users, {} rows", keep.size(), filtered.size());
    return rba::LoginDataset(std::move(filtered));
}

rba::AttackerSample build_attacker(const std::string& model_name, const rba::LoginDataset& dataset,
                                   std::size_t attempts, std::uint64_t seed) {
    const auto model = rba::attacker_model_from_name(model_name);
    rba::AttackerBuildOptions options;
    options.n = attempts;
    options.seed = seed;
    switch (model) {
    case rba::AttackerModel::kNaive: return rba::build_naive_sample(dataset, options);
    case rba::AttackerModel::kVpn: return rba::build_vpn_sample(dataset, options);
    case rba::AttackerModel::kTargeted: return rba::build_targeted_sample(dataset, options);
    case rba::AttackerModel::kVeryTargeted: return rba::build_very_targeted_sample(dataset);
    }
    throw rba::Error(rba::ErrorCode::kArgument, "unknown attacker model", "--attacker");
}

void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw rba::Error(rba::ErrorCode::kIo, "cannot open '" + path + "' for writing");
    out << text;
    if (!text.empty() && text.back() != '\n') out << '\n';
    if (!out) throw rba::Error(rba::ErrorCode::kIo, "failed writing '" + path + "'");
}

// ---- subcommands ----

int cmd_ingest(const CommonFlags& flags, int window_days) {
    const auto config = make_feature_config(flags);
    const auto dataset = load_dataset(flags.dataset);
    rba::HistoryStore store(config);
    std::uint64_t recorded = 0;
    std::uint64_t skipped_rtt = 0;
    for (const auto& r : dataset.records()) {
        if (!r.login_successful || r.is_account_takeover) continue;
        try {
            store.record_login(r);
            ++recorded;
        } catch (const rba::Error& e) {
            if (e.code() != rba::ErrorCode::kRow) throw;
            ++skipped_rtt;
        }
    }
    if (window_days > 0) {
        store.minimize(window_days, 1, dataset.metadata().last_timestamp);
    }
    if (!flags.out.empty()) store.save_file(flags.out);
    const auto memory = store.memory_report();
    std::cout << "rows=" << dataset.size() << " recorded=" << recorded
              << " skipped_missing_rtt=" << skipped_rtt << " users=" << store.user_count()
              << " counter_bytes=" << memory.counter_total << "\n";
    return 0;
}

int cmd_synth(const CommonFlags& flags, const std::string& geo_catalog,
              const std::string& ua_catalog, std::int64_t ts_noise_ms, bool verify) {
    const auto dataset = load_dataset(flags.dataset);
    rba::SynthConfig config;
    config.rng_seed = flags.seed;
    config.timestamp_noise_ms = ts_noise_ms;
    if (!geo_catalog.empty()) config.geo_catalog = rba::load_geo_catalog_file(geo_catalog);
    if (!ua_catalog.empty()) config.ua_catalog = rba::load_ua_catalog_file(ua_catalog);
    const auto synthetic = rba::generate_synthetic(dataset, config);
    rba::write_dataset_file(synthetic, flags.out);
    std::cout << "synthesized rows=" << synthetic.size() << " out=" << flags.out << "\n";
    if (verify) {
        const auto report = rba::verify_synthesis(dataset, synthetic);
        for (const auto& failure : report.failures) std::cerr << "verify: " << failure << "\n";
        if (!report.all_passed()) {
            throw rba::Error(rba::ErrorCode::kInternal, "synthesis verification failed");
        }
        std::cout << "verification passed\n";
    }
    return 0;
}

int cmd_calibrate(const CommonFlags& flags, const std::string& attacker_name, double tpr,
                  const std::string& attack_data, std::size_t attempts) {
    if (!(tpr > 0.0) || tpr > 1.0) {
        throw rba::Error(rba::ErrorCode::kArgument, "--tpr must be in (0, 1]", "--tpr");
    }
    const auto config = make_feature_config(flags);
    const auto dataset = apply_stratify(load_dataset(flags.dataset), flags.stratify, flags.seed);
    const auto attacker = build_attacker(attacker_name, dataset, attempts, flags.seed);
    for (const auto& warning : attacker.warnings) spdlog::warn("attacker: {}", warning);

    rba::ReplayOptions options;
    options.attack_data = rba::attack_variant_from_name(attack_data);
    const auto scored = rba::replay_scores(dataset, config, &attacker, options);
    std::vector<double> attacker_scores;
    attacker_scores.reserve(scored.attacks.size());
    for (const auto& a : scored.attacks) attacker_scores.push_back(a.score);
    const auto threshold = rba::calibrate_static(attacker_scores, tpr);
    const auto json = rba::static_threshold_to_json(threshold);
    if (flags.out.empty()) {
        std::cout << json << "\n";
    } else {
        write_text_file(flags.out, json);
    }
    std::cout << "theta=" << threshold.value << " achieved_tpr=" << threshold.achieved_tpr
              << " attacker_attempts=" << attacker_scores.size() << "\n";
    return 0;
}

int cmd_train_threshold(const CommonFlags& flags, const std::string& kind_name, double trim,
                        const std::string& attack_data, bool log_space) {
    const auto kind = rba::threshold_kind_from_name(kind_name);
    const auto config = make_feature_config(flags);
    const auto dataset = apply_stratify(load_dataset(flags.dataset), flags.stratify, flags.seed);

    rba::ReplayOptions options;
    options.attack_data = rba::attack_variant_from_name(attack_data);
    const auto scored = rba::replay_scores(dataset, config, nullptr, options);
    rba::TrainOptions train;
    train.trim_fraction = trim;
    train.log_space = log_space;
    const auto dyn = rba::train_dynamic(scored.training_samples(), kind, train);
    const auto json = rba::dynamic_threshold_to_json(dyn);
    if (flags.out.empty()) {
        std::cout << json << "\n";
    } else {
        write_text_file(flags.out, json);
    }
    std::cout << "kind=" << rba::threshold_kind_name(dyn.kind) << " sizes=" << dyn.table.size()
              << " samples=" << scored.training_samples().size() << "\n";
    return 0;
}

int cmd_replay(const CommonFlags& flags, const std::string& attacker_name, std::size_t attempts,
               const std::string& attack_data, int window_days, double static_theta,
               const std::string& threshold_file) {
    const auto config = make_feature_config(flags);
    const auto dataset = apply_stratify(load_dataset(flags.dataset), flags.stratify, flags.seed);

    rba::ThresholdSource thresholds;
    if (static_theta > 0.0) thresholds.static_theta = static_theta;
    if (!threshold_file.empty()) {
        std::ifstream in(threshold_file, std::ios::binary);
        if (!in) {
            throw rba::Error(rba::ErrorCode::kIo, "cannot open '" + threshold_file + "'");
        }
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        thresholds.dynamic = rba::dynamic_threshold_from_json(text);
    }
    if (thresholds.static_theta.has_value() == thresholds.dynamic.has_value()) {
        throw rba::Error(rba::ErrorCode::kArgument,
                         "exactly one of --theta and --threshold-file is required", "--theta");
    }

    std::optional<rba::AttackerSample> attacker;
    if (!attacker_name.empty()) {
        attacker = build_attacker(attacker_name, dataset, attempts, flags.seed);
        for (const auto& warning : attacker->warnings) spdlog::warn("attacker: {}", warning);
    }

    rba::ReplayOptions options;
    options.attack_data = rba::attack_variant_from_name(attack_data);
    if (window_days > 0) options.retention = rba::RetentionPolicy{window_days, 1};
    const auto scored =
        rba::replay_scores(dataset, config, attacker ? &*attacker : nullptr, options);
    const auto trace = rba::apply_threshold(scored, thresholds);
    rba::write_trace_csv_file(trace, flags.out);

    std::uint64_t reauths = 0;
    for (const auto& row : trace.rows) {
        if (row.decision == rba::Decision::kReauth) ++reauths;
    }
    std::cout << "logins=" << trace.rows.size() << " reauths=" << reauths
              << " skipped_missing_rtt=" << scored.skipped_missing_rtt;
    if (attacker) {
        std::cout << " attacker_tpr=" << rba::attacker_tpr(scored.attacks, thresholds);
    }
    std::cout << " trace=" << flags.out << "\n";
    return 0;
}

int cmd_bench(const CommonFlags& flags, std::size_t step, std::size_t reps, unsigned cores) {
    const auto config = make_feature_config(flags);
    const auto dataset = load_dataset(flags.dataset);
    rba::BenchOptions options;
    options.step = step;
    options.reps = reps;
    options.seed = flags.seed;
    const auto samples = rba::run_bench(dataset, config, options);
    if (flags.out.empty()) {
        rba::write_timings_csv(samples, std::cout);
    } else {
        std::ofstream out(flags.out, std::ios::binary);
        if (!out) throw rba::Error(rba::ErrorCode::kIo, "cannot open '" + flags.out + "'");
        rba::write_timings_csv(samples, out);
    }

    const auto scan_fit = rba::fit_latency_regression(rba::filter_backend(samples, "scan"));
    const auto counter_fit =
        rba::fit_latency_regression(rba::filter_backend(samples, "counters"));
    std::cout << rba::latency_fit_json(scan_fit, counter_fit) << "\n";

    std::vector<rba::TimestampMs> arrivals;
    for (const auto& r : dataset.records()) {
        if (r.login_successful) arrivals.push_back(r.login_timestamp);
    }
    if (!arrivals.empty()) {
        const auto final_size = samples.back().history_size;
        const auto stats = rba::estimate_concurrency(arrivals, counter_fit, final_size, cores);
        std::cout << "concurrency cores=" << cores << " median_us=" << stats.median_us
                  << " stddev_us=" << stats.stddev_us << "\n";
    }
    return 0;
}

int cmd_report(const std::string& trace_path, const std::string& group_by,
               const std::string& out) {
    const auto trace = rba::read_trace_csv_file(trace_path);
    rba::GroupBy grouping = rba::GroupBy::kHistorySize;
    if (group_by == "frequency") grouping = rba::GroupBy::kFrequencyClass;
    else if (group_by == "both") grouping = rba::GroupBy::kBoth;
    const auto metrics = rba::reauth_metrics(trace, grouping);
    if (out.empty()) {
        rba::write_metrics_csv(metrics, std::cout);
    } else {
        rba::write_metrics_csv_file(metrics, out);
    }
    if (grouping != rba::GroupBy::kFrequencyClass) {
        const auto stable = rba::stable_setup_size(rba::rate_curve(metrics));
        if (stable) {
            std::cout << "stable_setup_size=" << *stable << "\n";
        } else {
            std::cout << "stable_setup_size=none\n";
        }
    }
    return 0;
}

int cmd_serve(const CommonFlags& flags, double theta_reauth, double theta_block,
              const std::string& attack_data, const std::string& host, int port,
              int ttl_minutes) {
    rba::ServiceOptions options;
    options.features = make_feature_config(flags);
    options.policy.theta_reauth = theta_reauth;
    options.policy.theta_block = theta_block;
    options.policy.attack_data = rba::attack_variant_from_name(attack_data);
    options.pending_ttl_ms = static_cast<std::int64_t>(ttl_minutes) * 60 * 1000;
    rba::DecisionService service(std::move(options));

    if (!flags.dataset.empty()) {
        const auto dataset = load_dataset(flags.dataset);
        std::uint64_t warmed = 0;
        for (const auto& r : dataset.records()) {
            if (!r.login_successful || r.is_account_takeover) continue;
            try {
                service.store().record_login(r);
                ++warmed;
            } catch (const rba::Error& e) {
                if (e.code() != rba::ErrorCode::kRow) throw;
            }
        }
        spdlog::info("warmed store with {} logins", warmed);
    }

    rba::HttpService http(service);
    if (!http.start(host, port)) {
        throw rba::Error(rba::ErrorCode::kIo,
                         "failed to bind " + host + ":" + std::to_string(port));
    }
    std::cout << "listening on " << host << ":" << http.port() << "\n" << std::flush;

    std::signal(SIGINT, handle_signal);
    std::signal(SIGTERM, handle_signal);
    while (!g_stop.load()) {
        std::this_thread::sleep_for(std::chrono::milliseconds(200));
    }
    http.stop();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    init_logging();

    CLI::App app{"risk-based authentication toolkit"};
    app.require_subcommand(1);

    CommonFlags flags;

    auto* ingest = app.add_subcommand("ingest", "build a history store from a login CSV");
    ingest->add_option("--dataset", flags.dataset, "login CSV file")->required();
    add_feature_flags(ingest, flags);
    int ingest_window = 0;
    ingest->add_option("--window-days", ingest_window, "retention window applied after ingest");
    ingest->add_option("--out", flags.out, "store image output path");

    auto* synth = app.add_subcommand("synth", "generate a pseudonymized copy of a dataset");
    synth->add_option("--dataset", flags.dataset, "login CSV file")->required();
    synth->add_option("--seed", flags.seed, "rng seed");
    synth->add_option("--out", flags.out, "output CSV path")->required();
    std::string geo_catalog;
    std::string ua_catalog;
    std::int64_t ts_noise_ms = 60'000;
    bool synth_verify = false;
    synth->add_option("--geo-catalog", geo_catalog, "geography catalog CSV");
    synth->add_option("--ua-catalog", ua_catalog, "user-agent catalog CSV");
    synth->add_option("--ts-noise-ms", ts_noise_ms, "timestamp jitter bound in ms");
    synth->add_flag("--verify", synth_verify, "verify the output against the input");

    auto* calibrate = app.add_subcommand("calibrate", "pick a static threshold from attacker scores");
    calibrate->add_option("--dataset", flags.dataset, "login CSV file")->required();
    add_feature_flags(calibrate, flags);
    std::string attacker_name = "targeted";
    double tpr = 0.99;
    std::string attack_data = "none";
    std::size_t attempts = 1000;
    calibrate->add_option("--attacker", attacker_name, "attacker model")
        ->check(CLI::IsMember({"naive", "vpn", "targeted", "very-targeted"}));
    calibrate->add_option("--tpr", tpr, "target true-positive rate")->required();
    calibrate->add_option("--attack-data", attack_data, "attack-informed score variant")
        ->check(CLI::IsMember({"none", "user", "full"}));
    calibrate->add_option("--attempts", attempts, "attacker attempts to simulate");
    calibrate->add_option("--stratify", flags.stratify, "user sample fraction")
        ->check(CLI::Range(0.0, 1.0));
    calibrate->add_option("--seed", flags.seed, "rng seed");
    calibrate->add_option("--out", flags.out, "threshold JSON output path");

    auto* train = app.add_subcommand("train-threshold", "fit history-size dependent thresholds");
    train->add_option("--dataset", flags.dataset, "login CSV file")->required();
    add_feature_flags(train, flags);
    std::string threshold_kind = "hybrid";
    double trim = 0.05;
    bool log_space = false;
    train->add_option("--threshold", threshold_kind, "threshold family")
        ->check(CLI::IsMember({"linear", "poly", "hybrid"}));
    train->add_option("--trim", trim, "fraction of highest scores to drop")
        ->check(CLI::Range(0.0, 0.5));
    train->add_flag("--log-space", log_space, "fit on log scores");
    train->add_option("--attack-data", attack_data, "attack-informed score variant")
        ->check(CLI::IsMember({"none", "user", "full"}));
    train->add_option("--stratify", flags.stratify, "user sample fraction")
        ->check(CLI::Range(0.0, 1.0));
    train->add_option("--seed", flags.seed, "rng seed");
    train->add_option("--out", flags.out, "threshold JSON output path");

    auto* replay = app.add_subcommand("replay", "score a dataset chronologically and write a trace");
    replay->add_option("--dataset", flags.dataset, "login CSV file")->required();
    add_feature_flags(replay, flags);
    std::string replay_attacker;
    int window_days = 0;
    double static_theta = 0.0;
    std::string threshold_file;
    replay->add_option("--attacker", replay_attacker, "attacker model to simulate")
        ->check(CLI::IsMember({"naive", "vpn", "targeted", "very-targeted"}));
    replay->add_option("--attempts", attempts, "attacker attempts to simulate");
    replay->add_option("--attack-data", attack_data, "attack-informed score variant")
        ->check(CLI::IsMember({"none", "user", "full"}));
    replay->add_option("--window-days", window_days, "retention window during replay");
    replay->add_option("--theta", static_theta, "static threshold");
    replay->add_option("--threshold-file", threshold_file, "dynamic threshold JSON");
    replay->add_option("--stratify", flags.stratify, "user sample fraction")
        ->check(CLI::Range(0.0, 1.0));
    replay->add_option("--seed", flags.seed, "rng seed");
    replay->add_option("--out", flags.out, "trace CSV output path")->required();

    auto* bench = app.add_subcommand("bench", "time scoring against a growing history store");
    bench->add_option("--dataset", flags.dataset, "login CSV file")->required();
    add_feature_flags(bench, flags);
    std::size_t step = 50'000;
    std::size_t reps = 9;
    unsigned cores = 1;
    bench->add_option("--step", step, "measure every N recorded logins");
    bench->add_option("--reps", reps, "timed repetitions per point");
    bench->add_option("--cores", cores, "cores for the concurrency estimate, 0 = unlimited");
    bench->add_option("--seed", flags.seed, "rng seed");
    bench->add_option("--out", flags.out, "timings CSV output path");

    auto* report = app.add_subcommand("report", "re-auth metrics from a stored trace");
    std::string trace_path;
    std::string group_by = "size";
    report->add_option("--trace", trace_path, "trace CSV from replay")->required();
    report->add_option("--group-by", group_by, "grouping")
        ->check(CLI::IsMember({"size", "frequency", "both"}));
    report->add_option("--out", flags.out, "metrics CSV output path");

    auto* serve = app.add_subcommand("serve", "run the decision service");
    add_feature_flags(serve, flags);
    double theta_reauth = 0.0;
    double theta_block = 0.0;
    std::string host = "127.0.0.1";
    int port = 8080;
    int ttl_minutes = 15;
    serve->add_option("--dataset", flags.dataset, "optional warm-start login CSV");
    serve->add_option("--theta-reauth", theta_reauth, "re-auth threshold")->required();
    serve->add_option("--theta-block", theta_block, "block threshold")->required();
    serve->add_option("--attack-data", attack_data, "attack-informed score variant")
        ->check(CLI::IsMember({"none", "user", "full"}));
    serve->add_option("--host", host, "bind address");
    serve->add_option("--port", port, "bind port, 0 picks a free port");
    serve->add_option("--ttl-minutes", ttl_minutes, "pending confirmation TTL");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "rba: " << e.what() << "\n\n" << app.help();
        return 1;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(flags, ingest_window);
        if (synth->parsed()) {
            return cmd_synth(flags, geo_catalog, ua_catalog, ts_noise_ms, synth_verify);
        }
        if (calibrate->parsed()) {
            return cmd_calibrate(flags, attacker_name, tpr, attack_data, attempts);
        }
        if (train->parsed()) {
            return cmd_train_threshold(flags, threshold_kind, trim, attack_data, log_space);
        }
        if (replay->parsed()) {
            return cmd_replay(flags, replay_attacker, attempts, attack_data, window_days,
                              static_theta, threshold_file);
        }
        if (bench->parsed()) return cmd_bench(flags, step, reps, cores);
        if (report->parsed()) return cmd_report(trace_path, group_by, flags.out);
        if (serve->parsed()) {
            return cmd_serve(flags, theta_reauth, theta_block, attack_data, host, port,
                             ttl_minutes);
        }
        std::cerr << "rba: no subcommand\n";
        return 1;
    } catch (const rba::Error& e) {
        const bool validation = e.code() == rba::ErrorCode::kSchema ||
                                e.code() == rba::ErrorCode::kRow ||
                                e.code() == rba::ErrorCode::kArgument ||
                                e.code() == rba::ErrorCode::kConfig ||
                                e.code() == rba::ErrorCode::kTraining;
        std::cerr << "rba: error";
        if (!e.field().empty()) std::cerr << " [" << e.field() << "]";
        std::cerr << ": " << e.what() << "\n";
        return validation ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "rba: unexpected error: " << e.what() << "\n";
        return 2;
    }
}
