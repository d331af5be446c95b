#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include <nlohmann/json.hpp>

#include "doctest.h"
#include "rba/csv.hpp"
#include "rba/replay.hpp"
#include "support/test_util.hpp"

// Paths are injected by the build so the test exercises the real binaries.
#ifndef RBA_CLI_PATH
#error "RBA_CLI_PATH must be defined"
#endif
#ifndef RBA_DATAGEN_PATH
#error "RBA_DATAGEN_PATH must be defined"
#endif

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output; // stdout and stderr combined
};

RunResult run(const std::string& cmd) {
    RunResult result;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    REQUIRE(pipe != nullptr);
    char buf[4096];
    std::size_t n = 0;
    while ((n = fread(buf, 1, sizeof(buf), pipe)) > 0) {
        result.output.append(buf, n);
    }
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

std::string q(const std::string& path) { return "'" + path + "'"; }

const std::string kCli = RBA_CLI_PATH;
const std::string kDatagen = RBA_DATAGEN_PATH;

// Small shared corpus; regenerated per temp dir, deterministic per seed.
std::string make_corpus(const testutil::TempDir& dir, std::uint64_t seed = 5) {
    const auto path = dir.file("corpus.csv");
    auto r = run(kDatagen + " --users 60 --seed " + std::to_string(seed) + " --out " + q(path));
    REQUIRE(r.exit_code == 0);
    REQUIRE(std::filesystem::exists(path));
    return path;
}

bool contains(const std::string& text, const std::string& needle) {
    return text.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("datagen emits a parseable deterministic corpus") {
    testutil::TempDir dir;
    const auto a = dir.file("a.csv");
    const auto b = dir.file("b.csv");
    const auto c = dir.file("c.csv");

    auto r1 = run(kDatagen + " --users 40 --seed 9 --out " + q(a));
    CHECK(r1.exit_code == 0);
    CHECK(contains(r1.output, "rows="));
    CHECK(contains(r1.output, "users=40"));

    auto ds = rba::parse_dataset_file(a);
    CHECK(ds.metadata().user_count == 40);

    run(kDatagen + " --users 40 --seed 9 --out " + q(b));
    run(kDatagen + " --users 40 --seed 10 --out " + q(c));
    CHECK(testutil::slurp(a) == testutil::slurp(b));
    CHECK(testutil::slurp(a) != testutil::slurp(c));

    SUBCASE("invalid config exits 1") {
        auto bad = run(kDatagen + " --users 0 --out " + q(dir.file("x.csv")));
        CHECK(bad.exit_code == 1);
    }
    SUBCASE("missing required flag exits 1") {
        auto bad = run(kDatagen + " --users 10");
        CHECK(bad.exit_code == 1);
        CHECK(contains(bad.output, "--out"));
    }
}

TEST_CASE("ingest builds and saves a store") {
    testutil::TempDir dir;
    const auto corpus = make_corpus(dir);
    const auto store = dir.file("history.store");

    auto r = run(kCli + " ingest --dataset " + q(corpus) + " --out " + q(store));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "recorded="));
    CHECK(contains(r.output, "users=60"));
    CHECK(contains(r.output, "counter_bytes="));
    CHECK(std::filesystem::exists(store));

    SUBCASE("retention window variant") {
        auto w = run(kCli + " ingest --dataset " + q(corpus) + " --window-days 30");
        CHECK(w.exit_code == 0);
    }
    SUBCASE("missing dataset is an io failure") {
        auto bad = run(kCli + " ingest --dataset " + q(dir.file("absent.csv")));
        CHECK(bad.exit_code == 2);
        CHECK(contains(bad.output, "error"));
    }
}

TEST_CASE("calibrate picks a static threshold") {
    testutil::TempDir dir;
    const auto corpus = make_corpus(dir);
    const auto out = dir.file("theta.json");

    auto r = run(kCli + " calibrate --dataset " + q(corpus) +
                 " --attacker targeted --tpr 0.95 --attempts 200 --seed 3 --out " + q(out));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "theta="));
    CHECK(contains(r.output, "achieved_tpr="));
    auto j = nlohmann::json::parse(testutil::slurp(out));
    CHECK(j.contains("theta"));
    CHECK(j["target_tpr"] == 0.95);

    SUBCASE("tpr out of range names the flag") {
        auto bad = run(kCli + " calibrate --dataset " + q(corpus) + " --tpr 1.5");
        CHECK(bad.exit_code == 1);
        CHECK(contains(bad.output, "--tpr"));
    }
    SUBCASE("stratified run works") {
        auto s = run(kCli + " calibrate --dataset " + q(corpus) +
                     " --attacker naive --tpr 0.9 --attempts 100 --stratify 0.5 --seed 4");
        CHECK(s.exit_code == 0);
    }
}

TEST_CASE("replay writes a deterministic trace") {
    testutil::TempDir dir;
    const auto corpus = make_corpus(dir);
    const auto trace_a = dir.file("trace_a.csv");
    const auto trace_b = dir.file("trace_b.csv");

    auto r = run(kCli + " replay --dataset " + q(corpus) + " --theta 2.0 --out " + q(trace_a));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "logins="));
    CHECK(contains(r.output, "reauths="));

    const auto text = testutil::slurp(trace_a);
    CHECK(text.rfind("user,timestamp,history_size,score,theta,decision,frequency_class\n", 0) ==
          0);

    run(kCli + " replay --dataset " + q(corpus) + " --theta 2.0 --out " + q(trace_b));
    CHECK(testutil::slurp(trace_b) == text);

    SUBCASE("attacker replay reports its tpr") {
        auto a = run(kCli + " replay --dataset " + q(corpus) +
                     " --attacker targeted --attempts 100 --seed 7 --theta 2.0 --out " +
                     q(dir.file("atk.csv")));
        CHECK(a.exit_code == 0);
        CHECK(contains(a.output, "attacker_tpr="));
    }
    SUBCASE("exactly one threshold source") {
        const auto dyn = dir.file("dyn.json");
        testutil::spit(dyn,
                       R"({"kind":"linear","trim":0.0,"table":[{"size":1,"theta":3.0}]})");
        auto both = run(kCli + " replay --dataset " + q(corpus) + " --theta 2.0 --threshold-file " +
                        q(dyn) + " --out " + q(dir.file("t.csv")));
        CHECK(both.exit_code == 1);
        CHECK(contains(both.output, "--theta"));
        auto neither =
            run(kCli + " replay --dataset " + q(corpus) + " --out " + q(dir.file("t2.csv")));
        CHECK(neither.exit_code == 1);

        auto dynamic_only = run(kCli + " replay --dataset " + q(corpus) + " --threshold-file " +
                                q(dyn) + " --out " + q(dir.file("t3.csv")));
        CHECK(dynamic_only.exit_code == 0);
    }
    SUBCASE("rtt-based feature set") {
        auto rtt = run(kCli + " replay --dataset " + q(corpus) +
                       " --rtt-replace-ip --rtt-granularity 50 --theta 2.0 --out " +
                       q(dir.file("rtt.csv")));
        CHECK(rtt.exit_code == 0);
        CHECK(contains(rtt.output, "skipped_missing_rtt="));
    }
}

TEST_CASE("report aggregates a trace") {
    testutil::TempDir dir;
    const auto corpus = make_corpus(dir);
    const auto trace = dir.file("trace.csv");
    REQUIRE(run(kCli + " replay --dataset " + q(corpus) + " --theta 2.0 --out " + q(trace))
                .exit_code == 0);

    const auto metrics = dir.file("metrics.csv");
    auto r = run(kCli + " report --trace " + q(trace) + " --out " + q(metrics));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "stable_setup_size="));
    const auto text = testutil::slurp(metrics);
    CHECK(text.rfind("group,value,median_count,median_rate,n_users\n", 0) == 0);
    CHECK(contains(text, "history_size,"));

    SUBCASE("frequency grouping") {
        auto f = run(kCli + " report --trace " + q(trace) + " --group-by frequency");
        CHECK(f.exit_code == 0);
        CHECK(contains(f.output, "frequency_class,"));
        CHECK(!contains(f.output, "stable_setup_size="));
    }
    SUBCASE("both groupings") {
        auto b = run(kCli + " report --trace " + q(trace) + " --group-by both");
        CHECK(b.exit_code == 0);
        CHECK(contains(b.output, "history_size,"));
        CHECK(contains(b.output, "frequency_class,"));
    }
    SUBCASE("missing trace exits 2") {
        CHECK(run(kCli + " report --trace " + q(dir.file("none.csv"))).exit_code == 2);
    }
}

TEST_CASE("train-threshold fits a dynamic table") {
    testutil::TempDir dir;
    const auto corpus = make_corpus(dir);
    const auto out = dir.file("dyn.json");

    auto r = run(kCli + " train-threshold --dataset " + q(corpus) +
                 " --threshold linear --out " + q(out));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "kind=linear"));
    auto j = nlohmann::json::parse(testutil::slurp(out));
    CHECK(j["kind"] == "linear");
    CHECK(j["table"].is_array());
    CHECK(!j["table"].empty());

    SUBCASE("the fitted table drives a replay") {
        auto rep = run(kCli + " replay --dataset " + q(corpus) + " --threshold-file " + q(out) +
                       " --out " + q(dir.file("trace.csv")));
        CHECK(rep.exit_code == 0);
    }
    SUBCASE("trim is range checked") {
        auto bad = run(kCli + " train-threshold --dataset " + q(corpus) + " --trim 0.9");
        CHECK(bad.exit_code == 1);
        CHECK(contains(bad.output, "--trim"));
    }
    SUBCASE("unknown threshold family") {
        auto bad = run(kCli + " train-threshold --dataset " + q(corpus) + " --threshold cubic");
        CHECK(bad.exit_code == 1);
    }
}

TEST_CASE("synth pseudonymizes and verifies from the command line") {
    testutil::TempDir dir;
    const auto corpus = make_corpus(dir);
    const auto out_a = dir.file("synth_a.csv");
    const auto out_b = dir.file("synth_b.csv");

    auto r = run(kCli + " synth --dataset " + q(corpus) + " --seed 2 --verify --out " + q(out_a));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "verification passed"));

    run(kCli + " synth --dataset " + q(corpus) + " --seed 2 --out " + q(out_b));
    CHECK(testutil::slurp(out_a) == testutil::slurp(out_b));

    auto synth_ds = rba::parse_dataset_file(out_a);
    auto orig_ds = rba::parse_dataset_file(corpus);
    CHECK(synth_ds.size() == orig_ds.size());
}

TEST_CASE("bench runs end to end on a small corpus") {
    testutil::TempDir dir;
    const auto corpus = make_corpus(dir);
    const auto out = dir.file("timings.csv");

    auto r = run(kCli + " bench --dataset " + q(corpus) + " --step 100 --reps 5 --out " + q(out));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.output, "\"scan\""));
    CHECK(contains(r.output, "\"counters\""));
    CHECK(contains(r.output, "concurrency cores=1"));
    const auto text = testutil::slurp(out);
    CHECK(text.rfind("backend,history_size,median_us,stddev_us\n", 0) == 0);
    CHECK(contains(text, "scan,"));
    CHECK(contains(text, "counters,"));
}

TEST_CASE("cli rejects unknown input") {
    auto unknown_cmd = run(kCli + " frobnicate");
    CHECK(unknown_cmd.exit_code == 1);

    auto unknown_flag = run(kCli + " ingest --dataset x --no-such-flag");
    CHECK(unknown_flag.exit_code == 1);
    CHECK(contains(unknown_flag.output, "ingest"));

    auto no_cmd = run(kCli);
    CHECK(no_cmd.exit_code == 1);

    auto help = run(kCli + " --help");
    CHECK(help.exit_code == 0);
    CHECK(contains(help.output, "replay"));
}
