#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "rba/error.hpp"
#include "rba/threshold.hpp"
#include "support/oracles.hpp"

using namespace rba;

namespace {

std::vector<TrainingSample> linear_samples(double intercept, double slope, std::uint64_t max_size,
                                           int per_size = 1) {
    std::vector<TrainingSample> samples;
    for (std::uint64_t s = 1; s <= max_size; ++s) {
        for (int i = 0; i < per_size; ++i) {
            samples.push_back({s, intercept + slope * static_cast<double>(s)});
        }
    }
    return samples;
}

} // namespace

TEST_CASE("static calibration picks the k-th largest attacker score") {
    std::vector<double> scores;
    for (int i = 1; i <= 100; ++i) scores.push_back(i);

    auto t = calibrate_static(scores, 0.25);
    CHECK(t.value == 76.0);
    CHECK(t.target_tpr == 0.25);
    CHECK(t.achieved_tpr == doctest::Approx(0.25).epsilon(1e-12));

    SUBCASE("target one keeps every attacker above theta") {
        auto all = calibrate_static(scores, 1.0);
        CHECK(all.value == 1.0);
        CHECK(all.achieved_tpr == 1.0);
    }
    SUBCASE("tiny targets clamp to the single highest score") {
        auto top = calibrate_static(scores, 0.001);
        CHECK(top.value == 100.0);
        CHECK(top.achieved_tpr == doctest::Approx(0.01).epsilon(1e-12));
    }
    SUBCASE("ties push the achieved rate above the target") {
        auto tied = calibrate_static({5, 5, 5, 1}, 0.5);
        CHECK(tied.value == 5.0);
        CHECK(tied.achieved_tpr == doctest::Approx(0.75).epsilon(1e-12));
    }
    SUBCASE("matches the sort-based reference on random inputs") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 100; ++trial) {
            std::vector<double> s;
            const int n = 1 + static_cast<int>(rng() % 40);
            for (int i = 0; i < n; ++i) s.push_back(static_cast<double>(rng() % 1000) / 10.0);
            const double target = (1 + static_cast<int>(rng() % 100)) / 100.0;
            CHECK(calibrate_static(s, target).value == oracle::static_theta(s, target));
        }
    }
    SUBCASE("argument validation") {
        CHECK_THROWS_AS(calibrate_static({}, 0.5), Error);
        CHECK_THROWS_AS(calibrate_static(scores, 0.0), Error);
        CHECK_THROWS_AS(calibrate_static(scores, 1.5), Error);
        CHECK_THROWS_AS(calibrate_static(scores, -0.1), Error);
    }
}

TEST_CASE("achieved tpr counts scores at or above theta") {
    CHECK(achieved_tpr({1, 2, 3, 4}, 3.0) == 0.5);
    CHECK(achieved_tpr({1, 2, 3, 4}, 0.5) == 1.0);
    CHECK(achieved_tpr({1, 2, 3, 4}, 10.0) == 0.0);
    const double inf = std::numeric_limits<double>::infinity();
    CHECK(achieved_tpr({inf, 1.0}, inf) == 0.5);
    CHECK_THROWS_AS(achieved_tpr({}, 1.0), Error);
}

TEST_CASE("fit_polynomial matches a Gaussian elimination reference") {
    std::mt19937_64 rng(17);
    for (int degree = 1; degree <= 3; ++degree) {
        for (int trial = 0; trial < 30; ++trial) {
            const int n = degree + 2 + static_cast<int>(rng() % 20);
            std::vector<double> x, y;
            for (int i = 0; i < n; ++i) {
                x.push_back(static_cast<double>(i) + static_cast<double>(rng() % 100) / 100.0);
                y.push_back(static_cast<double>(rng() % 1000) / 100.0 - 5.0);
            }
            auto lib = fit_polynomial(x, y, degree);
            auto ref = oracle::polyfit(x, y, degree);
            REQUIRE(lib.size() == ref.size());
            // Compare predictions; coefficient bases differ numerically.
            for (double xi : x) {
                double pl = 0.0, pr = 0.0, pw = 1.0;
                for (std::size_t c = 0; c < lib.size(); ++c) {
                    pl += lib[c] * pw;
                    pr += ref[c] * pw;
                    pw *= xi;
                }
                CHECK(pl == doctest::Approx(pr).epsilon(1e-6).scale(1.0));
            }
        }
    }
    SUBCASE("exact recovery of polynomial data") {
        std::vector<double> x = {1, 2, 3, 4, 5, 6};
        std::vector<double> y;
        for (double xi : x) y.push_back(2.0 - 0.5 * xi + 0.25 * xi * xi);
        auto c = fit_polynomial(x, y, 2);
        REQUIRE(c.size() == 3);
        CHECK(c[0] == doctest::Approx(2.0).epsilon(1e-9));
        CHECK(c[1] == doctest::Approx(-0.5).epsilon(1e-9));
        CHECK(c[2] == doctest::Approx(0.25).epsilon(1e-9));
    }
    SUBCASE("argument validation") {
        CHECK_THROWS_AS(fit_polynomial({1, 2}, {1}, 1), Error);
        CHECK_THROWS_AS(fit_polynomial({}, {}, 1), Error);
        CHECK_THROWS_AS(fit_polynomial({1, 2}, {1, 2}, -1), Error);
    }
}

TEST_CASE("dynamic threshold training validations") {
    CHECK_THROWS_AS(train_dynamic({}, ThresholdKind::kLinear), Error);

    // Nine samples are not enough.
    auto nine = linear_samples(5.0, -0.1, 9);
    try {
        train_dynamic(nine, ThresholdKind::kLinear);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kTraining);
    }

    // Ten samples on a single size are rejected too.
    std::vector<TrainingSample> one_size(10, TrainingSample{3, 1.0});
    CHECK_THROWS_AS(train_dynamic(one_size, ThresholdKind::kLinear), Error);

    // History size zero is a training-data error.
    auto with_zero = linear_samples(5.0, -0.1, 12);
    with_zero.push_back({0, 1.0});
    CHECK_THROWS_AS(train_dynamic(with_zero, ThresholdKind::kLinear), Error);

    TrainOptions bad_trim;
    bad_trim.trim_fraction = 1.0;
    CHECK_THROWS_AS(train_dynamic(linear_samples(5, -0.1, 12), ThresholdKind::kLinear, bad_trim),
                    Error);
    TrainOptions bad_degree;
    bad_degree.poly_degree = 0;
    CHECK_THROWS_AS(train_dynamic(linear_samples(5, -0.1, 12), ThresholdKind::kPoly, bad_degree),
                    Error);
}

TEST_CASE("linear training recovers a noiseless line") {
    TrainOptions opt;
    opt.trim_fraction = 0.0;
    auto dyn = train_dynamic(linear_samples(5.0, -0.05, 30), ThresholdKind::kLinear, opt);
    CHECK(dyn.kind == ThresholdKind::kLinear);
    REQUIRE(dyn.table.size() == 30);
    for (std::uint64_t s = 1; s <= 30; ++s) {
        CHECK(dyn.table[s - 1] ==
              doctest::Approx(5.0 - 0.05 * static_cast<double>(s)).epsilon(1e-9));
    }
}

TEST_CASE("non-positive fits carry the previous threshold forward") {
    TrainOptions opt;
    opt.trim_fraction = 0.0;
    // Crosses zero between sizes 10 and 11.
    auto dyn = train_dynamic(linear_samples(1.05, -0.1, 20), ThresholdKind::kLinear, opt);
    REQUIRE(dyn.table.size() == 20);
    CHECK(dyn.table[9] == doctest::Approx(0.05).epsilon(1e-6));
    for (std::size_t i = 10; i < 20; ++i) CHECK(dyn.table[i] == dyn.table[9]);
    CHECK(dyn.table[0] == doctest::Approx(0.95).epsilon(1e-9));
}

TEST_CASE("leading non-positive fits borrow the first positive threshold") {
    TrainOptions opt;
    opt.trim_fraction = 0.0;
    // Positive only from size 5 on.
    auto dyn = train_dynamic(linear_samples(-0.45, 0.1, 20), ThresholdKind::kLinear, opt);
    REQUIRE(dyn.table.size() == 20);
    CHECK(dyn.table[4] == doctest::Approx(0.05).epsilon(1e-6));
    for (std::size_t i = 0; i < 4; ++i) CHECK(dyn.table[i] == dyn.table[4]);
    CHECK(dyn.table[19] == doctest::Approx(1.55).epsilon(1e-9));
}

TEST_CASE("training fails when every fitted threshold is non-positive") {
    TrainOptions opt;
    opt.trim_fraction = 0.0;
    try {
        train_dynamic(linear_samples(-1.0, 0.0, 12), ThresholdKind::kLinear, opt);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kTraining);
    }
}

TEST_CASE("trimming drops exactly the highest scores") {
    // Eleven samples; one large outlier. floor(0.1 * 11) drops exactly it.
    auto clean = linear_samples(4.0, -0.1, 10);
    auto noisy = clean;
    noisy.push_back({2, 1000.0});

    TrainOptions no_trim;
    no_trim.trim_fraction = 0.0;
    TrainOptions trim;
    trim.trim_fraction = 0.1;

    auto trained_clean = train_dynamic(clean, ThresholdKind::kLinear, no_trim);
    auto trained_trimmed = train_dynamic(noisy, ThresholdKind::kLinear, trim);
    CHECK(trained_clean.table == trained_trimmed.table);

    // Without trimming the outlier drags the whole line up.
    auto trained_noisy = train_dynamic(noisy, ThresholdKind::kLinear, no_trim);
    CHECK(trained_noisy.table[0] > trained_clean.table[0] + 10.0);
}

TEST_CASE("hybrid is the pointwise minimum of linear and poly") {
    std::vector<TrainingSample> samples;
    std::mt19937_64 rng(23);
    for (std::uint64_t s = 1; s <= 40; ++s) {
        const double base = 6.0 / (1.0 + 0.2 * static_cast<double>(s));
        for (int i = 0; i < 3; ++i) {
            samples.push_back({s, base + static_cast<double>(rng() % 100) / 500.0});
        }
    }
    TrainOptions opt;
    opt.trim_fraction = 0.05;
    auto linear = train_dynamic(samples, ThresholdKind::kLinear, opt);
    auto poly = train_dynamic(samples, ThresholdKind::kPoly, opt);
    auto hybrid = train_dynamic(samples, ThresholdKind::kHybrid, opt);

    REQUIRE(linear.table.size() == hybrid.table.size());
    REQUIRE(poly.table.size() == hybrid.table.size());
    for (std::size_t i = 0; i < hybrid.table.size(); ++i) {
        CHECK(hybrid.table[i] == std::min(linear.table[i], poly.table[i]));
    }
}

TEST_CASE("log-space training fits the log of the scores") {
    TrainOptions opt;
    opt.trim_fraction = 0.0;
    opt.log_space = true;
    std::vector<TrainingSample> samples;
    for (std::uint64_t s = 1; s <= 25; ++s) {
        samples.push_back({s, 2.0 * std::exp(-0.1 * static_cast<double>(s))});
    }
    auto dyn = train_dynamic(samples, ThresholdKind::kLinear, opt);
    REQUIRE(dyn.table.size() == 25);
    for (std::uint64_t s = 1; s <= 25; ++s) {
        CHECK(dyn.table[s - 1] ==
              doctest::Approx(2.0 * std::exp(-0.1 * static_cast<double>(s))).epsilon(1e-6));
        CHECK(dyn.table[s - 1] > 0.0);
    }

    SUBCASE("non-positive scores are skipped in log space") {
        auto with_zero = samples;
        with_zero.push_back({3, 0.0});
        auto dyn2 = train_dynamic(with_zero, ThresholdKind::kLinear, opt);
        CHECK(dyn2.table == dyn.table);
    }
}

TEST_CASE("threshold_at clamps to the last table entry") {
    DynamicThreshold dyn;
    dyn.table = {4.0, 3.0, 2.0};
    CHECK(threshold_at(dyn, 1) == 4.0);
    CHECK(threshold_at(dyn, 2) == 3.0);
    CHECK(threshold_at(dyn, 3) == 2.0);
    CHECK(threshold_at(dyn, 100) == 2.0);
    CHECK_THROWS_AS(threshold_at(dyn, 0), Error);

    DynamicThreshold empty;
    try {
        threshold_at(empty, 1);
        FAIL("expected throw");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::kUnconfigured);
    }
}

TEST_CASE("risk levels split at the two thresholds") {
    CHECK(classify_risk(0.4, 0.5, 2.0) == RiskLevel::kLow);
    CHECK(classify_risk(0.5, 0.5, 2.0) == RiskLevel::kMedium);
    CHECK(classify_risk(1.99, 0.5, 2.0) == RiskLevel::kMedium);
    CHECK(classify_risk(2.0, 0.5, 2.0) == RiskLevel::kHigh);
    CHECK(classify_risk(std::numeric_limits<double>::infinity(), 0.5, 2.0) == RiskLevel::kHigh);
    // Equal thresholds leave no medium band.
    CHECK(classify_risk(0.5, 0.5, 0.5) == RiskLevel::kHigh);
    CHECK(classify_risk(0.49, 0.5, 0.5) == RiskLevel::kLow);

    CHECK_THROWS_AS(classify_risk(1.0, 2.0, 1.0), Error);
    CHECK_THROWS_AS(classify_risk(1.0, -0.5, 1.0), Error);

    CHECK(std::string(risk_level_name(RiskLevel::kLow)) == "LOW");
    CHECK(std::string(risk_level_name(RiskLevel::kMedium)) == "MEDIUM");
    CHECK(std::string(risk_level_name(RiskLevel::kHigh)) == "HIGH");
}

TEST_CASE("threshold json roundtrips") {
    SUBCASE("dynamic") {
        DynamicThreshold dyn;
        dyn.kind = ThresholdKind::kPoly;
        dyn.trim_fraction = 0.1;
        dyn.table = {3.5, 2.25, 1.125, 0.875};
        auto text = dynamic_threshold_to_json(dyn);
        auto back = dynamic_threshold_from_json(text);
        CHECK(back.kind == ThresholdKind::kPoly);
        CHECK(back.trim_fraction == 0.1);
        CHECK(back.table == dyn.table);
    }
    SUBCASE("dynamic rejects gaps, duplicates, and non-positive entries") {
        CHECK_THROWS_AS(dynamic_threshold_from_json(
                            R"({"kind":"linear","table":[{"size":1,"theta":1.0},{"size":3,"theta":1.0}]})"),
                        Error);
        CHECK_THROWS_AS(dynamic_threshold_from_json(
                            R"({"kind":"linear","table":[{"size":1,"theta":1.0},{"size":1,"theta":2.0}]})"),
                        Error);
        CHECK_THROWS_AS(dynamic_threshold_from_json(
                            R"({"kind":"linear","table":[{"size":1,"theta":-4.0}]})"),
                        Error);
        CHECK_THROWS_AS(dynamic_threshold_from_json(R"({"kind":"bogus","table":[]})"), Error);
        CHECK_THROWS_AS(dynamic_threshold_from_json("not json"), Error);
    }
    SUBCASE("static") {
        StaticThreshold t;
        t.value = 0.6252118;
        t.target_tpr = 0.95;
        t.achieved_tpr = 0.9512;
        auto back = static_threshold_from_json(static_threshold_to_json(t));
        CHECK(back.value == t.value);
        CHECK(back.target_tpr == t.target_tpr);
        CHECK(back.achieved_tpr == t.achieved_tpr);
    }
    SUBCASE("kind names roundtrip") {
        for (auto kind : {ThresholdKind::kLinear, ThresholdKind::kPoly, ThresholdKind::kHybrid}) {
            CHECK(threshold_kind_from_name(threshold_kind_name(kind)) == kind);
        }
        CHECK_THROWS_AS(threshold_kind_from_name("nope"), Error);
    }
}
