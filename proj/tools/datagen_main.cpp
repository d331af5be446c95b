#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "rba/csv.hpp"
#include "rba/datagen.hpp"
#include "rba/error.hpp"

// Emits a demo login corpus with mixed login frequencies, mostly-stable user
// contexts, failed attempts from shared attacker infrastructure, and a few
// confirmed takeovers. Useful as input for the main tool and the tests.
int main(int argc, char** argv) {
    CLI::App app{"demo login corpus generator"};

    rba::DatagenConfig config;
    std::string out;
    app.add_option("--users", config.users, "number of accounts");
    app.add_option("--countries", config.countries, "number of countries");
    app.add_option("--seed", config.seed, "rng seed");
    app.add_option("--heavy", config.heavy_fraction, "fraction of heavy users")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--medium", config.medium_fraction, "fraction of medium users")
        ->check(CLI::Range(0.0, 1.0));
    app.add_option("--heavy-max", config.heavy_max_logins, "max logins for heavy users");
    app.add_option("--failed", config.failed_fraction, "failed rows per successful login");
    app.add_option("--takeovers", config.takeovers, "confirmed takeover rows");
    app.add_option("--span-days", config.span_days, "corpus time span");
    app.add_option("--missing-rtt", config.missing_rtt_fraction, "fraction of rows without RTT")
        ->check(CLI::Range(0.0, 0.999));
    app.add_option("--out", out, "output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "rba-datagen: " << e.what() << "\n";
        return 1;
    }

    try {
        const auto dataset = rba::generate_corpus(config);
        rba::write_dataset_file(dataset, out);
        std::cout << "rows=" << dataset.size() << " users=" << dataset.metadata().user_count
                  << " out=" << out << "\n";
        return 0;
    } catch (const rba::Error& e) {
        std::cerr << "rba-datagen: error: " << e.what() << "\n";
        return e.code() == rba::ErrorCode::kConfig || e.code() == rba::ErrorCode::kArgument ? 1 : 2;
    } catch (const std::exception& e) {
        std::cerr << "rba-datagen: unexpected error: " << e.what() << "\n";
        return 2;
    }
}
