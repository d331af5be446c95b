#include <sstream>

#include "doctest.h"
#include "rba/csv.hpp"
#include "rba/error.hpp"
#include "support/test_util.hpp"

using namespace rba;
using testutil::Rec;

namespace {

const std::string kHeader =
    "IP Address,Country,Region,City,ASN,User Agent String,OS Name and Version,"
    "Browser Name and Version,Device Type,User ID,Login Timestamp,RTT [ms],"
    "Login Successful,Is Attack IP,Is Account Takeover";

std::string row(const std::string& overrides_rtt = "100") {
    return "1.2.3.4,NO,NO-R,Oslo,777,Mozilla/5.0,Win 10,Chrome 80,desktop,42,"
           "1577000000000," +
           overrides_rtt + ",true,false,false";
}

} // namespace

TEST_CASE("csv header text is the canonical column list") {
    CHECK(csv_header() == kHeader);
    CHECK(kCsvColumns.size() == 15);
    CHECK(kCsvColumns.front() == "IP Address");
    CHECK(kCsvColumns.back() == "Is Account Takeover");
}

TEST_CASE("csv parses a minimal well formed file") {
    std::istringstream in(kHeader + "\n" + row() + "\n");
    ParseReport report;
    auto ds = parse_dataset(in, {}, &report);
    REQUIRE(ds.size() == 1);
    const auto& r = ds.records()[0];
    CHECK(r.ip_address == "1.2.3.4");
    CHECK(r.country == "NO");
    CHECK(r.region == "NO-R");
    CHECK(r.city == "Oslo");
    CHECK(r.asn == 777);
    CHECK(r.user_agent == "Mozilla/5.0");
    CHECK(r.os == "Win 10");
    CHECK(r.browser == "Chrome 80");
    CHECK(r.device_type == DeviceType::kDesktop);
    CHECK(r.user_id == 42);
    CHECK(r.login_timestamp == 1'577'000'000'000);
    CHECK(r.rtt_ms == 100);
    CHECK(r.login_successful);
    CHECK_FALSE(r.is_attack_ip);
    CHECK_FALSE(r.is_account_takeover);
    CHECK(report.rows_parsed == 1);
    CHECK(report.rows_skipped == 0);
}

TEST_CASE("csv quoting handles commas, escaped quotes, and embedded newlines") {
    const std::string quoted_ua = "\"Mozilla/5.0 (X11; \"\"quoted\"\", Linux)\"";
    const std::string multi_city = "\"Rio de\nJaneiro\"";
    std::string line = "1.2.3.4,BR,BR-R," + multi_city + ",1," + quoted_ua +
                       ",os,br,mobile,7,1000,,true,false,false";
    std::istringstream in(kHeader + "\n" + line + "\n");
    auto ds = parse_dataset(in);
    REQUIRE(ds.size() == 1);
    CHECK(ds.records()[0].city == "Rio de\nJaneiro");
    CHECK(ds.records()[0].user_agent == "Mozilla/5.0 (X11; \"quoted\", Linux)");
    CHECK_FALSE(ds.records()[0].rtt_ms.has_value());
}

TEST_CASE("csv accepts shuffled column order") {
    // Reverse the columns and the fields of one row consistently.
    std::vector<std::string> cols(kCsvColumns.rbegin(), kCsvColumns.rend());
    std::string header;
    for (std::size_t i = 0; i < cols.size(); ++i) header += (i ? "," : "") + cols[i];
    std::string line = "false,false,true,100,1577000000000,42,desktop,Chrome 80,Win 10,"
                       "Mozilla/5.0,777,Oslo,NO-R,NO,1.2.3.4";
    std::istringstream in(header + "\n" + line + "\n");
    auto ds = parse_dataset(in);
    REQUIRE(ds.size() == 1);
    CHECK(ds.records()[0].ip_address == "1.2.3.4");
    CHECK(ds.records()[0].asn == 777);
}

TEST_CASE("csv header aliases map alternate spellings") {
    std::string header = kHeader;
    const std::string canon = "OS Name and Version";
    header.replace(header.find(canon), canon.size(), "OS Name + Version");
    std::istringstream in(header + "\n" + row() + "\n");
    auto ds = parse_dataset(in);
    REQUIRE(ds.size() == 1);
    CHECK(ds.records()[0].os == "Win 10");

    SUBCASE("custom aliases merge on top") {
        std::string header2 = kHeader;
        const std::string ip = "IP Address";
        header2.replace(header2.find(ip), ip.size(), "Client IP");
        std::istringstream in2(header2 + "\n" + row() + "\n");
        ParseOptions opt;
        opt.header_aliases["IP Address"] = {"Client IP"};
        auto ds2 = parse_dataset(in2, opt);
        CHECK(ds2.records()[0].ip_address == "1.2.3.4");
    }

    SUBCASE("alias target must be a schema column") {
        ParseOptions opt;
        opt.header_aliases["Not A Column"] = {"x"};
        std::istringstream in3(kHeader + "\n");
        CHECK_THROWS_AS(parse_dataset(in3, opt), Error);
    }
}

TEST_CASE("csv schema errors") {
    SUBCASE("empty input") {
        std::istringstream in("");
        CHECK_THROWS_WITH_AS(parse_dataset(in), "empty input, expected header row", Error);
    }
    SUBCASE("unknown column") {
        std::istringstream in(kHeader + ",Extra\n");
        try {
            parse_dataset(in);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kSchema);
            CHECK(std::string(e.what()).find("Extra") != std::string::npos);
        }
    }
    SUBCASE("missing column") {
        std::string header = kHeader.substr(0, kHeader.rfind(','));
        std::istringstream in(header + "\n");
        try {
            parse_dataset(in);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kSchema);
            CHECK(std::string(e.what()).find("Is Account Takeover") != std::string::npos);
        }
    }
    SUBCASE("duplicate column") {
        std::istringstream in(kHeader + ",Country\n");
        try {
            parse_dataset(in);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kSchema);
        }
    }
}

TEST_CASE("csv row errors carry line numbers and field names") {
    SUBCASE("strict mode throws on first bad row") {
        std::istringstream in(kHeader + "\n" + row() + "\n" + row("not_a_number") + "\n");
        try {
            parse_dataset(in);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kRow);
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
            CHECK(e.field() == "RTT [ms]");
        }
    }
    SUBCASE("lenient mode skips and reports") {
        std::string text = kHeader + "\n" + row() + "\n" + row("bad") + "\n" + row() + "\n";
        std::istringstream in(text);
        ParseOptions opt;
        opt.strict = false;
        ParseReport report;
        auto ds = parse_dataset(in, opt, &report);
        CHECK(ds.size() == 2);
        CHECK(report.rows_parsed == 2);
        CHECK(report.rows_skipped == 1);
        REQUIRE(report.errors.size() == 1);
        CHECK(report.errors[0].line == 3);
    }
    SUBCASE("error cap limits stored diagnostics") {
        std::string text = kHeader + "\n";
        for (int i = 0; i < 12; ++i) text += row("bad") + "\n";
        std::istringstream in(text);
        ParseOptions opt;
        opt.strict = false;
        opt.max_reported_errors = 5;
        ParseReport report;
        auto ds = parse_dataset(in, opt, &report);
        CHECK(ds.empty());
        CHECK(report.rows_skipped == 12);
        CHECK(report.errors.size() == 5);
    }
}

TEST_CASE("csv field validation bounds") {
    SUBCASE("asn above 65535") {
        std::string line = row();
        line.replace(line.find("777"), 3, "70000");
        std::istringstream in(kHeader + "\n" + line + "\n");
        CHECK_THROWS_AS(parse_dataset(in), Error);
    }
    SUBCASE("unknown device type") {
        std::string line = row();
        line.replace(line.find("desktop"), 7, "toaster");
        std::istringstream in(kHeader + "\n" + line + "\n");
        try {
            parse_dataset(in);
            FAIL("expected throw");
        } catch (const Error& e) {
            CHECK(e.code() == ErrorCode::kRow);
            CHECK(e.field() == "device_type");
        }
    }
    SUBCASE("takeover on a failed login is rejected") {
        std::string line = "1.2.3.4,NO,NO-R,Oslo,777,ua,os,br,desktop,42,1000,,false,false,true";
        std::istringstream in(kHeader + "\n" + line + "\n");
        CHECK_THROWS_AS(parse_dataset(in), Error);
    }
}

TEST_CASE("csv roundtrip preserves every field") {
    std::vector<LoginRecord> recs;
    recs.push_back(Rec().user(1).ts(100).ip("9.8.7.6").country("JP").rtt(42));
    recs.push_back(Rec().user(2).ts(50).city("a,b").ua("quote \" here").no_rtt().failed());
    recs.push_back(Rec().user(3).ts(75).device(DeviceType::kBot).attack_ip().failed());
    recs.push_back(Rec().user(1).ts(200).takeover());
    // Pseudonymized ids use the full unsigned range, above int64 max.
    recs.push_back(Rec().user(16'477'470'701'859'043'275ULL).ts(300));
    auto ds = testutil::make_dataset(recs);

    std::ostringstream out;
    write_dataset(ds, out);
    std::istringstream in(out.str());
    auto parsed = parse_dataset(in);
    REQUIRE(parsed.size() == ds.size());
    // Dataset sorts by timestamp, so compare the sorted views.
    CHECK(parsed == ds);

    SUBCASE("byte size matches the actual output") {
        CHECK(csv_byte_size(ds) == out.str().size());
    }
}

TEST_CASE("csv dataset sorts stably by timestamp") {
    std::vector<LoginRecord> recs;
    recs.push_back(Rec().user(1).ts(300).ip("first"));
    recs.push_back(Rec().user(2).ts(100));
    recs.push_back(Rec().user(3).ts(300).ip("second"));
    auto ds = testutil::make_dataset(recs);
    REQUIRE(ds.size() == 3);
    CHECK(ds.records()[0].user_id == 2);
    CHECK(ds.records()[1].ip_address == "first");
    CHECK(ds.records()[2].ip_address == "second");
    CHECK(ds.metadata().first_timestamp == 100);
    CHECK(ds.metadata().last_timestamp == 300);
    CHECK(ds.metadata().user_count == 3);
}

TEST_CASE("read_csv_rows splits auxiliary csv") {
    std::istringstream in("a,b , c\n\"x,y\",\"z\"\"q\"\n\nlast,row\n");
    auto rows = read_csv_rows(in);
    REQUIRE(rows.size() == 3);
    CHECK(rows[0] == std::vector<std::string>{"a", "b ", " c"});
    CHECK(rows[1] == std::vector<std::string>{"x,y", "z\"q"});
    CHECK(rows[2] == std::vector<std::string>{"last", "row"});
}

TEST_CASE("csv crlf input parses like lf") {
    std::string text = kHeader + "\r\n" + row() + "\r\n";
    std::istringstream in(text);
    auto ds = parse_dataset(in);
    CHECK(ds.size() == 1);
}
