#include "rba/csv.hpp"

#include <array>
#include <charconv>
#include <cstring>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "rba/error.hpp"

namespace rba {

const std::vector<std::string> kCsvColumns = {
    "IP Address",
    "Country",
    "Region",
    "City",
    "ASN",
    "User Agent String",
    "OS Name and Version",
    "Browser Name and Version",
    "Device Type",
    "User ID",
    "Login Timestamp",
    "RTT [ms]",
    "Login Successful",
    "Is Attack IP",
    "Is Account Takeover",
};

namespace {

constexpr std::size_t kColumnCount = 15;

enum Column : std::size_t {
    kIp = 0,
    kCountry,
    kRegion,
    kCity,
    kAsn,
    kUserAgent,
    kOs,
    kBrowser,
    kDeviceType,
    kUserId,
    kTimestamp,
    kRtt,
    kSuccessful,
    kAttackIp,
    kTakeover,
};

// Alternate header spellings seen in the wild for the same schema.
const std::unordered_map<std::string, std::string>& builtin_aliases() {
    static const std::unordered_map<std::string, std::string> aliases = {
        {"OS Name + Version", "OS Name and Version"},
        {"Browser Name + Version", "Browser Name and Version"},
        {"Round-Trip Time [ms]", "RTT [ms]"},
    };
    return aliases;
}

// Splits one RFC-4180 row starting at `pos`. Returns false at end of input.
// `line` tracks the physical line number of the row start.
bool next_row(const std::string& text, std::size_t& pos, std::size_t& line,
              std::vector<std::string>& fields) {
    fields.clear();
    if (pos >= text.size()) return false;

    std::string field;
    bool in_quotes = false;
    bool saw_any = false;
    while (pos < text.size()) {
        char c = text[pos];
        if (in_quotes) {
            if (c == '"') {
                if (pos + 1 < text.size() && text[pos + 1] == '"') {
                    field.push_back('"');
                    pos += 2;
                } else {
                    in_quotes = false;
                    ++pos;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
                ++pos;
            }
            saw_any = true;
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            saw_any = true;
            ++pos;
            break;
        case ',':
            fields.push_back(std::move(field));
            field.clear();
            saw_any = true;
            ++pos;
            break;
        case '\r':
            ++pos;
            break;
        case '\n':
            ++pos;
            ++line;
            fields.push_back(std::move(field));
            return true;
        default:
            field.push_back(c);
            saw_any = true;
            ++pos;
        }
    }
    if (in_quotes) throw Error(ErrorCode::kRow, "unterminated quoted field");
    if (!saw_any && fields.empty()) return false;
    fields.push_back(std::move(field));
    ++line;
    return true;
}

bool needs_quoting(const std::string& s) {
    return s.find_first_of(",\"\r\n") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& s) {
    if (!needs_quoting(s)) {
        out << s;
        return;
    }
    out << '"';
    for (char c : s) {
        if (c == '"') out << "\"\"";
        else out << c;
    }
    out << '"';
}

std::int64_t parse_int64(const std::string& s, const char* field_name) {
    std::int64_t value = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || s.empty()) {
        throw Error(ErrorCode::kRow, std::string("unparseable integer '") + s + "' in " + field_name,
                    field_name);
    }
    return value;
}

// User ids span the whole unsigned range, so they get their own path.
std::uint64_t parse_uint64(const std::string& s, const char* field_name) {
    std::uint64_t value = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || s.empty()) {
        throw Error(ErrorCode::kRow, std::string("unparseable integer '") + s + "' in " + field_name,
                    field_name);
    }
    return value;
}

bool parse_bool(const std::string& s, const char* field_name) {
    std::string lower;
    lower.reserve(s.size());
    for (char c : s) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "true") return true;
    if (lower == "false") return false;
    throw Error(ErrorCode::kRow, std::string("unparseable boolean '") + s + "' in " + field_name,
                field_name);
}

LoginRecord parse_row(const std::vector<std::string>& fields,
                      const std::array<std::size_t, kColumnCount>& index) {
    LoginRecord r;
    r.ip_address = fields[index[kIp]];
    r.country = fields[index[kCountry]];
    r.region = fields[index[kRegion]];
    r.city = fields[index[kCity]];
    std::int64_t asn = parse_int64(fields[index[kAsn]], "ASN");
    if (asn < 0 || asn > kAsnMax) {
        throw Error(ErrorCode::kRow, "ASN out of range [0, 65535]: " + std::to_string(asn), "asn");
    }
    r.asn = static_cast<int>(asn);
    r.user_agent = fields[index[kUserAgent]];
    r.os = fields[index[kOs]];
    r.browser = fields[index[kBrowser]];
    auto device = device_type_from_name(fields[index[kDeviceType]]);
    if (!device) {
        throw Error(ErrorCode::kRow, "unknown device type '" + fields[index[kDeviceType]] + "'",
                    "device_type");
    }
    r.device_type = *device;
    r.user_id = parse_uint64(fields[index[kUserId]], "User ID");
    r.login_timestamp = parse_int64(fields[index[kTimestamp]], "Login Timestamp");
    const std::string& rtt = fields[index[kRtt]];
    if (!rtt.empty()) r.rtt_ms = parse_int64(rtt, "RTT [ms]");
    r.login_successful = parse_bool(fields[index[kSuccessful]], "Login Successful");
    r.is_attack_ip = parse_bool(fields[index[kAttackIp]], "Is Attack IP");
    r.is_account_takeover = parse_bool(fields[index[kTakeover]], "Is Account Takeover");
    validate_record(r);
    return r;
}

// Streambuf that discards output and counts bytes.
class CountingBuf : public std::streambuf {
public:
    std::size_t count() const { return count_; }

protected:
    int overflow(int c) override {
        if (c != EOF) ++count_;
        return c;
    }
    std::streamsize xsputn(const char*, std::streamsize n) override {
        count_ += static_cast<std::size_t>(n);
        return n;
    }

private:
    std::size_t count_ = 0;
};

} // namespace

std::string csv_header() {
    std::string header;
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) {
        if (i) header.push_back(',');
        header += kCsvColumns[i];
    }
    return header;
}

LoginDataset parse_dataset(std::istream& in, const ParseOptions& options, ParseReport* report) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::kIo, "failed to read CSV input");

    std::size_t pos = 0;
    std::size_t line = 1;
    std::vector<std::string> fields;
    if (!next_row(text, pos, line, fields)) {
        throw Error(ErrorCode::kSchema, "empty input, expected header row");
    }

    // Resolve header cells to canonical columns, applying aliases.
    std::unordered_map<std::string, std::size_t> canonical;
    for (std::size_t i = 0; i < kCsvColumns.size(); ++i) canonical[kCsvColumns[i]] = i;

    std::unordered_map<std::string, std::string> aliases = builtin_aliases();
    for (const auto& [canon, alts] : options.header_aliases) {
        if (!canonical.count(canon)) {
            throw Error(ErrorCode::kConfig, "alias target is not a schema column: " + canon);
        }
        for (const auto& alt : alts) aliases[alt] = canon;
    }

    std::array<std::size_t, kColumnCount> index;
    index.fill(kColumnCount);
    std::array<bool, kColumnCount> seen{};
    for (std::size_t i = 0; i < fields.size(); ++i) {
        std::string name = fields[i];
        if (auto it = aliases.find(name); it != aliases.end()) name = it->second;
        auto it = canonical.find(name);
        if (it == canonical.end()) {
            throw Error(ErrorCode::kSchema, "unknown column '" + fields[i] + "'");
        }
        if (seen[it->second]) {
            throw Error(ErrorCode::kSchema, "duplicate column '" + fields[i] + "'");
        }
        seen[it->second] = true;
        index[it->second] = i;
    }
    for (std::size_t i = 0; i < kColumnCount; ++i) {
        if (!seen[i]) throw Error(ErrorCode::kSchema, "missing column '" + kCsvColumns[i] + "'");
    }
    const std::size_t header_width = fields.size();

    std::vector<LoginRecord> records;
    ParseReport local_report;
    while (true) {
        std::size_t row_line = line;
        if (!next_row(text, pos, line, fields)) break;
        if (fields.size() == 1 && fields[0].empty()) continue; // trailing blank line
        try {
            if (fields.size() != header_width) {
                throw Error(ErrorCode::kRow,
                            "expected " + std::to_string(header_width) + " fields, got " +
                                std::to_string(fields.size()));
            }
            records.push_back(parse_row(fields, index));
            ++local_report.rows_parsed;
        } catch (const Error& e) {
            if (e.code() != ErrorCode::kRow) throw;
            if (options.strict) {
                throw Error(ErrorCode::kRow,
                            "line " + std::to_string(row_line) + ": " + e.what(), e.field());
            }
            ++local_report.rows_skipped;
            if (local_report.errors.size() < options.max_reported_errors) {
                local_report.errors.push_back({row_line, e.what()});
            }
        }
    }
    if (report) *report = std::move(local_report);
    return LoginDataset(std::move(records));
}

LoginDataset parse_dataset_file(const std::string& path, const ParseOptions& options,
                                ParseReport* report) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
    return parse_dataset(in, options, report);
}

void write_dataset(const LoginDataset& dataset, std::ostream& out) {
    out << csv_header() << '\n';
    for (const auto& r : dataset.records()) {
        write_field(out, r.ip_address);
        out << ',';
        write_field(out, r.country);
        out << ',';
        write_field(out, r.region);
        out << ',';
        write_field(out, r.city);
        out << ',' << r.asn << ',';
        write_field(out, r.user_agent);
        out << ',';
        write_field(out, r.os);
        out << ',';
        write_field(out, r.browser);
        out << ',' << device_type_name(r.device_type);
        out << ',' << r.user_id;
        out << ',' << r.login_timestamp;
        out << ',';
        if (r.rtt_ms) out << *r.rtt_ms;
        out << ',' << (r.login_successful ? "true" : "false");
        out << ',' << (r.is_attack_ip ? "true" : "false");
        out << ',' << (r.is_account_takeover ? "true" : "false");
        out << '\n';
    }
    if (!out) throw Error(ErrorCode::kIo, "failed to write CSV output");
}

void write_dataset_file(const LoginDataset& dataset, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
    write_dataset(dataset, out);
}

std::size_t csv_byte_size(const LoginDataset& dataset) {
    CountingBuf buf;
    std::ostream out(&buf);
    write_dataset(dataset, out);
    return buf.count();
}

std::vector<std::vector<std::string>> read_csv_rows(std::istream& in) {
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorCode::kIo, "failed to read CSV input");
    std::vector<std::vector<std::string>> rows;
    std::size_t pos = 0;
    std::size_t line = 1;
    std::vector<std::string> fields;
    while (next_row(text, pos, line, fields)) {
        if (fields.size() == 1 && fields[0].empty()) continue;
        rows.push_back(fields);
    }
    return rows;
}

} // namespace rba
