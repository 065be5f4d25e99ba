#include "eeasim/safety.hpp"

#include <algorithm>

#include "eeasim/error.hpp"

namespace eea {

namespace {

using L = AsilLevel;

// [severity][exposure][controllability], S3/E1/C3 holds the conservative A.
constexpr L kRiskGraph[3][4][3] = {
    // S1
    {{L::qm, L::qm, L::qm}, {L::qm, L::qm, L::qm}, {L::qm, L::qm, L::a}, {L::qm, L::a, L::b}},
    // S2
    {{L::qm, L::qm, L::qm}, {L::qm, L::qm, L::a}, {L::qm, L::a, L::b}, {L::a, L::b, L::c}},
    // S3
    {{L::qm, L::qm, L::a}, {L::qm, L::a, L::b}, {L::a, L::b, L::c}, {L::b, L::c, L::d}},
};

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return std::string(s.substr(first, last - first + 1));
}

std::string upper(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return std::toupper(c); });
    return out;
}

template <typename Enum>
std::optional<Enum> parse_class(std::string_view text, char prefix, int max) {
    const auto t = upper(trim(text));
    if (t.size() != 2 || t[0] != prefix || t[1] < '1' || t[1] > '0' + max) return std::nullopt;
    return static_cast<Enum>(t[1] - '0');
}

// One logical CSV record; false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
    fields.clear();
    std::string field;
    bool quoted = false;
    bool any = false;
    char c = 0;
    while (in.get(c)) {
        any = true;
        if (quoted) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field += '"';
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(field));
            field.clear();
        } else if (c == '\n') {
            ++line;
            fields.push_back(std::move(field));
            return true;
        } else if (c != '\r') {
            field += c;
        }
    }
    if (quoted) fail(Errc::parse_error, "line " + std::to_string(line) + ": unterminated quoted field");
    if (!any) return false;
    fields.push_back(std::move(field));
    return true;
}

}  // namespace

std::string_view to_string(AsilLevel level) noexcept {
    switch (level) {
        case AsilLevel::qm: return "QM";
        case AsilLevel::a: return "A";
        case AsilLevel::b: return "B";
        case AsilLevel::c: return "C";
        case AsilLevel::d: return "D";
    }
    return "?";
}

std::string_view to_string(Severity s) noexcept {
    static constexpr std::string_view names[] = {"S1", "S2", "S3"};
    return names[static_cast<int>(s) - 1];
}

std::string_view to_string(Exposure e) noexcept {
    static constexpr std::string_view names[] = {"E1", "E2", "E3", "E4"};
    return names[static_cast<int>(e) - 1];
}

std::string_view to_string(Controllability c) noexcept {
    static constexpr std::string_view names[] = {"C1", "C2", "C3"};
    return names[static_cast<int>(c) - 1];
}

std::optional<AsilLevel> parse_asil(std::string_view text) noexcept {
    const auto t = upper(trim(text));
    for (int i = 0; i < static_cast<int>(kAsilLevelCount); ++i) {
        if (to_string(static_cast<AsilLevel>(i)) == t) return static_cast<AsilLevel>(i);
    }
    return std::nullopt;
}

std::optional<Severity> parse_severity(std::string_view text) noexcept { return parse_class<Severity>(text, 'S', 3); }

std::optional<Exposure> parse_exposure(std::string_view text) noexcept { return parse_class<Exposure>(text, 'E', 4); }

std::optional<Controllability> parse_controllability(std::string_view text) noexcept {
    return parse_class<Controllability>(text, 'C', 3);
}

AsilLevel determine_asil(Severity s, Exposure e, Controllability c, bool relax_s3e1c3) noexcept {
    if (relax_s3e1c3 && s == Severity::s3 && e == Exposure::e1 && c == Controllability::c3) return AsilLevel::qm;
    return kRiskGraph[static_cast<int>(s) - 1][static_cast<int>(e) - 1][static_cast<int>(c) - 1];
}

AsilLevel max_asil(std::span<const AsilLevel> levels) {
    if (levels.empty()) fail(Errc::empty_input, "max_asil of an empty list");
    return *std::max_element(levels.begin(), levels.end());
}

HazardReport classify_batch(const std::vector<HazardRecord>& records, bool relax_s3e1c3) {
    HazardReport report;
    std::set<std::string> seen;
    for (const auto& r : records) {
        if (!seen.insert(r.id).second) report.duplicate_ids.insert(r.id);
    }
    for (const auto& r : records) {
        const auto level = determine_asil(r.severity, r.exposure, r.controllability, relax_s3e1c3);
        report.entries.push_back({r.id, level, report.duplicate_ids.contains(r.id)});
        ++report.histogram[static_cast<std::size_t>(level)];
    }
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const ClassifiedHazard& a, const ClassifiedHazard& b) { return a.id < b.id; });
    return report;
}

std::vector<HazardRecord> read_hazards_csv(std::istream& in) {
    std::vector<std::string> fields;
    std::size_t line = 1;
    if (!read_record(in, fields, line)) fail(Errc::parse_error, "empty hazard document");
    static const std::vector<std::string> kHeader = {"id", "description", "severity", "exposure", "controllability"};
    std::vector<std::string> header;
    for (const auto& f : fields) header.push_back(trim(f));
    if (header != kHeader) {
        fail(Errc::parse_error, "line 1: expected header id,description,severity,exposure,controllability");
    }

    std::vector<HazardRecord> records;
    std::size_t record_line = line;
    while (read_record(in, fields, line)) {
        const auto where = "line " + std::to_string(record_line);
        record_line = line;
        if (fields.size() == 1 && trim(fields[0]).empty()) continue;
        if (fields.size() != 5) {
            fail(Errc::parse_error, where + ": expected 5 fields, got " + std::to_string(fields.size()));
        }
        HazardRecord r;
        r.id = trim(fields[0]);
        r.description = fields[1];
        const auto s = parse_severity(fields[2]);
        const auto e = parse_exposure(fields[3]);
        const auto c = parse_controllability(fields[4]);
        if (r.id.empty()) fail(Errc::parse_error, where + ": empty id");
        if (!s) fail(Errc::parse_error, where + ": bad severity '" + fields[2] + "'");
        if (!e) fail(Errc::parse_error, where + ": bad exposure '" + fields[3] + "'");
        if (!c) fail(Errc::parse_error, where + ": bad controllability '" + fields[4] + "'");
        r.severity = *s;
        r.exposure = *e;
        r.controllability = *c;
        records.push_back(std::move(r));
    }
    return records;
}

}  // namespace eea
