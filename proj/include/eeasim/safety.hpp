#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

namespace eea {

enum class Severity { s1 = 1, s2, s3 };
enum class Exposure { e1 = 1, e2, e3, e4 };
enum class Controllability { c1 = 1, c2, c3 };

// Totally ordered: QM < A < B < C < D.
enum class AsilLevel { qm = 0, a, b, c, d };

inline constexpr std::size_t kAsilLevelCount = 5;

std::string_view to_string(AsilLevel level) noexcept;
std::string_view to_string(Severity s) noexcept;
std::string_view to_string(Exposure e) noexcept;
std::string_view to_string(Controllability c) noexcept;

std::optional<AsilLevel> parse_asil(std::string_view text) noexcept;
std::optional<Severity> parse_severity(std::string_view text) noexcept;
std::optional<Exposure> parse_exposure(std::string_view text) noexcept;
std::optional<Controllability> parse_controllability(std::string_view text) noexcept;

/// ISO 26262 risk graph lookup. The S3/E1/C3 cell is tabulated as "A/QM":
/// it yields A unless the caller sets relax_s3e1c3, which selects QM.
AsilLevel determine_asil(Severity s, Exposure e, Controllability c, bool relax_s3e1c3 = false) noexcept;

/// Throws EmptyInput.
AsilLevel max_asil(std::span<const AsilLevel> levels);

struct HazardRecord {
    std::string id;
    std::string description;
    Severity severity = Severity::s1;
    Exposure exposure = Exposure::e1;
    Controllability controllability = Controllability::c1;
};

struct ClassifiedHazard {
    std::string id;
    AsilLevel level = AsilLevel::qm;
    bool duplicate_id = false;
};

struct HazardReport {
    std::vector<ClassifiedHazard> entries;  // ordered by id, stable for duplicates
    std::array<std::size_t, kAsilLevelCount> histogram{};
    std::set<std::string> duplicate_ids;

    std::size_t count(AsilLevel level) const { return histogram[static_cast<std::size_t>(level)]; }
};

HazardReport classify_batch(const std::vector<HazardRecord>& records, bool relax_s3e1c3 = false);

/// CSV with header id,description,severity,exposure,controllability.
/// Quoted fields may contain commas, doubled quotes and newlines.
/// Throws ParseError naming the offending line.
std::vector<HazardRecord> read_hazards_csv(std::istream& in);

}  // namespace eea
