#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace finbench::schema {

enum class Domain { FinancialMetrics, Governance, ExecComp };
enum class FieldKind { Numeric, Integer, Boolean, Date, String };
enum class Difficulty { Simple, Medium, Complex };
enum class UnitScale { Raw, Thousands, Millions };

const char* to_string(Domain d);
const char* to_string(FieldKind k);
const char* to_string(Difficulty d);
const char* to_string(UnitScale u);
std::optional<Domain> domain_from_string(std::string_view s);
std::optional<FieldKind> kind_from_string(std::string_view s);
std::optional<Difficulty> difficulty_from_string(std::string_view s);
std::optional<UnitScale> unit_scale_from_string(std::string_view s);

inline double scale_factor(UnitScale u) {
  switch (u) {
    case UnitScale::Thousands: return 1e3;
    case UnitScale::Millions: return 1e6;
    default: return 1.0;
  }
}

struct FieldSpec {
  std::string field_id;
  std::string display_name;
  Domain domain = Domain::FinancialMetrics;
  FieldKind kind = FieldKind::Numeric;
  Difficulty difficulty = Difficulty::Simple;
  bool nonnegative = false;   // format check: value must be >= 0
  bool table_housed = false;  // resolved by the table analyzer role
};

// One field value, gold or predicted. `kind` selects the active payload.
struct GoldValue {
  FieldKind kind = FieldKind::Numeric;
  bool absent = false;
  double number = 0.0;      // Numeric
  int64_t integer = 0;      // Integer
  bool flag = false;        // Boolean
  std::string text;         // Date (ISO-8601) and String
  UnitScale unit_scale = UnitScale::Raw;

  static GoldValue make_numeric(double v, UnitScale u = UnitScale::Raw);
  static GoldValue make_integer(int64_t v);
  static GoldValue make_boolean(bool v);
  static GoldValue make_date(std::string iso);
  static GoldValue make_string(std::string s);
  static GoldValue make_absent(FieldKind k);

  double raw_number() const { return number * scale_factor(unit_scale); }
};

struct MatchRule {
  double numeric_rel_tolerance = 0.02;
};

// The fixed 25-field catalog: 10 FinancialMetrics, 8 Governance, 7 ExecComp.
const std::vector<FieldSpec>& catalog();
const FieldSpec* find_field(std::string_view field_id);

// Correctness predicate shared by all metrics. Total function: kind
// mismatch or malformed dates are a non-match, never an error.
bool match(const FieldSpec& spec, const GoldValue& gold, const GoldValue& predicted,
           const MatchRule& rule = MatchRule{});

// Accepts YYYY-MM-DD, "Month D, YYYY" and MM/DD/YYYY; validates the
// calendar date. Returns ISO-8601 or nullopt.
std::optional<std::string> normalize_date(std::string_view s);
bool is_valid_calendar_date(int year, int month, int day);

// Canonical rendering: what the generator plants in text, what gold files
// carry, and what the grounding check searches for.
std::string canonical_rendering(const GoldValue& v);

// Rendering variants of a numeric value at the three unit scales
// (e.g. 1500000 -> {"1500000", "1500", "1500 thousand", "1.5", "1.5 million"}).
std::vector<std::string> unit_variants(const GoldValue& v);

// Gold-file line payload <-> value (canonical_value column semantics).
std::string value_to_field(const GoldValue& v);
std::optional<GoldValue> value_from_field(FieldKind kind, std::string_view canonical,
                                          UnitScale scale);

}  // namespace finbench::schema
