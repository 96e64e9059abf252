#include "finbench/schema.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "finbench/text.hpp"

namespace finbench::schema {

const char* to_string(Domain d) {
  switch (d) {
    case Domain::FinancialMetrics: return "FinancialMetrics";
    case Domain::Governance: return "Governance";
    case Domain::ExecComp: return "ExecComp";
  }
  return "?";
}

const char* to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Numeric: return "numeric";
    case FieldKind::Integer: return "integer";
    case FieldKind::Boolean: return "boolean";
    case FieldKind::Date: return "date";
    case FieldKind::String: return "string";
  }
  return "?";
}

const char* to_string(Difficulty d) {
  switch (d) {
    case Difficulty::Simple: return "simple";
    case Difficulty::Medium: return "medium";
    case Difficulty::Complex: return "complex";
  }
  return "?";
}

const char* to_string(UnitScale u) {
  switch (u) {
    case UnitScale::Raw: return "raw";
    case UnitScale::Thousands: return "thousands";
    case UnitScale::Millions: return "millions";
  }
  return "?";
}

std::optional<Domain> domain_from_string(std::string_view s) {
  if (s == "FinancialMetrics") return Domain::FinancialMetrics;
  if (s == "Governance") return Domain::Governance;
  if (s == "ExecComp") return Domain::ExecComp;
  return std::nullopt;
}

std::optional<FieldKind> kind_from_string(std::string_view s) {
  if (s == "numeric") return FieldKind::Numeric;
  if (s == "integer") return FieldKind::Integer;
  if (s == "boolean") return FieldKind::Boolean;
  if (s == "date") return FieldKind::Date;
  if (s == "string") return FieldKind::String;
  return std::nullopt;
}

std::optional<Difficulty> difficulty_from_string(std::string_view s) {
  if (s == "simple") return Difficulty::Simple;
  if (s == "medium") return Difficulty::Medium;
  if (s == "complex") return Difficulty::Complex;
  return std::nullopt;
}

std::optional<UnitScale> unit_scale_from_string(std::string_view s) {
  if (s == "raw") return UnitScale::Raw;
  if (s == "thousands") return UnitScale::Thousands;
  if (s == "millions") return UnitScale::Millions;
  return std::nullopt;
}

GoldValue GoldValue::make_numeric(double v, UnitScale u) {
  GoldValue g;
  g.kind = FieldKind::Numeric;
  g.number = v;
  g.unit_scale = u;
  return g;
}

GoldValue GoldValue::make_integer(int64_t v) {
  GoldValue g;
  g.kind = FieldKind::Integer;
  g.integer = v;
  return g;
}

GoldValue GoldValue::make_boolean(bool v) {
  GoldValue g;
  g.kind = FieldKind::Boolean;
  g.flag = v;
  return g;
}

GoldValue GoldValue::make_date(std::string iso) {
  GoldValue g;
  g.kind = FieldKind::Date;
  g.text = std::move(iso);
  return g;
}

GoldValue GoldValue::make_string(std::string s) {
  GoldValue g;
  g.kind = FieldKind::String;
  g.text = std::move(s);
  return g;
}

GoldValue GoldValue::make_absent(FieldKind k) {
  GoldValue g;
  g.kind = k;
  g.absent = true;
  return g;
}

namespace {

std::vector<FieldSpec> build_catalog() {
  using D = Domain;
  using K = FieldKind;
  using Df = Difficulty;
  std::vector<FieldSpec> cat;
  auto add = [&](const char* id, const char* name, D dom, K kind, Df diff,
                 bool nonneg, bool table) {
    cat.push_back(FieldSpec{id, name, dom, kind, diff, nonneg, table});
  };
  // Financial metrics: simple except debt-to-equity (medium). Nonnegative
  // except net income and operating cash flow.
  add("total_revenue", "Total revenue", D::FinancialMetrics, K::Numeric, Df::Simple, true, true);
  add("net_income", "Net income", D::FinancialMetrics, K::Numeric, Df::Simple, false, true);
  add("total_assets", "Total assets", D::FinancialMetrics, K::Numeric, Df::Simple, true, true);
  add("total_liabilities", "Total liabilities", D::FinancialMetrics, K::Numeric, Df::Simple, true, true);
  add("shareholders_equity", "Shareholders' equity", D::FinancialMetrics, K::Numeric, Df::Simple, true, true);
  add("operating_cash_flow", "Operating cash flow", D::FinancialMetrics, K::Numeric, Df::Simple, false, true);
  add("capital_expenditures", "Capital expenditures", D::FinancialMetrics, K::Numeric, Df::Simple, true, true);
  add("eps_basic", "Earnings per share (basic)", D::FinancialMetrics, K::Numeric, Df::Simple, true, true);
  add("eps_diluted", "Earnings per share (diluted)", D::FinancialMetrics, K::Numeric, Df::Simple, true, true);
  add("debt_to_equity", "Debt-to-equity ratio", D::FinancialMetrics, K::Numeric, Df::Medium, true, false);
  // Governance: booleans are simple, the rest medium.
  add("board_size", "Board size", D::Governance, K::Integer, Df::Medium, false, false);
  add("independent_directors", "Independent director count", D::Governance, K::Integer, Df::Medium, false, false);
  add("ceo_duality", "CEO duality", D::Governance, K::Boolean, Df::Simple, false, false);
  add("audit_committee_size", "Audit committee size", D::Governance, K::Integer, Df::Medium, false, false);
  add("audit_financial_expert", "Audit committee financial expert", D::Governance, K::Boolean, Df::Simple, false, false);
  add("annual_meeting_date", "Annual meeting date", D::Governance, K::Date, Df::Medium, false, false);
  add("shareholder_proposals", "Shareholder proposal count", D::Governance, K::Integer, Df::Medium, false, false);
  add("poison_pill", "Poison pill status", D::Governance, K::Boolean, Df::Simple, false, false);
  // Executive compensation: all complex.
  add("ceo_total_compensation", "CEO total compensation", D::ExecComp, K::Numeric, Df::Complex, true, true);
  add("ceo_base_salary", "CEO base salary", D::ExecComp, K::Numeric, Df::Complex, true, true);
  add("ceo_bonus", "CEO bonus", D::ExecComp, K::Numeric, Df::Complex, true, true);
  add("ceo_stock_awards", "CEO stock awards", D::ExecComp, K::Numeric, Df::Complex, true, true);
  add("ceo_option_awards", "CEO option awards", D::ExecComp, K::Numeric, Df::Complex, true, true);
  add("median_employee_compensation", "Median employee compensation", D::ExecComp, K::Numeric, Df::Complex, true, false);
  add("ceo_pay_ratio", "CEO pay ratio", D::ExecComp, K::Numeric, Df::Complex, true, false);
  return cat;
}

}  // namespace

const std::vector<FieldSpec>& catalog() {
  static const std::vector<FieldSpec> cat = build_catalog();
  return cat;
}

const FieldSpec* find_field(std::string_view field_id) {
  for (const auto& f : catalog())
    if (f.field_id == field_id) return &f;
  return nullptr;
}

bool is_valid_calendar_date(int year, int month, int day) {
  if (year < 1 || month < 1 || month > 12 || day < 1) return false;
  static const int dim[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int max_day = dim[month - 1];
  const bool leap = (year % 4 == 0 && year % 100 != 0) || year % 400 == 0;
  if (month == 2 && leap) max_day = 29;
  return day <= max_day;
}

namespace {

const char* kMonths[12] = {"january", "february", "march",     "april",   "may",      "june",
                           "july",    "august",   "september", "october", "november", "december"};

bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  int v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
    if (v > 99999999) return false;
  }
  out = v;
  return true;
}

std::string iso(int y, int m, int d) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", y, m, d);
  return buf;
}

}  // namespace

std::optional<std::string> normalize_date(std::string_view raw) {
  std::string s(trim(raw));
  int y = 0, m = 0, d = 0;
  // YYYY-MM-DD
  if (s.size() >= 8 && s.find('-') != std::string::npos) {
    auto parts = split(s, '-');
    if (parts.size() == 3 && parse_int(parts[0], y) && parse_int(parts[1], m) &&
        parse_int(parts[2], d) && is_valid_calendar_date(y, m, d))
      return iso(y, m, d);
    return std::nullopt;
  }
  // MM/DD/YYYY
  if (s.find('/') != std::string::npos) {
    auto parts = split(s, '/');
    if (parts.size() == 3 && parse_int(parts[0], m) && parse_int(parts[1], d) &&
        parse_int(parts[2], y) && is_valid_calendar_date(y, m, d))
      return iso(y, m, d);
    return std::nullopt;
  }
  // Month D, YYYY
  size_t sp = s.find(' ');
  if (sp == std::string::npos) return std::nullopt;
  std::string month_name = lower(s.substr(0, sp));
  m = 0;
  for (int i = 0; i < 12; ++i) {
    if (month_name == kMonths[i]) {
      m = i + 1;
      break;
    }
  }
  if (m == 0) return std::nullopt;
  std::string rest(trim(s.substr(sp + 1)));
  size_t comma = rest.find(',');
  if (comma == std::string::npos) return std::nullopt;
  if (!parse_int(trim(rest.substr(0, comma)), d)) return std::nullopt;
  if (!parse_int(trim(rest.substr(comma + 1)), y)) return std::nullopt;
  if (!is_valid_calendar_date(y, m, d)) return std::nullopt;
  return iso(y, m, d);
}

bool match(const FieldSpec& spec, const GoldValue& gold, const GoldValue& predicted,
           const MatchRule& rule) {
  if (gold.absent || predicted.absent) return gold.absent && predicted.absent;
  if (gold.kind != predicted.kind) return false;
  switch (spec.kind) {
    case FieldKind::Numeric: {
      const double g = gold.raw_number();
      const double p = predicted.raw_number();
      if (!std::isfinite(p) || !std::isfinite(g)) return false;
      if (g == 0.0) return p == 0.0;  // relative tolerance undefined at zero
      return std::fabs(p - g) <= rule.numeric_rel_tolerance * std::fabs(g);
    }
    case FieldKind::Integer:
      return gold.integer == predicted.integer;
    case FieldKind::Boolean:
      return gold.flag == predicted.flag;
    case FieldKind::Date: {
      auto gn = normalize_date(gold.text);
      auto pn = normalize_date(predicted.text);
      return gn && pn && *gn == *pn;
    }
    case FieldKind::String:
      return lower(std::string(trim(gold.text))) == lower(std::string(trim(predicted.text)));
  }
  return false;
}

std::string canonical_rendering(const GoldValue& v) {
  if (v.absent) return "__ABSENT__";
  switch (v.kind) {
    case FieldKind::Numeric: return format_number(v.number);
    case FieldKind::Integer: return std::to_string(v.integer);
    case FieldKind::Boolean: return v.flag ? "yes" : "no";
    case FieldKind::Date: {
      auto n = normalize_date(v.text);
      return n ? *n : v.text;
    }
    case FieldKind::String: return v.text;
  }
  return "";
}

std::vector<std::string> unit_variants(const GoldValue& v) {
  std::vector<std::string> out;
  out.push_back(canonical_rendering(v));
  if (v.kind != FieldKind::Numeric || v.absent) return out;
  const double raw = v.raw_number();
  auto add_if_clean = [&](double scaled, const char* suffix) {
    // keep a variant only when rescaling does not lose precision at 4 decimals
    const double back = scaled;
    if (std::fabs(back * 1e4 - std::llround(back * 1e4)) > 1e-6) return;
    std::string r = format_number(scaled);
    out.push_back(r);
    if (*suffix) out.push_back(r + suffix);
  };
  add_if_clean(raw, "");
  add_if_clean(raw / 1e3, " thousand");
  add_if_clean(raw / 1e6, " million");
  return out;
}

std::string value_to_field(const GoldValue& v) { return canonical_rendering(v); }

std::optional<GoldValue> value_from_field(FieldKind kind, std::string_view canonical,
                                          UnitScale scale) {
  if (canonical == "__ABSENT__") return GoldValue::make_absent(kind);
  std::string s(trim(canonical));
  switch (kind) {
    case FieldKind::Numeric: {
      char* end = nullptr;
      const double d = std::strtod(s.c_str(), &end);
      if (end == s.c_str() || *end != '\0' || !std::isfinite(d)) return std::nullopt;
      return GoldValue::make_numeric(d, scale);
    }
    case FieldKind::Integer: {
      char* end = nullptr;
      const long long i = std::strtoll(s.c_str(), &end, 10);
      if (end == s.c_str() || *end != '\0') return std::nullopt;
      return GoldValue::make_integer(i);
    }
    case FieldKind::Boolean: {
      std::string l = lower(s);
      if (l == "yes" || l == "true" || l == "1") return GoldValue::make_boolean(true);
      if (l == "no" || l == "false" || l == "0") return GoldValue::make_boolean(false);
      return std::nullopt;
    }
    case FieldKind::Date: {
      auto n = normalize_date(s);
      if (!n) return std::nullopt;
      return GoldValue::make_date(*n);
    }
    case FieldKind::String:
      return GoldValue::make_string(s);
  }
  return std::nullopt;
}

}  // namespace finbench::schema
