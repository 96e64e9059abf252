#include "finbench/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "finbench/rng.hpp"
#include "finbench/text.hpp"

namespace fs = std::filesystem;

namespace finbench::corpus {

using schema::Domain;
using schema::FieldKind;
using schema::GoldValue;
using schema::UnitScale;

const char* to_string(FilingType t) {
  switch (t) {
    case FilingType::TenK: return "10-K";
    case FilingType::TenQ: return "10-Q";
    case FilingType::EightK: return "8-K";
  }
  return "?";
}

std::optional<FilingType> filing_type_from_string(std::string_view s) {
  if (s == "10-K") return FilingType::TenK;
  if (s == "10-Q") return FilingType::TenQ;
  if (s == "8-K") return FilingType::EightK;
  return std::nullopt;
}

std::string Section::full_text() const {
  std::string out = text;
  for (const auto& t : tables) {
    out += "\n--- TABLE: " + t.caption + "\n";
    for (const auto& row : t.rows) {
      for (size_t i = 0; i < row.size(); ++i) {
        if (i) out += '|';
        out += row[i];
      }
      out += '\n';
    }
    out += "--- END TABLE";
  }
  return out;
}

int64_t Section::tokens() const { return token_count(full_text()); }

void Document::recompute_tokens() {
  total_tokens = 0;
  for (const auto& s : sections) total_tokens += s.tokens();
}

// ---------------------------------------------------------------------------
// Grounding index

namespace {

bool word_char(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

bool digit(char c) { return c >= '0' && c <= '9'; }

// Substring search requiring token boundaries at both edges, so that
// planting "7" does not resolve inside "2017" or inside the decimal "1.07".
// A '.' neighbour only blocks when it continues a decimal number.
int64_t boundary_find(const std::string& hay, const std::string& needle, int64_t from) {
  if (needle.empty()) return -1;
  size_t pos = hay.find(needle, static_cast<size_t>(from));
  while (pos != std::string::npos) {
    const size_t end = pos + needle.size();
    bool left_ok = pos == 0 || !word_char(hay[pos - 1]);
    if (left_ok && pos >= 2 && hay[pos - 1] == '.' && digit(hay[pos - 2])) left_ok = false;
    bool right_ok = end >= hay.size() || !word_char(hay[end]);
    if (right_ok && end + 1 < hay.size() && hay[end] == '.' && digit(hay[end + 1]))
      right_ok = false;
    if (left_ok && right_ok) return static_cast<int64_t>(pos);
    pos = hay.find(needle, pos + 1);
  }
  return -1;
}

}  // namespace

GroundingIndex build_grounding_index(const Document& doc, const GoldRecord& gold) {
  GroundingIndex index;
  std::vector<std::string> texts;
  texts.reserve(doc.sections.size());
  for (const auto& s : doc.sections) texts.push_back(s.full_text());
  for (const auto& [fid, value] : gold.values) {
    if (value.absent) continue;
    const std::string needle = schema::canonical_rendering(value);
    std::vector<Occurrence> occs;
    for (size_t si = 0; si < texts.size(); ++si) {
      int64_t at = boundary_find(texts[si], needle, 0);
      while (at >= 0) {
        occs.push_back(Occurrence{static_cast<int>(si), at, static_cast<int64_t>(needle.size())});
        at = boundary_find(texts[si], needle, at + 1);
      }
    }
    index[fid] = std::move(occs);
  }
  return index;
}

// ---------------------------------------------------------------------------
// Synthetic generator

namespace {

constexpr int64_t kMinTemplateTokens = 700;

double round_sig(double v, int sig) {
  if (v == 0) return 0;
  const double mag = std::pow(10.0, sig - 1 - static_cast<int>(std::floor(std::log10(std::fabs(v)))));
  return std::round(v * mag) / mag;
}

double round_dp(double v, int dp) {
  const double m = std::pow(10.0, dp);
  return std::round(v * m) / m;
}

// The filler vocabulary deliberately avoids digits and the standalone
// tokens "yes"/"no", which would create false grounding anchors.
const char* kFillerSubjects[] = {
    "the company", "management", "the operating segment", "the consolidated group",
    "the registrant", "the business unit", "regional leadership", "the division"};
const char* kFillerVerbs[] = {
    "continued to expand", "maintained", "reviewed", "streamlined", "consolidated",
    "evaluated", "restructured", "invested in", "monitored", "strengthened"};
const char* kFillerObjects[] = {
    "distribution operations", "supplier relationships", "inventory management practices",
    "regional service coverage", "capital allocation programs", "customer retention initiatives",
    "logistics infrastructure", "compliance procedures", "product development pipelines",
    "workforce planning processes"};
const char* kFillerTails[] = {
    "across its principal markets", "during the reporting period", "in line with prior guidance",
    "under the existing framework", "throughout the fiscal year", "subject to market conditions",
    "as previously disclosed", "without material change", "in the ordinary course of business",
    "consistent with historical practice"};

// pronounceable per-document brand names; they keep large filler blocks
// distinct across documents
std::string pseudo_word(Rng& rng) {
  static const char* kOnsets[] = {"b", "c", "d", "f", "g", "k", "l", "m",
                                  "n", "p", "r", "s", "t", "v", "z", "qu"};
  static const char* kVowels[] = {"a", "e", "i", "o", "u", "ar", "en", "or"};
  std::string w;
  const int syllables = 2 + static_cast<int>(rng.uniform_int(2));
  for (int i = 0; i < syllables; ++i) {
    w += kOnsets[rng.uniform_int(16)];
    w += kVowels[rng.uniform_int(8)];
  }
  w[0] = static_cast<char>(w[0] - 'a' + 'A');
  return w;
}

std::string filler_sentence(Rng& rng, const std::vector<std::string>& names) {
  std::string s;
  if (!names.empty() && rng.bernoulli(0.6)) {
    s = "The " + names[rng.uniform_int(names.size())] + " segment";
  } else {
    s = kFillerSubjects[rng.uniform_int(8)];
    s[0] = static_cast<char>(s[0] - 'a' + 'A');
  }
  s += ' ';
  s += kFillerVerbs[rng.uniform_int(10)];
  s += ' ';
  if (!names.empty() && rng.bernoulli(0.4)) {
    s += "the " + names[rng.uniform_int(names.size())] + " ";
    s += kFillerObjects[rng.uniform_int(10)];
  } else {
    s += kFillerObjects[rng.uniform_int(10)];
  }
  s += ' ';
  s += kFillerTails[rng.uniform_int(10)];
  s += '.';
  return s;
}

const char* filing_type_words(FilingType t) {
  switch (t) {
    case FilingType::TenK: return "annual report";
    case FilingType::TenQ: return "quarterly report";
    case FilingType::EightK: return "current report";
  }
  return "report";
}

struct PlantedValues {
  std::map<std::string, GoldValue> v;
  bool has(const std::string& id) const { return v.count(id) && !v.at(id).absent; }
  std::string num(const std::string& id) const { return schema::canonical_rendering(v.at(id)); }
};

}  // namespace

std::pair<std::vector<Document>, std::vector<GoldRecord>> generate_synthetic(
    const SynthSpec& spec, uint64_t seed) {
  std::vector<Document> docs;
  std::vector<GoldRecord> golds;
  if (spec.count == 0) return {docs, golds};
  if (spec.count < 0) throw CorpusError("synthetic spec: negative document count");
  for (int64_t t : {spec.tokens_10k, spec.tokens_10q, spec.tokens_8k}) {
    if (t < kMinTemplateTokens)
      throw CorpusError("synthetic spec: token target " + std::to_string(t) +
                        " below minimum template size " + std::to_string(kMinTemplateTokens));
  }
  const double wsum = spec.weight_10k + spec.weight_10q + spec.weight_8k;
  if (wsum <= 0) throw CorpusError("synthetic spec: filing-type weights sum to zero");

  for (int di = 0; di < spec.count; ++di) {
    char idbuf[32];
    std::snprintf(idbuf, sizeof(idbuf), "SYN-%06d", di);
    const std::string doc_id = idbuf;
    Rng rng(derive_seed(seed, std::string("corpus/") + doc_id));

    FilingType ftype = FilingType::TenK;
    {
      const double u = rng.uniform() * wsum;
      if (u < spec.weight_10k) ftype = FilingType::TenK;
      else if (u < spec.weight_10k + spec.weight_10q) ftype = FilingType::TenQ;
      else ftype = FilingType::EightK;
    }
    const int64_t token_target = ftype == FilingType::TenK   ? spec.tokens_10k
                                 : ftype == FilingType::TenQ ? spec.tokens_10q
                                                             : spec.tokens_8k;
    std::vector<std::string> brand_names;
    for (int k = 0; k < 5; ++k) brand_names.push_back(pseudo_word(rng));

    // --- plant gold values -------------------------------------------------
    PlantedValues p;
    auto absent_draw = [&]() { return spec.absent_rate > 0 && rng.bernoulli(spec.absent_rate); };

    // financial metrics, balance sheet in thousands with the identity exact
    const double revenue_k = round_sig(rng.uniform(1.0e5, 9.9e6), 3);
    const double margin = rng.uniform(0.04, 0.18);
    const double net_income_k = round_sig(revenue_k * margin, 3);
    const double assets_k = round_sig(revenue_k * rng.uniform(0.9, 2.4), 3);
    const double liabilities_k = round_sig(assets_k * rng.uniform(0.40, 0.70), 3);
    const double equity_k = assets_k - liabilities_k;  // exact
    const double ocf_k = round_sig(net_income_k * rng.uniform(1.0, 1.6), 3);
    const double capex_k = round_sig(revenue_k * rng.uniform(0.03, 0.10), 3);
    const double shares_m = round_sig(rng.uniform(20, 450), 2);  // millions of shares
    double eps_basic = round_dp(net_income_k / (shares_m * 1000.0), 2);
    if (eps_basic < 0.05) eps_basic = 0.05;
    double eps_diluted = round_dp(eps_basic * rng.uniform(0.94, 1.0), 2);
    if (eps_diluted > eps_basic) eps_diluted = eps_basic;
    const double d2e = round_dp(liabilities_k / (equity_k > 0 ? equity_k : 1.0), 2);

    auto plant_num = [&](const char* id, double v, UnitScale u) {
      p.v[id] = absent_draw() ? GoldValue::make_absent(FieldKind::Numeric)
                              : GoldValue::make_numeric(v, u);
    };
    plant_num("total_revenue", revenue_k, UnitScale::Thousands);
    plant_num("net_income", net_income_k, UnitScale::Thousands);
    // keep the balance trio all-present or all-absent so the planted
    // identity is never half-visible
    if (absent_draw()) {
      p.v["total_assets"] = GoldValue::make_absent(FieldKind::Numeric);
      p.v["total_liabilities"] = GoldValue::make_absent(FieldKind::Numeric);
      p.v["shareholders_equity"] = GoldValue::make_absent(FieldKind::Numeric);
    } else {
      p.v["total_assets"] = GoldValue::make_numeric(assets_k, UnitScale::Thousands);
      p.v["total_liabilities"] = GoldValue::make_numeric(liabilities_k, UnitScale::Thousands);
      p.v["shareholders_equity"] = GoldValue::make_numeric(equity_k, UnitScale::Thousands);
    }
    plant_num("operating_cash_flow", ocf_k, UnitScale::Thousands);
    plant_num("capital_expenditures", capex_k, UnitScale::Thousands);
    plant_num("eps_basic", eps_basic, UnitScale::Raw);
    plant_num("eps_diluted", eps_diluted, UnitScale::Raw);
    plant_num("debt_to_equity", d2e, UnitScale::Raw);

    // governance
    const int64_t board = 7 + static_cast<int64_t>(rng.uniform_int(9));          // 7..15
    const int64_t indep = 3 + static_cast<int64_t>(rng.uniform_int(board - 3));  // 3..board-1
    const int64_t audit = 3 + static_cast<int64_t>(rng.uniform_int(4));          // 3..6
    const int64_t proposals = static_cast<int64_t>(rng.uniform_int(7));          // 0..6
    const bool duality = rng.bernoulli(0.45);
    const bool expert = rng.bernoulli(0.85);
    const bool pill = rng.bernoulli(0.2);
    const int year = 2023 + static_cast<int>(rng.uniform_int(3));
    const int month = 3 + static_cast<int>(rng.uniform_int(4));  // Mar..Jun
    const int day = 1 + static_cast<int>(rng.uniform_int(28));
    char dbuf[16];
    std::snprintf(dbuf, sizeof(dbuf), "%04d-%02d-%02d", year, month, day);

    auto plant_int = [&](const char* id, int64_t v) {
      p.v[id] = absent_draw() ? GoldValue::make_absent(FieldKind::Integer)
                              : GoldValue::make_integer(v);
    };
    auto plant_bool = [&](const char* id, bool v) {
      p.v[id] = absent_draw() ? GoldValue::make_absent(FieldKind::Boolean)
                              : GoldValue::make_boolean(v);
    };
    plant_int("board_size", board);
    plant_int("independent_directors", indep);
    plant_bool("ceo_duality", duality);
    plant_int("audit_committee_size", audit);
    plant_bool("audit_financial_expert", expert);
    p.v["annual_meeting_date"] =
        absent_draw() ? GoldValue::make_absent(FieldKind::Date) : GoldValue::make_date(dbuf);
    plant_int("shareholder_proposals", proposals);
    plant_bool("poison_pill", pill);

    // executive compensation, total equals the component sum exactly
    const double salary = round_sig(rng.uniform(7.0e5, 1.8e6), 3);
    const double bonus = round_sig(rng.uniform(0.0, 2.0e6), 3);
    const double stock = round_sig(rng.uniform(1.0e6, 9.0e6), 3);
    const double options = round_sig(rng.uniform(0.0, 4.0e6), 3);
    const double total = salary + bonus + stock + options;
    const double median_emp = round_sig(rng.uniform(4.5e4, 1.2e5), 3);
    const double ratio = round_dp(total / median_emp, 1);
    // keep the comp quintet all-present or all-absent, mirroring the trio
    if (absent_draw()) {
      for (const char* id : {"ceo_total_compensation", "ceo_base_salary", "ceo_bonus",
                             "ceo_stock_awards", "ceo_option_awards"})
        p.v[id] = GoldValue::make_absent(FieldKind::Numeric);
    } else {
      p.v["ceo_total_compensation"] = GoldValue::make_numeric(total, UnitScale::Raw);
      p.v["ceo_base_salary"] = GoldValue::make_numeric(salary, UnitScale::Raw);
      p.v["ceo_bonus"] = GoldValue::make_numeric(bonus, UnitScale::Raw);
      p.v["ceo_stock_awards"] = GoldValue::make_numeric(stock, UnitScale::Raw);
      p.v["ceo_option_awards"] = GoldValue::make_numeric(options, UnitScale::Raw);
    }
    plant_num("median_employee_compensation", median_emp, UnitScale::Raw);
    plant_num("ceo_pay_ratio", ratio, UnitScale::Raw);

    // --- build sections ----------------------------------------------------
    Document doc;
    doc.id = doc_id;
    doc.filing_type = ftype;

    // per-document phrasing variation: filers word their disclosures
    // differently, which keeps cross-document cosine similarity below the
    // semantic-cache threshold while verbatim duplicates still match
    auto pick = [&rng](std::initializer_list<const char*> opts) {
      auto it = opts.begin();
      std::advance(it, static_cast<long>(rng.uniform_int(opts.size())));
      return std::string(*it);
    };

    auto trap_text = [&](const char* fid, const std::string& label) -> std::string {
      std::string out;
      if (!p.has(fid)) return out;
      const GoldValue& g = p.v.at(fid);
      if (spec.ambiguity_rate > 0 && rng.bernoulli(spec.ambiguity_rate)) {
        const double alt = round_sig(g.number * 1.07, 3);
        out += " Preliminary unaudited estimates had indicated " + label + " of $" +
               format_number(alt) + (g.unit_scale == UnitScale::Thousands ? " thousand." : ".");
      }
      if (spec.unit_scale_trap_rate > 0 && g.unit_scale == UnitScale::Thousands &&
          rng.bernoulli(spec.unit_scale_trap_rate)) {
        const double millions = g.number / 1000.0;
        out += " (equivalently approximately $" + format_number(millions) + " million)";
      }
      return out;
    };

    // financial statements section
    Section fin;
    fin.heading = "Consolidated Financial Statements";
    fin.domain_tags = {Domain::FinancialMetrics};
    fin.standard_format = true;
    {
      std::ostringstream t;
      t << pick({"The consolidated statements below summarize the reporting period.",
                 "The following discussion covers the audited consolidated results.",
                 "Results of operations for the period are presented on a consolidated basis.",
                 "The figures below are drawn from the audited financial statements."})
        << ' ' << filler_sentence(rng, brand_names);
      if (p.has("total_revenue"))
        t << pick({" Total revenue for the period was $", " Total revenue reported was $",
                   " For the period, total revenue came to $", " Total revenue registered $"})
          << p.num("total_revenue") << " thousand." << trap_text("total_revenue", "total revenue");
      if (p.has("net_income"))
        t << pick({" Net income attributable to shareholders was $",
                   " The company recorded net income of $", " Net income for the period was $"})
          << p.num("net_income") << " thousand." << trap_text("net_income", "net income");
      if (p.has("operating_cash_flow"))
        t << pick({" Cash generated from operating activities, reported as operating cash flow, was $",
                   " Operating cash flow for the period amounted to $",
                   " Net cash provided by operations (operating cash flow) was $"})
          << p.num("operating_cash_flow") << " thousand.";
      if (p.has("capital_expenditures"))
        t << pick({" Capital expenditures amounted to $", " Capital expenditures were $",
                   " Purchases of property and equipment (capital expenditures) totaled $"})
          << p.num("capital_expenditures") << " thousand.";
      if (p.has("eps_basic"))
        t << pick({" Basic earnings per share were ", " Basic earnings per share came to ",
                   " Earnings per basic share were "})
          << p.num("eps_basic") << " dollars";
      if (p.has("eps_diluted"))
        t << " and diluted earnings per share were " << p.num("eps_diluted") << " dollars.";
      else if (p.has("eps_basic"))
        t << ".";
      if (p.has("debt_to_equity"))
        t << pick({" The debt-to-equity ratio stood at ", " The ratio of debt to equity was ",
                   " Leverage measured as debt-to-equity was "})
          << p.num("debt_to_equity") << " at period end.";
      t << ' ' << filler_sentence(rng, brand_names);
      fin.text = t.str();
    }
    if (p.has("total_assets")) {
      TableBlock bs;
      bs.caption = "Consolidated Balance Sheet (in thousands)";
      bs.rows = {{"Line item", "Amount"},
                 {"Total assets", p.num("total_assets")},
                 {"Total liabilities", p.num("total_liabilities")},
                 {"Total shareholders' equity", p.num("shareholders_equity")}};
      fin.tables.push_back(std::move(bs));
      if (spec.cross_table_rate > 0 && rng.bernoulli(spec.cross_table_rate)) {
        const double current = round_sig(p.v.at("total_assets").number * rng.uniform(0.3, 0.6), 3);
        const double noncurrent = p.v.at("total_assets").number - current;
        TableBlock comp;
        comp.caption = "Asset Composition (in thousands)";
        comp.rows = {{"Component", "Amount"},
                     {"Current assets", format_number(current)},
                     {"Non-current assets", format_number(noncurrent)}};
        fin.tables.push_back(std::move(comp));
      }
    }

    // governance section
    Section gov;
    gov.heading = "Corporate Governance";
    gov.domain_tags = {Domain::Governance};
    gov.standard_format = true;
    {
      std::ostringstream t;
      t << pick({"Governance arrangements are described below.",
                 "The registrant's governance structure is summarized in this section.",
                 "This section sets out board composition and governance practices.",
                 "Board and committee composition is disclosed as follows."})
        << ' ' << filler_sentence(rng, brand_names);
      if (p.has("board_size"))
        t << pick({" The board of directors consists of ", " The board comprises ",
                   " The board of directors currently numbers "})
          << p.num("board_size") << " members";
      if (p.has("independent_directors"))
        t << ", of whom " << p.num("independent_directors") << " qualify as independent directors";
      t << ".";
      if (p.has("ceo_duality"))
        t << " CEO duality (the chief executive also serving as board chair): "
          << p.num("ceo_duality") << ".";
      if (p.has("audit_committee_size"))
        t << pick({" The audit committee comprises ", " The audit committee is composed of ",
                   " The audit committee consists of "})
          << p.num("audit_committee_size") << " directors.";
      if (p.has("audit_financial_expert"))
        t << " Audit committee financial expert designated: " << p.num("audit_financial_expert")
          << ".";
      if (p.has("annual_meeting_date"))
        t << pick({" The annual meeting of shareholders is scheduled for ",
                   " The annual shareholder meeting will be held on ",
                   " The annual meeting date is set as "})
          << p.num("annual_meeting_date") << ".";
      if (p.has("shareholder_proposals"))
        t << pick({" Shareholder proposals received this year: ",
                   " Proposals submitted by shareholders this year: "})
          << p.num("shareholder_proposals") << ".";
      if (p.has("poison_pill"))
        t << " Shareholder rights plan (poison pill) in effect: " << p.num("poison_pill") << ".";
      t << ' ' << filler_sentence(rng, brand_names);
      gov.text = t.str();
    }

    // executive compensation section
    Section comp;
    comp.heading = "Executive Compensation";
    comp.domain_tags = {Domain::ExecComp};
    comp.standard_format = true;
    {
      std::ostringstream t;
      t << pick({"Compensation of the chief executive officer is summarized below.",
                 "The compensation committee reports the chief executive's pay as follows.",
                 "Executive pay for the period is disclosed in the table below.",
                 "The summary compensation disclosure for the chief executive follows."})
        << ' ' << filler_sentence(rng, brand_names);
      if (p.has("median_employee_compensation"))
        t << pick({" Median employee compensation was $",
                   " The median of annual employee compensation was $",
                   " Median annual compensation across employees was $"})
          << p.num("median_employee_compensation") << ".";
      if (p.has("ceo_pay_ratio"))
        t << " The resulting CEO pay ratio was " << p.num("ceo_pay_ratio") << ":1.";
      t << ' ' << filler_sentence(rng, brand_names);
      comp.text = t.str();
    }
    if (p.has("ceo_total_compensation")) {
      TableBlock sct;
      sct.caption = "Summary Compensation Table";
      sct.rows = {{"Component", "Amount ($)"},
                  {"Base salary", p.num("ceo_base_salary")},
                  {"Bonus", p.num("ceo_bonus")},
                  {"Stock awards", p.num("ceo_stock_awards")},
                  {"Option awards", p.num("ceo_option_awards")},
                  {"Total compensation", p.num("ceo_total_compensation")}};
      comp.tables.push_back(std::move(sct));
    }

    // management summary: repeats a fixed subset of values across domains,
    // so the dispatcher tags it into every branch and the parallel merge
    // sees overlapping candidates
    Section summary;
    summary.heading = "Management Summary";
    summary.domain_tags = {Domain::FinancialMetrics, Domain::Governance, Domain::ExecComp};
    summary.standard_format = false;
    {
      std::ostringstream t;
      t << pick({"Management highlights for the period are restated here for convenience.",
                 "This summary restates headline figures from the statements and governance "
                 "disclosures.",
                 "Key figures of the period, restated from the detailed sections, follow.",
                 "The highlights below repeat headline disclosures for the reader's convenience."})
        << ' ' << filler_sentence(rng, brand_names) << ' ' << filler_sentence(rng, brand_names);
      if (p.has("total_revenue"))
        t << " Revenue reached $" << p.num("total_revenue") << " thousand.";
      if (p.has("net_income"))
        t << " Net income came in at $" << p.num("net_income") << " thousand.";
      if (p.has("total_assets"))
        t << " Total assets closed at $" << p.num("total_assets") << " thousand.";
      if (p.has("operating_cash_flow"))
        t << " Operating cash flow was $" << p.num("operating_cash_flow") << " thousand.";
      if (p.has("capital_expenditures"))
        t << " Capital expenditures totaled $" << p.num("capital_expenditures") << " thousand.";
      if (p.has("eps_basic"))
        t << " Basic earnings per share: " << p.num("eps_basic") << " dollars.";
      if (p.has("board_size"))
        t << " The board stands at " << p.num("board_size") << " members";
      if (p.has("independent_directors"))
        t << " with " << p.num("independent_directors") << " independent directors";
      t << ".";
      if (p.has("audit_committee_size"))
        t << " The audit committee counts " << p.num("audit_committee_size") << " members.";
      if (p.has("ceo_total_compensation"))
        t << " Aggregate chief executive compensation for the year was approximately $"
          << format_number(round_dp(p.v.at("ceo_total_compensation").number / 1e6, 1))
          << " million as detailed in the compensation tables.";
      t << ' ' << filler_sentence(rng, brand_names) << ' '
        << pick({"Management believes these figures fairly represent the consolidated position.",
                 "These restated figures are unaudited and provided for convenience only.",
                 "Readers should refer to the detailed statements for the audited figures.",
                 "The detailed sections of this filing control in case of any discrepancy."});
      summary.text = t.str();
    }

    // business overview: filler padded to the token target
    Section overview;
    overview.heading = "Business Overview";
    // overview/MD&A material is dispatched to the financial branch: a
    // router cannot know boilerplate is extraction-irrelevant
    overview.domain_tags = {Domain::FinancialMetrics};
    overview.standard_format = false;
    {
      // letters-only registrant name: digits here would collide with small
      // planted integers in the grounding index
      std::string reg;
      int n = di + 1;
      while (n > 0) {
        reg += static_cast<char>('A' + (n - 1) % 26);
        n = (n - 1) / 26;
      }
      std::ostringstream t;
      t << reg << " Holdings (the registrant) files this " << filing_type_words(ftype)
        << " covering its consolidated operations. " << filler_sentence(rng, brand_names) << ' '
        << filler_sentence(rng, brand_names);
      overview.text = t.str();
    }

    doc.sections = {overview, fin, gov, comp, summary};

    // verbatim duplicate sections, copied from the tagged base sections
    if (spec.duplicate_section_rate > 0) {
      const double r = std::min(spec.duplicate_section_rate, 0.75);
      const int base = static_cast<int>(doc.sections.size());
      const int dups = static_cast<int>(std::llround(r / (1.0 - r) * base));
      for (int k = 0; k < dups; ++k) {
        const int src = 1 + static_cast<int>(rng.uniform_int(4));  // fin/gov/comp/summary
        doc.sections.push_back(doc.sections[src]);
      }
    }

    // pad the overview until the document hits its token target
    doc.recompute_tokens();
    {
      std::string pad;
      while (doc.total_tokens + token_count(pad) < token_target) {
        pad += "\n";
        pad += filler_sentence(rng, brand_names);
        pad += " ";
        pad += filler_sentence(rng, brand_names);
      }
      doc.sections[0].text += pad;
    }
    doc.recompute_tokens();

    GoldRecord gold;
    gold.doc_id = doc_id;
    gold.values = p.v;

    docs.push_back(std::move(doc));
    golds.push_back(std::move(gold));
  }
  return {docs, golds};
}

// ---------------------------------------------------------------------------
// Serialization

std::string render_document(const Document& doc) {
  std::ostringstream out;
  out << "# filing_type: " << to_string(doc.filing_type) << "\n";
  for (const auto& s : doc.sections) {
    out << "=== SECTION: " << s.heading << " [tags:";
    bool first = true;
    for (const auto& d : s.domain_tags) {
      if (!first) out << ',';
      out << schema::to_string(d);
      first = false;
    }
    out << "] [std:" << (s.standard_format ? '1' : '0') << "] ===\n";
    out << s.text << "\n";
    for (const auto& t : s.tables) {
      out << "--- TABLE: " << t.caption << "\n";
      for (const auto& row : t.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
          if (i) out << '|';
          out << row[i];
        }
        out << "\n";
      }
      out << "--- END TABLE\n";
    }
  }
  return out.str();
}

namespace {

struct HeaderParts {
  std::string heading;
  std::set<Domain> tags;
  std::optional<bool> std_flag;
};

std::optional<HeaderParts> parse_section_header(const std::string& line) {
  if (!starts_with(line, "=== SECTION: ")) return std::nullopt;
  if (line.size() < 17 || line.substr(line.size() - 4) != " ===") return std::nullopt;
  std::string body = line.substr(13, line.size() - 17);
  HeaderParts h;
  // optional trailing markers: [std:x] then [tags:...]
  auto take_marker = [&](const std::string& prefix) -> std::optional<std::string> {
    size_t at = body.rfind(" [" + prefix + ":");
    if (at == std::string::npos || body.back() != ']') return std::nullopt;
    std::string inner = body.substr(at + prefix.size() + 3,
                                    body.size() - at - prefix.size() - 4);
    body = body.substr(0, at);
    return inner;
  };
  if (auto std_s = take_marker("std")) {
    if (*std_s == "1") h.std_flag = true;
    else if (*std_s == "0") h.std_flag = false;
  }
  if (auto tags_s = take_marker("tags")) {
    for (const auto& t : split(*tags_s, ',')) {
      if (t.empty()) continue;
      auto d = schema::domain_from_string(t);
      if (!d) return std::nullopt;
      h.tags.insert(*d);
    }
  }
  h.heading = std::string(trim(body));
  return h;
}

bool heading_is_standard(const std::string& heading) {
  for (const auto& known : known_standard_headings())
    if (heading == known) return true;
  return false;
}

bool tables_consistent(const Section& s) {
  for (const auto& t : s.tables) {
    if (t.rows.empty()) return false;
    const size_t cols = t.rows.front().size();
    for (const auto& r : t.rows)
      if (r.size() != cols) return false;
  }
  return true;
}

}  // namespace

const std::vector<std::string>& known_standard_headings() {
  static const std::vector<std::string> headings = {
      "Consolidated Financial Statements", "Corporate Governance", "Executive Compensation",
      "Consolidated Balance Sheets", "Notes to Financial Statements",
      "Summary Compensation Table"};
  return headings;
}

Document parse_document(const std::string& id, const std::string& content) {
  Document doc;
  doc.id = id;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  Section* cur = nullptr;
  TableBlock* table = nullptr;
  std::vector<bool> std_explicit;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && starts_with(line, "# filing_type: ")) {
      auto ft = filing_type_from_string(trim(line.substr(15)));
      if (!ft)
        throw CorpusError("doc " + id + ": line 1: unknown filing type '" +
                          std::string(trim(line.substr(15))) + "'");
      doc.filing_type = *ft;
      continue;
    }
    if (starts_with(line, "=== SECTION: ")) {
      auto h = parse_section_header(line);
      if (!h)
        throw CorpusError("doc " + id + ": line " + std::to_string(lineno) +
                          ": malformed section header");
      Section s;
      s.heading = h->heading;
      s.domain_tags = h->tags;
      s.standard_format = h->std_flag.value_or(false);
      std_explicit.push_back(h->std_flag.has_value());
      doc.sections.push_back(std::move(s));
      cur = &doc.sections.back();
      table = nullptr;
      continue;
    }
    if (!cur)
      throw CorpusError("doc " + id + ": line " + std::to_string(lineno) +
                        ": content before first section header");
    if (starts_with(line, "--- TABLE: ")) {
      if (table)
        throw CorpusError("doc " + id + ": line " + std::to_string(lineno) +
                          ": nested table block");
      cur->tables.emplace_back();
      table = &cur->tables.back();
      table->caption = std::string(trim(line.substr(11)));
      continue;
    }
    if (starts_with(line, "--- END TABLE")) {
      if (!table)
        throw CorpusError("doc " + id + ": line " + std::to_string(lineno) +
                          ": END TABLE without open table");
      if (table->rows.empty())
        throw CorpusError("doc " + id + ": line " + std::to_string(lineno) + ": empty table");
      const size_t cols = table->rows.front().size();
      for (const auto& r : table->rows)
        if (r.size() != cols)
          throw CorpusError("doc " + id + ": line " + std::to_string(lineno) +
                            ": inconsistent table column count");
      table = nullptr;
      continue;
    }
    if (table) {
      table->rows.push_back(split(line, '|'));
    } else {
      if (!cur->text.empty()) cur->text += '\n';
      cur->text += line;
    }
  }
  if (table) throw CorpusError("doc " + id + ": unterminated table block");
  if (doc.sections.empty()) throw CorpusError("doc " + id + ": no sections");
  // loader heuristic where no explicit std marker was present
  for (size_t i = 0; i < doc.sections.size(); ++i) {
    auto& s = doc.sections[i];
    while (!s.text.empty() && s.text.back() == '\n') s.text.pop_back();
    if (!std_explicit[i])
      s.standard_format = heading_is_standard(s.heading) && tables_consistent(s);
  }
  doc.recompute_tokens();
  return doc;
}

std::string render_gold(const GoldRecord& rec) {
  std::ostringstream out;
  for (const auto& f : schema::catalog()) {
    auto it = rec.values.find(f.field_id);
    if (it == rec.values.end()) throw CorpusError("gold " + rec.doc_id + ": missing " + f.field_id);
    const GoldValue& v = it->second;
    out << f.field_id << '\t' << schema::to_string(v.kind) << '\t'
        << schema::value_to_field(v) << '\t' << schema::to_string(v.unit_scale) << "\n";
  }
  return out.str();
}

GoldRecord parse_gold(const std::string& doc_id, const std::string& content) {
  GoldRecord rec;
  rec.doc_id = doc_id;
  std::istringstream in(content);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto cols = split(line, '\t');
    if (cols.size() != 4)
      throw CorpusError("gold " + doc_id + ": line " + std::to_string(lineno) +
                        ": expected 4 tab-separated columns, got " + std::to_string(cols.size()));
    const schema::FieldSpec* fs = schema::find_field(cols[0]);
    if (!fs)
      throw CorpusError("gold " + doc_id + ": line " + std::to_string(lineno) +
                        ": unknown field_id '" + cols[0] + "'");
    auto kind = schema::kind_from_string(cols[1]);
    if (!kind || *kind != fs->kind)
      throw CorpusError("gold " + doc_id + ": line " + std::to_string(lineno) +
                        ": kind mismatch for " + cols[0]);
    auto scale = schema::unit_scale_from_string(cols[3]);
    if (!scale)
      throw CorpusError("gold " + doc_id + ": line " + std::to_string(lineno) +
                        ": bad unit_scale '" + cols[3] + "'");
    auto v = schema::value_from_field(*kind, cols[2], *scale);
    if (!v)
      throw CorpusError("gold " + doc_id + ": line " + std::to_string(lineno) +
                        ": unparseable value '" + cols[2] + "' at column 3");
    if (rec.values.count(cols[0]))
      throw CorpusError("gold " + doc_id + ": line " + std::to_string(lineno) +
                        ": duplicate field " + cols[0]);
    rec.values[cols[0]] = *v;
  }
  if (rec.values.size() != schema::catalog().size()) {
    for (const auto& f : schema::catalog())
      if (!rec.values.count(f.field_id))
        throw CorpusError("gold " + doc_id + ": missing field " + f.field_id);
  }
  return rec;
}

void write_corpus(const std::string& dir, const std::vector<Document>& docs,
                  const std::vector<GoldRecord>& gold) {
  fs::create_directories(dir);
  if (docs.size() != gold.size()) throw CorpusError("write_corpus: docs/gold size mismatch");
  for (size_t i = 0; i < docs.size(); ++i) {
    {
      std::ofstream f(fs::path(dir) / (docs[i].id + ".doc.txt"), std::ios::binary);
      if (!f) throw CorpusError("write_corpus: cannot write in " + dir);
      f << render_document(docs[i]);
    }
    {
      std::ofstream f(fs::path(dir) / (gold[i].doc_id + ".gold.tsv"), std::ios::binary);
      f << render_gold(gold[i]);
    }
  }
}

std::pair<std::vector<Document>, std::vector<GoldRecord>> load_corpus(const std::string& dir) {
  if (!fs::exists(dir)) throw CorpusError("load_corpus: no such directory: " + dir);
  std::vector<std::string> ids;
  std::set<std::string> gold_ids;
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.size() > 8 && name.substr(name.size() - 8) == ".doc.txt")
      ids.push_back(name.substr(0, name.size() - 8));
    else if (name.size() > 9 && name.substr(name.size() - 9) == ".gold.tsv")
      gold_ids.insert(name.substr(0, name.size() - 9));
  }
  std::sort(ids.begin(), ids.end());
  std::vector<Document> docs;
  std::vector<GoldRecord> golds;
  auto slurp = [](const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  for (const auto& id : ids) {
    if (!gold_ids.count(id)) throw CorpusError("load_corpus: missing gold file for document '" + id + "'");
    gold_ids.erase(id);
    docs.push_back(parse_document(id, slurp(fs::path(dir) / (id + ".doc.txt"))));
    golds.push_back(parse_gold(id, slurp(fs::path(dir) / (id + ".gold.tsv"))));
  }
  if (!gold_ids.empty())
    throw CorpusError("load_corpus: gold file without document: '" + *gold_ids.begin() + "'");
  return {docs, golds};
}

// ---------------------------------------------------------------------------
// Chunking

std::vector<int> DocumentSlice::scope() const {
  std::vector<int> out = section_indices;
  for (int s : synthetic_sources)
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<DocumentSlice> chunk_to_budget(const Document& doc, int64_t budget) {
  std::vector<DocumentSlice> slices;
  if (budget <= 0) budget = 1;
  DocumentSlice cur;
  cur.doc = &doc;
  auto flush = [&]() {
    if (!cur.section_indices.empty() || !cur.synthetic_sections.empty()) {
      slices.push_back(std::move(cur));
      cur = DocumentSlice{};
      cur.doc = &doc;
    }
  };
  for (size_t si = 0; si < doc.sections.size(); ++si) {
    const Section& s = doc.sections[si];
    const int64_t st = s.tokens();
    if (st <= budget) {
      if (cur.tokens + st > budget) flush();
      cur.section_indices.push_back(static_cast<int>(si));
      cur.tokens += st;
      continue;
    }
    // over-budget section: split at paragraph boundaries
    flush();
    auto paras = split_paragraphs(s.text);
    if (paras.empty()) paras.push_back(s.text);
    int part = 1;
    Section piece;
    piece.heading = s.heading;
    piece.domain_tags = s.domain_tags;
    piece.standard_format = s.standard_format;
    piece.tables = s.tables;  // tables ride with the first part
    auto flush_piece = [&]() {
      if (piece.text.empty() && piece.tables.empty()) return;
      DocumentSlice ds;
      ds.doc = &doc;
      Section out = piece;
      out.heading = s.heading + " (part " + std::to_string(part) + ")";
      ds.tokens = out.tokens();
      ds.synthetic_sections.push_back(std::move(out));
      ds.synthetic_sources.push_back(static_cast<int>(si));
      slices.push_back(std::move(ds));
      ++part;
      piece = Section{};
      piece.heading = s.heading;
      piece.domain_tags = s.domain_tags;
      piece.standard_format = s.standard_format;
    };
    for (const auto& para : paras) {
      Section probe = piece;
      if (!probe.text.empty()) probe.text += "\n\n";
      probe.text += para;
      if (probe.tokens() > budget && (!piece.text.empty() || !piece.tables.empty())) flush_piece();
      if (!piece.text.empty()) piece.text += "\n\n";
      piece.text += para;
      // a single paragraph larger than the budget is hard-split by words
      while (piece.tokens() > budget) {
        std::string& txt = piece.text;
        size_t cut = txt.size() / 2;
        while (cut > 0 && txt[cut] != ' ') --cut;
        if (cut == 0) break;
        std::string rest = txt.substr(cut + 1);
        txt = txt.substr(0, cut);
        flush_piece();
        piece.text = rest;
      }
    }
    flush_piece();
  }
  flush();
  if (slices.empty()) {
    DocumentSlice all;
    all.doc = &doc;
    slices.push_back(std::move(all));
  }
  return slices;
}

}  // namespace finbench::corpus
