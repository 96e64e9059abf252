#include "finbench/verify.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "finbench/text.hpp"

namespace finbench::verify {

using schema::FieldKind;
using schema::GoldValue;

const char* to_string(CheckId id) {
  switch (id) {
    case CheckId::FormatDate: return "format.date";
    case CheckId::FormatFinite: return "format.finite";
    case CheckId::FormatNonnegative: return "format.nonnegative";
    case CheckId::FormatPayRatio: return "format.pay_ratio";
    case CheckId::ConsistencyBalanceIdentity: return "consistency.balance_identity";
    case CheckId::ConsistencyCompensationTotal: return "consistency.compensation_total";
    case CheckId::ConsistencyDilutedEps: return "consistency.diluted_eps";
    case CheckId::GroundingEvidence: return "grounding.evidence";
  }
  return "?";
}

namespace {

const ExtractionRecord* present(const RecordMap& records, const std::string& id) {
  auto it = records.find(id);
  if (it == records.end() || it->second.value.absent) return nullptr;
  return &it->second;
}

CheckOutcome fail(CheckId id, std::string detail, std::vector<std::string> fields) {
  return CheckOutcome{id, false, std::move(detail), std::move(fields)};
}

CheckOutcome pass(CheckId id) { return CheckOutcome{id, true, "", {}}; }

}  // namespace

std::vector<CheckOutcome> check_format(const RecordMap& records, const VerifyConfig&) {
  std::vector<CheckOutcome> out;
  for (const auto& [fid, rec] : records) {
    if (rec.value.absent) continue;
    const schema::FieldSpec* spec = schema::find_field(fid);
    if (!spec) continue;
    switch (spec->kind) {
      case FieldKind::Date: {
        if (!schema::normalize_date(rec.value.text))
          out.push_back(
              fail(CheckId::FormatDate, "unparseable or invalid calendar date: '" + rec.value.text + "'", {fid}));
        break;
      }
      case FieldKind::Numeric: {
        const double raw = rec.value.raw_number();
        if (!std::isfinite(raw)) {
          out.push_back(fail(CheckId::FormatFinite, "non-finite value", {fid}));
          break;
        }
        if (spec->nonnegative && raw < 0)
          out.push_back(fail(CheckId::FormatNonnegative,
                             fid + " = " + format_number(raw) + " must be nonnegative", {fid}));
        if (fid == "ceo_pay_ratio" && raw <= 0)
          out.push_back(fail(CheckId::FormatPayRatio,
                             "pay ratio must be a positive ratio, got " + format_number(raw),
                             {fid}));
        break;
      }
      default:
        break;
    }
  }
  if (out.empty()) out.push_back(pass(CheckId::FormatDate));
  return out;
}

std::vector<CheckOutcome> check_consistency(const RecordMap& records, const VerifyConfig& cfg) {
  std::vector<CheckOutcome> out;

  // (a) balance sheet identity
  const auto* assets = present(records, "total_assets");
  const auto* liab = present(records, "total_liabilities");
  const auto* equity = present(records, "shareholders_equity");
  if (assets && liab && equity) {
    const double a = assets->value.raw_number();
    const double l = liab->value.raw_number();
    const double q = equity->value.raw_number();
    const double tol = cfg.balance_identity_tolerance * std::fabs(a);
    if (std::fabs(a - (l + q)) > tol) {
      out.push_back(fail(CheckId::ConsistencyBalanceIdentity,
                         "assets " + format_number(a) + " != liabilities " + format_number(l) +
                             " + equity " + format_number(q),
                         {"total_assets", "total_liabilities", "shareholders_equity"}));
    } else {
      out.push_back(pass(CheckId::ConsistencyBalanceIdentity));
    }
  }

  // (b) compensation total vs component sum
  const auto* total = present(records, "ceo_total_compensation");
  const auto* salary = present(records, "ceo_base_salary");
  const auto* bonus = present(records, "ceo_bonus");
  const auto* stock = present(records, "ceo_stock_awards");
  const auto* options = present(records, "ceo_option_awards");
  if (total && salary && bonus && stock && options) {
    const double sum = salary->value.raw_number() + bonus->value.raw_number() +
                       stock->value.raw_number() + options->value.raw_number();
    const double t = total->value.raw_number();
    const double tol = cfg.compensation_tolerance * std::fabs(sum);
    const bool low = t < sum - tol;
    const bool high = cfg.compensation_exact_components && t > sum + tol;
    if (low || high) {
      out.push_back(fail(CheckId::ConsistencyCompensationTotal,
                         "total compensation " + format_number(t) +
                             " inconsistent with component sum " + format_number(sum),
                         {"ceo_total_compensation", "ceo_base_salary", "ceo_bonus",
                          "ceo_stock_awards", "ceo_option_awards"}));
    } else {
      out.push_back(pass(CheckId::ConsistencyCompensationTotal));
    }
  }

  // (c) diluted EPS cannot exceed basic EPS
  const auto* basic = present(records, "eps_basic");
  const auto* diluted = present(records, "eps_diluted");
  if (cfg.check_diluted_le_basic && basic && diluted) {
    const double b = basic->value.raw_number();
    const double d = diluted->value.raw_number();
    if (d > b + cfg.eps_tolerance * std::fabs(b)) {
      out.push_back(fail(CheckId::ConsistencyDilutedEps,
                         "diluted EPS " + format_number(d) + " exceeds basic EPS " +
                             format_number(b),
                         {"eps_basic", "eps_diluted"}));
    } else {
      out.push_back(pass(CheckId::ConsistencyDilutedEps));
    }
  }
  return out;
}

std::vector<CheckOutcome> check_grounding(const RecordMap& records, const corpus::Document& doc) {
  std::vector<CheckOutcome> out;
  for (const auto& [fid, rec] : records) {
    if (rec.value.absent) continue;  // nothing to ground
    if (!rec.has_evidence()) {
      out.push_back(fail(CheckId::GroundingEvidence, fid + ": no evidence span", {fid}));
      continue;
    }
    if (rec.evidence_section < 0 ||
        rec.evidence_section >= static_cast<int>(doc.sections.size())) {
      out.push_back(fail(CheckId::GroundingEvidence, fid + ": evidence span out of range", {fid}));
      continue;
    }
    const std::string text = doc.sections[rec.evidence_section].full_text();
    // widen the window slightly so a span anchored on the gold digits still
    // covers unit-scale variant spellings around it
    const int64_t lo = std::max<int64_t>(0, rec.evidence_offset - 40);
    const int64_t hi =
        std::min<int64_t>(static_cast<int64_t>(text.size()), rec.evidence_offset + rec.evidence_length + 40);
    if (lo >= hi) {
      out.push_back(fail(CheckId::GroundingEvidence, fid + ": empty evidence span", {fid}));
      continue;
    }
    const std::string window = text.substr(lo, hi - lo);
    bool found = false;
    for (const auto& variant : schema::unit_variants(rec.value)) {
      if (!variant.empty() && window.find(variant) != std::string::npos) {
        found = true;
        break;
      }
    }
    if (!found)
      out.push_back(fail(CheckId::GroundingEvidence,
                         fid + ": value " + schema::canonical_rendering(rec.value) +
                             " not supported by evidence text",
                         {fid}));
  }
  if (out.empty()) out.push_back(pass(CheckId::GroundingEvidence));
  return out;
}

std::vector<CheckOutcome> run_all_checks(const RecordMap& records, const corpus::Document& doc,
                                         const VerifyConfig& cfg) {
  std::vector<CheckOutcome> all = check_format(records, cfg);
  auto cons = check_consistency(records, cfg);
  all.insert(all.end(), cons.begin(), cons.end());
  auto gr = check_grounding(records, doc);
  all.insert(all.end(), gr.begin(), gr.end());
  return all;
}

std::vector<CritiqueMessage> critique(const std::vector<CheckOutcome>& outcomes) {
  std::vector<CritiqueMessage> msgs;
  for (const auto& oc : outcomes) {
    if (oc.passed) continue;
    for (const auto& fid : oc.implicated_fields) {
      CritiqueMessage m;
      m.field_id = fid;
      m.failed_check = oc.check_id;
      m.expected = std::string("satisfy ") + to_string(oc.check_id);
      m.observed = oc.detail;
      msgs.push_back(std::move(m));
    }
  }
  return msgs;
}

ExtractionRecord reconcile(const std::vector<ExtractionRecord>& candidates) {
  if (candidates.empty()) throw std::invalid_argument("reconcile: empty candidate list");

  struct Group {
    std::vector<size_t> members;  // candidate indices, in input order
    double sum_conf = 0.0;
    double max_conf = 0.0;
    size_t first = 0;
  };
  std::vector<Group> groups;
  for (size_t i = 0; i < candidates.size(); ++i) {
    const auto& c = candidates[i];
    const schema::FieldSpec* spec = schema::find_field(c.field_id);
    bool placed = false;
    for (auto& g : groups) {
      const auto& anchor = candidates[g.members.front()];
      const bool same =
          spec ? schema::match(*spec, anchor.value, c.value)
               : (anchor.value.absent == c.value.absent);
      if (same) {
        g.members.push_back(i);
        g.sum_conf += c.confidence;
        g.max_conf = std::max(g.max_conf, c.confidence);
        placed = true;
        break;
      }
    }
    if (!placed) {
      Group g;
      g.members.push_back(i);
      g.sum_conf = c.confidence;
      g.max_conf = c.confidence;
      g.first = i;
      groups.push_back(std::move(g));
    }
  }

  double total = 0.0;
  for (const auto& g : groups) total += g.sum_conf;

  const Group* winner = &groups.front();
  for (const auto& g : groups) {
    if (g.sum_conf > winner->sum_conf ||
        (g.sum_conf == winner->sum_conf &&
         (g.max_conf > winner->max_conf ||
          (g.max_conf == winner->max_conf && g.first < winner->first))))
      winner = &g;
  }

  // best member of the winning group: highest confidence, earliest on tie
  size_t best = winner->members.front();
  for (size_t idx : winner->members)
    if (candidates[idx].confidence > candidates[best].confidence) best = idx;

  ExtractionRecord out = candidates[best];
  out.confidence = total > 0 ? winner->sum_conf / total : 1.0;
  return out;
}

}  // namespace finbench::verify
