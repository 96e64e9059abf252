#pragma once

#include <map>
#include <string>
#include <vector>

#include "finbench/corpus.hpp"
#include "finbench/record.hpp"

namespace finbench::verify {

enum class CheckId {
  FormatDate,
  FormatFinite,
  FormatNonnegative,
  FormatPayRatio,
  ConsistencyBalanceIdentity,
  ConsistencyCompensationTotal,
  ConsistencyDilutedEps,
  GroundingEvidence,
};
const char* to_string(CheckId id);

struct CheckOutcome {
  CheckId check_id = CheckId::FormatDate;
  bool passed = true;
  std::string detail;
  std::vector<std::string> implicated_fields;  // nonempty when failed
};

struct CritiqueMessage {
  std::string field_id;
  CheckId failed_check = CheckId::FormatDate;
  std::string expected;  // constraint rendering
  std::string observed;  // value rendering
};

struct VerifyConfig {
  double balance_identity_tolerance = 0.005;  // fraction of |assets|
  double compensation_tolerance = 0.05;       // fraction of the component sum
  // the catalog's compensation total has no components beyond the four
  // listed ones, so equality within tolerance is enforced both ways
  bool compensation_exact_components = true;
  double eps_tolerance = 0.005;  // fraction of |basic|
  bool check_diluted_le_basic = true;
};

using RecordMap = std::map<std::string, ExtractionRecord>;

// Format validation: calendar dates, finite currency values, catalog
// nonnegativity, positive CEO pay ratio. Failures are outcomes, not errors.
std::vector<CheckOutcome> check_format(const RecordMap& records,
                                       const VerifyConfig& cfg = VerifyConfig{});

// Cross-field consistency: balance-sheet identity, compensation totals,
// diluted vs basic EPS. Checks run only where all participants are present.
std::vector<CheckOutcome> check_consistency(const RecordMap& records,
                                            const VerifyConfig& cfg = VerifyConfig{});

// Source grounding: the canonical rendering of the value (or a unit-scale
// variant) must occur within the record's evidence span.
std::vector<CheckOutcome> check_grounding(const RecordMap& records, const corpus::Document& doc);

std::vector<CheckOutcome> run_all_checks(const RecordMap& records, const corpus::Document& doc,
                                         const VerifyConfig& cfg = VerifyConfig{});

// One message per (implicated field, failed check), deterministic order.
std::vector<CritiqueMessage> critique(const std::vector<CheckOutcome>& outcomes);

// Confidence-weighted voting across candidate records for one field.
// Groups candidates by match-equality, sums confidences per group, picks the
// maximal group (ties: higher single confidence, then earlier candidate) and
// returns its best member with confidence = winning sum / total sum.
ExtractionRecord reconcile(const std::vector<ExtractionRecord>& candidates);

}  // namespace finbench::verify
