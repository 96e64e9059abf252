#pragma once

#include <cstdint>
#include <string>

#include "finbench/backend.hpp"
#include "finbench/schema.hpp"

namespace finbench {

// One field's extracted value as carried between agents and into results.
struct ExtractionRecord {
  std::string field_id;
  schema::GoldValue value;
  double confidence = 0.0;
  int evidence_section = -1;  // -1 = no evidence span
  int64_t evidence_offset = 0;
  int64_t evidence_length = 0;
  backend::AgentRole producer_role = backend::AgentRole::FieldExtractor;
  std::string producer_model;
  int iteration = 0;  // correction index, 0 = first pass
  bool low_confidence_flag = false;

  bool has_evidence() const { return evidence_section >= 0; }
};

inline ExtractionRecord record_from_emitted(const backend::EmittedRecord& e,
                                            backend::AgentRole role, std::string model) {
  ExtractionRecord r;
  r.field_id = e.field_id;
  r.value = e.value;
  r.confidence = e.confidence;
  if (e.has_evidence) {
    r.evidence_section = e.evidence_section;
    r.evidence_offset = e.evidence_offset;
    r.evidence_length = e.evidence_length;
  }
  r.producer_role = role;
  r.producer_model = std::move(model);
  r.iteration = e.pass;
  return r;
}

}  // namespace finbench
