#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "finbench/schema.hpp"

namespace finbench::corpus {

enum class FilingType { TenK, TenQ, EightK };
const char* to_string(FilingType t);
std::optional<FilingType> filing_type_from_string(std::string_view s);

struct TableBlock {
  std::string caption;
  std::vector<std::vector<std::string>> rows;  // equal column counts
};

struct Section {
  std::string heading;
  std::string text;
  std::vector<TableBlock> tables;
  std::set<schema::Domain> domain_tags;
  bool standard_format = false;

  int64_t tokens() const;
  // Section body plus rendered tables, as written to disk; the unit the
  // semantic cache and the duplicate-detection oracle operate on.
  std::string full_text() const;
};

struct Document {
  std::string id;
  FilingType filing_type = FilingType::TenK;
  std::vector<Section> sections;
  int64_t total_tokens = 0;

  void recompute_tokens();
};

struct GoldRecord {
  std::string doc_id;
  std::map<std::string, schema::GoldValue> values;  // exactly the 25 catalog ids
};

struct CorpusError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Where each field's canonical rendering occurs in a document. Derived by
// substring search; the mock backend uses it to place evidence spans.
struct Occurrence {
  int section_index = 0;
  int64_t offset = 0;  // into Section::full_text()
  int64_t length = 0;
};
using GroundingIndex = std::map<std::string, std::vector<Occurrence>>;
GroundingIndex build_grounding_index(const Document& doc, const GoldRecord& gold);

struct SynthSpec {
  int count = 0;
  // filing-type mix; weights need not sum to 1, they are normalized
  double weight_10k = 0.4;
  double weight_10q = 0.4;
  double weight_8k = 0.2;
  // per-type target token counts
  int64_t tokens_10k = 3000;
  int64_t tokens_10q = 2200;
  int64_t tokens_8k = 1400;
  // difficulty knobs, all in [0,1]
  double duplicate_section_rate = 0.0;
  double ambiguity_rate = 0.0;
  double cross_table_rate = 0.0;
  double unit_scale_trap_rate = 0.0;
  // fraction of eligible fields marked absent-in-document
  double absent_rate = 0.0;
};

// Deterministic for a fixed (spec, seed). Every document embeds all 25
// fields (minus absents); balance-sheet identity holds exactly; duplicated
// sections are verbatim copies of earlier sections.
std::pair<std::vector<Document>, std::vector<GoldRecord>> generate_synthetic(
    const SynthSpec& spec, uint64_t seed);

// Directory layout: <id>.doc.txt + <id>.gold.tsv per document.
void write_corpus(const std::string& dir, const std::vector<Document>& docs,
                  const std::vector<GoldRecord>& gold);
std::pair<std::vector<Document>, std::vector<GoldRecord>> load_corpus(const std::string& dir);

// Serialization for a single document/gold pair (exposed for tests).
std::string render_document(const Document& doc);
Document parse_document(const std::string& id, const std::string& content);
std::string render_gold(const GoldRecord& rec);
GoldRecord parse_gold(const std::string& doc_id, const std::string& content);

struct DocumentSlice {
  const Document* doc = nullptr;
  std::vector<int> section_indices;         // indices into doc->sections
  std::vector<Section> synthetic_sections;  // used when a section was split
  std::vector<int> synthetic_sources;       // original index per synthetic section
  int64_t tokens = 0;

  // visible original-document section indices (split parts map to their source)
  std::vector<int> scope() const;
};

// Greedy in-order packing of sections into slices of at most `budget`
// tokens; a single over-budget section is split at paragraph boundaries.
std::vector<DocumentSlice> chunk_to_budget(const Document& doc, int64_t budget);

// Known standard headings, used by the loader heuristic when a section
// carries no explicit std marker.
const std::vector<std::string>& known_standard_headings();

}  // namespace finbench::corpus
