#ifndef LPCFG_EVAL_HPP
#define LPCFG_EVAL_HPP

#include <cstdint>
#include <string>
#include <tuple>
#include <vector>

#include "lpcfg/tree.hpp"

namespace lpcfg {

// Labeled spans of a debinarized tree: internal nodes only (root included,
// preterminal POS spans excluded), as a sorted multiset.
std::vector<std::tuple<std::string, int, int>> labeled_spans(const RawTree& tree);

struct SpanCounts {
  int64_t matched = 0;
  int64_t gold = 0;
  int64_t predicted = 0;
};
SpanCounts span_match(const RawTree& gold, const RawTree& predicted);

// Sentence-level F1 with the add-zero convention: no matched spans -> 0.
double sentence_f1(const RawTree& gold, const RawTree& predicted);

struct ParsevalReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  int exact_match = 0;
  int failures = 0;   // yield mismatches and empty predictions
  int sentences = 0;  // scored sentences
  int skipped = 0;    // over max_len
  int64_t matched_spans = 0;
  int64_t gold_spans = 0;
  int64_t predicted_spans = 0;
};

// Corpus-level micro-averaged labeled precision/recall/F1 over debinarized
// trees. Lists must have equal length; yield mismatches count as failures
// (zero matches, both denominators still accrue). max_len < 0 disables the
// length cutoff.
ParsevalReport parseval(const std::vector<RawTree>& gold,
                        const std::vector<RawTree>& predicted, int max_len = -1);

struct OracleReport {
  double f1 = 0.0;
  std::vector<int> best_indices;  // per-sentence best candidate (ties: lowest)
  ParsevalReport report;
};

// Per sentence, picks the candidate maximizing sentence-level F1 and scores
// the selection corpus-wide.
OracleReport oracle_f1(const std::vector<RawTree>& gold,
                       const std::vector<std::vector<RawTree>>& candidates,
                       int max_len = -1);

}  // namespace lpcfg

#endif  // LPCFG_EVAL_HPP
