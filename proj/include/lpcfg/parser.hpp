#ifndef LPCFG_PARSER_HPP
#define LPCFG_PARSER_HPP

#include <optional>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "lpcfg/grammar.hpp"
#include "lpcfg/treebank.hpp"

namespace lpcfg {

// Allowed (symbol, i, j) spans for one sentence, from base-PCFG marginals.
struct PruneMask {
  int length = 0;
  std::unordered_set<int64_t> allowed;

  static int64_t key(int a, int i, int j) {
    return (static_cast<int64_t>(a) << 24) | (static_cast<int64_t>(i) << 12) | j;
  }
  bool admits(int a, int i, int j) const {
    return allowed.count(key(a, i, j)) > 0;
  }
  void admit(int a, int i, int j) { allowed.insert(key(a, i, j)); }
};

// Inside/outside scores and span marginals mu(a,i,j) for one sentence.
class Chart {
 public:
  int length() const { return length_; }
  double log_z() const { return log_z_; }
  const TaggedSentence& sentence() const { return sentence_; }
  int tag_symbol(int i) const { return tags_[i]; }

  double marginal(int a, int i, int j) const {
    auto it = mu_.find(PruneMask::key(a, i, j));
    return it == mu_.end() ? 0.0 : it->second;
  }
  // (i, j, a, mu) sorted by (i, j, a); deterministic dump order.
  const std::vector<std::tuple<int, int, int, double>>& marginal_entries() const {
    return mu_entries_;
  }

  friend Chart inside_outside(const LatentGrammar&, const TaggedSentence&,
                              const PruneMask*);

 private:
  int length_ = 0;
  double log_z_ = 0.0;
  TaggedSentence sentence_;
  std::vector<int> tags_;
  std::unordered_map<int64_t, double> mu_;
  std::vector<std::tuple<int, int, int, double>> mu_entries_;
};

// Exact sums over all derivations respecting the mask, with per-cell scaled
// accumulation. Throws UnparseableError when no derivation survives (the
// caller may retry unpruned).
Chart inside_outside(const LatentGrammar& grammar, const TaggedSentence& sentence,
                     const PruneMask* mask = nullptr);

// Admits (a,i,j) iff the base marginal is >= threshold, plus the base
// Viterbi tree's spans so a complete parse always survives when the base
// grammar parses the sentence.
PruneMask prune_mask(const LatentGrammar& base, const TaggedSentence& sentence,
                     double threshold = 0.00005);

// Highest-probability derivation, latent states stripped. Empty when the
// sentence has no derivation.
std::optional<SkeletalTree> viterbi_tree(const LatentGrammar& grammar,
                                         const TaggedSentence& sentence,
                                         const PruneMask* mask = nullptr);

struct MbrResult {
  SkeletalTree tree;
  double objective;  // sum of marginals over the tree's spans
};

// Goodman-style dynamic program: the binarized tree maximizing the sum of
// span marginals. Ties prefer the lower split point, then the lower symbol
// id.
MbrResult mbr_decode(const Chart& chart, const LatentGrammar& grammar);

struct ParseOptions {
  bool prune = true;
  double threshold = 0.00005;
};

struct ParseResult {
  RawTree tree;            // debinarized output (fallback tree on failure)
  bool failed = false;     // no parse even unpruned
  bool retried_unpruned = false;
  double mbr_objective = 0.0;
  std::optional<Chart> chart;
};

// prune -> inside_outside -> mbr_decode -> debinarize, retrying without the
// mask when pruning starves the chart. On total failure emits a flat tree
// labeled X, flagged as a failure.
ParseResult parse(const LatentGrammar& grammar, const LatentGrammar& base,
                  const TaggedSentence& sentence, const ParseOptions& options = {});

}  // namespace lpcfg

#endif  // LPCFG_PARSER_HPP
