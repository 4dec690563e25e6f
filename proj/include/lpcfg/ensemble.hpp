#ifndef LPCFG_ENSEMBLE_HPP
#define LPCFG_ENSEMBLE_HPP

#include <iosfwd>
#include <map>
#include <string>
#include <tuple>
#include <variant>
#include <vector>

#include "lpcfg/features.hpp"
#include "lpcfg/treebank.hpp"

namespace lpcfg {

// Span marginals of one model for one sentence, keyed by symbol name.
struct SpanScoreTable {
  std::map<std::tuple<std::string, int, int>, double> scores;

  double get(const std::string& label, int i, int j) const {
    auto it = scores.find({label, i, j});
    return it == scores.end() ? 0.0 : it->second;
  }
  void add(const std::string& label, int i, int j, double value) {
    scores[{label, i, j}] += value;
  }
};

// Per-sentence decoded trees from p models, plus optional per-model
// marginal tables. All candidate trees must share the token sequence.
struct CandidateSet {
  std::vector<RawTree> trees;
  std::vector<SpanScoreTable> marginals;  // empty, or one per tree

  void check() const;
};

struct CombineResult {
  RawTree tree;
  double objective;  // span-score sum of the returned tree, binarized spans
};

// Span DP over binarized trees where each span scores its occurrence count
// across the candidate trees. Labels are restricted to those appearing in
// the candidates' binarized span sets plus `extra_labels`; ties prefer the
// lower split, then the lexicographically lower label.
CombineResult max_tree_coverage(const CandidateSet& candidates,
                                const std::vector<std::string>& extra_labels = {});

// Same DP with span scores summed from the per-model marginal tables.
// Throws when a marginal table is missing.
CombineResult max_marginal_coverage(const CandidateSet& candidates,
                                    const std::vector<std::string>& extra_labels = {});

// Linear tree-level reranker standing in for an external MaxEnt toolchain.
// Features: rule-type counts, span-length histogram by label, a
// right-branching count, the candidate's source-model id, and the
// candidate's own marginal-sum score.
struct RerankerModel {
  FeatureIndex features;
  std::vector<double> weights;
  double l2 = 1.0;

  double score(const SparseFeatureVector& v) const {
    double s = 0.0;
    for (const auto& [id, value] : v.entries) s += weights[id] * value;
    return s;
  }
  void save(std::ostream& os) const;
  static RerankerModel load(std::istream& is);
};

SparseFeatureVector reranker_features(const RawTree& tree, int model_index,
                                      double marginal_score, FeatureIndex& index);

struct RerankGroup {
  std::vector<RawTree> candidates;
  std::vector<double> marginal_scores;  // optional; empty means zeros
  RawTree gold;
};

// Maximizes the L2-regularized conditional log-likelihood of the best-F1
// candidate(s) per group (uniform soft target over ties) by batch gradient
// ascent with backtracking line search; converges when the gradient norm
// drops below 1e-5. Groups with fewer than two candidates are skipped with a
// warning to stderr.
RerankerModel reranker_train(const std::vector<RerankGroup>& groups,
                             double l2 = 1.0);

// Highest-scoring candidate; ties go to the lowest model index.
int reranker_select(const RerankerModel& model,
                    const std::vector<RawTree>& candidates,
                    const std::vector<double>& marginal_scores = {});

// Combination DAG: leaves are model indices, internal nodes apply one of
// maxtre / maxmrg / maxent to their children's outputs.
struct CombinePlan {
  struct Node {
    std::string op;
    std::vector<std::variant<int, std::string>> children;
  };
  std::map<std::string, Node> nodes;
  std::string output;

  static CombinePlan parse(const std::string& json_text);
  // Rejects cycles, dangling references, bad ops, and empty children.
  void validate(int num_models) const;
};

// Evaluates the plan bottom-up for one sentence. maxent nodes require a
// trained reranker; maxmrg nodes require all children to be leaf models
// with marginal tables.
RawTree hierarchical_combine(const CombinePlan& plan,
                             const CandidateSet& inputs,
                             const RerankerModel* reranker = nullptr);

// Marginal-sum score of a tree under one model's table (binarized spans).
double tree_marginal_score(const RawTree& tree, const SpanScoreTable& table);

}  // namespace lpcfg

#endif  // LPCFG_ENSEMBLE_HPP
