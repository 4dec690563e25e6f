#ifndef LPCFG_ESTIMATION_HPP
#define LPCFG_ESTIMATION_HPP

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <vector>

#include "lpcfg/features.hpp"
#include "lpcfg/grammar.hpp"
#include "lpcfg/noise.hpp"
#include "lpcfg/sparse_matrix.hpp"
#include "lpcfg/treebank.hpp"

namespace lpcfg {

struct TrainConfig {
  int k = 100;       // thin-SVD rank
  int m = 24;        // latent states per nonterminal
  int restarts = 10; // k-means restarts
  uint64_t seed = 1;
  NoiseSpec noise;
  bool scale_by_singular_values = false;   // fold singular values into y, z
  bool dropout_after_normalization = false;
  bool signature_backoff = true;
  int rare_word_threshold = 5;
  FeatureConfig features;
  HeadTable heads = HeadTable::defaults();
  int threads = 0;  // 0 = LPCFG_THREADS / hardware
};

// Per-nonterminal empirical cross-covariance matrices between inside and
// outside feature vectors. Matrices are stored over the features active in
// the nonterminal's block; `entry` answers in global feature coordinates.
struct CovarianceAccumulator {
  struct Block {
    std::vector<int> inside_features;   // global ids, ascending (rows)
    std::vector<int> outside_features;  // global ids, ascending (cols)
    SparseMatrix matrix{0, 0};          // finalized: summed then / count
    int64_t count = 0;
  };
  std::map<int, Block> blocks;  // by nonterminal

  double entry(int symbol, int inside_feature, int outside_feature) const;
};

// Projected training instance: y = U^T phi, z = V^T psi, x = [y; z].
struct ProjectedInstance {
  int instance;
  Eigen::VectorXd y;
  Eigen::VectorXd z;
  Eigen::VectorXd x;
};

// Eq.-style per-nonterminal average of outer products phi psi^T over the
// instances of each nonterminal; the division by the instance count happens
// once at finalize time.
CovarianceAccumulator build_omega(const std::vector<InstanceRecord>& instances,
                                  const std::vector<SparseFeatureVector>& inside,
                                  const std::vector<SparseFeatureVector>& outside,
                                  int num_symbols);

// Relative-frequency MLE from a latent-annotated treebank: binary and
// lexical conditionals per (symbol, state), root probabilities from tree
// roots. Counting is integral; each probability is a single division.
LatentGrammar estimate_from_annotated(const std::vector<AnnotatedTree>& treebank,
                                      const SymbolTable& symbols,
                                      bool signature_backoff = true,
                                      int rare_word_threshold = 5);

struct TrainResult {
  LatentGrammar grammar;
  std::vector<AnnotatedTree> annotated;
  FeatureIndex inside_index;
  FeatureIndex outside_index;
};

// The clustering estimation pipeline: decompose, extract features, optional
// dropout, variance-normalize, per-nonterminal SVD + projection, optional
// Gaussian noise on the projections, per-nonterminal k-means, annotate, and
// count. m = 1 short-circuits straight to counting.
TrainResult train_clustering(const std::vector<SkeletalTree>& treebank,
                             const SymbolTable& symbols,
                             const TrainConfig& config);

// Relative-frequency PCFG without latent states, used for pruning.
LatentGrammar train_base_pcfg(const std::vector<SkeletalTree>& treebank,
                              const SymbolTable& symbols,
                              bool signature_backoff = true,
                              int rare_word_threshold = 5);

struct EnsembleGridEntry {
  NoiseSpec spec;  // seed field ignored; per-model seeds are derived
  int replicates = 1;
};

struct EnsembleMember {
  NoiseScheme scheme;
  double sigma;
  int replicate;
  uint64_t seed;
  std::optional<TrainResult> result;  // empty on failure
  std::string error;
};

// Trains one model per (grid entry, replicate) with independently derived
// seeds, in deterministic order. Training failures are collected per member,
// not propagated.
std::vector<EnsembleMember> train_ensemble(
    const std::vector<SkeletalTree>& treebank, const SymbolTable& symbols,
    const TrainConfig& base_config, const std::vector<EnsembleGridEntry>& grid);

}  // namespace lpcfg

#endif  // LPCFG_ESTIMATION_HPP
