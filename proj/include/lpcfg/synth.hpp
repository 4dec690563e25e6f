#ifndef LPCFG_SYNTH_HPP
#define LPCFG_SYNTH_HPP

#include <cstdint>
#include <vector>

#include "lpcfg/grammar.hpp"
#include "lpcfg/rng.hpp"

namespace lpcfg {

struct SynthSpec {
  int interminals = 2;
  int preterminals = 2;
  int m = 2;
  int vocab = 12;
  uint64_t seed = 1;
  double dirichlet = 1.0;         // symmetric concentration per block
  double lexical_bias = 3.0;      // extra weight on preterminal child pairs
  int max_depth = 25;             // sampling depth cap; deeper trees resample
};

// Random valid L-PCFG with Dirichlet-distributed rule blocks. Interminals
// are named X0.., preterminals T0.., words w0... Roots are interminals.
LatentGrammar sample_grammar(const SynthSpec& spec);

// Hand-planted two-state grammar whose states are recoverable from the
// feature functions: state-0 sentences bracket left under exclusive class-0
// words, state-1 sentences bracket right under class-1 words, and a shared
// word pool keeps the classes from being trivially separable.
LatentGrammar planted_two_state_grammar(int exclusive_per_class = 8,
                                        int shared_words = 4);

// Top-down sample from the grammar's root distribution. Trees exceeding the
// depth cap are resampled.
AnnotatedTree sample_tree(const LatentGrammar& grammar, RandomSource& rng,
                          int max_depth = 25);

std::vector<AnnotatedTree> sample_treebank(const LatentGrammar& grammar,
                                           int num_trees, uint64_t seed,
                                           int max_depth = 25);

}  // namespace lpcfg

#endif  // LPCFG_SYNTH_HPP
