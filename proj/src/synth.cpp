#include "lpcfg/synth.hpp"

#include <string>
#include <vector>

#include "lpcfg/errors.hpp"

namespace lpcfg {

namespace {

std::vector<double> dirichlet(RandomSource& rng,
                              const std::vector<double>& alpha) {
  std::vector<double> draws(alpha.size());
  double total = 0.0;
  for (size_t i = 0; i < alpha.size(); ++i) {
    draws[i] = rng.gamma(alpha[i]);
    total += draws[i];
  }
  for (double& d : draws) d /= total;
  return draws;
}

}  // namespace

LatentGrammar sample_grammar(const SynthSpec& spec) {
  if (spec.interminals < 1 || spec.preterminals < 1 || spec.vocab < 1 ||
      spec.m < 1) {
    throw ConfigError("synth spec requires >= 1 interminal, preterminal, word, state");
  }
  SymbolTable symbols;
  std::vector<int> inter, pre;
  for (int i = 0; i < spec.interminals; ++i) {
    inter.push_back(symbols.intern_symbol("X" + std::to_string(i), true));
  }
  for (int i = 0; i < spec.preterminals; ++i) {
    pre.push_back(symbols.intern_symbol("T" + std::to_string(i), false));
  }
  std::vector<int> words;
  for (int i = 0; i < spec.vocab; ++i) {
    words.push_back(symbols.intern_word("w" + std::to_string(i)));
  }

  RandomSource rng(derive_seed(spec.seed, "synth-grammar"));
  GrammarBuilder builder(symbols);
  for (int a = 0; a < symbols.num_symbols(); ++a) builder.set_states(a, spec.m);

  // Root distribution over interminal states.
  {
    std::vector<double> alpha(inter.size() * spec.m, spec.dirichlet);
    std::vector<double> probs = dirichlet(rng, alpha);
    int i = 0;
    for (int a : inter) {
      for (int h = 0; h < spec.m; ++h) builder.add_root(a, h, probs[i++]);
    }
  }

  // Binary blocks: all (b,h2,c,h3) pairs, with extra concentration on
  // preterminal children so sampled trees stay finite.
  std::vector<std::tuple<int, int, int, int>> child_space;
  std::vector<double> child_alpha;
  for (int b = 0; b < symbols.num_symbols(); ++b) {
    for (int h2 = 0; h2 < spec.m; ++h2) {
      for (int c = 0; c < symbols.num_symbols(); ++c) {
        for (int h3 = 0; h3 < spec.m; ++h3) {
          child_space.emplace_back(b, h2, c, h3);
          bool lexical_pair =
              symbols.is_preterminal(b) && symbols.is_preterminal(c);
          child_alpha.push_back(spec.dirichlet *
                                (lexical_pair ? spec.lexical_bias : 1.0));
        }
      }
    }
  }
  for (int a : inter) {
    for (int h1 = 0; h1 < spec.m; ++h1) {
      std::vector<double> probs = dirichlet(rng, child_alpha);
      for (size_t i = 0; i < child_space.size(); ++i) {
        auto [b, h2, c, h3] = child_space[i];
        builder.add_binary(a, h1, b, h2, c, h3, probs[i]);
      }
    }
  }

  for (int a : pre) {
    for (int h = 0; h < spec.m; ++h) {
      std::vector<double> alpha(words.size(), spec.dirichlet);
      std::vector<double> probs = dirichlet(rng, alpha);
      for (size_t i = 0; i < words.size(); ++i) {
        builder.add_lexical(a, h, words[i], probs[i]);
      }
    }
  }
  return builder.freeze();
}

LatentGrammar planted_two_state_grammar(int exclusive_per_class,
                                        int shared_words) {
  SymbolTable symbols;
  int s = symbols.intern_symbol("S", true);
  int x = symbols.intern_symbol("X", true);
  int t = symbols.intern_symbol("T", false);
  std::vector<int> class0, class1;
  for (int i = 0; i < exclusive_per_class; ++i) {
    class0.push_back(symbols.intern_word("a" + std::to_string(i)));
  }
  for (int i = 0; i < exclusive_per_class; ++i) {
    class1.push_back(symbols.intern_word("b" + std::to_string(i)));
  }
  for (int i = 0; i < shared_words; ++i) {
    int w = symbols.intern_word("c" + std::to_string(i));
    class0.push_back(w);
    class1.push_back(w);
  }

  GrammarBuilder builder(symbols);
  builder.set_states(s, 2);
  builder.set_states(x, 2);
  builder.set_states(t, 2);
  builder.add_root(s, 0, 0.5);
  builder.add_root(s, 1, 0.5);
  // State 0 brackets left, state 1 brackets right.
  builder.add_binary(s, 0, x, 0, t, 0, 1.0);
  builder.add_binary(s, 1, t, 1, x, 1, 1.0);
  builder.add_binary(x, 0, t, 0, t, 0, 1.0);
  builder.add_binary(x, 1, t, 1, t, 1, 1.0);
  for (int w : class0) {
    builder.add_lexical(t, 0, w, 1.0 / static_cast<double>(class0.size()));
  }
  for (int w : class1) {
    builder.add_lexical(t, 1, w, 1.0 / static_cast<double>(class1.size()));
  }
  return builder.freeze();
}

namespace {

// Returns -1 when the depth cap is exceeded; the caller resamples.
int sample_node(const LatentGrammar& grammar, RandomSource& rng, int a, int h,
                int depth, int max_depth, AnnotatedTree& out, int parent,
                int begin) {
  if (depth > max_depth) return -1;
  int id = static_cast<int>(out.tree.nodes.size());
  out.tree.nodes.push_back(SkeletalTree::Node{});
  out.states.push_back(h);
  out.tree.nodes[id].symbol = a;
  out.tree.nodes[id].parent = parent;
  out.tree.nodes[id].begin = begin;

  if (grammar.symbols().is_preterminal(a)) {
    const auto& rules = grammar.lexical_rules(a);
    double u = rng.uniform();
    double cum = 0.0;
    int word = -1;
    for (const LexicalRule& r : rules) {
      if (r.h != h) continue;
      cum += r.prob;
      if (u < cum) {
        word = r.word;
        break;
      }
    }
    if (word < 0) {
      // numeric slack: fall back to the last rule of the state
      for (auto it = rules.rbegin(); it != rules.rend(); ++it) {
        if (it->h == h) {
          word = it->word;
          break;
        }
      }
      if (word < 0) throw Error("no lexical rule for sampled state");
    }
    out.tree.nodes[id].word = word;
    out.tree.nodes[id].end = begin + 1;
    return id;
  }

  const auto& rules = grammar.binary_rules(a);
  double u = rng.uniform();
  double cum = 0.0;
  const BinaryRule* pick = nullptr;
  for (const BinaryRule& r : rules) {
    if (r.h1 != h) continue;
    cum += r.prob;
    if (u < cum) {
      pick = &r;
      break;
    }
  }
  if (!pick) {
    for (auto it = rules.rbegin(); it != rules.rend(); ++it) {
      if (it->h1 == h) {
        pick = &*it;
        break;
      }
    }
    if (!pick) throw Error("no binary rule for sampled state");
  }
  int left = sample_node(grammar, rng, pick->b, pick->h2, depth + 1, max_depth,
                         out, id, begin);
  if (left < 0) return -1;
  int right = sample_node(grammar, rng, pick->c, pick->h3, depth + 1, max_depth,
                          out, id, out.tree.nodes[left].end);
  if (right < 0) return -1;
  out.tree.nodes[id].left = left;
  out.tree.nodes[id].right = right;
  out.tree.nodes[id].end = out.tree.nodes[right].end;
  return id;
}

}  // namespace

AnnotatedTree sample_tree(const LatentGrammar& grammar, RandomSource& rng,
                          int max_depth) {
  const auto& roots = grammar.root_entries();
  if (roots.empty()) throw Error("grammar has no root distribution");
  const int max_attempts = 10000;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    double u = rng.uniform();
    double cum = 0.0;
    int a = std::get<0>(roots.back());
    int h = std::get<1>(roots.back());
    for (const auto& [ra, rh, p] : roots) {
      cum += p;
      if (u < cum) {
        a = ra;
        h = rh;
        break;
      }
    }
    AnnotatedTree out;
    if (sample_node(grammar, rng, a, h, 0, max_depth, out, -1, 0) >= 0) {
      return out;
    }
  }
  throw Error("tree sampling exceeded the depth cap repeatedly");
}

std::vector<AnnotatedTree> sample_treebank(const LatentGrammar& grammar,
                                           int num_trees, uint64_t seed,
                                           int max_depth) {
  RandomSource rng(derive_seed(seed, "synth-treebank"));
  std::vector<AnnotatedTree> trees;
  trees.reserve(num_trees);
  for (int i = 0; i < num_trees; ++i) {
    trees.push_back(sample_tree(grammar, rng, max_depth));
  }
  return trees;
}

}  // namespace lpcfg
