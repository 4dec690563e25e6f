#include <doctest.h>

#include <cmath>
#include <functional>
#include <sstream>

#include "lpcfg/errors.hpp"
#include "lpcfg/grammar.hpp"
#include "lpcfg/rng.hpp"
#include "lpcfg/synth.hpp"
#include "lpcfg/treebank.hpp"

using namespace lpcfg;

namespace {

// S -> A A (prob 1); A -> "a" 0.4 | "b" 0.6; single latent state.
LatentGrammar make_g0() {
  SymbolTable symbols;
  int s = symbols.intern_symbol("S", true);
  int a = symbols.intern_symbol("A", false);
  int wa = symbols.intern_word("a");
  int wb = symbols.intern_word("b");
  GrammarBuilder builder(symbols);
  builder.add_root(s, 0, 1.0);
  builder.add_binary(s, 0, a, 0, a, 0, 1.0);
  builder.add_lexical(a, 0, wa, 0.4);
  builder.add_lexical(a, 0, wb, 0.6);
  return builder.freeze();
}

LatentGrammar one_rule_grammar(double lex_prob) {
  SymbolTable symbols;
  int s = symbols.intern_symbol("S", false);
  int w = symbols.intern_word("a");
  GrammarBuilder builder(symbols);
  builder.add_root(s, 0, 1.0);
  builder.add_lexical(s, 0, w, lex_prob);
  return builder.freeze();
}

}  // namespace

TEST_CASE("validate accepts a normalized one-rule grammar") {
  CHECK(validate(one_rule_grammar(1.0)).empty());
}

TEST_CASE("validate reports the deficient block with its mass") {
  auto violations = validate(one_rule_grammar(0.7));
  REQUIRE(violations.size() == 1);
  CHECK(violations[0].find("(S,0)") != std::string::npos);
  CHECK(violations[0].find("0.7") != std::string::npos);
}

TEST_CASE("validate accepts sampled grammars") {
  for (uint64_t seed : {1ull, 7ull, 42ull}) {
    SynthSpec spec;
    spec.seed = seed;
    spec.interminals = 2;
    spec.preterminals = 2;
    spec.m = 3;
    spec.vocab = 6;
    CHECK(validate(sample_grammar(spec)).empty());
  }
}

TEST_CASE("validate flags out-of-range probabilities and bad root mass") {
  SymbolTable symbols;
  int s = symbols.intern_symbol("S", false);
  int w = symbols.intern_word("a");
  GrammarBuilder builder(symbols);
  builder.add_root(s, 0, 0.5);
  builder.add_lexical(s, 0, w, 1.5);
  auto violations = validate(builder.freeze());
  CHECK(violations.size() >= 2);
}

TEST_CASE("tree_log_prob on the one-rule grammar is zero") {
  LatentGrammar g = one_rule_grammar(1.0);
  SymbolTable symbols = g.symbols();
  AnnotatedTree t;
  t.tree.nodes.push_back(
      SkeletalTree::Node{symbols.symbol_id("S"), symbols.word_id("a"), -1, -1, -1, 0, 1});
  t.states = {0};
  CHECK(tree_log_prob(g, t) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tree_log_prob multiplies rule probabilities") {
  LatentGrammar g = make_g0();
  SymbolTable symbols = g.symbols();
  RawTree raw = parse_bracketed("(S (A a) (A b))")[0];
  SymbolTable table = symbols;
  SkeletalTree tree = binarize(raw, table);
  AnnotatedTree at{tree, {0, 0, 0}};
  CHECK(tree_log_prob(g, at) == doctest::Approx(std::log(0.24)).epsilon(1e-12));
}

TEST_CASE("tree_log_prob reports the first missing rule") {
  LatentGrammar g = make_g0();
  SymbolTable table = g.symbols();
  RawTree raw = parse_bracketed("(S (A a) (A c))")[0];  // "c" unseen
  SkeletalTree tree = binarize(raw, table);
  AnnotatedTree at{tree, {0, 0, 0}};
  CHECK_THROWS_AS(tree_log_prob(g, at), MissingRuleError);
  try {
    tree_log_prob(g, at);
  } catch (const MissingRuleError& e) {
    CHECK(std::string(e.what()).find("A[0] ->") != std::string::npos);
  }
}

TEST_CASE("grammar serialization round-trips bit-exactly") {
  SynthSpec spec;
  spec.seed = 99;
  spec.m = 2;
  spec.vocab = 5;
  LatentGrammar g = sample_grammar(spec);

  std::ostringstream first;
  g.write(first);
  std::istringstream in(first.str());
  LatentGrammar back = LatentGrammar::read(in);
  std::ostringstream second;
  back.write(second);
  CHECK(first.str() == second.str());
  CHECK(back.num_parameters() == g.num_parameters());
  CHECK(back.states(0) == g.states(0));
}

TEST_CASE("grammar read rejects malformed input") {
  std::istringstream bad_header("nonsense");
  CHECK_THROWS_AS(LatentGrammar::read(bad_header), Error);
  std::istringstream bad_line("lpcfg-grammar 1\nsymbol S I 1\nroot Q 0 1.0\n");
  CHECK_THROWS_AS(LatentGrammar::read(bad_line), Error);
}

TEST_CASE("tree probability matches the restricted inside recursion") {
  // exp(tree_log_prob) summed over all annotations of a fixed skeleton
  // equals the skeleton's marginal probability.
  SynthSpec spec;
  spec.seed = 5;
  spec.interminals = 1;
  spec.preterminals = 1;
  spec.m = 2;
  spec.vocab = 3;
  LatentGrammar g = sample_grammar(spec);
  SymbolTable table = g.symbols();
  RawTree raw = parse_bracketed("(X0 (T0 w0) (X0 (T0 w1) (T0 w2)))")[0];
  SkeletalTree tree = binarize(raw, table);

  double total = 0.0;
  int n = tree.size();
  std::vector<int> states(n, 0);
  // enumerate all latent assignments
  for (int code = 0; code < 1 << n; ++code) {
    for (int i = 0; i < n; ++i) states[i] = (code >> i) & 1;
    total += std::exp(tree_log_prob(g, AnnotatedTree{tree, states}));
  }

  // independent bottom-up state-sum on the same skeleton
  std::function<std::vector<double>(int)> inside = [&](int node) {
    const auto& nd = tree.nodes[node];
    std::vector<double> v(g.states(nd.symbol), 0.0);
    if (nd.is_preterminal()) {
      for (size_t h = 0; h < v.size(); ++h) {
        v[h] = g.lexical_prob(nd.symbol, static_cast<int>(h), nd.word);
      }
      return v;
    }
    auto vl = inside(nd.left);
    auto vr = inside(nd.right);
    for (size_t h1 = 0; h1 < v.size(); ++h1) {
      for (size_t h2 = 0; h2 < vl.size(); ++h2) {
        for (size_t h3 = 0; h3 < vr.size(); ++h3) {
          v[h1] += g.binary_prob(nd.symbol, h1, tree.nodes[nd.left].symbol, h2,
                                 tree.nodes[nd.right].symbol, h3) *
                   vl[h2] * vr[h3];
        }
      }
    }
    return v;
  };
  std::vector<double> root = inside(tree.root());
  double marginal = 0.0;
  for (size_t h = 0; h < root.size(); ++h) {
    marginal += g.root_prob(tree.nodes[tree.root()].symbol, static_cast<int>(h)) * root[h];
  }
  CHECK(total == doctest::Approx(marginal).epsilon(1e-10));
}

TEST_CASE("word signatures reflect shape") {
  CHECK(word_signature("dog") == "UNK-og");
  CHECK(word_signature("Dog") == "UNK-C-og");
  CHECK(word_signature("x42") == "UNK-D");
  CHECK(word_signature("B2b") == "UNK-C-D-b");
}
