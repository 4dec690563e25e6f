#include <doctest.h>

#include <sstream>

#include "lpcfg/errors.hpp"
#include "lpcfg/estimation.hpp"
#include "lpcfg/parser.hpp"
#include "lpcfg/synth.hpp"

using namespace lpcfg;

namespace {

std::vector<SkeletalTree> binarize_all(const std::vector<RawTree>& raw,
                                       SymbolTable& symbols) {
  std::vector<SkeletalTree> out;
  for (const RawTree& t : raw) out.push_back(binarize(t, symbols));
  return out;
}

std::string serialize(const LatentGrammar& g) {
  std::ostringstream os;
  g.write(os);
  return os.str();
}

}  // namespace

TEST_CASE("build_omega places one-hot outer products") {
  // one instance: phi one-hot at global id 3, psi one-hot at global id 5
  std::vector<InstanceRecord> instances = {{0, 0, 0, true}};
  std::vector<SparseFeatureVector> inside(1), outside(1);
  inside[0].add(3, 1.0);
  inside[0].finalize();
  outside[0].add(5, 1.0);
  outside[0].finalize();
  CovarianceAccumulator acc = build_omega(instances, inside, outside, 1);
  CHECK(acc.entry(0, 3, 5) == doctest::Approx(1.0));
  CHECK(acc.entry(0, 3, 4) == 0.0);
  CHECK(acc.blocks.at(0).count == 1);

  // two identical instances normalize back to the same matrix
  instances.push_back({0, 1, 0, false});
  inside.push_back(inside[0]);
  outside.push_back(outside[0]);
  CovarianceAccumulator acc2 = build_omega(instances, inside, outside, 1);
  CHECK(acc2.entry(0, 3, 5) == doctest::Approx(1.0));

  // disjoint one-hots give two entries of 1/2
  inside[1] = SparseFeatureVector{};
  inside[1].add(7, 1.0);
  inside[1].finalize();
  outside[1] = SparseFeatureVector{};
  outside[1].add(9, 1.0);
  outside[1].finalize();
  CovarianceAccumulator acc3 = build_omega(instances, inside, outside, 1);
  CHECK(acc3.entry(0, 3, 5) == doctest::Approx(0.5));
  CHECK(acc3.entry(0, 7, 9) == doctest::Approx(0.5));
  CHECK(acc3.entry(0, 3, 9) == 0.0);
}

TEST_CASE("train_base_pcfg on a single tree gives forced counts") {
  SymbolTable symbols;
  auto bank = binarize_all(parse_bracketed("(S (A a) (A b))"), symbols);
  LatentGrammar g = train_base_pcfg(bank, symbols);
  int s = symbols.symbol_id("S");
  int a = symbols.symbol_id("A");
  CHECK(g.root_prob(s, 0) == 1.0);
  CHECK(g.binary_prob(s, 0, a, 0, a, 0) == 1.0);
  CHECK(g.lexical_prob(a, 0, symbols.word_id("a")) == 0.5);
  CHECK(g.lexical_prob(a, 0, symbols.word_id("b")) == 0.5);
  CHECK(validate(g).empty());
}

TEST_CASE("train_base_pcfg computes 2:1 relative frequencies") {
  SymbolTable symbols;
  auto bank = binarize_all(
      parse_bracketed("(S (A a) (B b)) (S (A a) (B b)) (S (B b) (A a))"),
      symbols);
  LatentGrammar g = train_base_pcfg(bank, symbols);
  int s = symbols.symbol_id("S");
  int a = symbols.symbol_id("A");
  int b = symbols.symbol_id("B");
  CHECK(g.binary_prob(s, 0, a, 0, b, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(g.binary_prob(s, 0, b, 0, a, 0) == doctest::Approx(1.0 / 3.0));
  // exact rational counting: the doubles are literally 2/3 and 1/3
  CHECK(g.binary_prob(s, 0, a, 0, b, 0) == 2.0 / 3.0);
  CHECK(g.binary_prob(s, 0, b, 0, a, 0) == 1.0 / 3.0);
}

TEST_CASE("train_clustering with m=1 equals the base PCFG") {
  SynthSpec spec;
  spec.seed = 3;
  spec.m = 2;
  spec.vocab = 8;
  LatentGrammar truth = sample_grammar(spec);
  auto annotated = sample_treebank(truth, 60, 11);
  std::vector<SkeletalTree> bank;
  for (const auto& at : annotated) bank.push_back(at.tree);
  SymbolTable symbols = truth.symbols();

  TrainConfig config;
  config.m = 1;
  config.k = 4;
  config.seed = 5;
  TrainResult result = train_clustering(bank, symbols, config);
  LatentGrammar base = train_base_pcfg(bank, symbols);
  CHECK(serialize(result.grammar) == serialize(base));

  // independent of k, seed, and noise settings when m = 1
  TrainConfig other = config;
  other.k = 9;
  other.seed = 31337;
  other.noise = NoiseSpec{NoiseScheme::kDropout, 0.5, 99};
  CHECK(serialize(train_clustering(bank, symbols, other).grammar) ==
        serialize(base));
}

TEST_CASE("m=1 recovery equals raw relative frequencies of the sample") {
  // G0 truth with one latent state; the estimate must reproduce the sample's
  // relative frequencies exactly.
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
  LatentGrammar truth = builder.freeze();

  auto annotated = sample_treebank(truth, 200, 77);
  std::vector<SkeletalTree> bank;
  int64_t count_a = 0, count_total = 0;
  for (const auto& at : annotated) {
    bank.push_back(at.tree);
    for (const auto& node : at.tree.nodes) {
      if (node.is_preterminal()) {
        ++count_total;
        if (node.word == wa) ++count_a;
      }
    }
  }
  TrainConfig config;
  config.m = 1;
  TrainResult result = train_clustering(bank, symbols, config);
  CHECK(result.grammar.lexical_prob(a, 0, wa) ==
        static_cast<double>(count_a) / static_cast<double>(count_total));
  CHECK(result.grammar.binary_prob(s, 0, a, 0, a, 0) == 1.0);
}

TEST_CASE("estimated conditional distributions sum to one within 1e-12") {
  SynthSpec spec;
  spec.seed = 21;
  spec.m = 2;
  spec.interminals = 2;
  spec.preterminals = 2;
  spec.vocab = 10;
  LatentGrammar truth = sample_grammar(spec);
  auto annotated = sample_treebank(truth, 150, 5);
  std::vector<SkeletalTree> bank;
  for (const auto& at : annotated) bank.push_back(at.tree);
  SymbolTable symbols = truth.symbols();

  TrainConfig config;
  config.m = 2;
  config.k = 4;
  config.restarts = 4;
  TrainResult result = train_clustering(bank, symbols, config);
  const LatentGrammar& g = result.grammar;
  for (int sym = 0; sym < symbols.num_symbols(); ++sym) {
    std::vector<double> mass(g.states(sym), 0.0);
    for (const BinaryRule& r : g.binary_rules(sym)) mass[r.h1] += r.prob;
    for (const LexicalRule& r : g.lexical_rules(sym)) mass[r.h] += r.prob;
    for (int h = 0; h < g.states(sym); ++h) {
      if (mass[h] > 0.0) CHECK(mass[h] == doctest::Approx(1.0).epsilon(1e-12));
    }
  }
  double root_mass = 0.0;
  for (const auto& [sym, h, p] : g.root_entries()) root_mass += p;
  CHECK(root_mass == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(validate(g).empty());
}

TEST_CASE("annotation consistency: recounting the annotated treebank") {
  SynthSpec spec;
  spec.seed = 8;
  spec.m = 2;
  spec.vocab = 6;
  LatentGrammar truth = sample_grammar(spec);
  auto sampled = sample_treebank(truth, 80, 17);
  std::vector<SkeletalTree> bank;
  for (const auto& at : sampled) bank.push_back(at.tree);
  SymbolTable symbols = truth.symbols();

  TrainConfig config;
  config.m = 2;
  config.k = 3;
  TrainResult result = train_clustering(bank, symbols, config);
  // every probability equals the relative frequency recounted from the
  // stored annotations
  LatentGrammar recounted = estimate_from_annotated(
      result.annotated, symbols, config.signature_backoff,
      config.rare_word_threshold);
  CHECK(serialize(result.grammar) == serialize(recounted));
}

TEST_CASE("latent two-state grammar beats m=1 on held-out likelihood") {
  LatentGrammar truth = planted_two_state_grammar();
  auto train_anno = sample_treebank(truth, 400, 42);
  auto heldout_anno = sample_treebank(truth, 100, 43);
  SymbolTable symbols = truth.symbols();
  std::vector<SkeletalTree> bank;
  for (const auto& at : train_anno) bank.push_back(at.tree);

  TrainConfig config;
  config.k = 8;
  config.restarts = 10;
  config.seed = 1;
  config.m = 2;
  LatentGrammar two = train_clustering(bank, symbols, config).grammar;
  config.m = 1;
  LatentGrammar one = train_clustering(bank, symbols, config).grammar;

  auto loglik = [&](const LatentGrammar& g) {
    double total = 0.0;
    for (const auto& at : heldout_anno) {
      TaggedSentence s;
      for (const auto& node : at.tree.nodes) {
        if (node.is_preterminal()) {
          s.push_back(TaggedToken{symbols.word_name(node.word),
                                  symbols.symbol_name(node.symbol)});
        }
      }
      total += inside_outside(g, s).log_z();
    }
    return total;
  };
  CHECK(loglik(two) > loglik(one));
}

TEST_CASE("empty treebank is an error") {
  SymbolTable symbols;
  TrainConfig config;
  CHECK_THROWS_AS(train_clustering({}, symbols, config), Error);
  CHECK_THROWS_AS(train_base_pcfg({}, symbols), Error);
}

TEST_CASE("signature backoff parses unseen words at test time") {
  SymbolTable symbols;
  auto bank = binarize_all(
      parse_bracketed("(S (A cat) (B runs)) (S (A dog) (B runs)) "
                      "(S (A cat) (B sleeps)) (S (A mouse) (B walks))"),
      symbols);
  LatentGrammar g = train_base_pcfg(bank, symbols, true, 5);
  CHECK_FALSE(g.signature_rules(symbols.symbol_id("A")).empty());
  TaggedSentence s = {{"zebra", "A"}, {"runs", "B"}};
  Chart chart = inside_outside(g, s);  // must not throw
  CHECK(chart.log_z() < 0.0);

  LatentGrammar no_backoff = train_base_pcfg(bank, symbols, false, 5);
  CHECK_THROWS_AS(inside_outside(no_backoff, s), UnparseableError);
}
