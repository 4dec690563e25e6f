#ifndef LPCFG_GRAMMAR_HPP
#define LPCFG_GRAMMAR_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpcfg/symbols.hpp"
#include "lpcfg/tree.hpp"

namespace lpcfg {

// Binary rule a[h1] -> b[h2] c[h3] with conditional probability
// p(b[h2] c[h3] | a[h1]).
struct BinaryRule {
  int h1;
  int b;
  int h2;
  int c;
  int h3;
  double prob;
};

// Lexical rule a[h] -> word with conditional probability p(word | a[h]).
struct LexicalRule {
  int h;
  int word;
  double prob;
};

// Signature fallback for unseen words: p(rare with this signature | a[h]).
// Kept out of the lexical distributions proper so that per-(a,h) blocks
// still sum to one.
struct SignatureRule {
  int h;
  std::string signature;
  double prob;
};

// Full L-PCFG parameter set: root, binary, and lexical probabilities over
// (nonterminal, latent-state) pairs. Sparse: absent entries are probability
// zero. Immutable once built; safe for concurrent reads.
class LatentGrammar {
 public:
  const SymbolTable& symbols() const { return symbols_; }
  int states(int symbol) const { return m_per_symbol_.at(symbol); }
  const std::vector<int>& m_per_symbol() const { return m_per_symbol_; }
  int max_states() const;

  double root_prob(int a, int h) const;
  double binary_prob(int a, int h1, int b, int h2, int c, int h3) const;
  double lexical_prob(int a, int h, int word) const;
  double signature_prob(int a, int h, const std::string& sig) const;

  const std::vector<BinaryRule>& binary_rules(int a) const {
    return binary_[a];
  }
  const std::vector<LexicalRule>& lexical_rules(int a) const { return lex_[a]; }
  const std::vector<SignatureRule>& signature_rules(int a) const {
    return sig_[a];
  }
  // (a, h, p) triples with nonzero root probability.
  const std::vector<std::tuple<int, int, double>>& root_entries() const {
    return roots_;
  }

  // Rules grouped by child pair for the inside/outside recursions.
  struct RuleGroup {
    int b;
    int c;
    struct Entry {
      int a;
      int h1;
      int h2;
      int h3;
      double prob;
    };
    std::vector<Entry> entries;
  };
  const std::vector<RuleGroup>& rule_groups() const { return groups_; }
  // Null when no rule rewrites to the child pair (b, c).
  const RuleGroup* find_group(int b, int c) const;

  // Lexical entries for one word, grouped for chart leaf cells:
  // (a, h, p) triples.
  const std::vector<std::tuple<int, int, double>>& word_entries(int word) const;
  const std::vector<std::tuple<int, int, double>>& signature_entries(
      const std::string& sig) const;

  size_t num_parameters() const;

  void write(std::ostream& os) const;
  static LatentGrammar read(std::istream& is);

  friend class GrammarBuilder;

 private:
  SymbolTable symbols_;
  std::vector<int> m_per_symbol_;
  std::vector<std::tuple<int, int, double>> roots_;
  std::vector<std::vector<BinaryRule>> binary_;   // by parent symbol
  std::vector<std::vector<LexicalRule>> lex_;     // by parent symbol
  std::vector<std::vector<SignatureRule>> sig_;   // by parent symbol

  // Frozen lookup structures.
  std::unordered_map<int64_t, double> root_lookup_;
  std::unordered_map<int64_t, double> binary_lookup_;
  std::unordered_map<int64_t, double> lex_lookup_;
  std::unordered_map<std::string, double> sig_lookup_;
  std::vector<RuleGroup> groups_;
  std::unordered_map<int64_t, int> group_lookup_;
  std::vector<std::vector<std::tuple<int, int, double>>> by_word_;
  std::unordered_map<std::string, std::vector<std::tuple<int, int, double>>>
      by_signature_;
};

// Accumulates parameters and freezes them into a LatentGrammar.
// Construction is single-threaded.
class GrammarBuilder {
 public:
  explicit GrammarBuilder(SymbolTable symbols);

  void set_states(int symbol, int m);
  void add_root(int a, int h, double p);
  void add_binary(int a, int h1, int b, int h2, int c, int h3, double p);
  void add_lexical(int a, int h, int word, double p);
  void add_signature(int a, int h, const std::string& sig, double p);

  LatentGrammar freeze();

 private:
  LatentGrammar g_;
};

// Empty iff all probabilistic invariants hold; each violation names the
// offending (a,h) block and its mass. Violations are data, not failures.
std::vector<std::string> validate(const LatentGrammar& grammar);

// log pi(root) plus the sum of log rule probabilities down the tree.
// Throws MissingRuleError naming the first absent rule.
double tree_log_prob(const LatentGrammar& grammar, const AnnotatedTree& tree);

// Word shape class used for rare/unseen word backoff.
std::string word_signature(const std::string& word);

}  // namespace lpcfg

#endif  // LPCFG_GRAMMAR_HPP
