#include "lpcfg/grammar.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "lpcfg/errors.hpp"

namespace lpcfg {

namespace {

// Packs small nonnegative ids into one lookup key. States and symbol ids are
// bounded well below 2^16 / 2^20 at any scale this toolkit targets.
int64_t key2(int a, int h) { return (static_cast<int64_t>(a) << 20) | h; }

int64_t key_binary(int a, int h1, int b, int h2, int c, int h3) {
  int64_t k = a;
  k = (k << 10) | h1;
  k = (k << 14) | b;
  k = (k << 10) | h2;
  k = (k << 14) | c;
  k = (k << 10) | h3;
  return k;
}

int64_t key_lex(int a, int h, int word) {
  int64_t k = a;
  k = (k << 10) | h;
  k = (k << 27) | word;
  return k;
}

std::string format_prob(double p) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", p);
  return buf;
}

}  // namespace

int LatentGrammar::max_states() const {
  int m = 1;
  for (int v : m_per_symbol_) m = std::max(m, v);
  return m;
}

double LatentGrammar::root_prob(int a, int h) const {
  auto it = root_lookup_.find(key2(a, h));
  return it == root_lookup_.end() ? 0.0 : it->second;
}

double LatentGrammar::binary_prob(int a, int h1, int b, int h2, int c,
                                  int h3) const {
  auto it = binary_lookup_.find(key_binary(a, h1, b, h2, c, h3));
  return it == binary_lookup_.end() ? 0.0 : it->second;
}

double LatentGrammar::lexical_prob(int a, int h, int word) const {
  auto it = lex_lookup_.find(key_lex(a, h, word));
  return it == lex_lookup_.end() ? 0.0 : it->second;
}

double LatentGrammar::signature_prob(int a, int h, const std::string& sig) const {
  auto it = sig_lookup_.find(std::to_string(a) + "#" + std::to_string(h) + "#" + sig);
  return it == sig_lookup_.end() ? 0.0 : it->second;
}

const LatentGrammar::RuleGroup* LatentGrammar::find_group(int b, int c) const {
  auto it = group_lookup_.find((static_cast<int64_t>(b) << 24) | c);
  return it == group_lookup_.end() ? nullptr : &groups_[it->second];
}

const std::vector<std::tuple<int, int, double>>& LatentGrammar::word_entries(
    int word) const {
  static const std::vector<std::tuple<int, int, double>> kEmpty;
  if (word < 0 || word >= static_cast<int>(by_word_.size())) return kEmpty;
  return by_word_[word];
}

const std::vector<std::tuple<int, int, double>>& LatentGrammar::signature_entries(
    const std::string& sig) const {
  static const std::vector<std::tuple<int, int, double>> kEmpty;
  auto it = by_signature_.find(sig);
  return it == by_signature_.end() ? kEmpty : it->second;
}

size_t LatentGrammar::num_parameters() const {
  size_t n = roots_.size();
  for (const auto& v : binary_) n += v.size();
  for (const auto& v : lex_) n += v.size();
  return n;
}

GrammarBuilder::GrammarBuilder(SymbolTable symbols) {
  g_.symbols_ = std::move(symbols);
  int n = g_.symbols_.num_symbols();
  g_.m_per_symbol_.assign(n, 1);
  g_.binary_.resize(n);
  g_.lex_.resize(n);
  g_.sig_.resize(n);
}

void GrammarBuilder::set_states(int symbol, int m) {
  if (m < 1) throw Error("latent-state count must be >= 1");
  g_.m_per_symbol_.at(symbol) = m;
}

void GrammarBuilder::add_root(int a, int h, double p) {
  g_.roots_.emplace_back(a, h, p);
}

void GrammarBuilder::add_binary(int a, int h1, int b, int h2, int c, int h3,
                                double p) {
  g_.binary_.at(a).push_back(BinaryRule{h1, b, h2, c, h3, p});
}

void GrammarBuilder::add_lexical(int a, int h, int word, double p) {
  g_.lex_.at(a).push_back(LexicalRule{h, word, p});
}

void GrammarBuilder::add_signature(int a, int h, const std::string& sig,
                                   double p) {
  g_.sig_.at(a).push_back(SignatureRule{h, sig, p});
}

LatentGrammar GrammarBuilder::freeze() {
  LatentGrammar& g = g_;
  // Canonical order makes serialization and iteration deterministic.
  std::sort(g.roots_.begin(), g.roots_.end());
  for (auto& v : g.binary_) {
    std::sort(v.begin(), v.end(), [](const BinaryRule& x, const BinaryRule& y) {
      return std::tie(x.h1, x.b, x.h2, x.c, x.h3) <
             std::tie(y.h1, y.b, y.h2, y.c, y.h3);
    });
  }
  for (auto& v : g.lex_) {
    std::sort(v.begin(), v.end(), [](const LexicalRule& x, const LexicalRule& y) {
      return std::tie(x.h, x.word) < std::tie(y.h, y.word);
    });
  }
  for (auto& v : g.sig_) {
    std::sort(v.begin(), v.end(),
              [](const SignatureRule& x, const SignatureRule& y) {
                return std::tie(x.h, x.signature) < std::tie(y.h, y.signature);
              });
  }

  for (const auto& [a, h, p] : g.roots_) g.root_lookup_[key2(a, h)] = p;

  for (int a = 0; a < g.symbols_.num_symbols(); ++a) {
    for (const BinaryRule& r : g.binary_[a]) {
      g.binary_lookup_[key_binary(a, r.h1, r.b, r.h2, r.c, r.h3)] = r.prob;
      int64_t gk = (static_cast<int64_t>(r.b) << 24) | r.c;
      auto it = g.group_lookup_.find(gk);
      if (it == g.group_lookup_.end()) {
        it = g.group_lookup_.emplace(gk, static_cast<int>(g.groups_.size())).first;
        g.groups_.push_back(LatentGrammar::RuleGroup{r.b, r.c, {}});
      }
      g.groups_[it->second].entries.push_back(
          LatentGrammar::RuleGroup::Entry{a, r.h1, r.h2, r.h3, r.prob});
    }
  }

  g.by_word_.resize(g.symbols_.num_words());
  for (int a = 0; a < g.symbols_.num_symbols(); ++a) {
    for (const LexicalRule& r : g.lex_[a]) {
      g.lex_lookup_[key_lex(a, r.h, r.word)] = r.prob;
      g.by_word_[r.word].emplace_back(a, r.h, r.prob);
    }
    for (const SignatureRule& r : g.sig_[a]) {
      g.sig_lookup_[std::to_string(a) + "#" + std::to_string(r.h) + "#" +
                    r.signature] = r.prob;
      g.by_signature_[r.signature].emplace_back(a, r.h, r.prob);
    }
  }
  return std::move(g_);
}

std::vector<std::string> validate(const LatentGrammar& g) {
  std::vector<std::string> violations;
  const double tol = 1e-9;
  const SymbolTable& sym = g.symbols();

  auto check_range = [&](double p, const std::string& where) {
    if (!(p >= 0.0 && p <= 1.0 + tol) || !std::isfinite(p)) {
      violations.push_back("probability out of [0,1] in " + where + ": " +
                           std::to_string(p));
    }
  };

  double root_mass = 0.0;
  for (const auto& [a, h, p] : g.root_entries()) {
    check_range(p, "root (" + sym.symbol_name(a) + "," + std::to_string(h) + ")");
    root_mass += p;
  }
  if (std::abs(root_mass - 1.0) > tol) {
    violations.push_back("root distribution sums to " +
                         std::to_string(root_mass));
  }

  for (int a = 0; a < sym.num_symbols(); ++a) {
    int m = g.states(a);
    std::vector<double> mass(m, 0.0);
    if (sym.is_interminal(a)) {
      for (const BinaryRule& r : g.binary_rules(a)) {
        check_range(r.prob, "binary block (" + sym.symbol_name(a) + "," +
                                std::to_string(r.h1) + ")");
        if (r.h1 >= 0 && r.h1 < m) mass[r.h1] += r.prob;
      }
      if (!g.lexical_rules(a).empty()) {
        violations.push_back("interminal " + sym.symbol_name(a) +
                             " carries lexical rules");
      }
    } else {
      for (const LexicalRule& r : g.lexical_rules(a)) {
        check_range(r.prob, "lexical block (" + sym.symbol_name(a) + "," +
                                std::to_string(r.h) + ")");
        if (r.h >= 0 && r.h < m) mass[r.h] += r.prob;
      }
      if (!g.binary_rules(a).empty()) {
        violations.push_back("preterminal " + sym.symbol_name(a) +
                             " carries binary rules");
      }
    }
    for (int h = 0; h < m; ++h) {
      if (std::abs(mass[h] - 1.0) > tol) {
        violations.push_back("block (" + sym.symbol_name(a) + "," +
                             std::to_string(h) + ") sums to " +
                             std::to_string(mass[h]));
      }
    }
  }
  return violations;
}

double tree_log_prob(const LatentGrammar& g, const AnnotatedTree& at) {
  const SkeletalTree& t = at.tree;
  const SymbolTable& raw_sym = g.symbols();
  // Trees may reference ids interned after the grammar froze; such rules are
  // necessarily missing, but the error message still needs a name.
  struct SafeNames {
    const SymbolTable& sym;
    std::string symbol(int id) const {
      return id >= 0 && id < sym.num_symbols() ? sym.symbol_name(id)
                                               : "#" + std::to_string(id);
    }
    std::string word(int id) const {
      return id >= 0 && id < sym.num_words() ? sym.word_name(id)
                                             : "#" + std::to_string(id);
    }
  } sym{raw_sym};
  auto state = [&](int n) { return at.states.at(n); };

  int root = t.root();
  double p = g.root_prob(t.nodes[root].symbol, state(root));
  if (p <= 0.0) {
    throw MissingRuleError("no root probability for (" +
                           sym.symbol(t.nodes[root].symbol) + "," +
                           std::to_string(state(root)) + ")");
  }
  double lp = std::log(p);
  for (int n = 0; n < t.size(); ++n) {
    const auto& node = t.nodes[n];
    if (node.is_preterminal()) {
      double q = g.lexical_prob(node.symbol, state(n), node.word);
      if (q <= 0.0) {
        throw MissingRuleError("missing rule " + sym.symbol(node.symbol) + "[" +
                               std::to_string(state(n)) + "] -> " +
                               sym.word(node.word));
      }
      lp += std::log(q);
    } else {
      const auto& l = t.nodes[node.left];
      const auto& r = t.nodes[node.right];
      double q = g.binary_prob(node.symbol, state(n), l.symbol, state(node.left),
                               r.symbol, state(node.right));
      if (q <= 0.0) {
        throw MissingRuleError(
            "missing rule " + sym.symbol(node.symbol) + "[" +
            std::to_string(state(n)) + "] -> " + sym.symbol(l.symbol) + "[" +
            std::to_string(state(node.left)) + "] " + sym.symbol(r.symbol) +
            "[" + std::to_string(state(node.right)) + "]");
      }
      lp += std::log(q);
    }
  }
  return lp;
}

std::string word_signature(const std::string& word) {
  bool has_digit = false;
  bool init_cap = !word.empty() && std::isupper(static_cast<unsigned char>(word[0]));
  for (char c : word) {
    if (std::isdigit(static_cast<unsigned char>(c))) has_digit = true;
  }
  std::string suffix;
  for (auto it = word.rbegin(); it != word.rend() && suffix.size() < 2; ++it) {
    if (std::isalpha(static_cast<unsigned char>(*it))) {
      suffix.insert(suffix.begin(),
                    static_cast<char>(std::tolower(static_cast<unsigned char>(*it))));
    } else {
      break;
    }
  }
  std::string sig = "UNK";
  if (init_cap) sig += "-C";
  if (has_digit) sig += "-D";
  if (!suffix.empty()) sig += "-" + suffix;
  return sig;
}

void LatentGrammar::write(std::ostream& os) const {
  os << "lpcfg-grammar 1\n";
  for (int a = 0; a < symbols_.num_symbols(); ++a) {
    os << "symbol " << symbols_.symbol_name(a) << ' '
       << (symbols_.is_interminal(a) ? 'I' : 'P') << ' ' << m_per_symbol_[a]
       << '\n';
  }
  for (int w = 0; w < symbols_.num_words(); ++w) {
    os << "word " << symbols_.word_name(w) << '\n';
  }
  for (const auto& [a, h, p] : roots_) {
    os << "root " << symbols_.symbol_name(a) << ' ' << h << ' '
       << format_prob(p) << '\n';
  }
  for (int a = 0; a < symbols_.num_symbols(); ++a) {
    for (const BinaryRule& r : binary_[a]) {
      os << "binary " << symbols_.symbol_name(a) << ' ' << r.h1 << ' '
         << symbols_.symbol_name(r.b) << ' ' << r.h2 << ' '
         << symbols_.symbol_name(r.c) << ' ' << r.h3 << ' '
         << format_prob(r.prob) << '\n';
    }
  }
  for (int a = 0; a < symbols_.num_symbols(); ++a) {
    for (const LexicalRule& r : lex_[a]) {
      os << "lex " << symbols_.symbol_name(a) << ' ' << r.h << ' '
         << symbols_.word_name(r.word) << ' ' << format_prob(r.prob) << '\n';
    }
  }
  for (int a = 0; a < symbols_.num_symbols(); ++a) {
    for (const SignatureRule& r : sig_[a]) {
      os << "sig " << symbols_.symbol_name(a) << ' ' << r.h << ' '
         << r.signature << ' ' << format_prob(r.prob) << '\n';
    }
  }
}

LatentGrammar LatentGrammar::read(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != "lpcfg-grammar 1") {
    throw Error("bad grammar header: '" + line + "'");
  }
  SymbolTable symbols;
  std::vector<std::pair<std::string, int>> states;
  std::vector<std::string> body;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string kind;
    ss >> kind;
    if (kind == "symbol") {
      std::string name, flag;
      int m;
      ss >> name >> flag >> m;
      if (ss.fail() || (flag != "I" && flag != "P")) {
        throw Error("bad symbol line: " + line);
      }
      symbols.intern_symbol(name, flag == "I");
      states.emplace_back(name, m);
    } else if (kind == "word") {
      std::string name;
      ss >> name;
      symbols.intern_word(name);
    } else {
      body.push_back(line);
    }
  }
  GrammarBuilder builder(symbols);
  const SymbolTable& sym = symbols;
  for (const auto& [name, m] : states) builder.set_states(sym.symbol_id(name), m);
  for (const std::string& rec : body) {
    std::istringstream ss(rec);
    std::string kind;
    ss >> kind;
    if (kind == "root") {
      std::string a;
      int h;
      double p;
      ss >> a >> h >> p;
      if (ss.fail() || sym.symbol_id(a) < 0) throw Error("bad root line: " + rec);
      builder.add_root(sym.symbol_id(a), h, p);
    } else if (kind == "binary") {
      std::string a, b, c;
      int h1, h2, h3;
      double p;
      ss >> a >> h1 >> b >> h2 >> c >> h3 >> p;
      if (ss.fail() || sym.symbol_id(a) < 0 || sym.symbol_id(b) < 0 ||
          sym.symbol_id(c) < 0) {
        throw Error("bad binary line: " + rec);
      }
      builder.add_binary(sym.symbol_id(a), h1, sym.symbol_id(b), h2,
                         sym.symbol_id(c), h3, p);
    } else if (kind == "lex") {
      std::string a, w;
      int h;
      double p;
      ss >> a >> h >> w >> p;
      if (ss.fail() || sym.symbol_id(a) < 0 || sym.word_id(w) < 0) {
        throw Error("bad lex line: " + rec);
      }
      builder.add_lexical(sym.symbol_id(a), h, sym.word_id(w), p);
    } else if (kind == "sig") {
      std::string a, s;
      int h;
      double p;
      ss >> a >> h >> s >> p;
      if (ss.fail() || sym.symbol_id(a) < 0) throw Error("bad sig line: " + rec);
      builder.add_signature(sym.symbol_id(a), h, s, p);
    } else {
      throw Error("unknown record kind: " + rec);
    }
  }
  return builder.freeze();
}

}  // namespace lpcfg
