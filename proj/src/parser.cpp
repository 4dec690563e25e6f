#include "lpcfg/parser.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "lpcfg/errors.hpp"

namespace lpcfg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// One chart cell: per-symbol state vectors sharing a log scale factor.
// true_value = vals[a][h] * exp(scale).
struct Cell {
  std::map<int, std::vector<double>> vals;
  double scale = 0.0;
  bool empty() const { return vals.empty(); }
};

struct Sentence {
  std::vector<int> tags;
  std::vector<int> words;           // -1 for unknown
  std::vector<std::string> sigs;    // signatures for unknown words
};

Sentence resolve(const LatentGrammar& grammar, const TaggedSentence& sentence) {
  const SymbolTable& sym = grammar.symbols();
  Sentence out;
  for (const TaggedToken& tok : sentence) {
    int tag = sym.symbol_id(tok.tag);
    if (tag < 0 || !sym.is_preterminal(tag)) {
      throw UnparseableError("unknown tag '" + tok.tag + "'");
    }
    out.tags.push_back(tag);
    out.words.push_back(sym.word_id(tok.word));
    out.sigs.push_back(word_signature(tok.word));
  }
  return out;
}

// Lexical scores for position i under its tag: vector over latent states.
// Unseen words back off to the signature distribution.
std::vector<double> lexical_scores(const LatentGrammar& grammar,
                                   const Sentence& s, int i) {
  int a = s.tags[i];
  std::vector<double> vec(grammar.states(a), 0.0);
  bool any = false;
  if (s.words[i] >= 0) {
    for (const auto& [sym_a, h, p] : grammar.word_entries(s.words[i])) {
      if (sym_a == a) {
        vec[h] = p;
        any = true;
      }
    }
  } else {
    for (const auto& [sym_a, h, p] : grammar.signature_entries(s.sigs[i])) {
      if (sym_a == a) {
        vec[h] = p;
        any = true;
      }
    }
    if (!any) {
      // unseen shape: fall back to the coarse rare-word class
      for (const auto& [sym_a, h, p] : grammar.signature_entries("UNK")) {
        if (sym_a == a) {
          vec[h] = p;
          any = true;
        }
      }
    }
  }
  if (!any) vec.clear();
  return vec;
}

int span_index(int i, int j, int n) { return i * (n + 1) + j; }

// Rescales `cell` so its scale is at least `scale`, then returns the factor
// to apply to values contributed at `scale`.
double align_scale(Cell& cell, double scale) {
  if (cell.empty()) {
    cell.scale = scale;
    return 1.0;
  }
  if (scale > cell.scale) {
    double shrink = std::exp(cell.scale - scale);
    for (auto& [a, vec] : cell.vals) {
      for (double& v : vec) v *= shrink;
    }
    cell.scale = scale;
    return 1.0;
  }
  return std::exp(scale - cell.scale);
}

void normalize_cell(Cell& cell) {
  double max_val = 0.0;
  for (auto& [a, vec] : cell.vals) {
    for (double v : vec) max_val = std::max(max_val, v);
  }
  if (max_val <= 0.0) {
    cell.vals.clear();
    return;
  }
  for (auto it = cell.vals.begin(); it != cell.vals.end();) {
    double m = 0.0;
    for (double& v : it->second) {
      v /= max_val;
      m = std::max(m, v);
    }
    it = m > 0.0 ? std::next(it) : cell.vals.erase(it);
  }
  cell.scale += std::log(max_val);
}

std::vector<Cell> inside_pass(const LatentGrammar& grammar, const Sentence& s,
                              const PruneMask* mask) {
  const int n = static_cast<int>(s.tags.size());
  std::vector<Cell> inside(span_index(n, n, n) + 1);

  for (int i = 0; i < n; ++i) {
    Cell& cell = inside[span_index(i, i + 1, n)];
    if (mask && !mask->admits(s.tags[i], i, i + 1)) continue;
    std::vector<double> vec = lexical_scores(grammar, s, i);
    if (!vec.empty()) {
      cell.vals.emplace(s.tags[i], std::move(vec));
      normalize_cell(cell);
    }
  }

  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      Cell& cell = inside[span_index(i, j, n)];
      double best_scale = kNegInf;
      for (int sp = i + 1; sp < j; ++sp) {
        const Cell& left = inside[span_index(i, sp, n)];
        const Cell& right = inside[span_index(sp, j, n)];
        if (left.empty() || right.empty()) continue;
        best_scale = std::max(best_scale, left.scale + right.scale);
      }
      if (best_scale == kNegInf) continue;
      for (int sp = i + 1; sp < j; ++sp) {
        const Cell& left = inside[span_index(i, sp, n)];
        const Cell& right = inside[span_index(sp, j, n)];
        if (left.empty() || right.empty()) continue;
        double factor = std::exp(left.scale + right.scale - best_scale);
        for (const auto& [b, lvec] : left.vals) {
          for (const auto& [c, rvec] : right.vals) {
            const LatentGrammar::RuleGroup* group = grammar.find_group(b, c);
            if (!group) continue;
            for (const auto& e : group->entries) {
              if (mask && !mask->admits(e.a, i, j)) continue;
              double w = e.prob * lvec[e.h2] * rvec[e.h3] * factor;
              if (w == 0.0) continue;
              auto it = cell.vals.find(e.a);
              if (it == cell.vals.end()) {
                it = cell.vals.emplace(e.a, std::vector<double>(grammar.states(e.a), 0.0)).first;
              }
              it->second[e.h1] += w;
            }
          }
        }
      }
      cell.scale = best_scale;
      normalize_cell(cell);
    }
  }
  return inside;
}

double root_log_z(const LatentGrammar& grammar, const std::vector<Cell>& inside,
                  int n) {
  const Cell& top = inside[span_index(0, n, n)];
  if (top.empty()) return kNegInf;
  double z = 0.0;
  for (const auto& [a, h, p] : grammar.root_entries()) {
    auto it = top.vals.find(a);
    if (it != top.vals.end() && h < static_cast<int>(it->second.size())) {
      z += p * it->second[h];
    }
  }
  if (!(z > 0.0) || !std::isfinite(z)) return kNegInf;
  return std::log(z) + top.scale;
}

}  // namespace

Chart inside_outside(const LatentGrammar& grammar, const TaggedSentence& sentence,
                     const PruneMask* mask) {
  if (sentence.empty()) throw UnparseableError("empty sentence");
  Sentence s = resolve(grammar, sentence);
  const int n = static_cast<int>(s.tags.size());

  std::vector<Cell> inside = inside_pass(grammar, s, mask);
  double log_z = root_log_z(grammar, inside, n);
  if (log_z == kNegInf) {
    throw UnparseableError(mask ? "no parse under prune mask" : "no parse");
  }

  // Outside pass: the root cell starts from the root distribution; parents
  // push probability down to their children, widest spans first.
  std::vector<Cell> outside(inside.size());
  {
    const Cell& top_in = inside[span_index(0, n, n)];
    Cell& top_out = outside[span_index(0, n, n)];
    for (const auto& [a, vec] : top_in.vals) {
      std::vector<double> pi(vec.size(), 0.0);
      bool any = false;
      for (int h = 0; h < static_cast<int>(vec.size()); ++h) {
        pi[h] = grammar.root_prob(a, h);
        any = any || pi[h] > 0.0;
      }
      if (any) top_out.vals.emplace(a, std::move(pi));
    }
    top_out.scale = 0.0;
  }

  for (int width = n; width >= 2; --width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      const Cell& parent_out = outside[span_index(i, j, n)];
      if (parent_out.empty()) continue;
      for (int sp = i + 1; sp < j; ++sp) {
        const Cell& left_in = inside[span_index(i, sp, n)];
        const Cell& right_in = inside[span_index(sp, j, n)];
        if (left_in.empty() || right_in.empty()) continue;
        Cell& left_out = outside[span_index(i, sp, n)];
        Cell& right_out = outside[span_index(sp, j, n)];
        for (const auto& [b, lvec] : left_in.vals) {
          for (const auto& [c, rvec] : right_in.vals) {
            const LatentGrammar::RuleGroup* group = grammar.find_group(b, c);
            if (!group) continue;
            for (const auto& e : group->entries) {
              auto pit = parent_out.vals.find(e.a);
              if (pit == parent_out.vals.end()) continue;
              double beta = pit->second[e.h1];
              if (beta == 0.0) continue;
              double to_left = e.prob * beta * rvec[e.h3];
              if (to_left != 0.0) {
                double f = align_scale(left_out, parent_out.scale + right_in.scale);
                auto it = left_out.vals.find(b);
                if (it == left_out.vals.end()) {
                  it = left_out.vals.emplace(b, std::vector<double>(lvec.size(), 0.0)).first;
                }
                it->second[e.h2] += to_left * f;
              }
              double to_right = e.prob * beta * lvec[e.h2];
              if (to_right != 0.0) {
                double f = align_scale(right_out, parent_out.scale + left_in.scale);
                auto it = right_out.vals.find(c);
                if (it == right_out.vals.end()) {
                  it = right_out.vals.emplace(c, std::vector<double>(rvec.size(), 0.0)).first;
                }
                it->second[e.h3] += to_right * f;
              }
            }
          }
        }
      }
    }
  }

  Chart chart;
  chart.length_ = n;
  chart.log_z_ = log_z;
  chart.sentence_ = sentence;
  chart.tags_ = s.tags;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j <= n; ++j) {
      const Cell& in = inside[span_index(i, j, n)];
      const Cell& out = outside[span_index(i, j, n)];
      if (in.empty() || out.empty()) continue;
      for (const auto& [a, ivec] : in.vals) {
        auto oit = out.vals.find(a);
        if (oit == out.vals.end()) continue;
        double dot = 0.0;
        for (size_t h = 0; h < ivec.size(); ++h) dot += ivec[h] * oit->second[h];
        if (dot <= 0.0) continue;
        double mu = dot * std::exp(in.scale + out.scale - log_z);
        chart.mu_.emplace(PruneMask::key(a, i, j), mu);
        chart.mu_entries_.emplace_back(i, j, a, mu);
      }
    }
  }
  std::sort(chart.mu_entries_.begin(), chart.mu_entries_.end());
  return chart;
}

std::optional<SkeletalTree> viterbi_tree(const LatentGrammar& grammar,
                                         const TaggedSentence& sentence,
                                         const PruneMask* mask) {
  if (sentence.empty()) return std::nullopt;
  Sentence s = resolve(grammar, sentence);
  const int n = static_cast<int>(s.tags.size());

  struct Back {
    int split = -1;
    int b = -1, h2 = -1, c = -1, h3 = -1;
  };
  // best log-probability per (span, symbol, state)
  std::vector<std::map<int, std::vector<double>>> best(span_index(n, n, n) + 1);
  std::vector<std::map<int, std::vector<Back>>> back(best.size());

  for (int i = 0; i < n; ++i) {
    if (mask && !mask->admits(s.tags[i], i, i + 1)) continue;
    std::vector<double> vec = lexical_scores(grammar, s, i);
    if (vec.empty()) continue;
    std::vector<double> logs(vec.size(), kNegInf);
    for (size_t h = 0; h < vec.size(); ++h) {
      if (vec[h] > 0.0) logs[h] = std::log(vec[h]);
    }
    best[span_index(i, i + 1, n)].emplace(s.tags[i], std::move(logs));
  }

  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      auto& cell = best[span_index(i, j, n)];
      auto& bcell = back[span_index(i, j, n)];
      for (int sp = i + 1; sp < j; ++sp) {
        const auto& left = best[span_index(i, sp, n)];
        const auto& right = best[span_index(sp, j, n)];
        for (const auto& [b, lvec] : left) {
          for (const auto& [c, rvec] : right) {
            const LatentGrammar::RuleGroup* group = grammar.find_group(b, c);
            if (!group) continue;
            for (const auto& e : group->entries) {
              if (mask && !mask->admits(e.a, i, j)) continue;
              if (lvec[e.h2] == kNegInf || rvec[e.h3] == kNegInf) continue;
              double score = std::log(e.prob) + lvec[e.h2] + rvec[e.h3];
              auto it = cell.find(e.a);
              if (it == cell.end()) {
                it = cell.emplace(e.a, std::vector<double>(grammar.states(e.a), kNegInf)).first;
                bcell.emplace(e.a, std::vector<Back>(grammar.states(e.a)));
              }
              if (score > it->second[e.h1]) {
                it->second[e.h1] = score;
                bcell[e.a][e.h1] = Back{sp, b, e.h2, c, e.h3};
              }
            }
          }
        }
      }
    }
  }

  const auto& top = best[span_index(0, n, n)];
  int root_a = -1, root_h = -1;
  double best_score = kNegInf;
  for (const auto& [a, h, p] : grammar.root_entries()) {
    auto it = top.find(a);
    if (it == top.end() || h >= static_cast<int>(it->second.size())) continue;
    if (it->second[h] == kNegInf) continue;
    double score = std::log(p) + it->second[h];
    if (score > best_score) {
      best_score = score;
      root_a = a;
      root_h = h;
    }
  }
  if (root_a < 0) return std::nullopt;

  SkeletalTree tree;
  // Recursive backpointer walk.
  auto build = [&](auto&& self, int a, int h, int i, int j, int parent) -> int {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(SkeletalTree::Node{});
    tree.nodes[id].symbol = a;
    tree.nodes[id].parent = parent;
    tree.nodes[id].begin = i;
    tree.nodes[id].end = j;
    if (j - i == 1) {
      tree.nodes[id].word = s.words[i] >= 0 ? s.words[i] : 0;
      return id;
    }
    const Back& bp = back[span_index(i, j, n)].at(a).at(h);
    int l = self(self, bp.b, bp.h2, i, bp.split, id);
    int r = self(self, bp.c, bp.h3, bp.split, j, id);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  };
  build(build, root_a, root_h, 0, n, -1);
  return tree;
}

PruneMask prune_mask(const LatentGrammar& base, const TaggedSentence& sentence,
                     double threshold) {
  Chart chart = inside_outside(base, sentence, nullptr);
  PruneMask mask;
  mask.length = chart.length();
  for (const auto& [i, j, a, mu] : chart.marginal_entries()) {
    if (mu >= threshold) mask.admit(a, i, j);
  }
  // The thresholded mask could in principle starve the chart; the Viterbi
  // tree is derivable by construction, so admitting its spans keeps at
  // least one complete parse alive.
  std::optional<SkeletalTree> viterbi = viterbi_tree(base, sentence, nullptr);
  if (viterbi) {
    for (const auto& node : viterbi->nodes) {
      mask.admit(node.symbol, node.begin, node.end);
    }
  }
  return mask;
}

MbrResult mbr_decode(const Chart& chart, const LatentGrammar& grammar) {
  const int n = chart.length();
  const std::vector<int> interminals = grammar.symbols().interminal_ids();

  std::vector<double> total(span_index(n, n, n) + 1, 0.0);
  std::vector<int> best_label(total.size(), -1);
  std::vector<int> best_split(total.size(), -1);

  for (int i = 0; i < n; ++i) {
    total[span_index(i, i + 1, n)] = chart.marginal(chart.tag_symbol(i), i, i + 1);
  }
  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      int idx = span_index(i, j, n);
      double label_score = 0.0;
      int label = interminals.empty() ? -1 : interminals[0];
      for (int a : interminals) {
        double mu = chart.marginal(a, i, j);
        if (mu > label_score) {
          label_score = mu;
          label = a;
        }
      }
      double split_score = kNegInf;
      int split = -1;
      for (int sp = i + 1; sp < j; ++sp) {
        double score = total[span_index(i, sp, n)] + total[span_index(sp, j, n)];
        if (score > split_score) {
          split_score = score;
          split = sp;
        }
      }
      total[idx] = label_score + split_score;
      best_label[idx] = label;
      best_split[idx] = split;
    }
  }

  SkeletalTree tree;
  auto build = [&](auto&& self, int i, int j, int parent) -> int {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(SkeletalTree::Node{});
    tree.nodes[id].parent = parent;
    tree.nodes[id].begin = i;
    tree.nodes[id].end = j;
    if (j - i == 1) {
      tree.nodes[id].symbol = chart.tag_symbol(i);
      int w = grammar.symbols().word_id(chart.sentence()[i].word);
      tree.nodes[id].word = w >= 0 ? w : 0;
      return id;
    }
    int idx = span_index(i, j, n);
    tree.nodes[id].symbol = best_label[idx];
    int l = self(self, i, best_split[idx], id);
    int r = self(self, best_split[idx], j, id);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  };
  build(build, 0, n, -1);
  return MbrResult{std::move(tree), total[span_index(0, n, n)]};
}

ParseResult parse(const LatentGrammar& grammar, const LatentGrammar& base,
                  const TaggedSentence& sentence, const ParseOptions& options) {
  ParseResult result;
  std::optional<Chart> chart;
  std::optional<PruneMask> mask;
  if (options.prune) {
    try {
      mask = prune_mask(base, sentence, options.threshold);
    } catch (const UnparseableError&) {
      // Base grammar cannot parse; go straight to the unpruned chart.
    }
  }
  if (mask) {
    try {
      chart = inside_outside(grammar, sentence, &*mask);
    } catch (const UnparseableError&) {
      result.retried_unpruned = true;
    }
  }
  if (!chart) {
    try {
      chart = inside_outside(grammar, sentence, nullptr);
    } catch (const UnparseableError&) {
      // Fall back to a flat tree, flagged as a failure.
      result.failed = true;
      result.tree.label = "X";
      for (const TaggedToken& tok : sentence) {
        RawTree leaf;
        leaf.label = tok.tag;
        leaf.word = tok.word;
        result.tree.children.push_back(std::move(leaf));
      }
      return result;
    }
  }
  MbrResult mbr = mbr_decode(*chart, grammar);
  std::vector<std::string> words;
  for (const TaggedToken& tok : sentence) words.push_back(tok.word);
  result.tree = debinarize(mbr.tree, grammar.symbols(), &words);
  result.mbr_objective = mbr.objective;
  result.chart = std::move(chart);
  return result;
}

}  // namespace lpcfg
