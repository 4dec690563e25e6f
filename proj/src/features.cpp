#include "lpcfg/features.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "lpcfg/errors.hpp"

namespace lpcfg {

void SparseFeatureVector::finalize() {
  std::sort(entries.begin(), entries.end());
  std::vector<std::pair<int, double>> merged;
  for (const auto& [id, v] : entries) {
    if (!merged.empty() && merged.back().first == id) {
      merged.back().second += v;
    } else {
      merged.emplace_back(id, v);
    }
  }
  std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });
  entries = std::move(merged);
}

void FeatureIndex::dump(std::ostream& os) const {
  char buf[64];
  for (int id = 0; id < size(); ++id) {
    double v = id < static_cast<int>(variances_.size()) ? variances_[id] : 0.0;
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    os << id << '\t' << names_[id] << '\t' << buf << '\n';
  }
}

FeatureIndex FeatureIndex::load(std::istream& is) {
  FeatureIndex index;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    size_t t1 = line.find('\t');
    size_t t2 = line.rfind('\t');
    if (t1 == std::string::npos || t2 == t1) {
      throw Error("bad feature index line: " + line);
    }
    int id = index.intern(line.substr(t1 + 1, t2 - t1 - 1));
    index.set_variance(id, std::stod(line.substr(t2 + 1)));
  }
  index.freeze();
  return index;
}

HeadTable HeadTable::defaults() {
  HeadTable t;
  t.set("S", {"VP", "S"});
  t.set("SBAR", {"S", "IN"});
  t.set("VP", {"VB", "V", "MD", "AUX"});
  t.set("NP", {"NN", "N", "PRP", "QP", "NX"});
  t.set("PP", {"IN", "TO", "P"});
  t.set("ADVP", {"RB", "ADV"});
  t.set("ADJP", {"JJ", "ADJ"});
  t.set("QP", {"CD"});
  return t;
}

HeadTable HeadTable::load(std::istream& is) {
  HeadTable t;
  std::string line;
  while (std::getline(is, line)) {
    std::istringstream ss(line);
    std::string parent;
    if (!(ss >> parent) || parent[0] == '#') continue;
    std::vector<std::string> prefixes;
    std::string p;
    while (ss >> p) prefixes.push_back(p);
    t.set(parent, std::move(prefixes));
  }
  return t;
}

std::string coarse_label(const std::string& label) {
  std::string s = label;
  if (!s.empty() && s[0] == '@') s.erase(0, 1);
  size_t plus = s.find('+');
  if (plus != std::string::npos) s.resize(plus);
  return s;
}

int HeadTable::head_child(const std::string& parent_label,
                          const std::string& left_label,
                          const std::string& right_label) const {
  std::string parent = coarse_label(parent_label);
  std::string children[2] = {coarse_label(left_label),
                             coarse_label(right_label)};
  auto it = rules_.find(parent);
  if (it != rules_.end()) {
    for (const std::string& prefix : it->second) {
      for (int i = 0; i < 2; ++i) {
        if (children[i].starts_with(prefix)) return i;
      }
    }
  }
  for (int i = 0; i < 2; ++i) {
    if (children[i] == parent) return i;
  }
  return 1;
}

int head_leaf(const SkeletalTree& tree, const SymbolTable& symbols,
              const HeadTable& heads, int node) {
  const auto* n = &tree.nodes[node];
  while (!n->is_preterminal()) {
    const auto& l = tree.nodes[n->left];
    const auto& r = tree.nodes[n->right];
    int side = heads.head_child(symbols.symbol_name(n->symbol),
                                symbols.symbol_name(l.symbol),
                                symbols.symbol_name(r.symbol));
    node = side == 0 ? n->left : n->right;
    n = &tree.nodes[node];
  }
  return node;
}

namespace {

const std::string& label_of(const SkeletalTree& t, const SymbolTable& sym,
                            int node) {
  return sym.symbol_name(t.nodes[node].symbol);
}

// One-level expansion: "(A (B w) C)" pieces. Preterminals expand to their
// word, internals to their child labels.
std::string expanded(const SkeletalTree& t, const SymbolTable& sym, int node) {
  const auto& n = t.nodes[node];
  std::string s = "(" + sym.symbol_name(n.symbol) + " ";
  if (n.is_preterminal()) {
    s += sym.word_name(n.word);
  } else {
    s += label_of(t, sym, n.left) + " " + label_of(t, sym, n.right);
  }
  return s + ")";
}

// Renders the `levels`-deep rule fragment above `foot`, foot marked with *.
// Requires that many ancestors to exist.
std::string fragment_above(const SkeletalTree& t, const SymbolTable& sym,
                           int foot, int levels) {
  std::string inner = label_of(t, sym, foot) + "*";
  int child = foot;
  for (int i = 0; i < levels; ++i) {
    int parent = t.nodes[child].parent;
    const auto& p = t.nodes[parent];
    std::string left =
        p.left == child ? inner : label_of(t, sym, p.left);
    std::string right =
        p.right == child ? inner : label_of(t, sym, p.right);
    inner = "(" + sym.symbol_name(p.symbol) + " " + left + " " + right + ")";
    child = parent;
  }
  return inner;
}

}  // namespace

SparseFeatureVector inside_features(const SkeletalTree& tree,
                                    const SymbolTable& symbols,
                                    const HeadTable& heads, int node,
                                    FeatureIndex& index,
                                    const FeatureConfig& config) {
  (void)config;
  SparseFeatureVector vec;
  const auto& n = tree.nodes[node];
  const std::string& a = symbols.symbol_name(n.symbol);
  if (n.is_preterminal()) {
    vec.add(index.intern("i:lex|" + a + "|" + symbols.word_name(n.word)), 1.0);
    vec.finalize();
    return vec;
  }
  const std::string& b = label_of(tree, symbols, n.left);
  const std::string& c = label_of(tree, symbols, n.right);
  vec.add(index.intern("i:ab|" + a + "|" + b), 1.0);
  vec.add(index.intern("i:ac|" + a + "|" + c), 1.0);
  vec.add(index.intern("i:rule|" + a + "|" + b + "|" + c), 1.0);
  vec.add(index.intern("i:rb|(" + a + " " + expanded(tree, symbols, n.left) +
                       " " + c + ")"),
          1.0);
  vec.add(index.intern("i:rc|(" + a + " " + b + " " +
                       expanded(tree, symbols, n.right) + ")"),
          1.0);
  int head = head_leaf(tree, symbols, heads, node);
  vec.add(index.intern("i:head|" + a + "|" +
                       symbols.symbol_name(tree.nodes[head].symbol)),
          1.0);
  vec.add(index.intern("i:width|" + a + "|" + std::to_string(n.end - n.begin)),
          1.0);
  vec.finalize();
  return vec;
}

SparseFeatureVector outside_features(const SkeletalTree& tree,
                                     const SymbolTable& symbols,
                                     const HeadTable& heads, int node,
                                     FeatureIndex& index,
                                     const FeatureConfig& config) {
  SparseFeatureVector vec;
  const auto& n = tree.nodes[node];
  const std::string& f = symbols.symbol_name(n.symbol);
  if (n.parent < 0) {
    // Empty outside tree.
    vec.add(index.intern("o:root|" + f), 1.0);
    vec.finalize();
    return vec;
  }
  int parent = n.parent;
  int grandparent = tree.nodes[parent].parent;
  int great = grandparent >= 0 ? tree.nodes[grandparent].parent : -1;

  vec.add(index.intern("o:r1|" + fragment_above(tree, symbols, node, 1)), 1.0);
  if (grandparent >= 0) {
    vec.add(index.intern("o:r2|" + fragment_above(tree, symbols, node, 2)), 1.0);
  }
  if (great >= 0) {
    vec.add(index.intern("o:r3|" + fragment_above(tree, symbols, node, 3)), 1.0);
  }
  const std::string& p = label_of(tree, symbols, parent);
  vec.add(index.intern("o:fp|" + f + "|" + p), 1.0);
  if (grandparent >= 0) {
    vec.add(index.intern("o:fpg|" + f + "|" + p + "|" +
                         label_of(tree, symbols, grandparent)),
            1.0);
  }

  // POS of the first head word up the path whose head differs from the
  // foot's own head; designated SAME value when every ancestor shares it.
  int foot_head = head_leaf(tree, symbols, heads, node);
  std::string path_value = "SAME";
  for (int anc = parent; anc >= 0; anc = tree.nodes[anc].parent) {
    int h = head_leaf(tree, symbols, heads, anc);
    if (h != foot_head) {
      path_value = symbols.symbol_name(tree.nodes[h].symbol);
      break;
    }
  }
  vec.add(index.intern("o:hp|" + f + "|" + path_value), 1.0);

  int sentence_len = tree.nodes[tree.root()].end;
  int left_width = std::min(n.begin, config.span_width_clip);
  int right_width = std::min(sentence_len - n.end, config.span_width_clip);
  vec.add(index.intern("o:lw|" + f + "|" + std::to_string(left_width)), 1.0);
  vec.add(index.intern("o:rw|" + f + "|" + std::to_string(right_width)), 1.0);
  vec.finalize();
  return vec;
}

void variance_normalize(std::vector<SparseFeatureVector>& vectors,
                        const std::vector<int>& blocks, FeatureIndex& index) {
  if (vectors.empty()) return;
  if (vectors.size() != blocks.size()) {
    throw Error("variance_normalize: vectors/blocks size mismatch");
  }
  int max_block = *std::max_element(blocks.begin(), blocks.end());
  std::vector<int64_t> block_size(max_block + 1, 0);
  for (int b : blocks) ++block_size[b];

  struct Acc {
    double sum = 0.0;
    double sumsq = 0.0;
    int block = -1;
  };
  std::vector<Acc> acc(index.size());
  for (size_t i = 0; i < vectors.size(); ++i) {
    for (const auto& [id, v] : vectors[i].entries) {
      acc[id].sum += v;
      acc[id].sumsq += v * v;
      acc[id].block = blocks[i];
    }
  }
  std::vector<double> scale(index.size(), 1.0);
  for (int id = 0; id < index.size(); ++id) {
    if (acc[id].block < 0) {
      index.set_variance(id, 0.0);
      continue;
    }
    double n = static_cast<double>(block_size[acc[id].block]);
    double mean = acc[id].sum / n;
    double var = acc[id].sumsq / n - mean * mean;
    if (var < 0.0) var = 0.0;  // rounding guard
    index.set_variance(id, var);
    if (var > 0.0) scale[id] = 1.0 / std::sqrt(var);
  }
  for (auto& vec : vectors) {
    for (auto& [id, v] : vec.entries) v *= scale[id];
  }
}

}  // namespace lpcfg
