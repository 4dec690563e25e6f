#ifndef LPCFG_TREE_HPP
#define LPCFG_TREE_HPP

#include <string>
#include <tuple>
#include <vector>

#include "lpcfg/symbols.hpp"

namespace lpcfg {

// N-ary labeled tree as read from bracketed text. Leaves are (pos-tag, word)
// pairs: a leaf node stores the tag in `label` and the token in `word`.
struct RawTree {
  std::string label;
  std::string word;  // nonempty iff leaf
  std::vector<RawTree> children;

  bool is_leaf() const { return children.empty(); }
  bool operator==(const RawTree& o) const = default;
};

// Strictly binary derivation tree without latent annotations. Nodes live in
// an arena; node 0 is the root. Preterminal nodes carry a word id and no
// children. Spans are half-open token positions.
struct SkeletalTree {
  struct Node {
    int symbol = -1;
    int word = -1;  // >= 0 iff preterminal
    int left = -1;
    int right = -1;
    int parent = -1;
    int begin = 0;
    int end = 0;
    bool is_preterminal() const { return word >= 0; }
  };
  std::vector<Node> nodes;

  int root() const { return 0; }
  int size() const { return static_cast<int>(nodes.size()); }
  int length() const { return nodes.empty() ? 0 : nodes[0].end - nodes[0].begin; }
};

// SkeletalTree plus one latent state per node.
struct AnnotatedTree {
  SkeletalTree tree;
  std::vector<int> states;  // parallel to tree.nodes
};

// One (symbol, i, j) triple per node. Binarization-introduced symbols
// (marked labels) are excluded unless include_intermediates is set.
std::vector<std::tuple<int, int, int>> tree_spans(const SkeletalTree& tree,
                                                  const SymbolTable& symbols,
                                                  bool include_intermediates);

// True for labels introduced by binarization ("@..." markers).
bool is_intermediate_label(std::string_view label);

}  // namespace lpcfg

#endif  // LPCFG_TREE_HPP
