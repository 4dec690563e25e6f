#ifndef LPCFG_FEATURES_HPP
#define LPCFG_FEATURES_HPP

#include <iosfwd>
#include <string>
#include <unordered_map>
#include <vector>

#include "lpcfg/tree.hpp"

namespace lpcfg {

// Indexed sparse real vector housing inside/outside feature values.
struct SparseFeatureVector {
  std::vector<std::pair<int, double>> entries;  // id-sorted, nonzero values

  void add(int id, double value) {
    if (id >= 0 && value != 0.0) entries.emplace_back(id, value);
  }
  // Sorts by id and merges duplicates; drops zeros.
  void finalize();
  size_t size() const { return entries.size(); }
};

// Feature-name registry with dense ids and per-feature variances. During
// extraction passes it allocates; once frozen, unseen names map to absent.
class FeatureIndex {
 public:
  int intern(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    if (frozen_) return -1;
    int id = static_cast<int>(names_.size());
    names_.push_back(name);
    ids_.emplace(names_.back(), id);
    return id;
  }
  int lookup(const std::string& name) const {
    auto it = ids_.find(name);
    return it == ids_.end() ? -1 : it->second;
  }
  void freeze() {
    frozen_ = true;
    if (variances_.size() < names_.size()) variances_.resize(names_.size(), 0.0);
  }
  bool frozen() const { return frozen_; }
  int size() const { return static_cast<int>(names_.size()); }
  const std::string& name(int id) const { return names_.at(id); }
  double variance(int id) const { return variances_.at(id); }
  void set_variance(int id, double v) {
    if (variances_.size() < names_.size()) variances_.resize(names_.size(), 0.0);
    variances_.at(id) = v;
  }

  // Text lines: id<TAB>feature-name<TAB>variance.
  void dump(std::ostream& os) const;
  static FeatureIndex load(std::istream& is);

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> ids_;
  std::vector<double> variances_;
  bool frozen_ = false;
};

// Head-percolation table. Each parent category maps to an ordered list of
// child-label prefixes tried left to right; without a match, the head is the
// leftmost child sharing the parent's coarse category, else the rightmost
// child. The table is data so users can supply Collins-style rules.
class HeadTable {
 public:
  static HeadTable defaults();
  static HeadTable load(std::istream& is);

  void set(const std::string& parent, std::vector<std::string> prefixes) {
    rules_[parent] = std::move(prefixes);
  }

  // Index of the head child (0 = left, 1 = right) of a binary node.
  int head_child(const std::string& parent_label, const std::string& left_label,
                 const std::string& right_label) const;

 private:
  std::unordered_map<std::string, std::vector<std::string>> rules_;
};

// Label with binarization marker and unary-collapse suffixes removed.
std::string coarse_label(const std::string& label);

// Leaf node reached by repeatedly descending into head children.
int head_leaf(const SkeletalTree& tree, const SymbolTable& symbols,
              const HeadTable& heads, int node);

struct FeatureConfig {
  int span_width_clip = 20;  // outside span-width bucket cap
};

// Inside feature function: the seven indicator templates for a node rooting
// a binary rule, or the bare rule identity for a lexical node.
SparseFeatureVector inside_features(const SkeletalTree& tree,
                                    const SymbolTable& symbols,
                                    const HeadTable& heads, int node,
                                    FeatureIndex& index,
                                    const FeatureConfig& config = {});

// Outside feature function: the six indicator templates around a non-root
// node; the root's empty outside tree yields one designated root-context
// feature.
SparseFeatureVector outside_features(const SkeletalTree& tree,
                                     const SymbolTable& symbols,
                                     const HeadTable& heads, int node,
                                     FeatureIndex& index,
                                     const FeatureConfig& config = {});

// Divides each coordinate by the population standard deviation of the
// feature within its nonterminal block; zero-variance coordinates are left
// unscaled. blocks[i] is the nonterminal of vectors[i]. Variances are stored
// into the index.
void variance_normalize(std::vector<SparseFeatureVector>& vectors,
                        const std::vector<int>& blocks, FeatureIndex& index);

}  // namespace lpcfg

#endif  // LPCFG_FEATURES_HPP
