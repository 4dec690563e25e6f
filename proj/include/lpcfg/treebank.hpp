#ifndef LPCFG_TREEBANK_HPP
#define LPCFG_TREEBANK_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "lpcfg/tree.hpp"

namespace lpcfg {

// Training instance: one per node, splitting the tree into the inside tree
// below the node and the outside tree around it. root_flag marks the tree
// root.
struct InstanceRecord {
  int tree;  // index into the source treebank
  int node;  // node index within the tree
  int symbol;
  bool root_flag;
};

// Parses whitespace-tolerant s-expression bracketings, one RawTree per
// top-level bracket. Labels and tokens are preserved verbatim. Throws
// BracketError with line/column on unbalanced input or empty constituents.
std::vector<RawTree> parse_bracketed(const std::string& text);

std::string write_bracketed(const RawTree& tree);

// PTB-style ingestion cleanup: deletes -NONE- subtrees and truncates labels
// at the first "-" or "=" past position 0. Returns false when the whole tree
// is erased.
bool strip_annotations(RawTree& tree);

// Right-branching binarization, order-0 horizontal Markovization: n-ary
// nodes get "@"+parent intermediates, unary chains collapse into "+"-joined
// labels. Symbols and words are interned into the table.
SkeletalTree binarize(const RawTree& tree, SymbolTable& symbols);

// Inverse of binarize on its image. Throws on malformed markers. When
// `words_by_position` is given, leaf tokens come from it instead of the
// word table (decoded trees may cover words unknown to the table).
RawTree debinarize(const SkeletalTree& tree, const SymbolTable& symbols,
                   const std::vector<std::string>* words_by_position = nullptr);

// One record per node per tree; root_flag set only at roots.
std::vector<InstanceRecord> decompose(const std::vector<SkeletalTree>& treebank);

struct TaggedToken {
  std::string word;
  std::string tag;
};
using TaggedSentence = std::vector<TaggedToken>;

// Tagged text format: word_tag tokens separated by spaces, with "_" and "\"
// in words/tags escaped by a backslash.
TaggedSentence parse_tagged(const std::string& line);
std::string write_tagged(const TaggedSentence& sentence);
TaggedSentence tagged_yield(const RawTree& tree);

std::vector<RawTree> read_treebank_file(const std::string& path,
                                        bool strip = true);
void write_treebank_file(const std::string& path,
                         const std::vector<RawTree>& trees);

}  // namespace lpcfg

#endif  // LPCFG_TREEBANK_HPP
