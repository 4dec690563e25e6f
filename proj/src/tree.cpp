#include "lpcfg/tree.hpp"

namespace lpcfg {

bool is_intermediate_label(std::string_view label) {
  return !label.empty() && label[0] == '@';
}

std::vector<std::tuple<int, int, int>> tree_spans(const SkeletalTree& tree,
                                                  const SymbolTable& symbols,
                                                  bool include_intermediates) {
  std::vector<std::tuple<int, int, int>> out;
  out.reserve(tree.nodes.size());
  for (const auto& node : tree.nodes) {
    if (!include_intermediates &&
        is_intermediate_label(symbols.symbol_name(node.symbol))) {
      continue;
    }
    out.emplace_back(node.symbol, node.begin, node.end);
  }
  return out;
}

}  // namespace lpcfg
