#ifndef LPCFG_SYMBOLS_HPP
#define LPCFG_SYMBOLS_HPP

#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "lpcfg/errors.hpp"

namespace lpcfg {

// Nonterminal and vocabulary registry. Interminals head binary rules,
// preterminals head lexical rules; the two sets partition the nonterminals.
// Ids are dense and assigned in first-seen order; serialization goes through
// names, never ids.
class SymbolTable {
 public:
  // Interns a nonterminal. A name may not be registered as both an
  // interminal and a preterminal.
  int intern_symbol(std::string_view name, bool interminal) {
    auto it = symbol_ids_.find(std::string(name));
    if (it != symbol_ids_.end()) {
      if (interminal_[it->second] != interminal) {
        throw Error("symbol '" + std::string(name) +
                    "' used as both interminal and preterminal");
      }
      return it->second;
    }
    int id = static_cast<int>(symbol_names_.size());
    symbol_names_.emplace_back(name);
    interminal_.push_back(interminal);
    symbol_ids_.emplace(symbol_names_.back(), id);
    return id;
  }

  int intern_word(std::string_view w) {
    auto it = word_ids_.find(std::string(w));
    if (it != word_ids_.end()) return it->second;
    int id = static_cast<int>(word_names_.size());
    word_names_.emplace_back(w);
    word_ids_.emplace(word_names_.back(), id);
    return id;
  }

  // -1 when absent.
  int symbol_id(std::string_view name) const {
    auto it = symbol_ids_.find(std::string(name));
    return it == symbol_ids_.end() ? -1 : it->second;
  }
  int word_id(std::string_view w) const {
    auto it = word_ids_.find(std::string(w));
    return it == word_ids_.end() ? -1 : it->second;
  }

  const std::string& symbol_name(int id) const { return symbol_names_.at(id); }
  const std::string& word_name(int id) const { return word_names_.at(id); }
  bool is_interminal(int id) const { return interminal_.at(id); }
  bool is_preterminal(int id) const { return !interminal_.at(id); }

  int num_symbols() const { return static_cast<int>(symbol_names_.size()); }
  int num_words() const { return static_cast<int>(word_names_.size()); }

  std::vector<int> interminal_ids() const {
    std::vector<int> out;
    for (int a = 0; a < num_symbols(); ++a)
      if (interminal_[a]) out.push_back(a);
    return out;
  }
  std::vector<int> preterminal_ids() const {
    std::vector<int> out;
    for (int a = 0; a < num_symbols(); ++a)
      if (!interminal_[a]) out.push_back(a);
    return out;
  }

 private:
  std::vector<std::string> symbol_names_;
  std::vector<bool> interminal_;
  std::unordered_map<std::string, int> symbol_ids_;
  std::vector<std::string> word_names_;
  std::unordered_map<std::string, int> word_ids_;
};

}  // namespace lpcfg

#endif  // LPCFG_SYMBOLS_HPP
