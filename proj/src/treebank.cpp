#include "lpcfg/treebank.hpp"

#include <fstream>
#include <functional>
#include <sstream>

#include "lpcfg/errors.hpp"

namespace lpcfg {

namespace {

struct Token {
  enum Kind { kOpen, kClose, kAtom } kind;
  std::string text;
  int line;
  int column;
};

std::vector<Token> tokenize(const std::string& text) {
  std::vector<Token> tokens;
  int line = 1, col = 1;
  std::string atom;
  int atom_line = 1, atom_col = 1;
  auto flush = [&]() {
    if (!atom.empty()) {
      tokens.push_back(Token{Token::kAtom, atom, atom_line, atom_col});
      atom.clear();
    }
  };
  for (char c : text) {
    if (c == '(' || c == ')') {
      flush();
      tokens.push_back(Token{c == '(' ? Token::kOpen : Token::kClose,
                             std::string(1, c), line, col});
    } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      flush();
    } else {
      if (atom.empty()) {
        atom_line = line;
        atom_col = col;
      }
      atom.push_back(c);
    }
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  flush();
  return tokens;
}

class BracketParser {
 public:
  explicit BracketParser(const std::vector<Token>& tokens) : tokens_(tokens) {}

  std::vector<RawTree> parse_all() {
    std::vector<RawTree> trees;
    while (pos_ < tokens_.size()) trees.push_back(parse_tree());
    return trees;
  }

 private:
  const Token& peek() const {
    if (pos_ >= tokens_.size()) {
      const Token& last = tokens_.back();
      throw BracketError("unbalanced brackets: unexpected end of input",
                         last.line, last.column);
    }
    return tokens_[pos_];
  }

  RawTree parse_tree() {
    const Token& open = peek();
    if (open.kind != Token::kOpen) {
      throw BracketError("expected '('", open.line, open.column);
    }
    ++pos_;
    RawTree node;
    // PTB files wrap each tree in an unlabeled bracket; strip it.
    if (peek().kind == Token::kOpen) {
      RawTree child = parse_tree();
      const Token& close = peek();
      if (close.kind != Token::kClose) {
        throw BracketError("unlabeled bracket must wrap a single tree",
                           close.line, close.column);
      }
      ++pos_;
      return child;
    }
    if (peek().kind != Token::kAtom) {
      throw BracketError("empty constituent", peek().line, peek().column);
    }
    node.label = peek().text;
    ++pos_;
    if (peek().kind == Token::kAtom) {
      node.word = peek().text;
      ++pos_;
    } else {
      while (peek().kind == Token::kOpen) node.children.push_back(parse_tree());
    }
    const Token& close = peek();
    if (close.kind != Token::kClose) {
      throw BracketError("expected ')'", close.line, close.column);
    }
    if (node.word.empty() && node.children.empty()) {
      throw BracketError("empty constituent '" + node.label + "'", close.line,
                         close.column);
    }
    ++pos_;
    return node;
  }

  const std::vector<Token>& tokens_;
  size_t pos_ = 0;
};

// Unary chains become "+"-joined composite labels; a chain ending in a
// preterminal collapses into a composite preterminal.
RawTree collapse_unaries(const RawTree& t) {
  if (t.is_leaf()) return t;
  RawTree out;
  out.label = t.label;
  for (const RawTree& c : t.children) out.children.push_back(collapse_unaries(c));
  if (out.children.size() == 1) {
    RawTree child = std::move(out.children[0]);
    child.label = out.label + "+" + child.label;
    return child;
  }
  return out;
}

int build_binary(const RawTree& t, const std::string& label, int parent,
                 int begin, SymbolTable& symbols, SkeletalTree& out);

// Children c[i..] under an intermediate "@"+parent chain.
int build_chain(const RawTree& parent_node, size_t i, const std::string& marker,
                int parent, int begin, SymbolTable& symbols, SkeletalTree& out) {
  if (i + 1 == parent_node.children.size()) {
    return build_binary(parent_node.children[i], parent_node.children[i].label,
                        parent, begin, symbols, out);
  }
  int self = static_cast<int>(out.nodes.size());
  out.nodes.push_back(SkeletalTree::Node{});
  out.nodes[self].symbol = symbols.intern_symbol(marker, /*interminal=*/true);
  out.nodes[self].parent = parent;
  out.nodes[self].begin = begin;
  int left = build_binary(parent_node.children[i], parent_node.children[i].label,
                          self, begin, symbols, out);
  int right = build_chain(parent_node, i + 1, marker, self,
                          out.nodes[left].end, symbols, out);
  out.nodes[self].left = left;
  out.nodes[self].right = right;
  out.nodes[self].end = out.nodes[right].end;
  return self;
}

int build_binary(const RawTree& t, const std::string& label, int parent,
                 int begin, SymbolTable& symbols, SkeletalTree& out) {
  int self = static_cast<int>(out.nodes.size());
  out.nodes.push_back(SkeletalTree::Node{});
  out.nodes[self].parent = parent;
  out.nodes[self].begin = begin;
  if (t.is_leaf()) {
    out.nodes[self].symbol = symbols.intern_symbol(label, /*interminal=*/false);
    out.nodes[self].word = symbols.intern_word(t.word);
    out.nodes[self].end = begin + 1;
    return self;
  }
  out.nodes[self].symbol = symbols.intern_symbol(label, /*interminal=*/true);
  int left = build_binary(t.children[0], t.children[0].label, self, begin,
                          symbols, out);
  int right;
  if (t.children.size() == 2) {
    right = build_binary(t.children[1], t.children[1].label, self,
                         out.nodes[left].end, symbols, out);
  } else {
    right = build_chain(t, 1, "@" + label, self, out.nodes[left].end, symbols,
                        out);
  }
  out.nodes[self].left = left;
  out.nodes[self].right = right;
  out.nodes[self].end = out.nodes[right].end;
  return self;
}

// Splits a "+"-collapsed label back into a unary chain around `core`.
RawTree expand_label(const std::string& label, RawTree core) {
  size_t pos = label.rfind('+');
  if (pos == std::string::npos) {
    core.label = label;
    return core;
  }
  core.label = label.substr(pos + 1);
  RawTree wrapped;
  wrapped.children.push_back(std::move(core));
  return expand_label(label.substr(0, pos), std::move(wrapped));
}

void gather_children(const SkeletalTree& t, const SymbolTable& symbols,
                     int node, const std::string& parent_label,
                     const std::vector<std::string>* words,
                     std::vector<RawTree>& out);

RawTree debinarize_node(const SkeletalTree& t, const SymbolTable& symbols,
                        int node, const std::vector<std::string>* words) {
  const auto& n = t.nodes[node];
  const std::string& label = symbols.symbol_name(n.symbol);
  if (is_intermediate_label(label)) {
    throw Error("malformed marker: intermediate label '" + label +
                "' outside binarization chain");
  }
  if (n.is_preterminal()) {
    RawTree leaf;
    leaf.word = words ? words->at(n.begin) : symbols.word_name(n.word);
    return expand_label(label, std::move(leaf));
  }
  RawTree body;
  gather_children(t, symbols, n.left, label, words, body.children);
  gather_children(t, symbols, n.right, label, words, body.children);
  return expand_label(label, std::move(body));
}

void gather_children(const SkeletalTree& t, const SymbolTable& symbols,
                     int node, const std::string& parent_label,
                     const std::vector<std::string>* words,
                     std::vector<RawTree>& out) {
  const auto& n = t.nodes[node];
  const std::string& label = symbols.symbol_name(n.symbol);
  if (is_intermediate_label(label)) {
    if (label.substr(1) != parent_label) {
      throw Error("malformed marker '" + label + "' under '" + parent_label +
                  "'");
    }
    gather_children(t, symbols, n.left, parent_label, words, out);
    gather_children(t, symbols, n.right, parent_label, words, out);
  } else {
    out.push_back(debinarize_node(t, symbols, node, words));
  }
}

}  // namespace

std::vector<RawTree> parse_bracketed(const std::string& text) {
  std::vector<Token> tokens = tokenize(text);
  if (tokens.empty()) return {};
  return BracketParser(tokens).parse_all();
}

std::string write_bracketed(const RawTree& tree) {
  std::string out;
  std::function<void(const RawTree&)> emit = [&](const RawTree& t) {
    out += '(';
    out += t.label;
    if (t.is_leaf()) {
      out += ' ';
      out += t.word;
    } else {
      for (const RawTree& c : t.children) {
        out += ' ';
        emit(c);
      }
    }
    out += ')';
  };
  emit(tree);
  return out;
}

bool strip_annotations(RawTree& tree) {
  if (tree.label == "-NONE-") return false;
  if (tree.label.size() > 1 && tree.label[0] != '-') {
    size_t cut = tree.label.find_first_of("-=", 1);
    if (cut != std::string::npos) tree.label.resize(cut);
  }
  if (tree.is_leaf()) return true;
  std::vector<RawTree> kept;
  for (RawTree& c : tree.children) {
    if (strip_annotations(c)) kept.push_back(std::move(c));
  }
  tree.children = std::move(kept);
  return !tree.children.empty();
}

SkeletalTree binarize(const RawTree& tree, SymbolTable& symbols) {
  RawTree collapsed = collapse_unaries(tree);
  SkeletalTree out;
  build_binary(collapsed, collapsed.label, -1, 0, symbols, out);
  return out;
}

RawTree debinarize(const SkeletalTree& tree, const SymbolTable& symbols,
                   const std::vector<std::string>* words_by_position) {
  if (tree.nodes.empty()) throw Error("cannot debinarize an empty tree");
  return debinarize_node(tree, symbols, tree.root(), words_by_position);
}

std::vector<InstanceRecord> decompose(const std::vector<SkeletalTree>& treebank) {
  std::vector<InstanceRecord> records;
  for (size_t t = 0; t < treebank.size(); ++t) {
    const SkeletalTree& tree = treebank[t];
    for (int n = 0; n < tree.size(); ++n) {
      records.push_back(InstanceRecord{static_cast<int>(t), n,
                                       tree.nodes[n].symbol,
                                       n == tree.root()});
    }
  }
  return records;
}

TaggedSentence parse_tagged(const std::string& line) {
  TaggedSentence sentence;
  std::istringstream ss(line);
  std::string token;
  while (ss >> token) {
    std::vector<std::string> parts(1);
    bool escaped = false;
    for (char c : token) {
      if (escaped) {
        parts.back().push_back(c);
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '_') {
        parts.emplace_back();
      } else {
        parts.back().push_back(c);
      }
    }
    if (escaped || parts.size() != 2 || parts[0].empty() || parts[1].empty()) {
      throw Error("bad word_tag token: '" + token + "'");
    }
    sentence.push_back(TaggedToken{parts[0], parts[1]});
  }
  return sentence;
}

std::string write_tagged(const TaggedSentence& sentence) {
  std::string out;
  auto escape = [](const std::string& s) {
    std::string r;
    for (char c : s) {
      if (c == '_' || c == '\\') r.push_back('\\');
      r.push_back(c);
    }
    return r;
  };
  for (size_t i = 0; i < sentence.size(); ++i) {
    if (i) out += ' ';
    out += escape(sentence[i].word) + "_" + escape(sentence[i].tag);
  }
  return out;
}

TaggedSentence tagged_yield(const RawTree& tree) {
  TaggedSentence out;
  std::function<void(const RawTree&)> walk = [&](const RawTree& t) {
    if (t.is_leaf()) {
      out.push_back(TaggedToken{t.word, t.label});
    } else {
      for (const RawTree& c : t.children) walk(c);
    }
  };
  walk(tree);
  return out;
}

std::vector<RawTree> read_treebank_file(const std::string& path, bool strip) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open treebank file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::vector<RawTree> trees = parse_bracketed(buffer.str());
  if (strip) {
    std::vector<RawTree> kept;
    for (RawTree& t : trees) {
      if (strip_annotations(t)) kept.push_back(std::move(t));
    }
    trees = std::move(kept);
  }
  return trees;
}

void write_treebank_file(const std::string& path,
                         const std::vector<RawTree>& trees) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write treebank file: " + path);
  for (const RawTree& t : trees) out << write_bracketed(t) << '\n';
}

}  // namespace lpcfg
