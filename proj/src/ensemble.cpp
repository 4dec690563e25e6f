#include "lpcfg/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <iostream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>

#include <json.hpp>

#include "lpcfg/errors.hpp"
#include "lpcfg/eval.hpp"
#include "lpcfg/symbols.hpp"

namespace lpcfg {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void collect_labels(const RawTree& t, std::set<std::string>& internal,
                    std::set<std::string>& leaves) {
  if (t.is_leaf()) {
    leaves.insert(t.label);
    return;
  }
  internal.insert(t.label);
  for (const RawTree& c : t.children) collect_labels(c, internal, leaves);
}

// Builds a symbol table whose ids follow lexicographic label order, so the
// DP's lowest-symbol-id tie rule is a stable, input-independent ordering.
// Binarization artifacts (@X, X+Y) are discovered with a probe pass first.
SymbolTable sorted_symbols(const std::vector<RawTree>& trees,
                           const std::vector<std::string>& extra_labels) {
  std::set<std::string> internal, leaves;
  for (const RawTree& t : trees) {
    SymbolTable probe;
    SkeletalTree bin = binarize(t, probe);
    for (const auto& node : bin.nodes) {
      if (node.is_preterminal()) {
        leaves.insert(probe.symbol_name(node.symbol));
      } else {
        internal.insert(probe.symbol_name(node.symbol));
      }
    }
  }
  for (const std::string& label : extra_labels) {
    if (!leaves.count(label)) internal.insert(label);
  }
  SymbolTable symbols;
  std::set<std::string> all;
  all.insert(internal.begin(), internal.end());
  all.insert(leaves.begin(), leaves.end());
  for (const std::string& label : all) {
    if (internal.count(label) && leaves.count(label)) {
      throw Error("label '" + label + "' is both phrasal and preterminal");
    }
    symbols.intern_symbol(label, internal.count(label) > 0);
  }
  return symbols;
}

// The coverage dynamic program shared by both combination methods: same
// recurrence and tie rules as MBR decoding, with scores from a table.
CombineResult decode_spans(const TaggedSentence& tokens,
                           const SpanScoreTable& table,
                           const SymbolTable& symbols) {
  const int n = static_cast<int>(tokens.size());
  std::vector<int> interminals = symbols.interminal_ids();
  auto idx = [n](int i, int j) { return i * (n + 1) + j; };

  std::vector<double> total(idx(n, n) + 1, 0.0);
  std::vector<int> best_label(total.size(), -1);
  std::vector<int> best_split(total.size(), -1);

  for (int i = 0; i < n; ++i) {
    total[idx(i, i + 1)] = table.get(tokens[i].tag, i, i + 1);
  }
  for (int width = 2; width <= n; ++width) {
    for (int i = 0; i + width <= n; ++i) {
      int j = i + width;
      double label_score = 0.0;
      int label = interminals.empty() ? -1 : interminals[0];
      for (int a : interminals) {
        double s = table.get(symbols.symbol_name(a), i, j);
        if (s > label_score) {
          label_score = s;
          label = a;
        }
      }
      double split_score = kNegInf;
      int split = -1;
      for (int sp = i + 1; sp < j; ++sp) {
        double s = total[idx(i, sp)] + total[idx(sp, j)];
        if (s > split_score) {
          split_score = s;
          split = sp;
        }
      }
      total[idx(i, j)] = label_score + split_score;
      best_label[idx(i, j)] = label;
      best_split[idx(i, j)] = split;
    }
  }

  SkeletalTree tree;
  std::function<int(int, int, int)> build = [&](int i, int j, int parent) -> int {
    int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(SkeletalTree::Node{});
    tree.nodes[id].parent = parent;
    tree.nodes[id].begin = i;
    tree.nodes[id].end = j;
    if (j - i == 1) {
      tree.nodes[id].symbol = symbols.symbol_id(tokens[i].tag);
      tree.nodes[id].word = 0;
      return id;
    }
    tree.nodes[id].symbol = best_label[idx(i, j)];
    int split = best_split[idx(i, j)];
    int l = build(i, split, id);
    int r = build(split, j, id);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
  };
  build(0, n, -1);

  std::vector<std::string> words;
  for (const TaggedToken& t : tokens) words.push_back(t.word);
  return CombineResult{debinarize(tree, symbols, &words), total[idx(0, n)]};
}

SpanScoreTable count_table(const std::vector<RawTree>& trees) {
  SpanScoreTable table;
  for (const RawTree& t : trees) {
    SymbolTable probe;
    SkeletalTree bin = binarize(t, probe);
    for (const auto& node : bin.nodes) {
      table.add(probe.symbol_name(node.symbol), node.begin, node.end, 1.0);
    }
  }
  return table;
}

int right_branching_count(const RawTree& t) {
  if (t.is_leaf()) return 0;
  int count = t.children.back().is_leaf() ? 0 : 1;
  for (const RawTree& c : t.children) count += right_branching_count(c);
  return count;
}

}  // namespace

void CandidateSet::check() const {
  if (trees.empty()) throw Error("candidate set is empty");
  TaggedSentence first = tagged_yield(trees[0]);
  for (size_t i = 1; i < trees.size(); ++i) {
    TaggedSentence other = tagged_yield(trees[i]);
    bool same = other.size() == first.size();
    for (size_t j = 0; same && j < first.size(); ++j) {
      same = other[j].word == first[j].word;
    }
    if (!same) throw Error("candidate trees disagree on the token sequence");
  }
  if (!marginals.empty() && marginals.size() != trees.size()) {
    throw Error("marginal tables must match candidate count");
  }
}

CombineResult max_tree_coverage(const CandidateSet& candidates,
                                const std::vector<std::string>& extra_labels) {
  candidates.check();
  SymbolTable symbols = sorted_symbols(candidates.trees, extra_labels);
  SpanScoreTable table = count_table(candidates.trees);
  return decode_spans(tagged_yield(candidates.trees[0]), table, symbols);
}

CombineResult max_marginal_coverage(const CandidateSet& candidates,
                                    const std::vector<std::string>& extra_labels) {
  candidates.check();
  if (candidates.marginals.size() != candidates.trees.size()) {
    throw Error("max_marginal_coverage requires a marginal table per model");
  }
  SpanScoreTable merged;
  for (const SpanScoreTable& t : candidates.marginals) {
    for (const auto& [key, value] : t.scores) {
      merged.scores[key] += value;
    }
  }
  // The label universe also covers table entries absent from the trees.
  std::vector<std::string> labels = extra_labels;
  for (const auto& [key, value] : merged.scores) {
    if (std::get<2>(key) - std::get<1>(key) >= 2) labels.push_back(std::get<0>(key));
  }
  SymbolTable symbols = sorted_symbols(candidates.trees, labels);
  return decode_spans(tagged_yield(candidates.trees[0]), merged, symbols);
}

double tree_marginal_score(const RawTree& tree, const SpanScoreTable& table) {
  SymbolTable probe;
  SkeletalTree bin = binarize(tree, probe);
  double score = 0.0;
  for (const auto& node : bin.nodes) {
    score += table.get(probe.symbol_name(node.symbol), node.begin, node.end);
  }
  return score;
}

SparseFeatureVector reranker_features(const RawTree& tree, int model_index,
                                      double marginal_score, FeatureIndex& index) {
  SparseFeatureVector vec;
  std::function<int(const RawTree&, int)> walk = [&](const RawTree& t,
                                                     int begin) -> int {
    if (t.is_leaf()) return begin + 1;
    std::string rule = "rule|" + t.label + ">";
    for (size_t i = 0; i < t.children.size(); ++i) {
      if (i) rule += ",";
      rule += t.children[i].label;
    }
    vec.add(index.intern(rule), 1.0);
    int end = begin;
    for (const RawTree& c : t.children) end = walk(c, end);
    int len = std::min(end - begin, 10);
    vec.add(index.intern("span|" + t.label + "|" + std::to_string(len)), 1.0);
    return end;
  };
  walk(tree, 0);
  vec.add(index.intern("rightbranch"), right_branching_count(tree));
  vec.add(index.intern("model|" + std::to_string(model_index)), 1.0);
  vec.add(index.intern("mscore"), marginal_score);
  vec.finalize();
  return vec;
}

RerankerModel reranker_train(const std::vector<RerankGroup>& groups, double l2) {
  RerankerModel model;
  model.l2 = l2;

  struct Prepared {
    std::vector<SparseFeatureVector> feats;
    std::vector<double> targets;
  };
  std::vector<Prepared> data;
  int skipped = 0;
  for (const RerankGroup& group : groups) {
    if (group.candidates.size() < 2) {
      ++skipped;
      continue;
    }
    Prepared prep;
    std::vector<double> f1(group.candidates.size());
    double best = -1.0;
    for (size_t c = 0; c < group.candidates.size(); ++c) {
      double score = c < group.marginal_scores.size() ? group.marginal_scores[c] : 0.0;
      prep.feats.push_back(reranker_features(group.candidates[c],
                                             static_cast<int>(c), score,
                                             model.features));
      f1[c] = sentence_f1(group.gold, group.candidates[c]);
      best = std::max(best, f1[c]);
    }
    int ties = 0;
    for (double v : f1) ties += v == best ? 1 : 0;
    for (double v : f1) prep.targets.push_back(v == best ? 1.0 / ties : 0.0);
    data.push_back(std::move(prep));
  }
  if (skipped > 0) {
    std::cerr << "reranker_train: skipped " << skipped
              << " degenerate group(s) with < 2 candidates\n";
  }
  if (data.empty()) throw Error("reranker_train: no usable training groups");
  model.features.freeze();

  const int dim = model.features.size();
  std::vector<double> w(dim, 0.0);

  auto objective = [&](const std::vector<double>& weights,
                       std::vector<double>* grad) -> double {
    if (grad) grad->assign(dim, 0.0);
    double ll = 0.0;
    std::vector<double> scores;
    for (const Prepared& prep : data) {
      scores.resize(prep.feats.size());
      double max_score = kNegInf;
      for (size_t c = 0; c < prep.feats.size(); ++c) {
        double s = 0.0;
        for (const auto& [id, v] : prep.feats[c].entries) s += weights[id] * v;
        scores[c] = s;
        max_score = std::max(max_score, s);
      }
      double z = 0.0;
      for (double s : scores) z += std::exp(s - max_score);
      double log_z = std::log(z) + max_score;
      for (size_t c = 0; c < prep.feats.size(); ++c) {
        ll += prep.targets[c] * (scores[c] - log_z);
        if (grad) {
          double coeff = prep.targets[c] - std::exp(scores[c] - log_z);
          for (const auto& [id, v] : prep.feats[c].entries) {
            (*grad)[id] += coeff * v;
          }
        }
      }
    }
    for (int i = 0; i < dim; ++i) {
      ll -= l2 * weights[i] * weights[i];
      if (grad) (*grad)[i] -= 2.0 * l2 * weights[i];
    }
    return ll;
  };

  std::vector<double> grad;
  const int max_iterations = 2000;
  for (int iter = 0; iter < max_iterations; ++iter) {
    double value = objective(w, &grad);
    double norm = 0.0;
    for (double g : grad) norm += g * g;
    norm = std::sqrt(norm);
    if (norm < 1e-5) break;
    // Backtracking line search along the gradient.
    double step = 1.0;
    std::vector<double> next(dim);
    bool moved = false;
    for (int half = 0; half < 60; ++half) {
      for (int i = 0; i < dim; ++i) next[i] = w[i] + step * grad[i];
      if (objective(next, nullptr) >= value + 1e-4 * step * norm * norm) {
        w = next;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved) break;
  }
  model.weights = std::move(w);
  return model;
}

int reranker_select(const RerankerModel& model,
                    const std::vector<RawTree>& candidates,
                    const std::vector<double>& marginal_scores) {
  if (candidates.empty()) throw Error("reranker_select: no candidates");
  int best = 0;
  double best_score = kNegInf;
  FeatureIndex frozen = model.features;  // frozen: lookups only, no allocation
  for (size_t c = 0; c < candidates.size(); ++c) {
    double mscore = c < marginal_scores.size() ? marginal_scores[c] : 0.0;
    SparseFeatureVector vec =
        reranker_features(candidates[c], static_cast<int>(c), mscore, frozen);
    double score = model.score(vec);
    if (score > best_score) {
      best_score = score;
      best = static_cast<int>(c);
    }
  }
  return best;
}

void RerankerModel::save(std::ostream& os) const {
  nlohmann::json j;
  j["l2"] = l2;
  nlohmann::json ws = nlohmann::json::object();
  for (int i = 0; i < features.size(); ++i) ws[features.name(i)] = weights[i];
  j["weights"] = ws;
  os << j.dump(2) << '\n';
}

RerankerModel RerankerModel::load(std::istream& is) {
  nlohmann::json j = nlohmann::json::parse(is);
  RerankerModel model;
  model.l2 = j.at("l2").get<double>();
  for (const auto& [name, value] : j.at("weights").items()) {
    int id = model.features.intern(name);
    if (static_cast<int>(model.weights.size()) <= id) model.weights.resize(id + 1);
    model.weights[id] = value.get<double>();
  }
  model.features.freeze();
  return model;
}

CombinePlan CombinePlan::parse(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  CombinePlan plan;
  plan.output = j.at("output").get<std::string>();
  for (const auto& [name, node_json] : j.at("nodes").items()) {
    Node node;
    node.op = node_json.at("op").get<std::string>();
    for (const auto& child : node_json.at("children")) {
      if (child.is_number_integer()) {
        node.children.emplace_back(child.get<int>());
      } else {
        node.children.emplace_back(child.get<std::string>());
      }
    }
    plan.nodes.emplace(name, std::move(node));
  }
  return plan;
}

void CombinePlan::validate(int num_models) const {
  if (!nodes.count(output)) {
    throw ConfigError("plan output '" + output + "' is not a node");
  }
  enum State { kUnseen, kVisiting, kDone };
  std::map<std::string, State> state;
  std::function<void(const std::string&)> visit = [&](const std::string& name) {
    auto it = nodes.find(name);
    if (it == nodes.end()) {
      throw ConfigError("plan references unknown node '" + name + "'");
    }
    if (state[name] == kVisiting) {
      throw ConfigError("plan contains a cycle through '" + name + "'");
    }
    if (state[name] == kDone) return;
    state[name] = kVisiting;
    const Node& node = it->second;
    if (node.op != "maxtre" && node.op != "maxmrg" && node.op != "maxent") {
      throw ConfigError("unknown plan op '" + node.op + "'");
    }
    if (node.children.empty()) {
      throw ConfigError("plan node with no children");
    }
    for (const auto& child : node.children) {
      if (std::holds_alternative<int>(child)) {
        int index = std::get<int>(child);
        if (index < 0 || index >= num_models) {
          throw ConfigError("plan leaf model index " + std::to_string(index) +
                            " out of range");
        }
      } else {
        visit(std::get<std::string>(child));
      }
    }
    state[name] = kDone;
  };
  visit(output);
}

RawTree hierarchical_combine(const CombinePlan& plan, const CandidateSet& inputs,
                             const RerankerModel* reranker) {
  inputs.check();
  plan.validate(static_cast<int>(inputs.trees.size()));

  std::map<std::string, RawTree> memo;
  std::function<const RawTree&(const std::string&)> eval =
      [&](const std::string& name) -> const RawTree& {
    auto found = memo.find(name);
    if (found != memo.end()) return found->second;
    const CombinePlan::Node& node = plan.nodes.at(name);

    CandidateSet child_set;
    std::vector<double> marginal_scores;
    bool all_leaves = true;
    for (const auto& child : node.children) {
      if (std::holds_alternative<int>(child)) {
        int index = std::get<int>(child);
        child_set.trees.push_back(inputs.trees[index]);
        if (!inputs.marginals.empty()) {
          child_set.marginals.push_back(inputs.marginals[index]);
          marginal_scores.push_back(
              tree_marginal_score(inputs.trees[index], inputs.marginals[index]));
        } else {
          marginal_scores.push_back(0.0);
        }
      } else {
        all_leaves = false;
        child_set.trees.push_back(eval(std::get<std::string>(child)));
        marginal_scores.push_back(0.0);
      }
    }
    if (!all_leaves) child_set.marginals.clear();

    RawTree out;
    if (node.op == "maxtre") {
      out = max_tree_coverage(child_set).tree;
    } else if (node.op == "maxmrg") {
      if (child_set.marginals.size() != child_set.trees.size()) {
        throw Error("maxmrg plan node requires leaf children with marginals");
      }
      out = max_marginal_coverage(child_set).tree;
    } else {
      if (!reranker) throw Error("maxent plan node requires a reranker model");
      int pick = reranker_select(*reranker, child_set.trees, marginal_scores);
      out = child_set.trees[pick];
    }
    return memo.emplace(name, std::move(out)).first->second;
  };
  return eval(plan.output);
}

}  // namespace lpcfg
