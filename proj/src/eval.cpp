#include "lpcfg/eval.hpp"

#include <algorithm>
#include <functional>

#include "lpcfg/errors.hpp"
#include "lpcfg/treebank.hpp"

namespace lpcfg {

std::vector<std::tuple<std::string, int, int>> labeled_spans(const RawTree& tree) {
  std::vector<std::tuple<std::string, int, int>> spans;
  std::function<int(const RawTree&, int)> walk = [&](const RawTree& t,
                                                     int begin) -> int {
    if (t.is_leaf()) return begin + 1;
    int end = begin;
    for (const RawTree& c : t.children) end = walk(c, end);
    spans.emplace_back(t.label, begin, end);
    return end;
  };
  walk(tree, 0);
  std::sort(spans.begin(), spans.end());
  return spans;
}

namespace {

std::vector<std::string> yield_words(const RawTree& tree) {
  std::vector<std::string> words;
  std::function<void(const RawTree&)> walk = [&](const RawTree& t) {
    if (t.is_leaf()) {
      words.push_back(t.word);
    } else {
      for (const RawTree& c : t.children) walk(c);
    }
  };
  walk(tree);
  return words;
}

int64_t multiset_intersection(
    const std::vector<std::tuple<std::string, int, int>>& a,
    const std::vector<std::tuple<std::string, int, int>>& b) {
  int64_t count = 0;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      ++count;
      ++i;
      ++j;
    }
  }
  return count;
}

bool is_failure(const RawTree& gold, const RawTree& predicted) {
  if (predicted.label.empty() && predicted.children.empty()) return true;
  return yield_words(gold) != yield_words(predicted);
}

}  // namespace

SpanCounts span_match(const RawTree& gold, const RawTree& predicted) {
  auto gs = labeled_spans(gold);
  auto ps = labeled_spans(predicted);
  SpanCounts counts;
  counts.gold = static_cast<int64_t>(gs.size());
  counts.predicted = static_cast<int64_t>(ps.size());
  counts.matched = multiset_intersection(gs, ps);
  return counts;
}

double sentence_f1(const RawTree& gold, const RawTree& predicted) {
  if (is_failure(gold, predicted)) return 0.0;
  SpanCounts c = span_match(gold, predicted);
  if (c.matched == 0) return 0.0;
  double p = static_cast<double>(c.matched) / static_cast<double>(c.predicted);
  double r = static_cast<double>(c.matched) / static_cast<double>(c.gold);
  return 2.0 * p * r / (p + r);
}

ParsevalReport parseval(const std::vector<RawTree>& gold,
                        const std::vector<RawTree>& predicted, int max_len) {
  if (gold.size() != predicted.size()) {
    throw Error("parseval: gold and predicted counts differ (" +
                std::to_string(gold.size()) + " vs " +
                std::to_string(predicted.size()) + ")");
  }
  ParsevalReport report;
  for (size_t i = 0; i < gold.size(); ++i) {
    auto gold_yield = yield_words(gold[i]);
    if (max_len >= 0 && static_cast<int>(gold_yield.size()) > max_len) {
      ++report.skipped;
      continue;
    }
    ++report.sentences;
    auto gs = labeled_spans(gold[i]);
    report.gold_spans += static_cast<int64_t>(gs.size());
    if (is_failure(gold[i], predicted[i])) {
      ++report.failures;
      report.predicted_spans +=
          static_cast<int64_t>(labeled_spans(predicted[i]).size());
      continue;
    }
    auto ps = labeled_spans(predicted[i]);
    report.predicted_spans += static_cast<int64_t>(ps.size());
    int64_t matched = multiset_intersection(gs, ps);
    report.matched_spans += matched;
    if (matched == static_cast<int64_t>(gs.size()) &&
        matched == static_cast<int64_t>(ps.size())) {
      ++report.exact_match;
    }
  }
  if (report.predicted_spans > 0) {
    report.precision = 100.0 * static_cast<double>(report.matched_spans) /
                       static_cast<double>(report.predicted_spans);
  }
  if (report.gold_spans > 0) {
    report.recall = 100.0 * static_cast<double>(report.matched_spans) /
                    static_cast<double>(report.gold_spans);
  }
  if (report.precision + report.recall > 0.0) {
    report.f1 = 2.0 * report.precision * report.recall /
                (report.precision + report.recall);
  }
  return report;
}

OracleReport oracle_f1(const std::vector<RawTree>& gold,
                       const std::vector<std::vector<RawTree>>& candidates,
                       int max_len) {
  if (gold.size() != candidates.size()) {
    throw Error("oracle_f1: gold and candidate counts differ");
  }
  OracleReport report;
  std::vector<RawTree> picked;
  picked.reserve(gold.size());
  for (size_t i = 0; i < gold.size(); ++i) {
    if (candidates[i].empty()) throw Error("oracle_f1: empty candidate list");
    int best = 0;
    double best_f1 = sentence_f1(gold[i], candidates[i][0]);
    for (size_t c = 1; c < candidates[i].size(); ++c) {
      double f1 = sentence_f1(gold[i], candidates[i][c]);
      if (f1 > best_f1) {
        best_f1 = f1;
        best = static_cast<int>(c);
      }
    }
    report.best_indices.push_back(best);
    picked.push_back(candidates[i][best]);
  }
  report.report = parseval(gold, picked, max_len);
  report.f1 = report.report.f1;
  return report;
}

}  // namespace lpcfg
