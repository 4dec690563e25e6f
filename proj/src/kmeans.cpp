#include "lpcfg/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

#include "lpcfg/errors.hpp"
#include "lpcfg/rng.hpp"

namespace lpcfg {

namespace {

int count_distinct_rows(const Eigen::MatrixXd& points) {
  const int n = static_cast<int>(points.rows());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  auto less = [&](int a, int b) {
    for (int j = 0; j < points.cols(); ++j) {
      if (points(a, j) != points(b, j)) return points(a, j) < points(b, j);
    }
    return false;
  };
  std::sort(order.begin(), order.end(), less);
  int distinct = n > 0 ? 1 : 0;
  for (int i = 1; i < n; ++i) {
    if (less(order[i - 1], order[i])) ++distinct;
  }
  return distinct;
}

struct Run {
  Eigen::MatrixXd centroids;
  std::vector<int> assignment;
  double objective;
  std::vector<double> trace;
};

Run lloyd_run(const Eigen::MatrixXd& points, int m, RandomSource& rng) {
  const int n = static_cast<int>(points.rows());
  Eigen::MatrixXd centroids(m, points.cols());

  // k-means++ seeding.
  std::vector<double> dist2(n, std::numeric_limits<double>::infinity());
  int first = static_cast<int>(rng.uniform_below(n));
  centroids.row(0) = points.row(first);
  for (int c = 1; c < m; ++c) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double d = (points.row(i) - centroids.row(c - 1)).squaredNorm();
      dist2[i] = std::min(dist2[i], d);
      total += dist2[i];
    }
    int pick;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      double cum = 0.0;
      pick = n - 1;
      for (int i = 0; i < n; ++i) {
        cum += dist2[i];
        if (u < cum) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<int>(rng.uniform_below(n));
    }
    centroids.row(c) = points.row(pick);
  }

  Run run;
  run.assignment.assign(n, -1);
  std::vector<int> previous;
  const int max_iterations = 300;
  for (int iter = 0; iter < max_iterations; ++iter) {
    // Assignment step; ties go to the lowest cluster id.
    double objective = 0.0;
    for (int i = 0; i < n; ++i) {
      int best = 0;
      double best_d = (points.row(i) - centroids.row(0)).squaredNorm();
      for (int c = 1; c < m; ++c) {
        double d = (points.row(i) - centroids.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      run.assignment[i] = best;
      objective += best_d;
    }
    run.trace.push_back(objective);
    if (run.assignment == previous) break;
    previous = run.assignment;

    // Update step.
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(m, points.cols());
    std::vector<int64_t> counts(m, 0);
    for (int i = 0; i < n; ++i) {
      sums.row(run.assignment[i]) += points.row(i);
      ++counts[run.assignment[i]];
    }
    std::vector<double> current(n);
    for (int i = 0; i < n; ++i) {
      current[i] = (points.row(i) - centroids.row(run.assignment[i])).squaredNorm();
    }
    for (int c = 0; c < m; ++c) {
      if (counts[c] > 0) {
        centroids.row(c) = sums.row(c) / static_cast<double>(counts[c]);
      } else {
        // Re-seed an empty cluster to the farthest point.
        int far = 0;
        for (int i = 1; i < n; ++i) {
          if (current[i] > current[far]) far = i;
        }
        centroids.row(c) = points.row(far);
        current[far] = 0.0;
      }
    }
  }
  run.centroids = std::move(centroids);
  run.objective = run.trace.back();
  return run;
}

}  // namespace

ClusteringResult kmeans(const Eigen::MatrixXd& points, int m, int restarts,
                        uint64_t seed) {
  const int n = static_cast<int>(points.rows());
  if (n < 1) throw Error("kmeans requires at least one point");
  if (m < 1) throw Error("kmeans requires m >= 1");
  if (restarts < 1) restarts = 1;
  int m_eff = std::min(m, count_distinct_rows(points));

  Run best;
  bool have = false;
  for (int r = 0; r < restarts; ++r) {
    RandomSource rng(derive_seed(seed, "kmeans-restart-" + std::to_string(r)));
    Run run = lloyd_run(points, m_eff, rng);
    if (!have || run.objective < best.objective) {
      best = std::move(run);
      have = true;
    }
  }

  ClusteringResult result;
  result.centroids = std::move(best.centroids);
  result.assignment = std::move(best.assignment);
  result.objective_trace = std::move(best.trace);

  // Recompute the objective from the final state so it is exactly the sum of
  // squared distances to the reported centroids.
  double objective = 0.0;
  for (int i = 0; i < n; ++i) {
    objective +=
        (points.row(i) - result.centroids.row(result.assignment[i])).squaredNorm();
  }
  result.objective = objective;
  return result;
}

}  // namespace lpcfg
