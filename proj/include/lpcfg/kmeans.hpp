#ifndef LPCFG_KMEANS_HPP
#define LPCFG_KMEANS_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace lpcfg {

struct ClusteringResult {
  Eigen::MatrixXd centroids;       // clusters x dim
  std::vector<int> assignment;     // point -> cluster id
  double objective;                // sum of squared distances
  std::vector<double> objective_trace;  // per Lloyd iteration, winning restart

  int clusters() const { return static_cast<int>(centroids.rows()); }
};

// Lloyd k-means with k-means++ seeding, best of `restarts` runs by objective.
// Each run iterates to an assignment fixpoint or 300 iterations; empty
// clusters are re-seeded to the farthest point. When m exceeds the number of
// distinct points the result uses that smaller cluster count. Points are
// rows. Deterministic given the seed; ties in assignment go to the lowest
// cluster id.
ClusteringResult kmeans(const Eigen::MatrixXd& points, int m, int restarts,
                        uint64_t seed);

}  // namespace lpcfg

#endif  // LPCFG_KMEANS_HPP
