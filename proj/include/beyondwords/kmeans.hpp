#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "beyondwords/errors.hpp"
#include "beyondwords/linalg.hpp"

namespace beyondwords {

struct ClusterModel {
  int k = 0;
  MatrixXd centroids;            // k x r
  std::vector<int> assignments;  // n labels in [0, k)
  double inertia = 0;
  std::uint64_t seed = 0;
  int iterations = 0;
  bool converged = false;
  // Inertia after every assignment pass, first pass included.
  std::vector<double> inertia_trace;
};

namespace detail {

template <typename Derived>
int nearest_centroid(const Eigen::MatrixBase<Derived>& x, Eigen::Index i, const MatrixXd& centroids,
                     double& best_d2) {
  int best = 0;
  best_d2 = std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < centroids.rows(); ++c) {
    const double d2 = (x.row(i).template cast<double>() - centroids.row(c)).squaredNorm();
    if (d2 < best_d2) {
      best_d2 = d2;
      best = static_cast<int>(c);
    }
  }
  return best;
}

template <typename Derived>
MatrixXd kmeanspp_init(const Eigen::MatrixBase<Derived>& x, int k, std::mt19937_64& gen) {
  const Eigen::Index n = x.rows();
  MatrixXd centroids(k, x.cols());
  std::vector<bool> chosen(static_cast<std::size_t>(n), false);
  std::uniform_int_distribution<Eigen::Index> first(0, n - 1);
  Eigen::Index idx = first(gen);
  centroids.row(0) = x.row(idx).template cast<double>();
  chosen[static_cast<std::size_t>(idx)] = true;

  std::vector<double> d2(static_cast<std::size_t>(n));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < k; ++c) {
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (int j = 0; j < c; ++j) {
        best = std::min(best, (x.row(i).template cast<double>() - centroids.row(j)).squaredNorm());
      }
      d2[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    idx = -1;
    if (total > 0) {
      const double target = unit(gen) * total;
      double acc = 0;
      for (Eigen::Index i = 0; i < n; ++i) {
        acc += d2[static_cast<std::size_t>(i)];
        if (d2[static_cast<std::size_t>(i)] > 0 && acc >= target) {
          idx = i;
          break;
        }
      }
      if (idx < 0) {
        for (Eigen::Index i = n; i-- > 0;) {
          if (d2[static_cast<std::size_t>(i)] > 0) {
            idx = i;
            break;
          }
        }
      }
    }
    if (idx < 0) {
      // Every point coincides with a chosen centroid: take the next unused row.
      for (Eigen::Index i = 0; i < n; ++i) {
        if (!chosen[static_cast<std::size_t>(i)]) {
          idx = i;
          break;
        }
      }
    }
    centroids.row(c) = x.row(idx).template cast<double>();
    chosen[static_cast<std::size_t>(idx)] = true;
  }
  return centroids;
}

}  // namespace detail

/// Sum of squared distances from each row to its assigned centroid.
template <typename Derived>
double inertia(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& labels,
               const MatrixXd& centroids) {
  double total = 0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    total += (x.row(i).template cast<double>() - centroids.row(labels[static_cast<std::size_t>(i)]))
                 .squaredNorm();
  }
  return total;
}

/// Lloyd iterations from the given starting centroids. Stops when
/// assignments stop changing, when the largest centroid shift drops below
/// `tol`, or after `max_iter` updates. An emptied cluster is reseeded at the
/// point farthest from its current centroid.
template <typename Derived>
ClusterModel lloyd(const Eigen::MatrixBase<Derived>& x, const MatrixXd& initial_centroids,
                   int max_iter = 300, double tol = 1e-10) {
  const Eigen::Index n = x.rows();
  const int k = static_cast<int>(initial_centroids.rows());
  if (k < 1 || k > n) throw ConfigError("lloyd: need 1 <= k <= n");
  if (initial_centroids.cols() != x.cols()) throw NumericError("lloyd: centroid width mismatch");
  ClusterModel m;
  m.k = k;
  m.centroids = initial_centroids;
  m.assignments.assign(static_cast<std::size_t>(n), 0);
  std::vector<double> dist2(static_cast<std::size_t>(n));

  auto assign = [&]() {
    bool changed = false;
    double total = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      double d2 = 0;
      const int c = detail::nearest_centroid(x, i, m.centroids, d2);
      if (c != m.assignments[static_cast<std::size_t>(i)]) changed = true;
      m.assignments[static_cast<std::size_t>(i)] = c;
      dist2[static_cast<std::size_t>(i)] = d2;
      total += d2;
    }
    m.inertia_trace.push_back(total);
    return changed;
  };

  // Moves the centroid of every empty cluster onto the member point farthest
  // from its own centroid, taken from a cluster with more than one member.
  auto repair_empty = [&](std::vector<int>& counts) {
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      double far_d2 = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const int owner = m.assignments[static_cast<std::size_t>(i)];
        if (counts[static_cast<std::size_t>(owner)] < 2) continue;
        const double d2 = (x.row(i).template cast<double>() - m.centroids.row(owner)).squaredNorm();
        if (d2 > far_d2) {
          far_d2 = d2;
          far = i;
        }
      }
      if (far < 0) break;
      const int owner = m.assignments[static_cast<std::size_t>(far)];
      --counts[static_cast<std::size_t>(owner)];
      ++counts[static_cast<std::size_t>(c)];
      m.assignments[static_cast<std::size_t>(far)] = c;
      m.centroids.row(c) = x.row(far).template cast<double>();
    }
  };

  assign();
  for (int it = 0; it < max_iter; ++it) {
    MatrixXd sums = MatrixXd::Zero(k, x.cols());
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int c = m.assignments[static_cast<std::size_t>(i)];
      sums.row(c) += x.row(i).template cast<double>();
      ++counts[static_cast<std::size_t>(c)];
    }
    const MatrixXd previous = m.centroids;
    for (int c = 0; c < k; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) {
        m.centroids.row(c) = sums.row(c) / counts[static_cast<std::size_t>(c)];
      }
    }
    repair_empty(counts);
    const double shift = (m.centroids - previous).rowwise().norm().maxCoeff();
    m.iterations = it + 1;
    const bool changed = assign();
    if (!changed || shift < tol) {
      m.converged = true;
      break;
    }
  }

  // A final pass can empty a cluster only when max_iter ran out mid-move.
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int c : m.assignments) ++counts[static_cast<std::size_t>(c)];
  repair_empty(counts);
  m.inertia = inertia(x, m.assignments, m.centroids);
  return m;
}

/// Lloyd's algorithm from a seeded k-means++ start.
template <typename Derived>
ClusterModel kmeans(const Eigen::MatrixBase<Derived>& x, int k, std::uint64_t seed,
                    int max_iter = 300, double tol = 1e-10) {
  const Eigen::Index n = x.rows();
  if (k < 1) throw ConfigError("kmeans: k must be positive");
  if (k > n) {
    throw ConfigError("kmeans: k=" + std::to_string(k) + " exceeds " + std::to_string(n) +
                      " points");
  }
  if (!x.allFinite()) throw NumericError("kmeans: input contains non-finite values");
  std::mt19937_64 gen(seed);
  ClusterModel m = lloyd(x, detail::kmeanspp_init(x, k, gen), max_iter, tol);
  m.seed = seed;
  return m;
}

struct ElbowResult {
  int k = 0;
  bool degenerate = false;  // all inertias equal; k is the smallest interior value
  std::vector<int> ks;
  std::vector<double> inertias;
  std::vector<ClusterModel> models;  // aligned with ks
};

/// Interior k maximizing (I[k-1] - I[k]) - (I[k] - I[k+1]); ties go to the
/// smaller k.
ElbowResult elbow_from_inertias(const std::vector<int>& ks, const std::vector<double>& inertias);

template <typename Derived>
ElbowResult elbow_select(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& k_range,
                         std::uint64_t seed, int max_iter = 300, double tol = 1e-10) {
  if (k_range.size() < 3) throw ConfigError("elbow_select: need at least three k values");
  for (std::size_t i = 1; i < k_range.size(); ++i) {
    if (k_range[i] <= k_range[i - 1]) throw ConfigError("elbow_select: k_range must ascend");
  }
  std::vector<ClusterModel> models;
  std::vector<double> inertias;
  for (int k : k_range) {
    models.push_back(kmeans(x, k, seed, max_iter, tol));
    inertias.push_back(models.back().inertia);
  }
  ElbowResult r = elbow_from_inertias(k_range, inertias);
  r.models = std::move(models);
  return r;
}

}  // namespace beyondwords
