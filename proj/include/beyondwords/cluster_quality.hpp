#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <vector>

#include "beyondwords/errors.hpp"
#include "beyondwords/linalg.hpp"

namespace beyondwords {

struct ClusterQuality {
  double ch_index = 0;
  double db_index = 0;
  double mean_silhouette = 0;
  std::vector<double> per_point_silhouette;
};

struct SilhouetteResult {
  std::vector<double> per_point;
  double mean = 0;
};

namespace detail {

// Number of clusters implied by labels in [0, k); every label must be used.
inline int cluster_count(const std::vector<int>& labels, Eigen::Index n, const char* who) {
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw NumericError(std::string(who) + ": label count does not match row count");
  }
  if (labels.empty()) throw ConfigError(std::string(who) + ": no points");
  const int k = *std::max_element(labels.begin(), labels.end()) + 1;
  if (*std::min_element(labels.begin(), labels.end()) < 0) {
    throw ConfigError(std::string(who) + ": negative label");
  }
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];
  for (int c = 0; c < k; ++c) {
    if (counts[static_cast<std::size_t>(c)] == 0) {
      throw ConfigError(std::string(who) + ": cluster " + std::to_string(c) + " is empty");
    }
  }
  return k;
}

template <typename Derived>
MatrixXd cluster_means(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& labels, int k,
                       std::vector<int>& counts) {
  MatrixXd c = MatrixXd::Zero(k, x.cols());
  counts.assign(static_cast<std::size_t>(k), 0);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    c.row(labels[static_cast<std::size_t>(i)]) += x.row(i).template cast<double>();
    ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  }
  for (int j = 0; j < k; ++j) c.row(j) /= counts[static_cast<std::size_t>(j)];
  return c;
}

}  // namespace detail

/// s(i) = (b - a) / max(a, b) with Euclidean distances; points in singleton
/// clusters score 0, as do points with a = b = 0.
template <typename Derived>
SilhouetteResult silhouette(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& labels) {
  const Eigen::Index n = x.rows();
  const int k = detail::cluster_count(labels, n, "silhouette");
  if (k < 2) throw ConfigError("silhouette: need at least two clusters");
  std::vector<int> counts(static_cast<std::size_t>(k), 0);
  for (int l : labels) ++counts[static_cast<std::size_t>(l)];

  SilhouetteResult out;
  out.per_point.resize(static_cast<std::size_t>(n));
  std::vector<double> sums(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < n; ++i) {
    const int own = labels[static_cast<std::size_t>(i)];
    if (counts[static_cast<std::size_t>(own)] == 1) {
      out.per_point[static_cast<std::size_t>(i)] = 0.0;
      continue;
    }
    std::fill(sums.begin(), sums.end(), 0.0);
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == i) continue;
      sums[static_cast<std::size_t>(labels[static_cast<std::size_t>(j)])] +=
          (x.row(i) - x.row(j)).template cast<double>().norm();
    }
    const double a = sums[static_cast<std::size_t>(own)] / (counts[static_cast<std::size_t>(own)] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (int c = 0; c < k; ++c) {
      if (c != own) b = std::min(b, sums[static_cast<std::size_t>(c)] / counts[static_cast<std::size_t>(c)]);
    }
    const double denom = std::max(a, b);
    out.per_point[static_cast<std::size_t>(i)] = denom > 0 ? (b - a) / denom : 0.0;
  }
  double total = 0;
  for (double s : out.per_point) total += s;
  out.mean = total / static_cast<double>(n);
  return out;
}

/// Tr(B) / Tr(W) * (N - k) / (k - 1); +infinity when every cluster is a
/// single repeated point.
template <typename Derived>
double ch_index(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& labels) {
  const Eigen::Index n = x.rows();
  const int k = detail::cluster_count(labels, n, "ch_index");
  if (k < 2 || k >= n) throw ConfigError("ch_index: need 2 <= k < N");
  std::vector<int> counts;
  const MatrixXd centroids = detail::cluster_means(x, labels, k, counts);
  const Eigen::RowVectorXd mean = x.template cast<double>().colwise().mean();
  double between = 0;
  for (int c = 0; c < k; ++c) {
    between += counts[static_cast<std::size_t>(c)] * (centroids.row(c) - mean).squaredNorm();
  }
  double within = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    within += (x.row(i).template cast<double>() - centroids.row(labels[static_cast<std::size_t>(i)]))
                  .squaredNorm();
  }
  if (within == 0.0) return std::numeric_limits<double>::infinity();
  return (between / within) * static_cast<double>(n - k) / static_cast<double>(k - 1);
}

/// Mean over clusters of max_j (s_i + s_j) / d(c_i, c_j), with s the mean
/// distance of members to their centroid.
template <typename Derived>
double db_index(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& labels) {
  const Eigen::Index n = x.rows();
  const int k = detail::cluster_count(labels, n, "db_index");
  if (k < 2) throw ConfigError("db_index: need at least two clusters");
  std::vector<int> counts;
  const MatrixXd centroids = detail::cluster_means(x, labels, k, counts);
  std::vector<double> scatter(static_cast<std::size_t>(k), 0.0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const int c = labels[static_cast<std::size_t>(i)];
    scatter[static_cast<std::size_t>(c)] += (x.row(i).template cast<double>() - centroids.row(c)).norm();
  }
  for (int c = 0; c < k; ++c) scatter[static_cast<std::size_t>(c)] /= counts[static_cast<std::size_t>(c)];

  double total = 0;
  for (int i = 0; i < k; ++i) {
    double worst = 0;
    for (int j = 0; j < k; ++j) {
      if (i == j) continue;
      const double d = (centroids.row(i) - centroids.row(j)).norm();
      if (d == 0.0) {
        throw NumericError("db_index: clusters " + std::to_string(std::min(i, j)) + " and " +
                           std::to_string(std::max(i, j)) + " have coincident centroids");
      }
      worst = std::max(worst, (scatter[static_cast<std::size_t>(i)] + scatter[static_cast<std::size_t>(j)]) / d);
    }
    total += worst;
  }
  return total / k;
}

template <typename Derived>
ClusterQuality evaluate_quality(const Eigen::MatrixBase<Derived>& x, const std::vector<int>& labels) {
  ClusterQuality q;
  q.ch_index = ch_index(x, labels);
  q.db_index = db_index(x, labels);
  auto s = silhouette(x, labels);
  q.mean_silhouette = s.mean;
  q.per_point_silhouette = std::move(s.per_point);
  return q;
}

/// Adjusted Rand index between two labelings of the same points.
double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

}  // namespace beyondwords
