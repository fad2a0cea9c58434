#include "guardfl/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "guardfl/errors.hpp"

namespace guardfl {

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    acc += d * d;
  }
  return acc;
}

Matrix init_plus_plus(const Matrix& points, int k, RngStream& rng) {
  const std::size_t n = points.rows();
  Matrix centers(k, points.cols());
  std::size_t first = rng.uniform_int(n);
  std::copy(points.row(first).begin(), points.row(first).end(), centers.row(0).begin());

  Vec min_dist(n, std::numeric_limits<double>::infinity());
  for (int c = 1; c < k; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      min_dist[i] = std::min(min_dist[i], squared_distance(points.row(i), centers.row(c - 1)));
      total += min_dist[i];
    }
    std::size_t chosen = 0;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double cumulative = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        cumulative += min_dist[i];
        if (cumulative >= target) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = rng.uniform_int(n);
    }
    std::copy(points.row(chosen).begin(), points.row(chosen).end(), centers.row(c).begin());
  }
  return centers;
}

KMeansResult lloyd(const Matrix& points, int k, RngStream& rng, int max_iter) {
  const std::size_t n = points.rows();
  const std::size_t dim = points.cols();
  KMeansResult result;
  result.centers = init_plus_plus(points, k, rng);
  result.assignment.assign(n, 0);

  for (int iter = 0; iter < max_iter; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      double best_dist = squared_distance(points.row(i), result.centers.row(0));
      for (int c = 1; c < k; ++c) {
        const double d = squared_distance(points.row(i), result.centers.row(c));
        if (d < best_dist) {
          best_dist = d;
          best = c;
        }
      }
      if (result.assignment[i] != best) {
        result.assignment[i] = best;
        changed = true;
      }
    }

    Matrix sums(k, dim);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[result.assignment[i]];
      axpy(1.0, points.row(i), sums.row(result.assignment[i]));
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty center at the point farthest from its center.
        std::size_t farthest = 0;
        double best = -1.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double d =
              squared_distance(points.row(i), result.centers.row(result.assignment[i]));
          if (d > best) {
            best = d;
            farthest = i;
          }
        }
        std::copy(points.row(farthest).begin(), points.row(farthest).end(),
                  result.centers.row(c).begin());
        result.assignment[farthest] = c;
        changed = true;
        continue;
      }
      for (std::size_t j = 0; j < dim; ++j) {
        result.centers(c, j) = sums(c, j) / static_cast<double>(counts[c]);
      }
    }
    if (!changed && iter > 0) break;
  }

  result.inertia = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    result.inertia += squared_distance(points.row(i), result.centers.row(result.assignment[i]));
  }
  return result;
}

}  // namespace

KMeansResult kmeans(const Matrix& points, int k, RngStream& rng,
                    int restarts, int max_iter) {
  if (k < 1) throw ConfigError("kmeans: k must be >= 1");
  if (points.rows() == 0) throw DataError("kmeans: no points");
  if (static_cast<std::size_t>(k) > points.rows()) {
    k = static_cast<int>(points.rows());
  }

  KMeansResult best;
  bool have_best = false;
  for (int r = 0; r < restarts; ++r) {
    KMeansResult candidate = lloyd(points, k, rng, max_iter);
    if (!have_best || candidate.inertia < best.inertia) {
      best = std::move(candidate);
      have_best = true;
    }
  }
  return best;
}

}  // namespace guardfl
