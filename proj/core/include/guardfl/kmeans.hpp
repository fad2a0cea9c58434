#pragma once

#include <vector>

#include "guardfl/linalg.hpp"
#include "guardfl/rng.hpp"

namespace guardfl {

struct KMeansResult {
  Matrix centers;               // k x dim
  std::vector<int> assignment;  // per-point center index
  double inertia = 0.0;         // sum of squared distances to assigned centers
};

// Seeded Lloyd iterations with k-means++ initialization; `restarts`
// independent runs, best inertia wins, strict comparison so ties keep the
// first run.
KMeansResult kmeans(const Matrix& points, int k, RngStream& rng,
                    int restarts = 10, int max_iter = 100);

}  // namespace guardfl
