#pragma once

#include "guardfl/linalg.hpp"

namespace guardfl {

// Density-based hierarchical cluster count: mutual-reachability
// single-linkage tree, condensed at min_cluster_size, flat clusters picked
// by excess-of-mass stability (root selectable). Returns the number of
// extracted clusters (>= 1 for any non-empty input).
int count_density_clusters(const Matrix& points, int min_cluster_size = 2);

// Cluster count used by the round's clustering step: floor of 2 applied to
// the density-based estimate over the sub-graph's feature rows.
int estimate_num_clusters(const Matrix& sub_features);

}  // namespace guardfl
