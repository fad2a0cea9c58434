#include "guardfl/hdbscan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "guardfl/errors.hpp"

namespace guardfl {

namespace {

constexpr int kMinSamples = 2;

struct MergeNode {
  int left = -1;
  int right = -1;
  double dist = 0.0;
  int size = 1;
};

struct CondensedCluster {
  int parent = -1;
  int child_a = -1;
  int child_b = -1;
  double birth_lambda = 0.0;
  double stability = 0.0;
};

double lambda_of(double dist) { return 1.0 / std::max(dist, 1e-12); }

// Single-linkage merge tree over mutual-reachability distances. Leaves are
// 0..n-1; merge i lives at index n+i.
std::vector<MergeNode> build_linkage(const Matrix& mreach) {
  const int n = static_cast<int>(mreach.rows());

  // MST via Prim on the dense mutual-reachability matrix.
  std::vector<bool> in_tree(n, false);
  Vec best_dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> best_from(n, 0);
  std::vector<std::tuple<double, int, int>> edges;
  in_tree[0] = true;
  for (int j = 1; j < n; ++j) {
    best_dist[j] = mreach(0, j);
    best_from[j] = 0;
  }
  for (int step = 1; step < n; ++step) {
    int pick = -1;
    for (int j = 0; j < n; ++j) {
      if (!in_tree[j] && (pick < 0 || best_dist[j] < best_dist[pick])) pick = j;
    }
    edges.emplace_back(best_dist[pick], best_from[pick], pick);
    in_tree[pick] = true;
    for (int j = 0; j < n; ++j) {
      if (!in_tree[j] && mreach(pick, j) < best_dist[j]) {
        best_dist[j] = mreach(pick, j);
        best_from[j] = pick;
      }
    }
  }
  std::sort(edges.begin(), edges.end());

  std::vector<MergeNode> nodes(2 * n - 1);
  std::vector<int> representative(2 * n - 1);
  std::iota(representative.begin(), representative.end(), 0);
  // Find with path halving over current cluster representatives.
  auto find = [&](int x) {
    while (representative[x] != x) {
      representative[x] = representative[representative[x]];
      x = representative[x];
    }
    return x;
  };

  int next = n;
  for (const auto& [dist, a, b] : edges) {
    const int ra = find(a);
    const int rb = find(b);
    nodes[next].left = ra;
    nodes[next].right = rb;
    nodes[next].dist = dist;
    nodes[next].size = nodes[ra].size + nodes[rb].size;
    representative[ra] = representative[rb] = next;
    ++next;
  }
  return nodes;
}

void condense(const std::vector<MergeNode>& nodes, int node_index, int cluster,
              int min_cluster_size, std::vector<CondensedCluster>& clusters) {
  const MergeNode& node = nodes[node_index];
  const double lambda = lambda_of(node.dist);
  const int size_left = nodes[node.left].size;
  const int size_right = nodes[node.right].size;

  if (size_left >= min_cluster_size && size_right >= min_cluster_size) {
    // True split: every point leaves the parent here, two new clusters born.
    clusters[cluster].stability +=
        (size_left + size_right) * (lambda - clusters[cluster].birth_lambda);
    const int child_a = static_cast<int>(clusters.size());
    clusters.push_back({cluster, -1, -1, lambda, 0.0});
    const int child_b = static_cast<int>(clusters.size());
    clusters.push_back({cluster, -1, -1, lambda, 0.0});
    clusters[cluster].child_a = child_a;
    clusters[cluster].child_b = child_b;
    condense(nodes, node.left, child_a, min_cluster_size, clusters);
    condense(nodes, node.right, child_b, min_cluster_size, clusters);
    return;
  }

  for (int child : {node.left, node.right}) {
    if (nodes[child].size < min_cluster_size) {
      clusters[cluster].stability +=
          nodes[child].size * (lambda - clusters[cluster].birth_lambda);
    } else {
      condense(nodes, child, cluster, min_cluster_size, clusters);
    }
  }
}

}  // namespace

int count_density_clusters(const Matrix& points, int min_cluster_size) {
  const int n = static_cast<int>(points.rows());
  if (n == 0) throw DataError("count_density_clusters: no points");
  if (n == 1) return 1;
  if (min_cluster_size < 2) throw ConfigError("count_density_clusters: min_cluster_size >= 2");

  Matrix dist(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      dist(i, j) = dist(j, i) = l2_distance(points.row(i), points.row(j));
    }
  }

  // Core distance: k-th nearest other point, k clamped to the neighborhood.
  Vec core(n);
  for (int i = 0; i < n; ++i) {
    Vec others;
    others.reserve(n - 1);
    for (int j = 0; j < n; ++j) {
      if (j != i) others.push_back(dist(i, j));
    }
    std::sort(others.begin(), others.end());
    const std::size_t k = std::min<std::size_t>(kMinSamples, others.size());
    core[i] = others[k - 1];
  }

  Matrix mreach(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double m = std::max({core[i], core[j], dist(i, j)});
      mreach(i, j) = mreach(j, i) = m;
    }
  }

  const std::vector<MergeNode> linkage = build_linkage(mreach);
  std::vector<CondensedCluster> clusters;
  clusters.push_back({-1, -1, -1, 0.0, 0.0});  // root, born at lambda 0
  condense(linkage, 2 * n - 2, 0, min_cluster_size, clusters);

  // Excess-of-mass selection, children created after parents so a reverse
  // sweep sees child totals first. Ties keep the parent.
  std::vector<double> subtree(clusters.size(), 0.0);
  std::vector<bool> selected(clusters.size(), false);
  for (int c = static_cast<int>(clusters.size()) - 1; c >= 0; --c) {
    if (clusters[c].child_a < 0) {
      subtree[c] = clusters[c].stability;
      selected[c] = true;
      continue;
    }
    const double child_total = subtree[clusters[c].child_a] + subtree[clusters[c].child_b];
    if (clusters[c].stability >= child_total) {
      subtree[c] = clusters[c].stability;
      selected[c] = true;
    } else {
      subtree[c] = child_total;
    }
  }

  // Count selected clusters without a selected ancestor.
  int count = 0;
  std::vector<int> stack = {0};
  while (!stack.empty()) {
    const int c = stack.back();
    stack.pop_back();
    if (selected[c]) {
      ++count;
      continue;
    }
    if (clusters[c].child_a >= 0) {
      stack.push_back(clusters[c].child_a);
      stack.push_back(clusters[c].child_b);
    }
  }
  return count;
}

int estimate_num_clusters(const Matrix& sub_features) {
  if (sub_features.rows() < 2) throw GraphError("estimate_num_clusters: need >= 2 clients");
  return std::max(2, count_density_clusters(sub_features, 2));
}

}  // namespace guardfl
