#include <algorithm>
#include <cmath>
#include <functional>

#include "doctest.h"
#include "guardfl/errors.hpp"
#include "guardfl/gae.hpp"
#include "guardfl/hdbscan.hpp"
#include "guardfl/kmeans.hpp"
#include "guardfl/rng.hpp"

using namespace guardfl;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, RngStream& rng,
                     double scale = 1.0) {
  Matrix m(rows, cols);
  for (double& x : m.data()) x = scale * rng.normal();
  return m;
}

Matrix symmetric_adjacency(std::size_t m, RngStream& rng) {
  Matrix e(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    e(i, i) = 1.0;
    for (std::size_t j = i + 1; j < m; ++j) {
      e(i, j) = e(j, i) = rng.uniform();
    }
  }
  return e;
}

SubGraph random_subgraph(std::size_t m, std::size_t dim, RngStream& rng) {
  SubGraph sub;
  sub.features = random_matrix(m, dim, rng);
  sub.adjacency = symmetric_adjacency(m, rng);
  for (std::size_t i = 0; i < m; ++i) sub.client_ids.push_back(static_cast<int>(i));
  return sub;
}

double total_loss_at(const SubGraph& sub, const GaeState& state, double lambda) {
  const Matrix z = encode(sub, state);
  Matrix soft, hard;
  assign_clusters(z, state.centers, soft, hard);
  return gae_losses(sub.adjacency, reconstruct(z), soft, hard, lambda).total;
}

// Test-only oracle: brute-force connected components under a distance
// threshold, used to confirm the blob structure the estimator should find.
int components_under_threshold(const Matrix& points, double threshold) {
  const int n = static_cast<int>(points.rows());
  std::vector<int> parent(n);
  for (int i = 0; i < n; ++i) parent[i] = i;
  std::function<int(int)> find = [&](int x) {
    return parent[x] == x ? x : parent[x] = find(parent[x]);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (l2_distance(points.row(i), points.row(j)) <= threshold) {
        parent[find(i)] = find(j);
      }
    }
  }
  int count = 0;
  for (int i = 0; i < n; ++i) {
    if (find(i) == i) ++count;
  }
  return count;
}

Matrix blob_points(const std::vector<std::pair<double, int>>& blobs, double noise,
                   RngStream& rng) {
  std::size_t total = 0;
  for (const auto& [center, count] : blobs) total += count;
  Matrix points(total, 3);
  std::size_t row = 0;
  for (const auto& [center, count] : blobs) {
    for (int k = 0; k < count; ++k, ++row) {
      for (int d = 0; d < 3; ++d) points(row, d) = center + noise * rng.normal();
    }
  }
  return points;
}

}  // namespace

TEST_CASE("subgraph extraction restricts rows and columns in id order") {
  RngStream rng(1, "sub");
  Matrix features = random_matrix(10, 4, rng);
  Matrix adjacency = symmetric_adjacency(10, rng);

  SUBCASE("selecting everything is the identity") {
    std::vector<int> everyone;
    for (int i = 0; i < 10; ++i) everyone.push_back(i);
    const SubGraph sub = subgraph_extract(features, adjacency, everyone);
    CHECK(sub.features.data() == features.data());
    CHECK(sub.adjacency.data() == adjacency.data());
  }
  SUBCASE("selecting {3,7} pulls the 2x2 block, smallest id first") {
    const SubGraph sub = subgraph_extract(features, adjacency, {7, 3});
    CHECK(sub.client_ids == std::vector<int>{3, 7});
    CHECK(sub.adjacency(0, 0) == adjacency(3, 3));
    CHECK(sub.adjacency(0, 1) == adjacency(3, 7));
    CHECK(sub.adjacency(1, 0) == adjacency(7, 3));
    CHECK(sub.adjacency(1, 1) == adjacency(7, 7));
    CHECK(sub.features(0, 0) == features(3, 0));
    CHECK(sub.features(1, 0) == features(7, 0));
  }
  SUBCASE("empty selection errors") {
    CHECK_THROWS_AS(subgraph_extract(features, adjacency, {}), GraphError);
  }
}

TEST_CASE("encoder with empty adjacency reduces to a per-row map") {
  RngStream rng(2, "enc");
  SubGraph sub = random_subgraph(5, 6, rng);
  sub.adjacency = Matrix(5, 5);  // zero edges: propagation is the identity

  GaeState state;
  state.w1 = random_matrix(6, 7, rng, 0.3);
  state.w2 = random_matrix(7, 3, rng, 0.3);

  const Matrix z = encode(sub, state);
  REQUIRE(z.rows() == 5);
  REQUIRE(z.cols() == 3);

  // Row-by-row two-layer map must agree.
  for (std::size_t i = 0; i < 5; ++i) {
    Vec hidden(7, 0.0);
    for (std::size_t h = 0; h < 7; ++h) {
      for (std::size_t d = 0; d < 6; ++d) hidden[h] += sub.features(i, d) * state.w1(d, h);
      hidden[h] = std::max(hidden[h], 0.0);
    }
    for (std::size_t o = 0; o < 3; ++o) {
      double expected = 0.0;
      for (std::size_t h = 0; h < 7; ++h) expected += hidden[h] * state.w2(h, o);
      CHECK(z(i, o) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("encoder output shape is m x latent_dim under defaults") {
  RngStream rng(3, "enc-shape");
  const SubGraph sub = random_subgraph(9, 12, rng);
  GaeConfig cfg;
  cfg.pretrain_epochs = 1;
  cfg.joint_epochs = 1;
  RngStream fit_rng(4, "fit");
  const GaeState state = fit_gae(sub, 2, cfg, fit_rng);
  CHECK(state.latent.rows() == 9);
  CHECK(state.latent.cols() == 32);
}

TEST_CASE("encoder is permutation equivariant") {
  RngStream rng(5, "perm");
  const SubGraph sub = random_subgraph(6, 5, rng);
  GaeState state;
  state.w1 = random_matrix(5, 8, rng, 0.4);
  state.w2 = random_matrix(8, 3, rng, 0.4);
  state.centers = random_matrix(2, 3, rng);

  const std::vector<std::size_t> perm{3, 0, 5, 1, 4, 2};
  SubGraph permuted = sub;
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t d = 0; d < 5; ++d) permuted.features(i, d) = sub.features(perm[i], d);
    for (std::size_t j = 0; j < 6; ++j) {
      permuted.adjacency(i, j) = sub.adjacency(perm[i], perm[j]);
    }
  }

  const Matrix z = encode(sub, state);
  const Matrix z_perm = encode(permuted, state);
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t d = 0; d < 3; ++d) {
      CHECK(z_perm(i, d) == doctest::Approx(z(perm[i], d)).epsilon(1e-12));
    }
  }

  Matrix soft, hard, soft_perm, hard_perm;
  assign_clusters(z, state.centers, soft, hard);
  assign_clusters(z_perm, state.centers, soft_perm, hard_perm);
  const GaeLosses base = gae_losses(sub.adjacency, reconstruct(z), soft, hard, 0.1);
  const GaeLosses perm_losses =
      gae_losses(permuted.adjacency, reconstruct(z_perm), soft_perm, hard_perm, 0.1);
  CHECK(perm_losses.total == doctest::Approx(base.total).epsilon(1e-9));
  for (std::size_t i = 0; i < 6; ++i) {
    for (std::size_t q = 0; q < 2; ++q) {
      CHECK(soft_perm(i, q) == doctest::Approx(soft(perm[i], q)).epsilon(1e-9));
      CHECK(hard_perm(i, q) == hard(perm[i], q));
    }
  }
}

TEST_CASE("reconstruction is a symmetric sigmoid gram matrix") {
  SUBCASE("zero latent gives all 0.5") {
    const Matrix recon = reconstruct(Matrix(4, 3));
    for (double v : recon.data()) CHECK(v == 0.5);
  }
  SUBCASE("diagonal is at least 0.5 and symmetry is exact") {
    RngStream rng(6, "recon");
    const Matrix z = random_matrix(5, 4, rng);
    const Matrix recon = reconstruct(z);
    for (std::size_t i = 0; i < 5; ++i) {
      CHECK(recon(i, i) >= 0.5);
      for (std::size_t j = 0; j < 5; ++j) {
        CHECK(recon(i, j) == recon(j, i));
        CHECK(recon(i, j) > 0.0);
        CHECK(recon(i, j) < 1.0);
      }
    }
  }
}

TEST_CASE("soft assignment rows") {
  Matrix z(3, 2);
  z(0, 0) = 1.0;
  z(1, 0) = -1.0;
  z(2, 0) = 0.0;

  SUBCASE("single center gives all ones") {
    Matrix centers(1, 2);
    Matrix soft, hard;
    assign_clusters(z, centers, soft, hard);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(soft(i, 0) == 1.0);
      CHECK(hard(i, 0) == 1.0);
    }
  }
  SUBCASE("equidistant point splits 0.5/0.5 and breaks ties low") {
    Matrix centers(2, 2);
    centers(0, 0) = 1.0;
    centers(1, 0) = -1.0;
    Matrix soft, hard;
    assign_clusters(z, centers, soft, hard);
    CHECK(soft(2, 0) == doctest::Approx(0.5));
    CHECK(soft(2, 1) == doctest::Approx(0.5));
    CHECK(hard(2, 0) == 1.0);
    CHECK(hard(2, 1) == 0.0);
  }
  SUBCASE("point on a center with the other far away") {
    Matrix centers(2, 2);
    centers(0, 0) = 1.0;
    centers(1, 0) = 11.0;  // distance 10
    Matrix soft, hard;
    assign_clusters(z, centers, soft, hard);
    CHECK(soft(0, 0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(hard(0, 0) == 1.0);
  }
}

TEST_CASE("soft assignments are row-stochastic with one-hot argmax form") {
  RngStream rng(7, "assign-prop");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng.uniform_int(8);
    const std::size_t q = 1 + rng.uniform_int(4);
    const Matrix z = random_matrix(m, 3, rng, 2.0);
    const Matrix centers = random_matrix(q, 3, rng, 2.0);
    Matrix soft, hard;
    assign_clusters(z, centers, soft, hard);
    for (std::size_t i = 0; i < m; ++i) {
      double row_sum = 0.0;
      std::size_t hot = q;
      std::size_t argmax = 0;
      for (std::size_t j = 0; j < q; ++j) {
        CHECK(soft(i, j) > 0.0);
        CHECK(soft(i, j) <= 1.0);
        row_sum += soft(i, j);
        if (hard(i, j) == 1.0) hot = j;
        if (soft(i, j) > soft(i, argmax)) argmax = j;
      }
      CHECK(std::abs(row_sum - 1.0) < 1e-9);
      REQUIRE(hot < q);
      CHECK(hot == argmax);
    }
  }
}

TEST_CASE("losses on hand-computed cases") {
  SUBCASE("uniform half edges: rec = 4 ln 2 for m=2") {
    Matrix e_hat(2, 2, 0.5);
    Matrix e_recon(2, 2, 0.5);
    Matrix soft(2, 1, 1.0);
    Matrix hard(2, 1, 1.0);
    const GaeLosses losses = gae_losses(e_hat, e_recon, soft, hard, 0.1);
    CHECK(losses.rec == doctest::Approx(4.0 * std::log(2.0)));
    CHECK(losses.clus == 0.0);
  }
  SUBCASE("one-hot soft equal to hard zeroes the clustering loss") {
    Matrix soft(2, 2);
    soft(0, 0) = 1.0;
    soft(1, 1) = 1.0;
    const GaeLosses losses = gae_losses(Matrix(2, 2, 0.5), Matrix(2, 2, 0.5), soft, soft, 0.7);
    CHECK(losses.clus == 0.0);
  }
  SUBCASE("lambda 0 reduces total to rec") {
    Matrix soft(1, 2, 0.5);
    Matrix hard(1, 2);
    hard(0, 0) = 1.0;
    const GaeLosses losses = gae_losses(Matrix(1, 1, 0.5), Matrix(1, 1, 0.5), soft, hard, 0.0);
    CHECK(losses.total == losses.rec);
    CHECK(losses.clus > 0.0);
  }
}

TEST_CASE("clustering loss is nonnegative, zero only at matching one-hots") {
  RngStream rng(8, "clus-prop");
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 2 + rng.uniform_int(6);
    const Matrix z = random_matrix(m, 3, rng, 2.0);
    const Matrix centers = random_matrix(2, 3, rng, 2.0);
    Matrix soft, hard;
    assign_clusters(z, centers, soft, hard);
    const GaeLosses losses =
        gae_losses(Matrix(m, m, 0.5), Matrix(m, m, 0.5), soft, hard, 1.0);
    CHECK(losses.clus >= 0.0);
  }
}

TEST_CASE("cluster count estimation") {
  RngStream rng(9, "blobs");

  SUBCASE("two well-separated blobs give 2") {
    const Matrix points = blob_points({{0.0, 4}, {10.0, 4}}, 0.1, rng);
    // Oracle: distance threshold between intra (~0.3) and inter (~17)
    // scales confirms exactly two components.
    CHECK(components_under_threshold(points, 2.0) == 2);
    CHECK(count_density_clusters(points, 2) == 2);
    CHECK(estimate_num_clusters(points) == 2);
  }
  SUBCASE("three blobs give 3") {
    const Matrix points = blob_points({{0.0, 4}, {10.0, 4}, {-10.0, 4}}, 0.1, rng);
    CHECK(components_under_threshold(points, 2.0) == 3);
    CHECK(estimate_num_clusters(points) == 3);
  }
  SUBCASE("one tight blob floors to 2") {
    const Matrix points = blob_points({{0.0, 8}}, 0.1, rng);
    CHECK(count_density_clusters(points, 2) == 1);
    CHECK(estimate_num_clusters(points) == 2);
  }
  SUBCASE("m=2 floors to 2") {
    const Matrix points = blob_points({{0.0, 2}}, 0.5, rng);
    CHECK(estimate_num_clusters(points) == 2);
  }
}

TEST_CASE("kmeans centers on separated blobs") {
  RngStream rng(10, "kmeans");
  const Matrix points = blob_points({{0.0, 6}, {10.0, 6}}, 0.2, rng);
  RngStream fit_rng(11, "kmeans-fit");
  const KMeansResult result = kmeans(points, 2, fit_rng);
  // One center near 0, one near 10, on every coordinate.
  const double c0 = result.centers(0, 0);
  const double c1 = result.centers(1, 0);
  CHECK(std::abs(std::min(c0, c1)) < 1.0);
  CHECK(std::abs(std::max(c0, c1) - 10.0) < 1.0);
  CHECK(result.inertia < 10.0);
}

TEST_CASE("gae analytic gradients match central finite differences") {
  RngStream rng(12, "fd");
  SubGraph sub = random_subgraph(6, 5, rng);
  GaeConfig cfg;
  cfg.hidden_dim = 7;
  cfg.latent_dim = 3;
  cfg.pretrain_epochs = 5;
  cfg.joint_epochs = 5;
  cfg.lambda_clus = 0.1;
  RngStream fit_rng(13, "fd-fit");
  GaeState state = fit_gae(sub, 2, cfg, fit_rng);

  const GaeGradients analytic = gae_gradients(sub, state, cfg.lambda_clus);
  const double step = 1e-5;
  double max_rel = 0.0;
  auto check_block = [&](Matrix& block, const Matrix& grad) {
    for (std::size_t k = 0; k < block.data().size(); ++k) {
      const double saved = block.data()[k];
      block.data()[k] = saved + step;
      const double up = total_loss_at(sub, state, cfg.lambda_clus);
      block.data()[k] = saved - step;
      const double down = total_loss_at(sub, state, cfg.lambda_clus);
      block.data()[k] = saved;
      const double fd = (up - down) / (2.0 * step);
      const double denom = std::max({std::abs(fd), std::abs(grad.data()[k]), 1e-7});
      max_rel = std::max(max_rel, std::abs(fd - grad.data()[k]) / denom);
    }
  };
  check_block(state.w1, analytic.w1);
  check_block(state.w2, analytic.w2);
  check_block(state.centers, analytic.centers);
  CHECK(max_rel < 1e-4);
}

TEST_CASE("pretraining reduces the reconstruction loss") {
  RngStream rng(14, "pretrain");
  const SubGraph sub = random_subgraph(8, 6, rng);

  GaeConfig no_train;
  no_train.hidden_dim = 8;
  no_train.latent_dim = 4;
  no_train.pretrain_epochs = 0;
  no_train.joint_epochs = 0;
  RngStream rng_a(15, "fit");
  const GaeState initial = fit_gae(sub, 2, no_train, rng_a);
  const double loss_initial =
      gae_losses(sub.adjacency, reconstruct(initial.latent), initial.soft_assign,
                 initial.hard_assign, 0.0)
          .rec;

  GaeConfig trained = no_train;
  trained.pretrain_epochs = 50;
  RngStream rng_b(15, "fit");  // identical init stream
  const GaeState after = fit_gae(sub, 2, trained, rng_b);
  const double loss_after =
      gae_losses(sub.adjacency, reconstruct(after.latent), after.soft_assign,
                 after.hard_assign, 0.0)
          .rec;
  CHECK(loss_after <= loss_initial);
}

TEST_CASE("centers equal kmeans output when joint training is disabled") {
  RngStream rng(16, "centers");
  const SubGraph sub = random_subgraph(7, 5, rng);
  GaeConfig cfg;
  cfg.hidden_dim = 6;
  cfg.latent_dim = 3;
  cfg.pretrain_epochs = 10;
  cfg.joint_epochs = 0;
  RngStream fit_rng(17, "fit");
  const GaeState state = fit_gae(sub, 2, cfg, fit_rng);

  // Replay the stream: the same init draws, then kmeans on the fitted
  // latent reproduces the stored centers bit-for-bit (pretraining itself
  // consumes no randomness).
  RngStream replay(17, "fit");
  Matrix w1(sub.features.cols(), cfg.hidden_dim);
  Matrix w2(cfg.hidden_dim, cfg.latent_dim);
  for (double& x : w1.data()) x = replay.normal(0.0, 0.1);
  for (double& x : w2.data()) x = replay.normal(0.0, 0.1);
  const KMeansResult km = kmeans(state.latent, 2, replay);
  CHECK(state.centers.data() == km.centers.data());
}

TEST_CASE("fit rejects degenerate inputs") {
  RngStream rng(18, "degenerate");
  SubGraph sub = random_subgraph(1, 4, rng);
  GaeConfig cfg;
  RngStream fit_rng(19, "fit");
  CHECK_THROWS_AS(fit_gae(sub, 2, cfg, fit_rng), GraphError);
}
