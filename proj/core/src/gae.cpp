#include "guardfl/gae.hpp"

#include <algorithm>
#include <cmath>

#include "guardfl/errors.hpp"
#include "guardfl/kmeans.hpp"

namespace guardfl {

void GaeConfig::validate() const {
  if (latent_dim < 2) throw ConfigError("gae: latent_dim must be >= 2");
  if (hidden_dim < 1) throw ConfigError("gae: hidden_dim must be >= 1");
  if (lambda_clus < 0.0 || lambda_clus > 1.0) throw ConfigError("gae: lambda_clus in [0, 1]");
  if (pretrain_epochs < 0 || joint_epochs < 0) throw ConfigError("gae: epochs must be >= 0");
  if (learning_rate <= 0.0) throw ConfigError("gae: learning_rate must be positive");
}

SubGraph subgraph_extract(const Matrix& features, const Matrix& adjacency,
                          const std::vector<int>& selected) {
  if (selected.empty()) throw GraphError("subgraph_extract: empty selection");
  std::vector<int> ids = selected;
  std::sort(ids.begin(), ids.end());
  for (int id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= features.rows()) {
      throw GraphError("subgraph_extract: id out of range");
    }
  }
  SubGraph sub;
  sub.client_ids = ids;
  sub.features = Matrix(ids.size(), features.cols());
  sub.adjacency = Matrix(ids.size(), ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    auto src = features.row(ids[i]);
    std::copy(src.begin(), src.end(), sub.features.row(i).begin());
    for (std::size_t j = 0; j < ids.size(); ++j) {
      sub.adjacency(i, j) = adjacency(ids[i], ids[j]);
    }
  }
  return sub;
}

Matrix normalized_propagation(const Matrix& adjacency) {
  const std::size_t m = adjacency.rows();
  Matrix with_loops = adjacency;
  for (std::size_t i = 0; i < m; ++i) with_loops(i, i) += 1.0;
  Vec inv_sqrt_degree(m);
  for (std::size_t i = 0; i < m; ++i) {
    double degree = 0.0;
    for (std::size_t j = 0; j < m; ++j) degree += with_loops(i, j);
    inv_sqrt_degree[i] = 1.0 / std::sqrt(degree);  // degree >= 1 via self-loop
  }
  Matrix out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      out(i, j) = inv_sqrt_degree[i] * with_loops(i, j) * inv_sqrt_degree[j];
    }
  }
  return out;
}

namespace {

struct Forward {
  Matrix propagation;  // A
  Matrix u;            // A X
  Matrix s1;           // A X W1 (pre-activation)
  Matrix h;            // relu(s1)
  Matrix v;            // A h
  Matrix z;            // A h W2
};

Forward forward_pass(const SubGraph& sub, const Matrix& w1, const Matrix& w2) {
  Forward f;
  f.propagation = normalized_propagation(sub.adjacency);
  f.u = matmul(f.propagation, sub.features);
  f.s1 = matmul(f.u, w1);
  f.h = f.s1;
  for (double& x : f.h.data()) x = std::max(x, 0.0);
  f.v = matmul(f.propagation, f.h);
  f.z = matmul(f.v, w2);
  return f;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// dL_rec/dZ via the reconstruction logits: with S = Z Z^T and the BCE loss,
// dL/dS = sigmoid(S) - E_hat, symmetric, so dL/dZ = 2 (dL/dS) Z.
Matrix reconstruction_z_gradient(const Matrix& e_hat, const Matrix& z) {
  const std::size_t m = z.rows();
  Matrix grad_s(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      grad_s(i, j) = sigmoid(dot(z.row(i), z.row(j))) - e_hat(i, j);
    }
  }
  Matrix grad_z = matmul(grad_s, z);
  for (double& x : grad_z.data()) x *= 2.0;
  return grad_z;
}

// Clustering-loss gradients with the hard assignment held fixed.
void clustering_gradients(const Matrix& z, const Matrix& centers,
                          const Matrix& soft, const Matrix& hard,
                          Matrix& grad_z, Matrix& grad_centers) {
  const std::size_t m = z.rows();
  const std::size_t q = centers.rows();
  grad_z = Matrix(m, z.cols());
  grad_centers = Matrix(q, centers.cols());
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      const double coeff = soft(i, j) - hard(i, j);
      for (std::size_t d = 0; d < z.cols(); ++d) {
        const double diff = z(i, d) - centers(j, d);
        grad_z(i, d) += -coeff * diff;
        grad_centers(j, d) += coeff * diff;
      }
    }
  }
}

// Backprop of a dL/dZ through the encoder.
void encoder_gradients(const Forward& f, const Matrix& w2, const Matrix& grad_z,
                       Matrix& grad_w1, Matrix& grad_w2) {
  grad_w2 = matmul(transpose(f.v), grad_z);
  Matrix grad_v = matmul(grad_z, transpose(w2));
  Matrix grad_h = matmul(f.propagation, grad_v);  // A is symmetric
  for (std::size_t i = 0; i < grad_h.data().size(); ++i) {
    if (f.s1.data()[i] <= 0.0) grad_h.data()[i] = 0.0;
  }
  grad_w1 = matmul(transpose(f.u), grad_h);
}

}  // namespace

Matrix encode(const SubGraph& sub, const GaeState& state) {
  return forward_pass(sub, state.w1, state.w2).z;
}

Matrix reconstruct(const Matrix& latent) {
  const std::size_t m = latent.rows();
  Matrix out(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    out(i, i) = sigmoid(dot(latent.row(i), latent.row(i)));
    for (std::size_t j = i + 1; j < m; ++j) {
      const double v = sigmoid(dot(latent.row(i), latent.row(j)));
      out(i, j) = out(j, i) = v;
    }
  }
  return out;
}

void assign_clusters(const Matrix& latent, const Matrix& centers,
                     Matrix& soft, Matrix& hard) {
  const std::size_t m = latent.rows();
  const std::size_t q = centers.rows();
  if (q == 0) throw ConfigError("assign_clusters: need at least one center");
  soft = Matrix(m, q);
  hard = Matrix(m, q);
  for (std::size_t i = 0; i < m; ++i) {
    Vec logit(q);
    for (std::size_t j = 0; j < q; ++j) {
      double sq = 0.0;
      for (std::size_t d = 0; d < latent.cols(); ++d) {
        const double diff = latent(i, d) - centers(j, d);
        sq += diff * diff;
      }
      logit[j] = -0.5 * sq;
    }
    const double max_logit = *std::max_element(logit.begin(), logit.end());
    double total = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      logit[j] = std::exp(logit[j] - max_logit);
      total += logit[j];
    }
    std::size_t best = 0;
    for (std::size_t j = 0; j < q; ++j) {
      soft(i, j) = logit[j] / total;
      if (soft(i, j) > soft(i, best)) best = j;
    }
    hard(i, best) = 1.0;
  }
}

GaeLosses gae_losses(const Matrix& e_hat, const Matrix& e_recon,
                     const Matrix& soft, const Matrix& hard, double lambda) {
  if (e_hat.rows() != e_recon.rows() || e_hat.cols() != e_recon.cols()) {
    throw ShapeError("gae_losses: adjacency shapes differ");
  }
  if (soft.rows() != hard.rows() || soft.cols() != hard.cols()) {
    throw ShapeError("gae_losses: assignment shapes differ");
  }
  GaeLosses losses;
  constexpr double kEps = 1e-12;
  for (std::size_t i = 0; i < e_hat.rows(); ++i) {
    for (std::size_t j = 0; j < e_hat.cols(); ++j) {
      const double p = std::clamp(e_recon(i, j), kEps, 1.0 - kEps);
      losses.rec -= e_hat(i, j) * std::log(p) + (1.0 - e_hat(i, j)) * std::log(1.0 - p);
    }
  }
  for (std::size_t i = 0; i < soft.rows(); ++i) {
    for (std::size_t j = 0; j < soft.cols(); ++j) {
      if (hard(i, j) > 0.0) {
        losses.clus += hard(i, j) * std::log(hard(i, j) / std::max(soft(i, j), kEps));
      }
    }
  }
  losses.total = losses.rec + lambda * losses.clus;
  if (!std::isfinite(losses.total)) throw NumericError("gae_losses: non-finite loss");
  return losses;
}

GaeGradients gae_gradients(const SubGraph& sub, const GaeState& state, double lambda) {
  const Forward f = forward_pass(sub, state.w1, state.w2);
  Matrix soft, hard;
  assign_clusters(f.z, state.centers, soft, hard);

  Matrix grad_z = reconstruction_z_gradient(sub.adjacency, f.z);
  Matrix clus_z, clus_centers;
  clustering_gradients(f.z, state.centers, soft, hard, clus_z, clus_centers);
  grad_z = add_scaled(grad_z, clus_z, lambda);

  GaeGradients grads;
  encoder_gradients(f, state.w2, grad_z, grads.w1, grads.w2);
  grads.centers = clus_centers;
  for (double& x : grads.centers.data()) x *= lambda;
  return grads;
}

GaeState fit_gae(const SubGraph& sub, int num_clusters, const GaeConfig& cfg,
                 RngStream& rng) {
  cfg.validate();
  if (sub.features.rows() < 2) throw GraphError("fit_gae: need at least 2 clients");
  if (num_clusters < 1) throw ConfigError("fit_gae: need at least one cluster");

  GaeState state;
  state.w1 = Matrix(sub.features.cols(), cfg.hidden_dim);
  state.w2 = Matrix(cfg.hidden_dim, cfg.latent_dim);
  for (double& x : state.w1.data()) x = rng.normal(0.0, 0.1);
  for (double& x : state.w2.data()) x = rng.normal(0.0, 0.1);

  // Phase 1: reconstruction-only pretraining.
  for (int epoch = 0; epoch < cfg.pretrain_epochs; ++epoch) {
    const Forward f = forward_pass(sub, state.w1, state.w2);
    const Matrix grad_z = reconstruction_z_gradient(sub.adjacency, f.z);
    Matrix grad_w1, grad_w2;
    encoder_gradients(f, state.w2, grad_z, grad_w1, grad_w2);
    state.w1 = add_scaled(state.w1, grad_w1, -cfg.learning_rate);
    state.w2 = add_scaled(state.w2, grad_w2, -cfg.learning_rate);
  }

  // Phase 2: K-Means centers on the embedding.
  state.latent = encode(sub, state);
  state.centers = kmeans(state.latent, num_clusters, rng).centers;

  // Phase 3: joint training of encoder and centers on the total loss.
  for (int epoch = 0; epoch < cfg.joint_epochs; ++epoch) {
    const GaeGradients grads = gae_gradients(sub, state, cfg.lambda_clus);
    state.w1 = add_scaled(state.w1, grads.w1, -cfg.learning_rate);
    state.w2 = add_scaled(state.w2, grads.w2, -cfg.learning_rate);
    state.centers = add_scaled(state.centers, grads.centers, -cfg.learning_rate);
  }

  state.latent = encode(sub, state);
  assign_clusters(state.latent, state.centers, state.soft_assign, state.hard_assign);
  gae_losses(sub.adjacency, reconstruct(state.latent), state.soft_assign,
             state.hard_assign, cfg.lambda_clus);  // finiteness check
  return state;
}

}  // namespace guardfl
