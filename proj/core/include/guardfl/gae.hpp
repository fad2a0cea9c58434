#pragma once

#include <vector>

#include "guardfl/linalg.hpp"
#include "guardfl/rng.hpp"

namespace guardfl {

struct GaeConfig {
  int latent_dim = 32;
  int hidden_dim = 64;
  double lambda_clus = 0.1;  // clustering-loss weight in [0, 1]
  int pretrain_epochs = 50;
  int joint_epochs = 100;
  double learning_rate = 1e-2;

  void validate() const;

  bool operator==(const GaeConfig&) const = default;
};

struct SubGraph {
  Matrix adjacency;             // m x m, symmetric
  Matrix features;              // m x (d1 + d2)
  std::vector<int> client_ids;  // ascending; row i belongs to client_ids[i]
};

// Rows/columns of the smoothed graph restricted to the selected ids, in
// ascending id order.
SubGraph subgraph_extract(const Matrix& features, const Matrix& adjacency,
                          const std::vector<int>& selected);

struct GaeState {
  Matrix w1;           // (d1 + d2) x hidden
  Matrix w2;           // hidden x latent
  Matrix centers;      // Q x latent
  Matrix latent;       // m x latent
  Matrix soft_assign;  // m x Q, rows sum to 1
  Matrix hard_assign;  // m x Q, one-hot rows
};

// Symmetric degree-normalized propagation matrix with self-loops.
Matrix normalized_propagation(const Matrix& adjacency);

// Two-layer graph-convolution encoder: A * relu(A * X * W1) * W2.
Matrix encode(const SubGraph& sub, const GaeState& state);

// sigmoid(Z Z^T), entries in (0, 1), symmetric.
Matrix reconstruct(const Matrix& latent);

// Gaussian-kernel soft assignment against the centers (max-subtracted
// softmax) plus its one-hot argmax form (ties to the lowest cluster).
void assign_clusters(const Matrix& latent, const Matrix& centers,
                     Matrix& soft, Matrix& hard);

struct GaeLosses {
  double rec = 0.0;
  double clus = 0.0;
  double total = 0.0;
};

// rec: binary cross-entropy between the sub-graph adjacency and its
// reconstruction (probabilities clamped at 1e-12); clus: KL(hard || soft);
// total: rec + lambda * clus.
GaeLosses gae_losses(const Matrix& e_hat, const Matrix& e_recon,
                     const Matrix& soft, const Matrix& hard, double lambda);

struct GaeGradients {
  Matrix w1;
  Matrix w2;
  Matrix centers;
};

// Analytic total-loss gradients at the given state (hard assignments
// treated as the current pseudo-labels). Centers receive gradient only
// through the clustering term.
GaeGradients gae_gradients(const SubGraph& sub, const GaeState& state, double lambda);

// Full training: seeded Gaussian init, reconstruction-only pretraining,
// K-Means center initialization on the embedding, then joint epochs on the
// total loss updating encoder weights and centers.
GaeState fit_gae(const SubGraph& sub, int num_clusters, const GaeConfig& cfg,
                 RngStream& rng);

}  // namespace guardfl
