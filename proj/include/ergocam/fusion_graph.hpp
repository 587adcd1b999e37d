#pragma once

// Graph-Laplacian fusion of per-camera landmark estimates.
//
// Nodes are ordered landmarks first (N), then cameras (M). The graph is
// bipartite: a landmark is linked to every camera that observes it. With the
// row-normalized Laplacian L, the differential coordinates of a configuration
// X are L X, and the fused configuration solves
//
//     argmin_X | [L; I] X - [delta; anchors] |^2
//
// through a prefactored left inverse of the stacked matrix.

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "ergocam/error.hpp"

namespace ergocam {

using Visibility = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar> using MatX3 = Eigen::Matrix<Scalar, Eigen::Dynamic, 3>;

/// Stable fingerprint (FNV-1a) of a camera-by-landmark visibility matrix.
inline std::uint64_t visibility_hash(const Visibility& visibility) {
  std::uint64_t h = 1469598103934665603ull;
  const auto mix = [&h](std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
      h ^= (v >> (8 * i)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  mix(static_cast<std::uint64_t>(visibility.rows()));
  mix(static_cast<std::uint64_t>(visibility.cols()));
  for (Eigen::Index j = 0; j < visibility.rows(); ++j)
    for (Eigen::Index i = 0; i < visibility.cols(); ++i) mix(visibility(j, i) ? 1u : 0u);
  return h;
}

template <typename Scalar>
struct FusionTopology {
  int n_landmarks = 0;
  int n_cameras = 0;
  Visibility adjacency;  // M x N, camera j observes landmark i
  MatX<Scalar> laplacian;  // (N+M) x (N+M)
  std::uint64_t hash = 0;

  int n_nodes() const { return n_landmarks + n_cameras; }
};

template <typename Scalar>
FusionTopology<Scalar> build_topology(const Visibility& visibility) {
  const Eigen::Index m = visibility.rows();
  const Eigen::Index n = visibility.cols();
  if (m == 0 || n == 0) {
    throw Error(ErrorCode::kValidation, "build_topology: empty visibility matrix");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!visibility.col(i).any()) {
      throw Error(ErrorCode::kUncoveredLandmark,
                  "build_topology: landmark " + std::to_string(i) + " is not observed by any camera");
    }
  }
  FusionTopology<Scalar> topo;
  topo.n_landmarks = static_cast<int>(n);
  topo.n_cameras = static_cast<int>(m);
  topo.adjacency = visibility;
  topo.hash = visibility_hash(visibility);
  topo.laplacian = MatX<Scalar>::Zero(n + m, n + m);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar w = Scalar(-1) / static_cast<Scalar>(visibility.col(i).count());
    topo.laplacian(i, i) = 1;
    for (Eigen::Index j = 0; j < m; ++j)
      if (visibility(j, i)) topo.laplacian(i, n + j) = w;
  }
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto degree = visibility.row(j).count();
    // An idle camera has no neighbors; its differential coordinate is zero.
    if (degree == 0) continue;
    const Scalar w = Scalar(-1) / static_cast<Scalar>(degree);
    topo.laplacian(n + j, n + j) = 1;
    for (Eigen::Index i = 0; i < n; ++i)
      if (visibility(j, i)) topo.laplacian(n + j, i) = w;
  }
  return topo;
}

template <typename Scalar>
struct AnchorSet {
  MatX3<Scalar> landmark_anchors;  // N x 3
  MatX3<Scalar> camera_anchors;    // M x 3
  std::uint64_t topology_hash = 0;

  MatX3<Scalar> stacked() const {
    MatX3<Scalar> a(landmark_anchors.rows() + camera_anchors.rows(), 3);
    a << landmark_anchors, camera_anchors;
    return a;
  }
};

/// Per-landmark mean of the estimates of the cameras that observe it.
/// `per_camera_estimates[j]` is N x 3; rows must be finite exactly where
/// `visibility(j, i)` is true (NaN elsewhere).
template <typename Scalar>
AnchorSet<Scalar> compute_anchors(std::span<const MatX3<Scalar>> per_camera_estimates,
                                  const Visibility& visibility,
                                  const MatX3<Scalar>& camera_positions) {
  const Eigen::Index m = visibility.rows();
  const Eigen::Index n = visibility.cols();
  if (static_cast<Eigen::Index>(per_camera_estimates.size()) != m || camera_positions.rows() != m) {
    throw Error(ErrorCode::kValidation, "compute_anchors: camera count mismatch");
  }
  AnchorSet<Scalar> anchors;
  anchors.landmark_anchors = MatX3<Scalar>::Zero(n, 3);
  anchors.camera_anchors = camera_positions;
  anchors.topology_hash = visibility_hash(visibility);
  Eigen::VectorXi counts = Eigen::VectorXi::Zero(n);
  for (Eigen::Index j = 0; j < m; ++j) {
    const auto& est = per_camera_estimates[static_cast<std::size_t>(j)];
    if (est.rows() != n) {
      throw Error(ErrorCode::kValidation, "compute_anchors: estimate row count mismatch");
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool present = est.row(i).allFinite();
      if (present != visibility(j, i)) {
        throw Error(ErrorCode::kInconsistentEstimates,
                    "compute_anchors: camera " + std::to_string(j) + ", landmark " +
                        std::to_string(i) + (present ? " has an estimate but is not visible"
                                                     : " is visible but has no estimate"));
      }
      if (present) {
        anchors.landmark_anchors.row(i) += est.row(i);
        ++counts(i);
      }
    }
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (counts(i) == 0) {
      throw Error(ErrorCode::kUncoveredLandmark,
                  "compute_anchors: landmark " + std::to_string(i) + " has no estimate");
    }
    anchors.landmark_anchors.row(i) /= static_cast<Scalar>(counts(i));
  }
  return anchors;
}

template <typename Scalar>
AnchorSet<Scalar> compute_anchors(const std::vector<MatX3<Scalar>>& per_camera_estimates,
                                  const Visibility& visibility,
                                  const MatX3<Scalar>& camera_positions) {
  return compute_anchors(std::span<const MatX3<Scalar>>(per_camera_estimates), visibility,
                         camera_positions);
}

template <typename Scalar>
struct DifferentialCoordinates {
  MatX3<Scalar> values;  // (N+M) x 3
  std::uint64_t topology_hash = 0;
};

/// delta_i = x_i - mean of x over the neighbors of node i, i.e. L x.
template <typename Scalar>
DifferentialCoordinates<Scalar> compute_delta(const FusionTopology<Scalar>& topology,
                                              const MatX3<Scalar>& configuration) {
  if (configuration.rows() != topology.n_nodes()) {
    throw Error(ErrorCode::kValidation,
                "compute_delta: configuration has " + std::to_string(configuration.rows()) +
                    " rows, topology has " + std::to_string(topology.n_nodes()) + " nodes");
  }
  return {topology.laplacian * configuration, topology.hash};
}

template <typename Scalar>
struct FusionSolver {
  MatX<Scalar> stacked;    // 2(N+M) x (N+M), [L; I]
  MatX<Scalar> prefactor;  // (N+M) x 2(N+M), (S^T S)^-1 S^T
  std::uint64_t topology_hash = 0;
  int n_landmarks = 0;
  int n_cameras = 0;
};

/// One-time left inverse of the stacked system. The identity block makes the
/// stacked matrix full column rank, so S^T S is symmetric positive definite.
template <typename Scalar>
FusionSolver<Scalar> prefactor(const FusionTopology<Scalar>& topology) {
  const Eigen::Index k = topology.n_nodes();
  FusionSolver<Scalar> solver;
  solver.stacked.resize(2 * k, k);
  solver.stacked << topology.laplacian, MatX<Scalar>::Identity(k, k);
  const MatX<Scalar> normal = solver.stacked.transpose() * solver.stacked;
  const Eigen::LLT<MatX<Scalar>> llt(normal);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::kDegenerateGeometry, "prefactor: normal matrix is not positive definite");
  }
  solver.prefactor = llt.solve(MatX<Scalar>(solver.stacked.transpose()));
  solver.topology_hash = topology.hash;
  solver.n_landmarks = topology.n_landmarks;
  solver.n_cameras = topology.n_cameras;
  return solver;
}

/// Applies the prefactored solve to b = [delta; anchors]. The first N rows of
/// the result are fused landmarks, the last M rows re-estimated cameras.
template <typename Scalar>
MatX3<Scalar> fuse(const FusionSolver<Scalar>& solver, const DifferentialCoordinates<Scalar>& delta,
                   const AnchorSet<Scalar>& anchors) {
  if (delta.topology_hash != solver.topology_hash || anchors.topology_hash != solver.topology_hash) {
    throw Error(ErrorCode::kStaleSolver, "fuse: solver was built for a different topology");
  }
  const Eigen::Index k = solver.n_landmarks + solver.n_cameras;
  if (delta.values.rows() != k || anchors.landmark_anchors.rows() != solver.n_landmarks ||
      anchors.camera_anchors.rows() != solver.n_cameras) {
    throw Error(ErrorCode::kStaleSolver, "fuse: input dimensions do not match the solver");
  }
  MatX3<Scalar> b(2 * k, 3);
  b << delta.values, anchors.landmark_anchors, anchors.camera_anchors;
  return solver.prefactor * b;
}

}  // namespace ergocam
