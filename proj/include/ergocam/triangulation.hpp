#pragma once

// Linear (DLT) triangulation of one point from two or more projective views.

#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SVD>

#include "ergocam/camera_geometry.hpp"
#include "ergocam/error.hpp"

namespace ergocam {

template <typename Scalar> using MatX4 = Eigen::Matrix<Scalar, Eigen::Dynamic, 4>;

template <typename Scalar>
struct Observation2D {
  std::string camera_id;
  Vec2<Scalar> uv = Vec2<Scalar>::Zero();
  Mat34<Scalar> projection = Mat34<Scalar>::Zero();
};

template <typename Scalar>
Observation2D<Scalar> make_observation(const CameraModel<Scalar>& cam, const Vec2<Scalar>& uv) {
  return {cam.id(), uv, cam.projection()};
}

template <typename Scalar>
struct TriangulatedPoint {
  Vec3<Scalar> xyz = Vec3<Scalar>::Zero();
  // Smallest singular value of the (row-normalized) DLT matrix.
  Scalar residual_norm = 0;
  int n_views = 0;
  // Unit-norm null-space estimate before dehomogenization.
  Vec4<Scalar> homogeneous = Vec4<Scalar>::Zero();
};

/// Stacks the rows (u k3 - k1) and (v k3 - k2) of every observation, each
/// scaled to unit Euclidean norm.
template <typename Scalar>
MatX4<Scalar> build_dlt_matrix(std::span<const Observation2D<Scalar>> obs) {
  if (obs.size() < 2) {
    throw Error(ErrorCode::kInsufficientViews,
                "build_dlt_matrix: need at least 2 observations, got " + std::to_string(obs.size()));
  }
  MatX4<Scalar> a(2 * static_cast<Eigen::Index>(obs.size()), 4);
  for (std::size_t i = 0; i < obs.size(); ++i) {
    const auto& o = obs[i];
    if (!o.uv.allFinite() || !o.projection.allFinite()) {
      throw Error(ErrorCode::kValidation,
                  "build_dlt_matrix: non-finite observation from camera '" + o.camera_id + "'");
    }
    const auto k1 = o.projection.row(0);
    const auto k2 = o.projection.row(1);
    const auto k3 = o.projection.row(2);
    const Eigen::Index r = 2 * static_cast<Eigen::Index>(i);
    a.row(r) = o.uv(0) * k3 - k1;
    a.row(r + 1) = o.uv(1) * k3 - k2;
    for (Eigen::Index rr : {r, r + 1}) {
      const Scalar n = a.row(rr).norm();
      if (n > Scalar(0)) a.row(rr) /= n;
    }
  }
  return a;
}

/// Minimizes |A h| over unit-norm h through the SVD of A and dehomogenizes.
template <typename Scalar>
TriangulatedPoint<Scalar> solve_dlt(const MatX4<Scalar>& a) {
  if (a.rows() < 4) {
    throw Error(ErrorCode::kInsufficientViews, "solve_dlt: need at least 4 rows");
  }
  Eigen::JacobiSVD<MatX4<Scalar>> svd(a, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  // Rank below 3 leaves a pencil of solutions (e.g. coincident centers).
  if (s(0) <= Scalar(0) || s(2) <= s(0) * Scalar(1e-10)) {
    throw Error(ErrorCode::kDegenerateGeometry, "solve_dlt: DLT matrix has rank < 3");
  }
  TriangulatedPoint<Scalar> out;
  out.homogeneous = svd.matrixV().col(3);
  if (std::abs(out.homogeneous(3)) < Scalar(1e-12)) {
    throw Error(ErrorCode::kPointAtInfinity, "solve_dlt: solution lies at infinity");
  }
  out.xyz = out.homogeneous.template head<3>() / out.homogeneous(3);
  out.residual_norm = s(3);
  out.n_views = static_cast<int>(a.rows() / 2);
  return out;
}

template <typename Scalar>
TriangulatedPoint<Scalar> triangulate_dlt(std::span<const Observation2D<Scalar>> obs) {
  const MatX4<Scalar> a = build_dlt_matrix(obs);
  // Cameras sharing one center satisfy every row at that center too, so the
  // noisy system would collapse onto it instead of failing the rank test.
  const auto center = [](const Mat34<Scalar>& k) -> Vec3<Scalar> {
    return -k.template leftCols<3>().partialPivLu().solve(k.col(3));
  };
  const Vec3<Scalar> c0 = center(obs[0].projection);
  bool distinct = false;
  for (std::size_t i = 1; i < obs.size() && !distinct; ++i) {
    const Vec3<Scalar> ci = center(obs[i].projection);
    distinct = (ci - c0).norm() > Scalar(1e-9) * (Scalar(1) + c0.norm());
  }
  if (!distinct) {
    throw Error(ErrorCode::kDegenerateGeometry, "triangulate_dlt: all camera centers coincide");
  }
  return solve_dlt(a);
}

template <typename Scalar>
TriangulatedPoint<Scalar> triangulate_dlt(const std::vector<Observation2D<Scalar>>& obs) {
  return triangulate_dlt(std::span<const Observation2D<Scalar>>(obs));
}

template <typename Scalar>
MatX4<Scalar> build_dlt_matrix(const std::vector<Observation2D<Scalar>>& obs) {
  return build_dlt_matrix(std::span<const Observation2D<Scalar>>(obs));
}

}  // namespace ergocam
