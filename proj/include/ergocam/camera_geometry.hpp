#pragma once

// Intrinsic-free projective cameras, stereo extrinsic composition and the
// first-camera world-frame convention.
//
// A camera maps world points into its own frame with x_cam = R * x_world + T
// and projects with K = [R | T]. Image coordinates are normalized image-plane
// units (no intrinsic matrix, no distortion). Camera frame axes follow the
// usual vision convention: +z is the optical axis, +x right, +y down.

#include <cmath>
#include <string>
#include <utility>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "ergocam/error.hpp"

namespace ergocam {

template <typename Scalar> using Vec2 = Eigen::Matrix<Scalar, 2, 1>;
template <typename Scalar> using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar> using Vec4 = Eigen::Matrix<Scalar, 4, 1>;
template <typename Scalar> using Mat3 = Eigen::Matrix<Scalar, 3, 3>;
template <typename Scalar> using Mat34 = Eigen::Matrix<Scalar, 3, 4>;

/// Tolerance used when rejecting rotation inputs.
inline constexpr double kRotationInputTolerance = 1e-8;

template <typename Derived>
bool is_rotation(const Eigen::MatrixBase<Derived>& r,
                 typename Derived::Scalar tol = kRotationInputTolerance) {
  using Scalar = typename Derived::Scalar;
  if (r.rows() != 3 || r.cols() != 3 || !r.allFinite()) return false;
  const Mat3<Scalar> gram = r.transpose() * r;
  return (gram - Mat3<Scalar>::Identity()).cwiseAbs().maxCoeff() <= tol &&
         std::abs(r.determinant() - Scalar(1)) <= tol;
}

/// Rotation matrix from an axis-angle (rotation vector) triple, radians.
template <typename Scalar>
Mat3<Scalar> rotation_from_axis_angle(const Vec3<Scalar>& axis_angle) {
  const Scalar angle = axis_angle.norm();
  if (angle == Scalar(0)) return Mat3<Scalar>::Identity();
  return Eigen::AngleAxis<Scalar>(angle, axis_angle / angle).toRotationMatrix();
}

template <typename Scalar>
Vec3<Scalar> axis_angle_from_rotation(const Mat3<Scalar>& r) {
  const Eigen::AngleAxis<Scalar> aa(r);
  return aa.axis() * aa.angle();
}

/// World-to-camera rotation for a camera at `position` whose optical axis
/// points at `target`, with image-down aligned to world -up.
template <typename Scalar>
Mat3<Scalar> look_at_rotation(const Vec3<Scalar>& position, const Vec3<Scalar>& target,
                              const Vec3<Scalar>& up = Vec3<Scalar>::UnitZ()) {
  const Vec3<Scalar> forward = (target - position).normalized();
  Vec3<Scalar> right = forward.cross(up);
  if (right.norm() < Scalar(1e-9)) {
    throw Error(ErrorCode::kValidation, "look_at: viewing direction parallel to up vector");
  }
  right.normalize();
  const Vec3<Scalar> down = forward.cross(right);
  Mat3<Scalar> r;
  r.row(0) = right.transpose();
  r.row(1) = down.transpose();
  r.row(2) = forward.transpose();
  return r;
}

template <typename Scalar>
class CameraModel {
 public:
  CameraModel() : CameraModel("", Mat3<Scalar>::Identity(), Vec3<Scalar>::Zero()) {}

  CameraModel(std::string id, const Mat3<Scalar>& rotation, const Vec3<Scalar>& translation)
      : id_(std::move(id)), rotation_(rotation), translation_(translation) {
    if (!is_rotation(rotation_, Scalar(kRotationInputTolerance))) {
      throw Error(ErrorCode::kValidation, "camera '" + id_ + "': rotation is not orthonormal");
    }
    if (!translation_.allFinite()) {
      throw Error(ErrorCode::kValidation, "camera '" + id_ + "': translation is not finite");
    }
    projection_ << rotation_, translation_;
    position_ = -rotation_.transpose() * translation_;
  }

  /// Camera from a world pose: `world_to_camera` rotation and camera center.
  static CameraModel from_center(std::string id, const Mat3<Scalar>& world_to_camera,
                                 const Vec3<Scalar>& center) {
    return CameraModel(std::move(id), world_to_camera, -world_to_camera * center);
  }

  const std::string& id() const { return id_; }
  const Mat3<Scalar>& rotation() const { return rotation_; }
  const Vec3<Scalar>& translation() const { return translation_; }
  const Mat34<Scalar>& projection() const { return projection_; }
  const Vec3<Scalar>& position() const { return position_; }

  /// Depth of a world point along the optical axis (third row of K [p; 1]).
  Scalar depth(const Vec3<Scalar>& point) const {
    return rotation_.row(2).dot(point) + translation_(2);
  }

 private:
  std::string id_;
  Mat3<Scalar> rotation_;
  Vec3<Scalar> translation_;
  Mat34<Scalar> projection_;
  Vec3<Scalar> position_;
};

/// Returns (R * R1, R * T1 + T): world-to-second-camera extrinsics from the
/// first camera's extrinsics and the first-to-second relative transform.
template <typename Scalar>
std::pair<Mat3<Scalar>, Vec3<Scalar>> compose_world_extrinsics(const Mat3<Scalar>& r1,
                                                               const Vec3<Scalar>& t1,
                                                               const Mat3<Scalar>& r,
                                                               const Vec3<Scalar>& t) {
  if (!is_rotation(r1, Scalar(kRotationInputTolerance)) ||
      !is_rotation(r, Scalar(kRotationInputTolerance))) {
    throw Error(ErrorCode::kValidation, "compose_world_extrinsics: rotation is not orthonormal");
  }
  return {r * r1, r * t1 + t};
}

template <typename Scalar>
struct StereoRig {
  std::string id;
  CameraModel<Scalar> left;
  CameraModel<Scalar> right;
  Mat3<Scalar> relative_rotation = Mat3<Scalar>::Identity();
  Vec3<Scalar> relative_translation = Vec3<Scalar>::Zero();

  /// Builds the right camera from the left camera and the relative extrinsics.
  static StereoRig make(std::string id, const CameraModel<Scalar>& left,
                        const Mat3<Scalar>& relative_rotation,
                        const Vec3<Scalar>& relative_translation) {
    auto [r2, t2] = compose_world_extrinsics(left.rotation(), left.translation(),
                                             relative_rotation, relative_translation);
    StereoRig rig;
    rig.left = left;
    rig.right = CameraModel<Scalar>(id + "/right", r2, t2);
    rig.relative_rotation = relative_rotation;
    rig.relative_translation = relative_translation;
    rig.id = std::move(id);
    return rig;
  }

  Scalar baseline() const { return (right.position() - left.position()).norm(); }
};

/// Re-expresses the rig so that the left camera defines the world origin:
/// R1 = I, T1 = 0, R2 = R, T2 = T.
template <typename Scalar>
StereoRig<Scalar> set_world_origin_at_first_camera(const StereoRig<Scalar>& rig) {
  const CameraModel<Scalar> left(rig.left.id(), Mat3<Scalar>::Identity(), Vec3<Scalar>::Zero());
  StereoRig<Scalar> out = StereoRig<Scalar>::make(rig.id, left, rig.relative_rotation,
                                                  rig.relative_translation);
  out.right = CameraModel<Scalar>(rig.right.id(), out.right.rotation(), out.right.translation());
  return out;
}

/// Dehomogenized K [p; 1].
template <typename Scalar>
Vec2<Scalar> project(const Vec3<Scalar>& point, const CameraModel<Scalar>& cam) {
  const Vec3<Scalar> g = cam.projection() * point.homogeneous();
  if (std::abs(g(2)) < Scalar(1e-12)) {
    throw Error(ErrorCode::kDegenerateProjection,
                "project: point lies on the principal plane of camera '" + cam.id() + "'");
  }
  return g.hnormalized();
}

}  // namespace ergocam
