#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "nsreg/scene.hpp"

namespace nsreg {

using Matrix4 = Eigen::Matrix4d;
using Vector3 = Eigen::Vector3d;

// 12 affine parameters in voxel units. Rotations are in degrees about the
// rotation centre; shear is the upper-triangular (xy, xz, yz) factor.
struct AffineParams {
  std::array<double, 3> translation{0.0, 0.0, 0.0};
  std::array<double, 3> rotation_deg{0.0, 0.0, 0.0};
  std::array<double, 3> scale{1.0, 1.0, 1.0};
  std::array<double, 3> shear{0.0, 0.0, 0.0};

  static AffineParams identity() { return {}; }
  std::array<double, 12> as_array() const;
  static AffineParams from_array(const std::array<double, 12>& v);
  friend bool operator==(const AffineParams&, const AffineParams&) = default;
};

// Geometric centre of the voxel grid, ((n - 1) / 2 per axis).
Vector3 scene_center(const Dims& dims);

// M = Translate * Recenter * Rz * Ry * Rx * Shear * Scale * Center, acting on
// voxel coordinates.
Matrix4 matrix(const AffineParams& params, const Vector3& center);

// Inverse of matrix() for matrices with positive determinant. Throws
// kSingularTransform for singular or reflecting matrices.
AffineParams decompose(const Matrix4& m, const Vector3& center);

// Affine inverse computed blockwise (exact for identity/pure translation).
Matrix4 affine_inverse(const Matrix4& m);

AffineParams inverse(const AffineParams& params, const Vector3& center);
// Parameters of matrix(a) * matrix(b).
AffineParams compose(const AffineParams& a, const AffineParams& b, const Vector3& center);

// Output voxel v takes the trilinear sample of the source at M^-1 v; samples
// outside the domain are 0. Rounded half up, clamped to [0, ceiling].
Scene resample(const Scene& scene, const AffineParams& params);
Scene resample(const Scene& scene, const Matrix4& m);

enum class DeformationLevel { kZero = 0, kMedium = 1, kLarge = 2 };
enum class DeformationGroup { kSmall = 0, kMedium = 1, kLarge = 2 };

const char* to_string(DeformationGroup g);

struct DeformationCell {
  int id = 0;  // 0..80: ((rotation * 3 + translation) * 3 + scale) * 3 + shear
  // rotation, translation, scale, shear
  std::array<DeformationLevel, 4> levels{};
  AffineParams params;
  DeformationGroup group = DeformationGroup::kSmall;

  std::string name() const;  // e.g. "r1t2s0h0"
};

DeformationCell make_cell(int id);
std::vector<DeformationCell> deformation_grid();
// 27-cell subset with scale level == shear level.
std::vector<DeformationCell> desk_grid();

// RMSE in mm over the 8 box corners between the two mapped corner sets.
double rmse_corners(const Matrix4& truth, const Matrix4& recovered, const BoundingBox& box,
                    const VoxelSize& voxel_size);
double rmse_corners(const AffineParams& truth, const AffineParams& recovered,
                    const BoundingBox& box, const VoxelSize& voxel_size, const Vector3& center);

}  // namespace nsreg
