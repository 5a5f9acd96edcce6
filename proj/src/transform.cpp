#include "nsreg/transform.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>

#include "interp.hpp"
#include "nsreg/error.hpp"

namespace nsreg {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Matrix4 translation(const Vector3& t) {
  Matrix4 m = Matrix4::Identity();
  m.block<3, 1>(0, 3) = t;
  return m;
}

Eigen::Matrix3d rotation(const std::array<double, 3>& deg) {
  const double ax = deg[0] * kDegToRad;
  const double ay = deg[1] * kDegToRad;
  const double az = deg[2] * kDegToRad;
  Eigen::Matrix3d rx;
  rx << 1, 0, 0, 0, std::cos(ax), -std::sin(ax), 0, std::sin(ax), std::cos(ax);
  Eigen::Matrix3d ry;
  ry << std::cos(ay), 0, std::sin(ay), 0, 1, 0, -std::sin(ay), 0, std::cos(ay);
  Eigen::Matrix3d rz;
  rz << std::cos(az), -std::sin(az), 0, std::sin(az), std::cos(az), 0, 0, 0, 1;
  return rz * ry * rx;
}

// Levels per Table-2-style magnitudes: zero, medium, large.
constexpr std::array<double, 3> kTranslation{0.0, 5.0, 20.0};
constexpr std::array<double, 3> kRotation{0.0, 2.0, 6.0};
constexpr std::array<double, 3> kScale{1.0, 1.05, 1.15};
constexpr std::array<double, 3> kShear{0.0, 0.01, 0.05};

}  // namespace

std::array<double, 12> AffineParams::as_array() const {
  return {translation[0],  translation[1],  translation[2], rotation_deg[0],
          rotation_deg[1], rotation_deg[2], scale[0],       scale[1],
          scale[2],        shear[0],        shear[1],       shear[2]};
}

AffineParams AffineParams::from_array(const std::array<double, 12>& v) {
  return {{v[0], v[1], v[2]}, {v[3], v[4], v[5]}, {v[6], v[7], v[8]}, {v[9], v[10], v[11]}};
}

Vector3 scene_center(const Dims& dims) {
  return {(dims.nx - 1) / 2.0, (dims.ny - 1) / 2.0, (dims.nz - 1) / 2.0};
}

Matrix4 matrix(const AffineParams& p, const Vector3& center) {
  Eigen::Matrix3d shear = Eigen::Matrix3d::Identity();
  shear(0, 1) = p.shear[0];
  shear(0, 2) = p.shear[1];
  shear(1, 2) = p.shear[2];
  const Eigen::Matrix3d scale =
      Eigen::Vector3d(p.scale[0], p.scale[1], p.scale[2]).asDiagonal();
  Matrix4 linear = Matrix4::Identity();
  linear.topLeftCorner<3, 3>() = rotation(p.rotation_deg) * shear * scale;
  const Vector3 t(p.translation[0], p.translation[1], p.translation[2]);
  return translation(t) * translation(center) * linear * translation(-center);
}

AffineParams decompose(const Matrix4& m, const Vector3& center) {
  const Eigen::Matrix3d lin = m.topLeftCorner<3, 3>();
  const double det = lin.determinant();
  if (!std::isfinite(det) || !(det > 1e-12)) {
    throw Error(ErrorCode::kSingularTransform, "affine matrix is singular or reflecting");
  }
  // lin = Q * U with U upper triangular, positive diagonal: U = Shear * Scale.
  Eigen::HouseholderQR<Eigen::Matrix3d> qr(lin);
  Eigen::Matrix3d q = qr.householderQ();
  Eigen::Matrix3d u = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < 3; ++k) {
    if (u(k, k) < 0.0) {
      u.row(k) *= -1.0;
      q.col(k) *= -1.0;
    }
  }
  AffineParams p;
  p.scale = {u(0, 0), u(1, 1), u(2, 2)};
  p.shear = {u(0, 1) / u(1, 1), u(0, 2) / u(2, 2), u(1, 2) / u(2, 2)};
  // q = Rz * Ry * Rx
  const double sy = std::clamp(-q(2, 0), -1.0, 1.0);
  p.rotation_deg = {std::atan2(q(2, 1), q(2, 2)) / kDegToRad, std::asin(sy) / kDegToRad,
                    std::atan2(q(1, 0), q(0, 0)) / kDegToRad};
  // m x = lin (x - c) + c + t
  const Vector3 t = m.block<3, 1>(0, 3) - center + lin * center;
  p.translation = {t[0], t[1], t[2]};
  return p;
}

Matrix4 affine_inverse(const Matrix4& m) {
  const Eigen::Matrix3d lin = m.topLeftCorner<3, 3>();
  const double det = lin.determinant();
  if (!std::isfinite(det) || std::abs(det) < 1e-12) {
    throw Error(ErrorCode::kSingularTransform, "affine matrix is singular");
  }
  const Eigen::Matrix3d inv = lin.inverse();
  Matrix4 out = Matrix4::Identity();
  out.topLeftCorner<3, 3>() = inv;
  out.block<3, 1>(0, 3) = -inv * m.block<3, 1>(0, 3);
  return out;
}

AffineParams inverse(const AffineParams& params, const Vector3& center) {
  return decompose(affine_inverse(matrix(params, center)), center);
}

AffineParams compose(const AffineParams& a, const AffineParams& b, const Vector3& center) {
  return decompose(matrix(a, center) * matrix(b, center), center);
}

Scene resample(const Scene& scene, const AffineParams& params) {
  return resample(scene, matrix(params, scene_center(scene.dims())));
}

Scene resample(const Scene& scene, const Matrix4& m) {
  const Matrix4 inv = affine_inverse(m);
  const Dims& d = scene.dims();
  const auto src = scene.intensities();
  auto get = [&](int x, int y, int z) -> double { return src[scene.index(x, y, z)]; };
  const double ceiling = scene.ceiling();
  const Eigen::Matrix3d lin = inv.topLeftCorner<3, 3>();
  const Vector3 off = inv.block<3, 1>(0, 3);

  std::vector<Intensity> out(d.count(), 0);
  std::size_t i = 0;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      const Vector3 row = lin.col(1) * y + lin.col(2) * z + off;
      for (int x = 0; x < d.nx; ++x, ++i) {
        const Vector3 p = row + lin.col(0) * x;
        const double v = detail::trilinear(d, p[0], p[1], p[2], get);
        out[i] = static_cast<Intensity>(std::clamp(std::floor(v + 0.5), 0.0, ceiling));
      }
    }
  }
  return scene.with_intensities(std::move(out));
}

const char* to_string(DeformationGroup g) {
  switch (g) {
    case DeformationGroup::kSmall: return "small";
    case DeformationGroup::kMedium: return "medium";
    case DeformationGroup::kLarge: return "large";
  }
  return "small";
}

std::string DeformationCell::name() const {
  std::string s;
  const char tags[4] = {'r', 't', 's', 'h'};
  for (int k = 0; k < 4; ++k) {
    s += tags[k];
    s += static_cast<char>('0' + static_cast<int>(levels[k]));
  }
  return s;
}

DeformationCell make_cell(int id) {
  if (id < 0 || id >= 81) throw Error(ErrorCode::kInvalidArgument, "deformation cell id out of range");
  DeformationCell cell;
  cell.id = id;
  const int rot = id / 27;
  const int trans = (id / 9) % 3;
  const int scale = (id / 3) % 3;
  const int shear = id % 3;
  cell.levels = {static_cast<DeformationLevel>(rot), static_cast<DeformationLevel>(trans),
                 static_cast<DeformationLevel>(scale), static_cast<DeformationLevel>(shear)};
  cell.params.rotation_deg.fill(kRotation[rot]);
  cell.params.translation.fill(kTranslation[trans]);
  cell.params.scale.fill(kScale[scale]);
  cell.params.shear.fill(kShear[shear]);
  cell.group = static_cast<DeformationGroup>(std::max({rot, trans, scale, shear}));
  return cell;
}

std::vector<DeformationCell> deformation_grid() {
  std::vector<DeformationCell> grid;
  grid.reserve(81);
  for (int id = 0; id < 81; ++id) grid.push_back(make_cell(id));
  return grid;
}

std::vector<DeformationCell> desk_grid() {
  std::vector<DeformationCell> grid;
  for (const DeformationCell& c : deformation_grid()) {
    if (c.levels[2] == c.levels[3]) grid.push_back(c);
  }
  return grid;
}

double rmse_corners(const Matrix4& truth, const Matrix4& recovered, const BoundingBox& box,
                    const VoxelSize& voxel_size) {
  double sum = 0.0;
  for (const Index3& c : box.corners()) {
    const Eigen::Vector4d p(c[0], c[1], c[2], 1.0);
    const Eigen::Vector4d diff = truth * p - recovered * p;
    for (int a = 0; a < 3; ++a) {
      const double mm = diff[a] * voxel_size[a];
      sum += mm * mm;
    }
  }
  return std::sqrt(sum / 8.0);
}

double rmse_corners(const AffineParams& truth, const AffineParams& recovered,
                    const BoundingBox& box, const VoxelSize& voxel_size, const Vector3& center) {
  return rmse_corners(matrix(truth, center), matrix(recovered, center), box, voxel_size);
}

}  // namespace nsreg
