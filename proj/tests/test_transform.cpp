#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include <Eigen/LU>

#include "nsreg/error.hpp"
#include "nsreg/phantom.hpp"
#include "nsreg/transform.hpp"
#include "support.hpp"

using namespace nsreg;

namespace {

AffineParams random_params(std::mt19937& gen) {
  std::uniform_real_distribution<double> t(-15, 15), r(-20, 20), s(0.8, 1.25), h(-0.1, 0.1);
  AffineParams p;
  for (int a = 0; a < 3; ++a) {
    p.translation[a] = t(gen);
    p.rotation_deg[a] = r(gen);
    p.scale[a] = s(gen);
    p.shear[a] = h(gen);
  }
  return p;
}

double max_abs(const Matrix4& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

TEST_CASE("affine matrix composition") {
  const Vector3 c(10, 12, 14);
  SUBCASE("90 degree rotation about z") {
    AffineParams p;
    p.rotation_deg = {0, 0, 90};
    const Matrix4 m = matrix(p, c);
    const Eigen::Vector4d v = m * Eigen::Vector4d(c.x() + 1, c.y(), c.z(), 1);
    CHECK(std::abs(v.x() - c.x()) < 1e-12);
    CHECK(std::abs(v.y() - (c.y() + 1)) < 1e-12);
    CHECK(std::abs(v.z() - c.z()) < 1e-12);
  }
  SUBCASE("identity and pure translation") {
    CHECK(max_abs(matrix(AffineParams{}, c) - Matrix4::Identity()) == 0.0);
    AffineParams p;
    p.translation = {3, -4, 5};
    const Matrix4 m = matrix(p, c);
    CHECK(m(0, 3) == 3);
    CHECK(m(1, 3) == -4);
    CHECK(m(2, 3) == 5);
  }
  SUBCASE("random parameters: decompose, inverse and compose agree with matrices") {
    std::mt19937 gen(4);
    for (int trial = 0; trial < 200; ++trial) {
      const AffineParams a = random_params(gen);
      const AffineParams b = random_params(gen);
      const Matrix4 ma = matrix(a, c);
      const Matrix4 mb = matrix(b, c);
      CHECK(max_abs(matrix(decompose(ma, c), c) - ma) < 1e-10);
      const auto back = decompose(ma, c).as_array();
      const auto orig = a.as_array();
      for (int k = 0; k < 12; ++k) CHECK(back[k] == doctest::Approx(orig[k]).epsilon(1e-9).scale(1e-9));
      CHECK(max_abs(matrix(inverse(a, c), c) - ma.inverse()) < 1e-10);
      CHECK(max_abs(matrix(compose(a, b, c), c) - ma * mb) < 1e-10);
      CHECK(max_abs(affine_inverse(ma) - ma.inverse()) < 1e-10);
    }
  }
  SUBCASE("reflections and singular matrices are rejected") {
    Matrix4 flip = Matrix4::Identity();
    flip(0, 0) = -1;
    CHECK_THROWS_AS(decompose(flip, c), Error);
    Matrix4 flat = Matrix4::Identity();
    flat(2, 2) = 0;
    CHECK_THROWS_AS(decompose(flat, c), Error);
  }
}

TEST_CASE("deformation grid") {
  const auto grid = deformation_grid();
  REQUIRE(grid.size() == 81);
  int counts[3] = {0, 0, 0};
  for (int id = 0; id < 81; ++id) {
    CHECK(grid[id].id == id);
    ++counts[static_cast<int>(grid[id].group)];
    int top = 0;
    for (auto l : grid[id].levels) top = std::max(top, static_cast<int>(l));
    CHECK(static_cast<int>(grid[id].group) == top);
  }
  CHECK(counts[0] == 1);
  CHECK(counts[1] == 15);
  CHECK(counts[2] == 65);

  // Large translation: 20 voxels on every axis.
  const DeformationCell big = make_cell(((0 * 3 + 2) * 3 + 0) * 3 + 0);
  CHECK(big.name() == "r0t2s0h0");
  for (double t : big.params.translation) CHECK(t == 20.0);
  CHECK(make_cell(0).params == AffineParams{});

  const auto desk = desk_grid();
  CHECK(desk.size() == 27);
  for (const auto& cell : desk) CHECK(cell.levels[2] == cell.levels[3]);
  CHECK_THROWS_AS(make_cell(81), Error);
}

TEST_CASE("corner RMSE") {
  const BoundingBox box{{2, 3, 4}, {20, 25, 18}};
  AffineParams t;
  t.translation = {3, 4, 0};
  const Vector3 c(12, 12, 12);
  CHECK(rmse_corners(AffineParams{}, t, box, {1, 1, 1}, c) == doctest::Approx(5.0).epsilon(1e-12));
  // mm scaling
  CHECK(rmse_corners(AffineParams{}, t, box, {2, 2, 2}, c) == doctest::Approx(10.0).epsilon(1e-12));

  // Per-corner oracle on random transforms, plus symmetry.
  std::mt19937 gen(8);
  for (int trial = 0; trial < 50; ++trial) {
    const Matrix4 a = matrix(random_params(gen), c);
    const Matrix4 b = matrix(random_params(gen), c);
    double sum = 0.0;
    for (const auto& k : box.corners()) {
      const Eigen::Vector4d p(k[0], k[1], k[2], 1);
      const Eigen::Vector4d d = a * p - b * p;
      sum += (d.head<3>().cwiseProduct(Eigen::Vector3d(0.5, 1.0, 2.0))).squaredNorm();
    }
    const double want = std::sqrt(sum / 8);
    CHECK(rmse_corners(a, b, box, {0.5, 1.0, 2.0}) == doctest::Approx(want).epsilon(1e-12));
    CHECK(rmse_corners(a, b, box, {0.5, 1.0, 2.0}) == rmse_corners(b, a, box, {0.5, 1.0, 2.0}));
  }
}

TEST_CASE("resampling") {
  PhantomSpec spec = default_phantom_spec({48, 48, 48});
  spec.geometry_scale = 0.7;  // interior support for every grid cell
  const Scene s = generate_phantom_pair(spec).first;
  const Vector3 c = scene_center(s.dims());

  CHECK(resample(s, AffineParams{}) == s);

  // The largest translation moves the head partly out of a 48^3 field of view,
  // so those cells are left out of the geometric checks below.
  SUBCASE("forward then inverse stays close") {
    // Two thick classes; compare only voxels whose 5x5x5 neighbourhood is a
    // single class, where two interpolations cannot mix values.
    PhantomSpec thick = spec;
    thick.tissues = {{"outer", 400.0, 600.0, {{{0.5, 0.5, 0.5}, {0.4, 0.4, 0.4}}}},
                     {"inner", 900.0, 1100.0, {{{0.5, 0.5, 0.5}, {0.2, 0.2, 0.2}}}}};
    const Scene s = generate_phantom_pair(thick).first;
    auto interior = [&](int x, int y, int z) {
      const Intensity v = s.at(x, y, z);
      if (v == 0) return false;
      for (int dz = -2; dz <= 2; ++dz)
        for (int dy = -2; dy <= 2; ++dy)
          for (int dx = -2; dx <= 2; ++dx)
            if (s.at(x + dx, y + dy, z + dz) != v) return false;
      return true;
    };
    for (int id : {13, 40, 67, 71}) {
      const AffineParams p = make_cell(id).params;
      const Scene back = resample(resample(s, p), inverse(p, c));
      std::size_t n = 0;
      std::size_t close = 0;
      for (int z = 2; z < 46; ++z)
        for (int y = 2; y < 46; ++y)
          for (int x = 2; x < 46; ++x) {
            if (!interior(x, y, z)) continue;
            ++n;
            close += std::abs(int(back.at(x, y, z)) - int(s.at(x, y, z))) <= 2;
          }
      CAPTURE(id);
      REQUIRE(n > 500);
      CHECK(double(close) / n >= 0.95);
    }
  }
  SUBCASE("foreground volume follows the determinant") {
    // Volume above half the darkest tissue value, so the partial-volume rim
    // counts once.
    auto volume = [](const Scene& v) {
      return double(std::count_if(v.intensities().begin(), v.intensities().end(), [](Intensity i) { return i >= 160; }));
    };
    for (const auto& cell : deformation_grid()) {
      if (cell.levels[1] == DeformationLevel::kLarge) continue;
      const Scene out = resample(s, cell.params);
      const double det = matrix(cell.params, c).topLeftCorner<3, 3>().determinant();
      const double ratio = volume(out) / (volume(s) * det);
      CAPTURE(cell.name());
      CHECK(std::abs(ratio - 1.0) < 0.05);
    }
  }
  SUBCASE("whole-voxel translation shifts exactly") {
    AffineParams p;
    p.translation = {2, -1, 3};
    const Scene out = resample(s, p);
    for (int z = 3; z < 48; ++z)
      for (int y = 0; y < 47; ++y)
        for (int x = 2; x < 48; ++x) {
          if (out.at(x, y, z) != s.at(x - 2, y + 1, z - 3)) FAIL("mismatch at " << x << "," << y << "," << z);
        }
  }
}
