#include "nsreg/register.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "interp.hpp"
#include "nsreg/error.hpp"

namespace nsreg {

namespace {

using detail::Volume;
using Vec12 = Eigen::Matrix<double, 12, 1>;
using Mat12 = Eigen::Matrix<double, 12, 12>;

constexpr double kMaxDamping = 1e8;
// Trial maps whose volume change exceeds this factor (either way) are
// rejected as degenerate.
constexpr double kMinDeterminant = 0.1;

Volume to_volume(const Scene& s) {
  Volume v{s.dims(), {}};
  v.data.assign(s.intensities().begin(), s.intensities().end());
  return v;
}

Volume downsample(const Volume& in) {
  const Dims& d = in.dims;
  Volume out{{(d.nx + 1) / 2, (d.ny + 1) / 2, (d.nz + 1) / 2}, {}};
  out.data.assign(out.dims.count(), 0.0f);
  std::size_t i = 0;
  for (int z = 0; z < out.dims.nz; ++z) {
    for (int y = 0; y < out.dims.ny; ++y) {
      for (int x = 0; x < out.dims.nx; ++x, ++i) {
        double sum = 0.0;
        int n = 0;
        for (int k = 0; k < 8; ++k) {
          const int xi = 2 * x + (k & 1);
          const int yi = 2 * y + ((k >> 1) & 1);
          const int zi = 2 * z + ((k >> 2) & 1);
          if (xi < d.nx && yi < d.ny && zi < d.nz) {
            sum += in.at(xi, yi, zi);
            ++n;
          }
        }
        out.data[i] = static_cast<float>(sum / n);
      }
    }
  }
  return out;
}

Vector3 center_of(const Dims& d) { return scene_center(d); }

// Target-to-source map at one pyramid level: p = L (x - c) + d.
struct InverseMap {
  Eigen::Matrix3d linear = Eigen::Matrix3d::Identity();
  Vector3 offset = Vector3::Zero();

  Vec12 pack() const {
    Vec12 v;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) v[3 * r + c] = linear(r, c);
    }
    v.tail<3>() = offset;
    return v;
  }
  static InverseMap unpack(const Vec12& v) {
    InverseMap m;
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m.linear(r, c) = v[3 * r + c];
    }
    m.offset = v.tail<3>();
    return m;
  }
};

struct MaskVoxel {
  float x, y, z;  // relative to the level centre
  float target;
};

struct Level {
  Volume source;
  Vector3 center;
  std::vector<MaskVoxel> mask;
};

struct Evaluation {
  double ssd = 0.0;
  Mat12 hessian = Mat12::Zero();
  Vec12 gradient = Vec12::Zero();
};

Evaluation evaluate(const Level& level, const InverseMap& map, bool with_jacobian) {
  Evaluation e;
  const Volume& src = level.source;
  auto get = [&](int x, int y, int z) -> double { return src.at(x, y, z); };
  const Eigen::Matrix3d& L = map.linear;
  double h[12][12] = {};
  double g[12] = {};
  double sum = 0.0;
  for (const MaskVoxel& v : level.mask) {
    const double qx = v.x;
    const double qy = v.y;
    const double qz = v.z;
    const double px = L(0, 0) * qx + L(0, 1) * qy + L(0, 2) * qz + map.offset[0];
    const double py = L(1, 0) * qx + L(1, 1) * qy + L(1, 2) * qz + map.offset[1];
    const double pz = L(2, 0) * qx + L(2, 1) * qy + L(2, 2) * qz + map.offset[2];
    if (!with_jacobian) {
      const double r = detail::trilinear(src.dims, px, py, pz, get) - v.target;
      sum += r * r;
      continue;
    }
    const detail::Sample s = detail::trilinear_gradient(src.dims, px, py, pz, get);
    const double r = s.value - v.target;
    sum += r * r;
    const double j[12] = {s.gx * qx, s.gx * qy, s.gx * qz, s.gy * qx, s.gy * qy, s.gy * qz,
                          s.gz * qx, s.gz * qy, s.gz * qz, s.gx,      s.gy,      s.gz};
    for (int a = 0; a < 12; ++a) {
      g[a] += j[a] * r;
      for (int b = a; b < 12; ++b) h[a][b] += j[a] * j[b];
    }
  }
  e.ssd = sum;
  if (with_jacobian) {
    for (int a = 0; a < 12; ++a) {
      e.gradient[a] = g[a];
      for (int b = a; b < 12; ++b) e.hessian(a, b) = e.hessian(b, a) = h[a][b];
    }
  }
  return e;
}

Level make_level(Volume source, const Volume& target, bool whole_domain) {
  Level level{std::move(source), center_of(target.dims), {}};
  const Dims& d = target.dims;
  std::size_t i = 0;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x, ++i) {
        const float t = target.data[i];
        if (whole_domain || t > 0.0f) {
          level.mask.push_back({static_cast<float>(x - level.center[0]),
                                static_cast<float>(y - level.center[1]),
                                static_cast<float>(z - level.center[2]), t});
        }
      }
    }
  }
  return level;
}

// Coarse voxel i sits at fine coordinate 2 i + 0.5.
InverseMap to_finer(const InverseMap& coarse, const Vector3& c_coarse, const Vector3& c_fine) {
  InverseMap fine;
  fine.linear = coarse.linear;
  const Vector3 half = Vector3::Constant(0.5);
  fine.offset = coarse.linear * (c_fine - half - 2.0 * c_coarse) + 2.0 * coarse.offset + half;
  return fine;
}

InverseMap to_coarser(const InverseMap& fine, const Vector3& c_fine, const Vector3& c_coarse) {
  InverseMap coarse;
  coarse.linear = fine.linear;
  const Vector3 half = Vector3::Constant(0.5);
  coarse.offset = (fine.offset - half - fine.linear * (c_fine - half - 2.0 * c_coarse)) / 2.0;
  return coarse;
}

constexpr std::uint16_t kAllParameters = 0x0fff;
constexpr std::uint16_t kTranslationOnly = 0x0e00;

// Levenberg-Marquardt at one pyramid level over the parameters selected by
// `active` (bit k = parameter k). Returns true when it stopped on the
// tolerance or on the damping cap rather than on max_iters.
bool run_lm(const Level& level, int level_index, const RegistrationConfig& config,
            std::uint16_t active, InverseMap& map, RegistrationResult& result) {
  const RegistrationPass pass =
      active == kTranslationOnly ? RegistrationPass::kTranslation : RegistrationPass::kAffine;
  Evaluation current = evaluate(level, map, true);
  if (!std::isfinite(current.ssd)) {
    throw Error(ErrorCode::kNumericalFailure, "non-finite SSD during registration");
  }
  result.per_level_trace.push_back({level_index, 0, current.ssd, pass});
  double lambda = config.damping;
  for (int iter = 1; iter <= config.max_iters; ++iter) {
    ++result.iterations_used;
    if (current.ssd == 0.0) return true;
    Mat12 a = current.hessian;
    Vec12 rhs = -current.gradient;
    const double diag_floor = 1e-12 * std::max(1.0, current.hessian.diagonal().maxCoeff());
    for (int k = 0; k < 12; ++k) {
      if (active & (1u << k)) {
        a(k, k) += lambda * std::max(current.hessian(k, k), diag_floor);
      } else {
        a.row(k).setZero();
        a.col(k).setZero();
        a(k, k) = 1.0;
        rhs[k] = 0.0;
      }
    }
    const Vec12 step = a.ldlt().solve(rhs);
    bool accepted = false;
    if (step.allFinite()) {
      const InverseMap trial = InverseMap::unpack(map.pack() + step);
      const double det = trial.linear.determinant();
      if (det > kMinDeterminant && det < 1.0 / kMinDeterminant) {
        Evaluation next = evaluate(level, trial, true);
        if (std::isfinite(next.ssd) && next.ssd < current.ssd) {
          const double rel = (current.ssd - next.ssd) / current.ssd;
          map = trial;
          current = std::move(next);
          lambda = std::max(lambda / 10.0, 1e-12);
          result.per_level_trace.push_back({level_index, iter, current.ssd, pass});
          accepted = true;
          if (rel < config.convergence_tol) return true;
        }
      }
    }
    if (!accepted) {
      lambda *= 10.0;
      if (lambda > kMaxDamping) return true;  // no descent direction left
    }
  }
  return false;
}

// Exhaustive integer search over the offset of the inverse map on a coarse
// level. The range covers 3/8 of the extent per axis; first minimum in scan
// order wins.
void translation_search(const Level& level, InverseMap& map) {
  const Dims& d = level.source.dims;
  const std::array<int, 3> range{static_cast<int>(std::ceil(0.375 * d.nx)),
                                 static_cast<int>(std::ceil(0.375 * d.ny)),
                                 static_cast<int>(std::ceil(0.375 * d.nz))};
  const Vector3 base = map.offset;
  Vector3 best_offset = base;
  double best = evaluate(level, map, false).ssd;
  InverseMap trial = map;
  for (int dz = -range[2]; dz <= range[2]; ++dz) {
    for (int dy = -range[1]; dy <= range[1]; ++dy) {
      for (int dx = -range[0]; dx <= range[0]; ++dx) {
        trial.offset = base + Vector3(dx, dy, dz);
        const double value = evaluate(level, trial, false).ssd;
        if (value < best) {
          best = value;
          best_offset = trial.offset;
        }
      }
    }
  }
  map.offset = best_offset;
}

void check_inputs(const Scene& source, const Scene& target) {
  if (!(source.dims() == target.dims())) {
    throw Error(ErrorCode::kDimsMismatch, "source and target dims differ");
  }
}

}  // namespace

void validate(const RegistrationConfig& c) {
  if (c.pyramid_levels < 1) throw Error(ErrorCode::kInvalidArgument, "pyramid_levels must be >= 1");
  if (c.max_iters < 1) throw Error(ErrorCode::kInvalidArgument, "max_iters must be >= 1");
  if (!(c.convergence_tol > 0.0) || !(c.damping > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "tolerances must be positive");
  }
  for (double s : c.initial_params.scale) {
    if (!(s > 0.0)) throw Error(ErrorCode::kInvalidArgument, "initial scales must be positive");
  }
}

double ssd(const Scene& source, const Scene& target, const AffineParams& params) {
  return ssd(source, target, matrix(params, scene_center(source.dims())));
}

double ssd(const Scene& source, const Scene& target, const Matrix4& m) {
  std::vector<std::uint8_t> mask(target.intensities().size());
  std::transform(target.intensities().begin(), target.intensities().end(), mask.begin(),
                 [](Intensity v) { return v > 0 ? 1 : 0; });
  return ssd(source, target, m, mask);
}

double ssd(const Scene& source, const Scene& target, const Matrix4& m,
           const std::vector<std::uint8_t>& mask) {
  check_inputs(source, target);
  if (mask.size() != target.intensities().size()) {
    throw Error(ErrorCode::kDimsMismatch, "mask length does not match the scenes");
  }
  const Matrix4 inv = affine_inverse(m);
  const Dims& d = source.dims();
  const auto src = source.intensities();
  const auto tgt = target.intensities();
  auto get = [&](int x, int y, int z) -> double { return src[source.index(x, y, z)]; };
  double sum = 0.0;
  std::size_t i = 0;
  for (int z = 0; z < d.nz; ++z) {
    for (int y = 0; y < d.ny; ++y) {
      for (int x = 0; x < d.nx; ++x, ++i) {
        if (!mask[i]) continue;
        const Eigen::Vector4d p = inv * Eigen::Vector4d(x, y, z, 1.0);
        const double r = detail::trilinear(d, p[0], p[1], p[2], get) - tgt[i];
        sum += r * r;
      }
    }
  }
  return sum;
}

RegistrationResult register_affine(const Scene& source, const Scene& target,
                                   const RegistrationConfig& config) {
  validate(config);
  check_inputs(source, target);
  if (source.foreground_count() == 0 || target.foreground_count() == 0) {
    throw Error(ErrorCode::kEmptyForeground, "registration needs non-empty foregrounds");
  }

  // Pyramid, index 0 = full resolution. The configured levels run the full
  // 12-parameter solve; extra coarser levels (down to 8 voxels per axis) only
  // run the translation pre-pass.
  std::vector<Volume> sources{to_volume(source)};
  std::vector<Volume> targets{to_volume(target)};
  for (;;) {
    const Dims& d = sources.back().dims;
    if (d.nx < 16 || d.ny < 16 || d.nz < 16) break;
    sources.push_back(downsample(sources.back()));
    targets.push_back(downsample(targets.back()));
  }
  const int levels = static_cast<int>(sources.size());
  const int full_levels = std::min(levels, config.pyramid_levels);

  // Initial forward estimate -> inverse map at full resolution -> coarsest.
  const Vector3 c0 = center_of(source.dims());
  const Matrix4 init_inv = affine_inverse(matrix(config.initial_params, c0));
  InverseMap map;
  map.linear = init_inv.topLeftCorner<3, 3>();
  map.offset = map.linear * c0 + init_inv.block<3, 1>(0, 3);
  for (int l = 1; l < levels; ++l) {
    map = to_coarser(map, center_of(sources[l - 1].dims), center_of(sources[l].dims));
  }

  RegistrationResult result;
  bool all_converged = true;
  for (int l = levels - 1; l >= 0; --l) {
    if (l < levels - 1) {
      map = to_finer(map, center_of(sources[l + 1].dims), center_of(sources[l].dims));
    }
    if (l >= full_levels - 1) {
      // Translation-only pass over the whole level domain: widens the capture
      // range for large shifts before the linear part is released. The cost
      // is still zero at the true transform since both sides read 0 outside
      // the source domain.
      const Level coarse = make_level(sources[l], targets[l], true);
      if (l == levels - 1) translation_search(coarse, map);
      run_lm(coarse, l, config, kTranslationOnly, map, result);
    }
    if (l < full_levels) {
      const Level level = make_level(sources[l], targets[l], false);
      if (level.mask.empty()) continue;
      all_converged = run_lm(level, l, config, kAllParameters, map, result) && all_converged;
    }
  }

  Matrix4 inv = Matrix4::Identity();
  inv.topLeftCorner<3, 3>() = map.linear;
  inv.block<3, 1>(0, 3) = map.offset - map.linear * c0;
  if (!inv.allFinite()) throw Error(ErrorCode::kNumericalFailure, "registration diverged");
  try {
    result.matrix = affine_inverse(inv);
    result.params = decompose(result.matrix, c0);
  } catch (const Error& e) {
    throw Error(ErrorCode::kNumericalFailure,
                std::string("registration produced a degenerate transform: ") + e.what());
  }
  result.final_ssd = ssd(source, target, result.matrix);
  if (!std::isfinite(result.final_ssd)) {
    throw Error(ErrorCode::kNumericalFailure, "non-finite final SSD");
  }
  result.converged = all_converged;
  return result;
}

}  // namespace nsreg
