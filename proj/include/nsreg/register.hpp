#pragma once

#include <cstdint>
#include <vector>

#include "nsreg/scene.hpp"
#include "nsreg/transform.hpp"

namespace nsreg {

struct RegistrationConfig {
  int pyramid_levels = 3;          // x2 box-average downsampling per level
  int max_iters = 50;              // LM iterations per level
  double convergence_tol = 1e-6;   // relative SSD improvement
  double damping = 1e-3;           // initial Levenberg-Marquardt damping
  AffineParams initial_params{};   // forward transform estimate
};

void validate(const RegistrationConfig& config);

enum class RegistrationPass {
  kTranslation,  // shift-only pass over the whole level domain
  kAffine,       // all 12 parameters over the target foreground
};

struct TraceEntry {
  int level = 0;  // 0 = full resolution
  int iter = 0;
  double ssd = 0.0;
  RegistrationPass pass = RegistrationPass::kAffine;
};

struct RegistrationResult {
  AffineParams params;
  Matrix4 matrix = Matrix4::Identity();  // forward source -> target map
  double final_ssd = 0.0;                // at full resolution
  int iterations_used = 0;
  bool converged = false;
  // Initial SSD and every accepted step of each pass, coarse to fine. SSD is
  // non-increasing within one (level, pass) run.
  std::vector<TraceEntry> per_level_trace;
};

// Sum over target-foreground voxels v of (source(M^-1 v) - target(v))^2.
double ssd(const Scene& source, const Scene& target, const AffineParams& params);
double ssd(const Scene& source, const Scene& target, const Matrix4& m);
// Explicit mask (non-zero entries are summed), same length as the scenes.
double ssd(const Scene& source, const Scene& target, const Matrix4& m,
           const std::vector<std::uint8_t>& mask);

// Affine registration of source onto target. Throws kEmptyForeground,
// kDimsMismatch, or kNumericalFailure (non-finite cost or a degenerate
// recovered transform).
RegistrationResult register_affine(const Scene& source, const Scene& target,
                                   const RegistrationConfig& config = {});

}  // namespace nsreg
