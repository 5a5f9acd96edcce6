#pragma once

#include <optional>
#include <string>

#include "nsreg/register.hpp"
#include "nsreg/scene.hpp"
#include "nsreg/transform.hpp"

namespace nsreg {

enum class CellStatus { kOk, kRegistrationFailed, kSkipped };

const char* to_string(CellStatus s);
CellStatus cell_status_from_string(const std::string& s);

// One (subject, protocol, level, deformation cell) registration experiment.
// result_s registers the clean scene onto its deformed copy; result_ns onto
// the deformed copy after non-standardness injection.
struct ExperimentCell {
  int subject = 0;
  std::string protocol;
  std::string level;
  int cell_id = 0;
  DeformationGroup group = DeformationGroup::kSmall;
  AffineParams truth;
  Matrix4 truth_matrix = Matrix4::Identity();
  double m1 = 1.0;
  double m2 = 1.0;
  BoundingBox box;
  VoxelSize voxel_size;
  std::optional<RegistrationResult> result_s;
  std::optional<RegistrationResult> result_ns;
  double rmse_s = 0.0;
  double rmse_ns = 0.0;
  CellStatus status = CellStatus::kSkipped;
  std::string error;
};

}  // namespace nsreg
