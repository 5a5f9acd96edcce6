#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "nsreg/experiment.hpp"
#include "nsreg/phantom.hpp"
#include "nsreg/register.hpp"
#include "nsreg/standardize.hpp"

namespace nsreg {

struct CorrectionOptions {
  bool enabled = true;
  double theta_fraction = 0.05;  // of the foreground median
  int max_iters = 10;
  double growth_tol = 0.05;
};

struct ExperimentPlan {
  int subjects = 3;
  std::vector<std::string> protocols{"T2", "PD"};
  // Base phantom; each subject gets its own seed, gain and geometry scale.
  PhantomSpec phantom = default_phantom_spec({48, 48, 48});
  double gain_spread = 0.15;      // gain drawn log-uniform in [1/(1+g), 1+g]
  double geometry_spread = 0.04;  // radius scale drawn in [1-g, 1+g]
  // When set, subject k / protocol p is read from
  // input_dir/subject<k>_<p>.scnh instead of being generated.
  std::filesystem::path input_dir;
  std::vector<NonStandardnessLevel> levels = default_levels();
  std::vector<DeformationCell> grid = desk_grid();
  RegistrationConfig registration;
  CorrectionOptions correction;
  TrainingOptions standardization;
  std::uint64_t master_seed = 0;
  std::filesystem::path output_dir = "nsreg_out";
  int workers = 1;
};

void validate(const ExperimentPlan& plan);

PhantomSpec subject_phantom(const ExperimentPlan& plan, int subject);

// Raw cohort keyed by protocol, subjects in order.
using Cohort = std::map<std::string, std::vector<Scene>>;

Cohort load_or_generate_cohort(const ExperimentPlan& plan);

struct CleanSet {
  Cohort scenes;
  std::map<std::string, StandardizationModel> models;
};

// Correction, then standardization with one model per protocol trained on the
// corrected cohort itself.
CleanSet build_clean_set(const Cohort& raw, const CorrectionOptions& correction,
                         const TrainingOptions& training);

// Seed used for the injection of one cell address.
std::uint64_t cell_seed(std::uint64_t master, int subject, const std::string& protocol,
                        const std::string& level, int cell_id);

// Registration targets of one cell: the deformed clean scene (arm s) and the
// deformed scene after injection with slopes (m1, m2) (arm ns). Injection
// comes first, deformation second.
Scene clean_target(const Scene& clean, const Matrix4& truth);
Scene nonstandard_target(const Scene& clean, double m1, double m2, const Matrix4& truth);

std::filesystem::path cell_record_path(const std::filesystem::path& output_dir, int subject,
                                       const std::string& protocol, const std::string& level,
                                       const DeformationCell& cell);

// Work implied by a plan. Every record has two arms; the s arm does not
// depend on the level, so one registration serves all levels of a unit and
// the clean level's ns arm is the s arm itself.
struct PlanSize {
  std::size_t records = 0;
  std::size_t arm_evaluations = 0;  // records x 2
  std::size_t registrations = 0;    // distinct registrations actually run
};

PlanSize plan_size(const ExperimentPlan& plan);

struct RunSummary {
  std::vector<ExperimentCell> cells;  // plan order: subject, protocol, cell, level
  int registrations_performed = 0;
  int records_reused = 0;
  int failures = 0;
};

// Runs every (subject, protocol, cell) unit, writing one record per level
// under output_dir/cells. Existing records are reused, so an interrupted run
// resumes where it stopped.
RunSummary run_plan(const ExperimentPlan& plan);

// All records under a results directory (the plan output dir or its cells/).
std::vector<ExperimentCell> load_cells(const std::filesystem::path& dir);

// Writes accuracy/consistency CSV and JSON under output_dir/reports.
void write_reports(const std::vector<ExperimentCell>& cells, const std::filesystem::path& output_dir);

// Writes text to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace nsreg
