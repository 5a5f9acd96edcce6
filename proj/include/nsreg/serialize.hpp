#pragma once

#include <nlohmann/json.hpp>

#include "nsreg/evaluate.hpp"
#include "nsreg/experiment.hpp"
#include "nsreg/phantom.hpp"
#include "nsreg/pipeline.hpp"
#include "nsreg/register.hpp"
#include "nsreg/standardize.hpp"
#include "nsreg/transform.hpp"

namespace nsreg {

using Json = nlohmann::json;

void to_json(Json& j, const AffineParams& p);
void from_json(const Json& j, AffineParams& p);

void to_json(Json& j, const StandardizationModel& m);
void from_json(const Json& j, StandardizationModel& m);

void to_json(Json& j, const PhantomSpec& s);
void from_json(const Json& j, PhantomSpec& s);

void to_json(Json& j, const RegistrationConfig& c);
void from_json(const Json& j, RegistrationConfig& c);

void to_json(Json& j, const CorrectionOptions& c);
void from_json(const Json& j, CorrectionOptions& c);

void to_json(Json& j, const TrainingOptions& t);
void from_json(const Json& j, TrainingOptions& t);

// Records keep a per-(level, pass) summary of the SSD trace, not every step.
void to_json(Json& j, const RegistrationResult& r);
void from_json(const Json& j, RegistrationResult& r);

void to_json(Json& j, const ExperimentCell& c);
void from_json(const Json& j, ExperimentCell& c);

// Levels are written as ids and the grid as cell ids.
void to_json(Json& j, const ExperimentPlan& p);
void from_json(const Json& j, ExperimentPlan& p);

void to_json(Json& j, const GoodnessReport& r);

Json matrix_to_json(const Matrix4& m);
Matrix4 matrix_from_json(const Json& j);

// Stable text form used for every file written by the library.
std::string dump(const Json& j);

// Parses a JSON file, mapping parse failures to kFormat.
Json read_json_file(const std::filesystem::path& path);

}  // namespace nsreg
