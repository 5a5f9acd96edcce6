#include "nsreg/serialize.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "nsreg/error.hpp"

namespace nsreg {

namespace {

template <typename T>
void get_opt(const Json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

// JSON has no infinities; encode them as strings.
Json real_or_flag(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

const char* pass_name(RegistrationPass p) {
  return p == RegistrationPass::kTranslation ? "translation" : "affine";
}

}  // namespace

Json matrix_to_json(const Matrix4& m) {
  Json rows = Json::array();
  for (int r = 0; r < 4; ++r) {
    Json row = Json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix4 matrix_from_json(const Json& j) {
  if (!j.is_array() || j.size() != 4) throw Error(ErrorCode::kFormat, "matrix must be 4 rows");
  Matrix4 m;
  for (int r = 0; r < 4; ++r) {
    if (!j[r].is_array() || j[r].size() != 4) throw Error(ErrorCode::kFormat, "matrix row must have 4 entries");
    for (int c = 0; c < 4; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

void to_json(Json& j, const AffineParams& p) {
  j = Json{{"translation", p.translation},
           {"rotation_deg", p.rotation_deg},
           {"scale", p.scale},
           {"shear", p.shear}};
}

void from_json(const Json& j, AffineParams& p) {
  p = AffineParams{};
  get_opt(j, "translation", p.translation);
  get_opt(j, "rotation_deg", p.rotation_deg);
  get_opt(j, "scale", p.scale);
  get_opt(j, "shear", p.shear);
}

void to_json(Json& j, const StandardizationModel& m) {
  j = Json{{"pc1", m.pc1},
           {"pc2", m.pc2},
           {"s1", m.s1},
           {"s2", m.s2},
           {"mu_s", m.mu_s},
           {"body_region", m.body_region},
           {"protocol", m.protocol},
           {"training_slope_range", {m.training_slope_range.first, m.training_slope_range.second}}};
}

void from_json(const Json& j, StandardizationModel& m) {
  m = StandardizationModel{};
  get_opt(j, "pc1", m.pc1);
  get_opt(j, "pc2", m.pc2);
  get_opt(j, "s1", m.s1);
  get_opt(j, "s2", m.s2);
  get_opt(j, "mu_s", m.mu_s);
  get_opt(j, "body_region", m.body_region);
  get_opt(j, "protocol", m.protocol);
  if (auto it = j.find("training_slope_range"); it != j.end()) {
    m.training_slope_range = {it->at(0).get<double>(), it->at(1).get<double>()};
  }
}

void to_json(Json& j, const PhantomSpec& s) {
  Json tissues = Json::array();
  for (const auto& t : s.tissues) {
    Json shapes = Json::array();
    for (const auto& e : t.shapes) shapes.push_back({{"center", e.center}, {"radii", e.radii}});
    tissues.push_back({{"label", t.label}, {"mean_t2", t.mean_t2}, {"mean_pd", t.mean_pd}, {"shapes", shapes}});
  }
  j = Json{{"dims", {s.dims.nx, s.dims.ny, s.dims.nz}},
           {"voxel_size", s.voxel_size},
           {"tissues", tissues},
           {"noise_sigma", s.noise_sigma},
           {"bias_amplitude", s.bias_amplitude},
           {"seed", s.seed},
           {"intensity_gain", s.intensity_gain},
           {"geometry_scale", s.geometry_scale},
           {"body_region", s.body_region},
           {"ceiling", s.ceiling}};
}

void from_json(const Json& j, PhantomSpec& s) {
  Dims dims{64, 64, 64};
  if (auto it = j.find("dims"); it != j.end()) {
    dims = {it->at(0).get<int>(), it->at(1).get<int>(), it->at(2).get<int>()};
  }
  s = default_phantom_spec(dims);
  get_opt(j, "voxel_size", s.voxel_size);
  if (auto it = j.find("tissues"); it != j.end()) {
    s.tissues.clear();
    for (const auto& jt : *it) {
      TissueClass t;
      t.label = jt.value("label", std::string{});
      t.mean_t2 = jt.at("mean_t2").get<double>();
      t.mean_pd = jt.at("mean_pd").get<double>();
      for (const auto& je : jt.at("shapes")) {
        Ellipsoid e;
        get_opt(je, "center", e.center);
        get_opt(je, "radii", e.radii);
        t.shapes.push_back(e);
      }
      s.tissues.push_back(std::move(t));
    }
  }
  get_opt(j, "noise_sigma", s.noise_sigma);
  get_opt(j, "bias_amplitude", s.bias_amplitude);
  get_opt(j, "seed", s.seed);
  get_opt(j, "intensity_gain", s.intensity_gain);
  get_opt(j, "geometry_scale", s.geometry_scale);
  get_opt(j, "body_region", s.body_region);
  get_opt(j, "ceiling", s.ceiling);
}

void to_json(Json& j, const RegistrationConfig& c) {
  j = Json{{"pyramid_levels", c.pyramid_levels},
           {"max_iters", c.max_iters},
           {"convergence_tol", c.convergence_tol},
           {"damping", c.damping},
           {"initial_params", c.initial_params}};
}

void from_json(const Json& j, RegistrationConfig& c) {
  c = RegistrationConfig{};
  get_opt(j, "pyramid_levels", c.pyramid_levels);
  get_opt(j, "max_iters", c.max_iters);
  get_opt(j, "convergence_tol", c.convergence_tol);
  get_opt(j, "damping", c.damping);
  get_opt(j, "initial_params", c.initial_params);
}

void to_json(Json& j, const CorrectionOptions& c) {
  j = Json{{"enabled", c.enabled},
           {"theta_fraction", c.theta_fraction},
           {"max_iters", c.max_iters},
           {"growth_tol", c.growth_tol}};
}

void from_json(const Json& j, CorrectionOptions& c) {
  c = CorrectionOptions{};
  get_opt(j, "enabled", c.enabled);
  get_opt(j, "theta_fraction", c.theta_fraction);
  get_opt(j, "max_iters", c.max_iters);
  get_opt(j, "growth_tol", c.growth_tol);
}

void to_json(Json& j, const TrainingOptions& t) {
  j = Json{{"pc1", t.pc1}, {"pc2", t.pc2}, {"s1", t.s1}, {"s2", t.s2}};
}

void from_json(const Json& j, TrainingOptions& t) {
  t = TrainingOptions{};
  get_opt(j, "pc1", t.pc1);
  get_opt(j, "pc2", t.pc2);
  get_opt(j, "s1", t.s1);
  get_opt(j, "s2", t.s2);
}

void to_json(Json& j, const RegistrationResult& r) {
  Json trace = Json::array();
  for (std::size_t i = 0; i < r.per_level_trace.size();) {
    const TraceEntry& first = r.per_level_trace[i];
    std::size_t k = i;
    while (k + 1 < r.per_level_trace.size() && r.per_level_trace[k + 1].level == first.level &&
           r.per_level_trace[k + 1].pass == first.pass) {
      ++k;
    }
    trace.push_back({{"level", first.level},
                     {"pass", pass_name(first.pass)},
                     {"start_ssd", real_or_flag(first.ssd)},
                     {"end_ssd", real_or_flag(r.per_level_trace[k].ssd)},
                     {"steps", r.per_level_trace[k].iter - first.iter}});
    i = k + 1;
  }
  j = Json{{"params", r.params},
           {"matrix", matrix_to_json(r.matrix)},
           {"final_ssd", real_or_flag(r.final_ssd)},
           {"iterations_used", r.iterations_used},
           {"converged", r.converged},
           {"trace", trace}};
}

void from_json(const Json& j, RegistrationResult& r) {
  r = RegistrationResult{};
  r.params = j.at("params").get<AffineParams>();
  r.matrix = matrix_from_json(j.at("matrix"));
  if (j.at("final_ssd").is_number()) r.final_ssd = j.at("final_ssd").get<double>();
  get_opt(j, "iterations_used", r.iterations_used);
  get_opt(j, "converged", r.converged);
  // Rebuild the coarse trace from the summary endpoints.
  if (auto it = j.find("trace"); it != j.end()) {
    for (const auto& t : *it) {
      const RegistrationPass pass = t.at("pass") == "translation" ? RegistrationPass::kTranslation
                                                                   : RegistrationPass::kAffine;
      const int level = t.at("level").get<int>();
      if (t.at("start_ssd").is_number()) r.per_level_trace.push_back({level, 0, t.at("start_ssd").get<double>(), pass});
      if (t.at("end_ssd").is_number() && t.at("steps").get<int>() > 0) {
        r.per_level_trace.push_back({level, t.at("steps").get<int>(), t.at("end_ssd").get<double>(), pass});
      }
    }
  }
}

void to_json(Json& j, const ExperimentCell& c) {
  j = Json{{"subject", c.subject},
           {"protocol", c.protocol},
           {"level", c.level},
           {"cell_id", c.cell_id},
           {"cell", make_cell(c.cell_id).name()},
           {"group", to_string(c.group)},
           {"truth", c.truth},
           {"truth_matrix", matrix_to_json(c.truth_matrix)},
           {"m1", c.m1},
           {"m2", c.m2},
           {"box", {{"min", c.box.min_corner}, {"max", c.box.max_corner}}},
           {"voxel_size", c.voxel_size},
           {"status", to_string(c.status)}};
  j["result_s"] = c.result_s ? Json(*c.result_s) : Json(nullptr);
  j["result_ns"] = c.result_ns ? Json(*c.result_ns) : Json(nullptr);
  j["rmse_s"] = real_or_flag(c.rmse_s);
  j["rmse_ns"] = real_or_flag(c.rmse_ns);
  if (!c.error.empty()) j["error"] = c.error;
}

void from_json(const Json& j, ExperimentCell& c) {
  c = ExperimentCell{};
  c.subject = j.at("subject").get<int>();
  c.protocol = j.at("protocol").get<std::string>();
  c.level = j.at("level").get<std::string>();
  c.cell_id = j.at("cell_id").get<int>();
  c.group = make_cell(c.cell_id).group;
  c.truth = j.at("truth").get<AffineParams>();
  c.truth_matrix = matrix_from_json(j.at("truth_matrix"));
  get_opt(j, "m1", c.m1);
  get_opt(j, "m2", c.m2);
  c.box.min_corner = j.at("box").at("min").get<Index3>();
  c.box.max_corner = j.at("box").at("max").get<Index3>();
  c.voxel_size = j.at("voxel_size").get<VoxelSize>();
  c.status = cell_status_from_string(j.at("status").get<std::string>());
  if (j.at("result_s").is_object()) c.result_s = j.at("result_s").get<RegistrationResult>();
  if (j.at("result_ns").is_object()) c.result_ns = j.at("result_ns").get<RegistrationResult>();
  if (j.at("rmse_s").is_number()) c.rmse_s = j.at("rmse_s").get<double>();
  if (j.at("rmse_ns").is_number()) c.rmse_ns = j.at("rmse_ns").get<double>();
  get_opt(j, "error", c.error);
}

void to_json(Json& j, const ExperimentPlan& p) {
  Json levels = Json::array();
  for (const auto& l : p.levels) levels.push_back(l.id);
  Json grid = Json::array();
  for (const auto& c : p.grid) grid.push_back(c.id);
  j = Json{{"subjects", p.subjects},
           {"protocols", p.protocols},
           {"phantom", p.phantom},
           {"gain_spread", p.gain_spread},
           {"geometry_spread", p.geometry_spread},
           {"input_dir", p.input_dir.string()},
           {"levels", levels},
           {"grid", grid},
           {"registration", p.registration},
           {"correction", p.correction},
           {"standardization", p.standardization},
           {"master_seed", p.master_seed},
           {"output_dir", p.output_dir.string()},
           {"workers", p.workers}};
}

void from_json(const Json& j, ExperimentPlan& p) {
  p = ExperimentPlan{};
  get_opt(j, "subjects", p.subjects);
  get_opt(j, "protocols", p.protocols);
  if (auto it = j.find("phantom"); it != j.end()) p.phantom = it->get<PhantomSpec>();
  get_opt(j, "gain_spread", p.gain_spread);
  get_opt(j, "geometry_spread", p.geometry_spread);
  if (auto it = j.find("input_dir"); it != j.end()) p.input_dir = it->get<std::string>();
  if (auto it = j.find("levels"); it != j.end()) {
    p.levels.clear();
    if (it->is_string() && *it == "all") {
      p.levels = default_levels();
    } else {
      for (const auto& id : *it) p.levels.push_back(level_by_id(id.get<std::string>()));
    }
  }
  if (auto it = j.find("grid"); it != j.end()) {
    if (it->is_string()) {
      if (*it == "full") p.grid = deformation_grid();
      else if (*it == "desk") p.grid = desk_grid();
      else throw Error(ErrorCode::kFormat, "grid must be \"full\", \"desk\" or a list of cell ids");
    } else {
      p.grid.clear();
      for (const auto& id : *it) p.grid.push_back(make_cell(id.get<int>()));
    }
  }
  if (auto it = j.find("registration"); it != j.end()) p.registration = it->get<RegistrationConfig>();
  if (auto it = j.find("correction"); it != j.end()) p.correction = it->get<CorrectionOptions>();
  if (auto it = j.find("standardization"); it != j.end()) p.standardization = it->get<TrainingOptions>();
  get_opt(j, "master_seed", p.master_seed);
  if (auto it = j.find("output_dir"); it != j.end()) p.output_dir = it->get<std::string>();
  get_opt(j, "workers", p.workers);
}

void to_json(Json& j, const GoodnessReport& r) {
  Json table = Json::array();
  for (const auto& c : r.table) {
    Json entry{{"level", c.level}, {"group", c.group}, {"w", c.record.w}, {"l", c.record.l}, {"n", c.record.n}};
    if (c.record.total() > 0) {
      entry["W"] = c.record.win_fraction();
      entry["L"] = c.record.loss_fraction();
    } else {
      entry["W"] = nullptr;
      entry["L"] = nullptr;
    }
    entry["gamma"] = real_or_flag(c.gamma);
    table.push_back(std::move(entry));
  }
  Json tests = Json::array();
  for (const auto& t : r.cell_tests) {
    tests.push_back({{"level", t.level},
                     {"cell_id", t.cell_id},
                     {"cell", make_cell(t.cell_id).name()},
                     {"group", t.group},
                     {"pairs", t.sample.rmse_s.size()},
                     {"t", real_or_flag(t.test.t)},
                     {"p", real_or_flag(t.test.p)},
                     {"df", t.test.df},
                     {"mean_diff", t.test.mean_diff},
                     {"outcome", to_string(t.test.outcome)}});
  }
  Json dist = Json::object();
  for (const auto& [level, sample] : r.distributions) {
    dist[level] = {{"s", sample.rmse_s}, {"ns", sample.rmse_ns}};
  }
  j = Json{{"kind", r.kind},
           {"alpha", r.alpha},
           {"levels", r.levels},
           {"groups", r.groups},
           {"table", table},
           {"cell_tests", tests},
           {"excluded", r.excluded},
           {"gaps", r.gaps},
           {"distributions", dist}};
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::kFormat, path.string() + ": " + e.what());
  }
}

}  // namespace nsreg
