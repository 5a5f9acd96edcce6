#include "cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "nsreg/correct.hpp"
#include "nsreg/error.hpp"
#include "nsreg/evaluate.hpp"
#include "nsreg/phantom.hpp"
#include "nsreg/pipeline.hpp"
#include "nsreg/register.hpp"
#include "nsreg/serialize.hpp"
#include "nsreg/standardize.hpp"
#include "nsreg/transform.hpp"

namespace fs = std::filesystem;

namespace nsreg::cli {

namespace {

std::string stem_of(const std::string& path) { return header_path(path).stem().string(); }

fs::path scene_out(const std::string& out_dir, const std::string& input) {
  return fs::path(out_dir) / (stem_of(input) + ".scnh");
}

std::array<double, 3> to_array3(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

DeformationCell find_cell(const std::string& key) {
  if (!key.empty() && std::isdigit(static_cast<unsigned char>(key[0]))) return make_cell(std::stoi(key));
  for (const auto& c : deformation_grid()) {
    if (c.name() == key) return c;
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown deformation cell '" + key + "'");
}

void print_params(std::ostream& out, const AffineParams& p) {
  auto row = [&](const char* name, const std::array<double, 3>& v) {
    out << name << ' ' << v[0] << ' ' << v[1] << ' ' << v[2] << '\n';
  };
  row("translation", p.translation);
  row("rotation_deg", p.rotation_deg);
  row("scale", p.scale);
  row("shear", p.shear);
}

// Report CSV goes to --out; the JSON summary sits next to it.
void write_report(const GoodnessReport& report, const fs::path& csv) {
  fs::path json = csv;
  json.replace_extension(".json");
  write_file_atomic(csv, report_csv(report));
  write_file_atomic(json, dump(Json(report)));
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intensity non-standardness and affine registration experiments", "nsreg"};
  app.require_subcommand(1);

  // phantom
  auto* phantom = app.add_subcommand("phantom", "Generate a paired T2/PD phantom");
  std::uint64_t seed = 0;
  std::string out_dir;
  std::vector<int> dims{64, 64, 64};
  std::vector<double> voxel{1.0, 1.0, 1.0};
  double noise = 0.0;
  double bias = 0.0;
  double gain = 1.0;
  double geometry = 1.0;
  std::string spec_file;
  phantom->add_option("--seed", seed, "Noise and bias-field seed")->required();
  phantom->add_option("--out", out_dir, "Output directory")->required();
  phantom->add_option("--dims", dims, "Grid size nx ny nz")->expected(3)->capture_default_str();
  phantom->add_option("--voxel-size", voxel, "Voxel size in mm")->expected(3)->capture_default_str();
  phantom->add_option("--noise", noise, "Gaussian noise sigma")->capture_default_str();
  phantom->add_option("--bias", bias, "Bias-field amplitude")->capture_default_str();
  phantom->add_option("--gain", gain, "Global intensity gain")->capture_default_str();
  phantom->add_option("--geometry-scale", geometry, "Radius scale")->capture_default_str();
  phantom->add_option("--spec", spec_file, "Phantom spec JSON (overrides the shape flags)");

  // correct
  auto* correct = app.add_subcommand("correct", "Remove a smooth multiplicative bias field");
  std::vector<std::string> inputs;
  double theta_fraction = 0.05;
  int correct_iters = 10;
  double growth_tol = 0.05;
  correct->add_option("inputs", inputs, "Scene headers")->required();
  correct->add_option("--out", out_dir, "Output directory")->required();
  correct->add_option("--theta-fraction", theta_fraction, "Homogeneity threshold over the median")
      ->capture_default_str();
  correct->add_option("--max-iters", correct_iters, "Maximum correction passes")->capture_default_str();
  correct->add_option("--growth-tol", growth_tol, "Stop when the region grows by less")->capture_default_str();

  // train
  auto* train = app.add_subcommand("train", "Train a standardization model on a cohort");
  TrainingOptions training;
  std::string out_file;
  train->add_option("inputs", inputs, "Scene headers (>= 2, one protocol)")->required();
  train->add_option("--out", out_file, "Model JSON file")->required();
  train->add_option("--pc1", training.pc1, "Low landmark percentile")->capture_default_str();
  train->add_option("--pc2", training.pc2, "High landmark percentile")->capture_default_str();
  train->add_option("--s1", training.s1, "Standard scale minimum")->capture_default_str();
  train->add_option("--s2", training.s2, "Standard scale maximum")->capture_default_str();

  // standardize
  auto* standardize = app.add_subcommand("standardize", "Map scenes onto the standard scale");
  std::string model_file;
  standardize->add_option("inputs", inputs, "Scene headers")->required();
  standardize->add_option("--model", model_file, "Model JSON file")->required();
  standardize->add_option("--out", out_dir, "Output directory")->required();

  // inject
  auto* inject = app.add_subcommand("inject", "Inject non-standardness at a level");
  std::string input;
  std::string level_id;
  inject->add_option("input", input, "Scene header")->required();
  inject->add_option("--level", level_id, "clean, psibar1 .. psibar7")->required();
  inject->add_option("--seed", seed, "Slope draw seed")->required();
  inject->add_option("--out", out_dir, "Output directory")->required();

  // deform
  auto* deform = app.add_subcommand("deform", "Apply a known affine deformation");
  std::string cell_key;
  std::vector<double> translation{0, 0, 0};
  std::vector<double> rotation{0, 0, 0};
  std::vector<double> scale{1, 1, 1};
  std::vector<double> shear{0, 0, 0};
  deform->add_option("input", input, "Scene header")->required();
  deform->add_option("--out", out_dir, "Output directory")->required();
  auto* cell_opt = deform->add_option("--cell", cell_key, "Grid cell name (r1t2s0h0) or id 0..80");
  deform->add_option("--translation", translation, "Voxels")->expected(3)->excludes(cell_opt)->capture_default_str();
  deform->add_option("--rotation", rotation, "Degrees")->expected(3)->excludes(cell_opt)->capture_default_str();
  deform->add_option("--scale", scale, "Per-axis scale")->expected(3)->excludes(cell_opt)->capture_default_str();
  deform->add_option("--shear", shear, "xy xz yz")->expected(3)->excludes(cell_opt)->capture_default_str();

  // register
  auto* reg = app.add_subcommand("register", "Affine registration by SSD");
  std::string source;
  std::string target;
  std::string init = "identity";
  RegistrationConfig config;
  reg->add_option("source", source, "Source scene header")->required();
  reg->add_option("target", target, "Target scene header")->required();
  reg->add_option("--init", init, "identity or a params JSON file")->capture_default_str();
  reg->add_option("--pyramid-levels", config.pyramid_levels, "Resolution levels")->capture_default_str();
  reg->add_option("--max-iters", config.max_iters, "Iterations per level")->capture_default_str();
  reg->add_option("--tol", config.convergence_tol, "Relative SSD tolerance")->capture_default_str();
  reg->add_option("--damping", config.damping, "Initial LM damping")->capture_default_str();
  reg->add_option("--out", out_file, "Result JSON file");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment plan");
  std::string plan_file;
  int workers = 1;
  run->add_option("--plan", plan_file, "Plan JSON file (defaults when omitted)");
  run->add_option("--seed", seed, "Master seed")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  auto* workers_opt = run->add_option("--workers", workers, "Worker threads")->capture_default_str();

  // reports
  double alpha = 0.05;
  std::string results;
  auto* rep_acc = app.add_subcommand("report-accuracy", "Goodness table against the known truth");
  rep_acc->add_option("results", results, "Plan output or cells directory")->required();
  rep_acc->add_option("--out", out_file, "CSV file (JSON written alongside)")->required();
  rep_acc->add_option("--alpha", alpha, "Significance level")->capture_default_str();
  auto* rep_con = app.add_subcommand("report-consistency", "Goodness table of T2/PD agreement");
  rep_con->add_option("results", results, "Plan output or cells directory")->required();
  rep_con->add_option("--out", out_file, "CSV file (JSON written alongside)")->required();
  rep_con->add_option("--alpha", alpha, "Significance level")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (phantom->parsed()) {
      PhantomSpec spec;
      if (!spec_file.empty()) {
        spec = read_json_file(spec_file).get<PhantomSpec>();
      } else {
        spec = default_phantom_spec({dims[0], dims[1], dims[2]});
        spec.voxel_size = to_array3(voxel);
        spec.noise_sigma = noise;
        spec.bias_amplitude = bias;
        spec.intensity_gain = gain;
        spec.geometry_scale = geometry;
      }
      spec.seed = seed;
      auto [t2, pd] = generate_phantom_pair(spec);
      save_scene(t2, fs::path(out_dir) / "phantom_T2.scnh");
      save_scene(pd, fs::path(out_dir) / "phantom_PD.scnh");
      out << (fs::path(out_dir) / "phantom_T2.scnh").string() << '\n'
          << (fs::path(out_dir) / "phantom_PD.scnh").string() << '\n';
    } else if (correct->parsed()) {
      for (const auto& in : inputs) {
        const Scene s = load_scene(in);
        CorrectionResult r = correct_scene_traced(s, default_criterion(s, theta_fraction), correct_iters, growth_tol);
        save_scene(r.scene, scene_out(out_dir, in));
        out << scene_out(out_dir, in).string() << " passes " << r.passes << '\n';
      }
    } else if (train->parsed()) {
      std::vector<Scene> scenes;
      for (const auto& in : inputs) scenes.push_back(load_scene(in));
      const StandardizationModel model = train_model(scenes, training);
      write_file_atomic(out_file, dump(Json(model)));
      out << "mu_s " << model.mu_s << '\n';
    } else if (standardize->parsed()) {
      const auto model = read_json_file(model_file).get<StandardizationModel>();
      for (const auto& in : inputs) {
        save_scene(standardize_scene(load_scene(in), model), scene_out(out_dir, in));
        out << scene_out(out_dir, in).string() << '\n';
      }
    } else if (inject->parsed()) {
      const NonStandardnessLevel level = level_by_id(level_id);
      const auto [m1, m2] = sample_slopes(level, seed);
      save_scene(inject_nonstandardness(load_scene(input), level, seed), scene_out(out_dir, input));
      out << "m1 " << m1 << "\nm2 " << m2 << '\n';
    } else if (deform->parsed()) {
      AffineParams params;
      if (!cell_key.empty()) {
        params = find_cell(cell_key).params;
      } else {
        params.translation = to_array3(translation);
        params.rotation_deg = to_array3(rotation);
        params.scale = to_array3(scale);
        params.shear = to_array3(shear);
      }
      save_scene(resample(load_scene(input), params), scene_out(out_dir, input));
      write_file_atomic(fs::path(out_dir) / (stem_of(input) + "_truth.json"), dump(Json(params)));
      print_params(out, params);
    } else if (reg->parsed()) {
      if (init != "identity") config.initial_params = read_json_file(init).get<AffineParams>();
      const RegistrationResult r = register_affine(load_scene(source), load_scene(target), config);
      print_params(out, r.params);
      out << "final_ssd " << r.final_ssd << '\n';
      if (!out_file.empty()) write_file_atomic(out_file, dump(Json(r)));
    } else if (run->parsed()) {
      ExperimentPlan plan;
      if (!plan_file.empty()) plan = read_json_file(plan_file).get<ExperimentPlan>();
      plan.master_seed = seed;
      plan.output_dir = out_dir;
      if (workers_opt->count() > 0) plan.workers = workers;
      const RunSummary s = run_plan(plan);
      out << "records " << s.cells.size() << "\nregistrations " << s.registrations_performed
          << "\nreused " << s.records_reused << "\nfailed " << s.failures << '\n';
    } else if (rep_acc->parsed() || rep_con->parsed()) {
      const auto cells = load_cells(results);
      const GoodnessReport report =
          rep_acc->parsed() ? accuracy_report(cells, alpha) : consistency_report(cells, alpha);
      write_report(report, out_file);
      out << report_csv(report);
      if (report.excluded > 0) out << "excluded " << report.excluded << '\n';
      if (!report.gaps.empty()) out << "gaps " << report.gaps.size() << '\n';
    }
  } catch (const Error& e) {
    err << "nsreg: " << e.what() << '\n';
    return e.is_numerical() ? kExitNumerical : kExitData;
  } catch (const std::exception& e) {
    err << "nsreg: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace nsreg::cli
