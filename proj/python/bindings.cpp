#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/operators.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "nsreg/correct.hpp"
#include "nsreg/error.hpp"
#include "nsreg/evaluate.hpp"
#include "nsreg/phantom.hpp"
#include "nsreg/pipeline.hpp"
#include "nsreg/register.hpp"
#include "nsreg/serialize.hpp"
#include "nsreg/standardize.hpp"
#include "nsreg/transform.hpp"

namespace py = pybind11;
using namespace nsreg;

namespace {

// Arrays are indexed [z, y, x] so that x runs fastest, as on disk.
Scene scene_from_array(py::array_t<std::uint16_t, py::array::c_style | py::array::forcecast> a,
                       VoxelSize voxel_size, std::string protocol, std::string body_region,
                       std::uint32_t ceiling) {
  if (a.ndim() != 3) throw py::value_error("expected a 3-d array indexed [z, y, x]");
  Dims dims{static_cast<int>(a.shape(2)), static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0))};
  std::vector<Intensity> v(a.data(), a.data() + a.size());
  return Scene(dims, voxel_size, std::move(v), std::move(body_region), std::move(protocol), ceiling);
}

py::array_t<std::uint16_t> scene_to_array(const Scene& s) {
  const Dims& d = s.dims();
  py::array_t<std::uint16_t> a({d.nz, d.ny, d.nx});
  std::copy(s.intensities().begin(), s.intensities().end(), a.mutable_data());
  return a;
}

py::dict test_dict(const TTestResult& r) {
  py::dict d;
  d["outcome"] = to_string(r.outcome);
  d["t"] = r.t;
  d["p"] = r.p;
  d["df"] = r.df;
  d["mean_diff"] = r.mean_diff;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Non-standardness and affine registration experiments";

  static py::exception<Error> exc(m, "NsregError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      PyErr_SetString(exc.ptr(), (std::string(to_string(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::class_<Scene>(m, "Scene")
      .def(py::init(&scene_from_array), py::arg("data"), py::arg("voxel_size") = VoxelSize{1.0, 1.0, 1.0},
           py::arg("protocol") = "", py::arg("body_region") = "head", py::arg("ceiling") = kDefaultCeiling)
      .def_property_readonly("dims", [](const Scene& s) { return std::array<int, 3>{s.dims().nx, s.dims().ny, s.dims().nz}; })
      .def_property_readonly("voxel_size", &Scene::voxel_size)
      .def_property_readonly("protocol", &Scene::protocol)
      .def_property_readonly("body_region", &Scene::body_region)
      .def_property_readonly("ceiling", &Scene::ceiling)
      .def("foreground_count", &Scene::foreground_count)
      .def("to_array", &scene_to_array)
      .def(py::self == py::self);

  m.def("load_scene", &load_scene, py::arg("path"));
  m.def("save_scene", &save_scene, py::arg("scene"), py::arg("path"));

  m.def(
      "generate_phantom_pair",
      [](std::array<int, 3> dims, std::uint64_t seed, double noise, double bias, double gain, double geometry) {
        PhantomSpec spec = default_phantom_spec({dims[0], dims[1], dims[2]});
        spec.seed = seed;
        spec.noise_sigma = noise;
        spec.bias_amplitude = bias;
        spec.intensity_gain = gain;
        spec.geometry_scale = geometry;
        return generate_phantom_pair(spec);
      },
      py::arg("dims") = std::array<int, 3>{64, 64, 64}, py::kw_only(), py::arg("seed"), py::arg("noise") = 0.0,
      py::arg("bias") = 0.0, py::arg("gain") = 1.0, py::arg("geometry_scale") = 1.0);

  m.def(
      "correct_scene",
      [](const Scene& s, double theta_fraction, int max_iters, double growth_tol) {
        return correct_scene(s, default_criterion(s, theta_fraction), max_iters, growth_tol);
      },
      py::arg("scene"), py::arg("theta_fraction") = 0.05, py::arg("max_iters") = 10, py::arg("growth_tol") = 0.05);

  py::class_<StandardizationModel>(m, "StandardizationModel")
      .def_readonly("pc1", &StandardizationModel::pc1)
      .def_readonly("pc2", &StandardizationModel::pc2)
      .def_readonly("s1", &StandardizationModel::s1)
      .def_readonly("s2", &StandardizationModel::s2)
      .def_readonly("mu_s", &StandardizationModel::mu_s)
      .def_readonly("protocol", &StandardizationModel::protocol)
      .def("to_json", [](const StandardizationModel& mdl) { return dump(Json(mdl)); })
      .def_static("from_json", [](const std::string& s) { return Json::parse(s).get<StandardizationModel>(); });

  m.def(
      "train_model",
      [](const std::vector<Scene>& scenes, double pc1, double pc2, double s1, double s2) {
        return train_model(scenes, TrainingOptions{pc1, pc2, s1, s2});
      },
      py::arg("scenes"), py::arg("pc1") = 0.0, py::arg("pc2") = 99.8, py::arg("s1") = 1.0, py::arg("s2") = 4095.0);
  m.def("standardize_scene", &standardize_scene, py::arg("scene"), py::arg("model"));
  m.def(
      "inject_nonstandardness",
      [](const Scene& s, const std::string& level, std::uint64_t seed) {
        return inject_nonstandardness(s, level_by_id(level), seed);
      },
      py::arg("scene"), py::arg("level"), py::arg("seed"));
  m.def(
      "sample_slopes", [](const std::string& level, std::uint64_t seed) { return sample_slopes(level_by_id(level), seed); },
      py::arg("level"), py::arg("seed"));
  m.def("levels", [] {
    std::vector<std::string> ids;
    for (const auto& l : default_levels()) ids.push_back(l.id);
    return ids;
  });

  py::class_<AffineParams>(m, "AffineParams")
      .def(py::init<>())
      .def(py::init([](std::array<double, 12> v) { return AffineParams::from_array(v); }), py::arg("values"))
      .def_readwrite("translation", &AffineParams::translation)
      .def_readwrite("rotation_deg", &AffineParams::rotation_deg)
      .def_readwrite("scale", &AffineParams::scale)
      .def_readwrite("shear", &AffineParams::shear)
      .def("as_array", &AffineParams::as_array)
      .def("__repr__", [](const AffineParams& p) { return "AffineParams(" + Json(p).dump() + ")"; });

  m.def("affine_matrix", [](const AffineParams& p, const Scene& s) { return matrix(p, scene_center(s.dims())); },
        py::arg("params"), py::arg("scene"));
  m.def("resample", py::overload_cast<const Scene&, const AffineParams&>(&resample), py::arg("scene"),
        py::arg("params"));
  m.def("grid_cell", [](int id) {
    const DeformationCell c = make_cell(id);
    return py::make_tuple(c.name(), to_string(c.group), c.params);
  });
  m.def("desk_grid_ids", [] {
    std::vector<int> ids;
    for (const auto& c : desk_grid()) ids.push_back(c.id);
    return ids;
  });

  py::class_<RegistrationResult>(m, "RegistrationResult")
      .def_readonly("params", &RegistrationResult::params)
      .def_readonly("matrix", &RegistrationResult::matrix)
      .def_readonly("final_ssd", &RegistrationResult::final_ssd)
      .def_readonly("iterations_used", &RegistrationResult::iterations_used)
      .def_readonly("converged", &RegistrationResult::converged);

  m.def(
      "register_affine",
      [](const Scene& src, const Scene& tgt, int pyramid_levels, int max_iters, double tol, double damping) {
        RegistrationConfig c;
        c.pyramid_levels = pyramid_levels;
        c.max_iters = max_iters;
        c.convergence_tol = tol;
        c.damping = damping;
        py::gil_scoped_release release;
        return register_affine(src, tgt, c);
      },
      py::arg("source"), py::arg("target"), py::arg("pyramid_levels") = 3, py::arg("max_iters") = 50,
      py::arg("tol") = 1e-6, py::arg("damping") = 1e-3);

  m.def(
      "rmse_corners",
      [](const AffineParams& truth, const AffineParams& recovered, const Scene& s) {
        return rmse_corners(truth, recovered, foreground_bounding_box(s), s.voxel_size(), scene_center(s.dims()));
      },
      py::arg("truth"), py::arg("recovered"), py::arg("scene"));

  m.def(
      "paired_t_test",
      [](std::vector<double> s, std::vector<double> ns, double alpha) {
        return test_dict(paired_t_test(PairedSample{std::move(s), std::move(ns)}, alpha));
      },
      py::arg("rmse_s"), py::arg("rmse_ns"), py::arg("alpha") = 0.05);
  m.def("goodness", [](int w, int l, int n) { return goodness(WinLossRecord{w, l, n}); }, py::arg("w"), py::arg("l"),
        py::arg("n"));

  m.def(
      "run_plan",
      [](const std::string& plan_json) {
        const ExperimentPlan plan = Json::parse(plan_json).get<ExperimentPlan>();
        RunSummary s;
        {
          py::gil_scoped_release release;
          s = run_plan(plan);
        }
        py::dict d;
        d["records"] = s.cells.size();
        d["registrations"] = s.registrations_performed;
        d["reused"] = s.records_reused;
        d["failures"] = s.failures;
        return d;
      },
      py::arg("plan_json"));
  m.def(
      "accuracy_report",
      [](const std::filesystem::path& dir, double alpha) { return report_csv(accuracy_report(load_cells(dir), alpha)); },
      py::arg("results"), py::arg("alpha") = 0.05);
  m.def(
      "consistency_report",
      [](const std::filesystem::path& dir, double alpha) {
        return report_csv(consistency_report(load_cells(dir), alpha));
      },
      py::arg("results"), py::arg("alpha") = 0.05);
}
