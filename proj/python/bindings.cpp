#include "mvk/dataset.hpp"
#include "mvk/diffusion.hpp"
#include "mvk/error.hpp"
#include "mvk/experiment.hpp"
#include "mvk/itosim.hpp"
#include "mvk/kernel_io.hpp"
#include "mvk/localcov.hpp"
#include "mvk/mahalanobis.hpp"
#include "mvk/metrics.hpp"
#include "mvk/multiview.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>
#include <string>
#include <vector>

namespace py = pybind11;
using namespace pybind11::literals;

namespace {

using Covariances = std::vector<std::vector<Eigen::MatrixXd>>;

mvk::KernelMatrix as_kernel(const Eigen::MatrixXd& values, double epsilon, const std::string& convention) {
  return {values, epsilon, mvk::parse_convention(convention)};
}

mvk::NeighborhoodSpec neighborhood(std::optional<std::size_t> knn, std::optional<double> radius) {
  if (knn && radius) mvk::fail(mvk::ErrorCode::InvalidArgument, "give either knn or radius, not both");
  const auto spec = radius ? mvk::NeighborhoodSpec::within(*radius) : mvk::NeighborhoodSpec::nearest(knn.value_or(20));
  spec.validate();
  return spec;
}

std::vector<std::vector<mvk::LocalCovariance>> wrap_covariances(const Covariances& covs) {
  std::vector<std::vector<mvk::LocalCovariance>> out(covs.size());
  for (std::size_t l = 0; l < covs.size(); ++l) {
    for (std::size_t i = 0; i < covs[l].size(); ++i) out[l].push_back({covs[l][i], i, l, 0});
  }
  return out;
}

std::vector<Eigen::MatrixXd> unwrap(const std::vector<mvk::LocalCovariance>& covs) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(covs.size());
  for (const auto& c : covs) out.push_back(c.matrix);
  return out;
}

py::object to_python(const nlohmann::json& doc) {
  return py::module_::import("json").attr("loads")(doc.dump());
}

nlohmann::json from_python(const py::object& obj) {
  if (obj.is_none()) return nlohmann::json::object();
  return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multi-view Mahalanobis kernels and diffusion maps";
  m.attr("__version__") = MVK_VERSION;

  // Raised for every library failure; `code` holds the error kind name.
  static py::handle error_type = py::exception<mvk::Error>(m, "MvkError").release();
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const mvk::Error& e) {
      py::object exc = py::reinterpret_borrow<py::object>(error_type)(e.what());
      exc.attr("code") = mvk::to_string(e.code());
      PyErr_SetObject(error_type.ptr(), exc.ptr());
    }
  });

  py::class_<mvk::MultiViewDataset>(m, "MultiViewDataset")
      .def(py::init([](std::vector<Eigen::MatrixXd> views, std::optional<Eigen::MatrixXd> ground_truth) {
             return mvk::MultiViewDataset(std::move(views), std::move(ground_truth));
           }),
           "views"_a, "ground_truth"_a = py::none())
      .def_property_readonly("size", &mvk::MultiViewDataset::size)
      .def_property_readonly("num_views", &mvk::MultiViewDataset::num_views)
      .def_property_readonly("views", &mvk::MultiViewDataset::views)
      .def_property_readonly("has_ground_truth", &mvk::MultiViewDataset::has_ground_truth)
      .def_property_readonly("ground_truth", &mvk::MultiViewDataset::ground_truth)
      .def("view", &mvk::MultiViewDataset::view, "l"_a)
      .def("__len__", &mvk::MultiViewDataset::size);

  m.def("split_views", &mvk::split_views, "data"_a, "index_sets"_a);
  m.def("concatenate_views", &mvk::concatenate_views, "dataset"_a);
  m.def("load_dataset", &mvk::load_dataset, "manifest"_a);
  m.def("save_dataset", &mvk::save_dataset, "dataset"_a, "directory"_a);

  m.def("make_brownian_consensus",
        [](std::size_t n, std::size_t zeta, std::uint64_t seed) {
          auto bc = mvk::make_brownian_consensus(n, zeta, seed);
          return py::make_tuple(std::move(bc.dataset), bc.psi);
        },
        "n"_a, "zeta"_a, "seed"_a = 0, "Dataset and the n x zeta interference values.");
  m.def("make_helix_dataset", &mvk::make_helix_dataset, "n"_a, "seed"_a = 0);
  m.def("make_flower_dataset",
        [](std::size_t n, std::size_t zeta, std::uint64_t seed) {
          return mvk::make_flower_dataset(n, zeta, seed).dataset;
        },
        "n"_a, "zeta"_a = 10, "seed"_a = 0);

  m.def("sample_covariance", &mvk::sample_covariance, "points"_a);
  m.def("pseudo_inverse", &mvk::pseudo_inverse, "c"_a, "gamma"_a);
  m.def("numerical_rank", &mvk::numerical_rank, "c"_a, "gamma"_a);
  m.def("neighborhood_covariances",
        [](const Eigen::MatrixXd& view, std::optional<std::size_t> knn, std::optional<double> radius, int workers) {
          return unwrap(mvk::neighborhood_covariances(view, neighborhood(knn, radius), 0, workers));
        },
        "view"_a, "knn"_a = py::none(), "radius"_a = py::none(), "workers"_a = 1);

  m.def("mahalanobis_distances",
        [](const Eigen::MatrixXd& view, const std::vector<Eigen::MatrixXd>& covariances,
           std::optional<double> gamma, int workers) {
          if (covariances.size() != static_cast<std::size_t>(view.rows())) {
            mvk::fail(mvk::ErrorCode::ShapeMismatch, "one covariance is required per row");
          }
          std::vector<mvk::Precision> precisions;
          precisions.reserve(covariances.size());
          for (const auto& c : covariances) {
            if (c.rows() != view.cols() || c.cols() != view.cols()) {
              mvk::fail(mvk::ErrorCode::ShapeMismatch, "covariance size differs from the view width");
            }
            precisions.push_back(gamma ? mvk::Precision::pseudo(c, *gamma) : mvk::Precision::inverse(c));
          }
          return mvk::pairwise_distances(view, precisions, workers);
        },
        "view"_a, "covariances"_a, "gamma"_a = py::none(), "workers"_a = 1,
        "Symmetric Mahalanobis distances; pseudo-inverses when gamma is given.");

  m.def("kernel_from_distances",
        [](const Eigen::MatrixXd& d, double epsilon, const std::string& convention) {
          return mvk::kernel_from_distances(d, epsilon, mvk::parse_convention(convention)).values;
        },
        "distances"_a, "epsilon"_a, "convention"_a = "full");
  m.def("kernel_violation",
        [](const Eigen::MatrixXd& k) { return mvk::kernel_violation(as_kernel(k, 1.0, "full")); }, "kernel"_a,
        "Empty string for a valid kernel, otherwise the first violation.");
  m.def("fuse_histogram_mode", &mvk::fuse_histogram_mode, "entries"_a, "bins"_a = 20);

  m.def("algorithm1_kernel",
        [](const mvk::MultiViewDataset& ds, const Covariances& covariances, double epsilon,
           const std::string& convention, bool pinv_fallback, double gamma, int workers) {
          mvk::Algorithm1Options o;
          o.epsilon = epsilon;
          o.convention = mvk::parse_convention(convention);
          o.pinv_fallback = pinv_fallback;
          o.gamma = gamma;
          o.workers = workers;
          const auto r = mvk::algorithm1_kernel(ds, wrap_covariances(covariances), o);
          return py::dict("kernel"_a = r.kernel.values, "distances"_a = r.distances, "fallbacks"_a = r.fallbacks);
        },
        "dataset"_a, "covariances"_a, "epsilon"_a = 0.02, "convention"_a = "full", "pinv_fallback"_a = true,
        "gamma"_a = -1.0, "workers"_a = 1);

  m.def("algorithm2_kernel",
        [](const mvk::MultiViewDataset& ds, double epsilon, std::optional<std::size_t> knn,
           std::optional<double> radius, const std::string& fusion, std::size_t histogram_bins,
           const std::string& convention, double gamma, int workers) {
          mvk::Algorithm2Options o;
          o.neighborhood = neighborhood(knn, radius);
          o.epsilon = epsilon;
          o.fusion = mvk::parse_fusion(fusion);
          o.histogram_bins = histogram_bins;
          o.convention = mvk::parse_convention(convention);
          o.gamma = gamma;
          o.workers = workers;
          const auto r = mvk::algorithm2_kernel(ds, o);
          return py::dict("kernel"_a = r.kernel.values, "ranks"_a = r.ranks, "median_rank"_a = r.median_rank,
                          "gamma"_a = r.gamma, "unmatched_pairs"_a = r.unmatched_pairs,
                          "floor_value"_a = r.floor_value);
        },
        "dataset"_a, "epsilon"_a = 5.0, "knn"_a = py::none(), "radius"_a = py::none(), "fusion"_a = "max",
        "histogram_bins"_a = 20, "convention"_a = "full", "gamma"_a = -1.0, "workers"_a = 1);

  m.def("row_normalize", [](const Eigen::MatrixXd& k) { return mvk::row_normalize(as_kernel(k, 1.0, "full")); },
        "kernel"_a);
  m.def("diffusion_map",
        [](const Eigen::MatrixXd& k, int dims, int t, std::size_t eigenvalue_count) {
          const auto e = mvk::diffusion_map(as_kernel(k, 1.0, "full"), dims, t, eigenvalue_count);
          return py::dict("eigenvalues"_a = e.eigenvalues, "coordinates"_a = e.coordinates,
                          "eigenvectors"_a = e.eigenvectors, "diffusion_time"_a = e.diffusion_time,
                          "degenerate"_a = e.degenerate);
        },
        "kernel"_a, "dims"_a = 2, "t"_a = 1, "eigenvalue_count"_a = 0);
  m.def("markov_eigenvalues",
        [](const Eigen::MatrixXd& k, std::size_t count) {
          return mvk::markov_eigenvalues(as_kernel(k, 1.0, "full"), count);
        },
        "kernel"_a, "count"_a = 0);
  m.def("spectral_lines", &mvk::spectral_lines, "eigenvalues"_a, "epsilon"_a);
  m.def("spectral_epsilon",
        [](double epsilon, const std::string& convention) {
          return mvk::spectral_epsilon(epsilon, mvk::parse_convention(convention));
        },
        "epsilon"_a, "convention"_a = "full");

  m.def("ground_truth_kernel",
        [](const Eigen::MatrixXd& theta, double epsilon, const std::string& convention) {
          return mvk::ground_truth_kernel(theta, epsilon, mvk::parse_convention(convention)).values;
        },
        "theta"_a, "epsilon"_a, "convention"_a = "full");
  m.def("q_factor", py::overload_cast<const Eigen::MatrixXd&, const Eigen::MatrixXd&>(&mvk::q_factor), "kernel"_a,
        "reference"_a);
  m.def("circle_fit_residual", &mvk::circle_fit_residual, "embedding"_a);
  m.def("angle_correlation", &mvk::angle_correlation, "embedding"_a, "theta"_a);
  m.def("max_angular_gap", &mvk::max_angular_gap, "embedding"_a);
  m.def("spearman_correlation", &mvk::spearman_correlation, "x"_a, "y"_a);

  m.def("read_kernel", &mvk::read_kernel, "path"_a);
  m.def("write_kernel",
        [](const std::filesystem::path& path, const Eigen::MatrixXd& k) {
          if (path.extension() == ".csv") {
            mvk::write_kernel_csv(path, k);
          } else {
            mvk::write_kernel_binary(path, k);
          }
        },
        "path"_a, "kernel"_a, "CSV for a .csv path, MVK1 binary otherwise.");

  m.def("run_experiment",
        [](const std::string& name, const py::object& overrides) {
          auto config = mvk::ExperimentConfig::defaults(name);
          mvk::apply_config_json(config, from_python(overrides));
          config.validate();
          nlohmann::json report;
          {
            py::gil_scoped_release release;
            report = mvk::run_experiment(config);
          }
          return to_python(report);
        },
        "name"_a, "overrides"_a = py::none(), "Runs a named experiment and returns its report.");
}
