#include "cqrkit/dgp.hpp"
#include "cqrkit/estimator.hpp"
#include "cqrkit/metrics.hpp"
#include "cqrkit/solver.hpp"
#include "cqrkit/version.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;
using namespace cqrkit;

namespace {

Dataset make_dataset(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  Dataset data{X, y};
  check_dataset(data);
  return data;
}

SolverSettings settings_from_tol(double tol) {
  SolverSettings settings;
  settings.abs_tol = settings.rel_tol = tol;
  return settings;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Shape-constrained quantile regression: convex (CQR), simultaneous "
            "non-crossing (sCQR), and L2-penalized (pCQR) estimators with the "
            "embedded interior-point solver";
  m.attr("__version__") = std::string(kVersion);

  py::register_exception<FitError>(m, "FitError");
  py::register_exception<GammaSearchError>(m, "GammaSearchExhausted");

  py::class_<QuantileModel>(m, "QuantileModel")
      .def_readonly("tau", &QuantileModel::tau)
      .def_readonly("alpha", &QuantileModel::alpha)
      .def_readonly("beta", &QuantileModel::beta)
      .def_readonly("eps_pos", &QuantileModel::eps_pos)
      .def_readonly("eps_neg", &QuantileModel::eps_neg)
      .def_readonly("gamma", &QuantileModel::gamma)
      .def_readonly("objective", &QuantileModel::objective)
      .def("evaluate",
           [](const QuantileModel& model, const Eigen::VectorXd& x) {
             return evaluate(model, x);
           },
           py::arg("x"))
      .def("evaluate_all",
           [](const QuantileModel& model, const Eigen::MatrixXd& X) {
             return evaluate_all(model, X);
           },
           py::arg("X"))
      .def("__repr__", [](const QuantileModel& model) {
        return "<QuantileModel tau=" + format_double(model.tau) +
               " gamma=" + format_double(model.gamma) + ">";
      });

  py::class_<MultiQuantileModel>(m, "MultiQuantileModel")
      .def_readonly("taus", &MultiQuantileModel::taus)
      .def_readonly("models", &MultiQuantileModel::models)
      .def_readonly("C", &MultiQuantileModel::C)
      .def_readonly("objective", &MultiQuantileModel::objective);

  py::class_<GammaSearchResult>(m, "GammaSearchResult")
      .def_readonly("gamma_star", &GammaSearchResult::gamma_star)
      .def_readonly("model_low", &GammaSearchResult::model_low)
      .def_readonly("model_high", &GammaSearchResult::model_high)
      .def_readonly("iterations", &GammaSearchResult::iterations)
      .def_readonly("crossing_counts", &GammaSearchResult::crossing_counts);

  py::class_<NoiseSpec>(m, "NoiseSpec")
      .def_static("from_sigma_lambda", &NoiseSpec::from_sigma_lambda,
                  py::arg("sigma_sq"), py::arg("lambda_"))
      .def_readonly("sigma_sq", &NoiseSpec::sigma_sq)
      .def_readonly("lambda_", &NoiseSpec::lambda)
      .def_readonly("sigma_v", &NoiseSpec::sigma_v)
      .def_readonly("sigma_u", &NoiseSpec::sigma_u);

  m.def(
      "fit_cqr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau, double tol) {
        return fit(build_cqr(make_dataset(X, y), tau), settings_from_tol(tol));
      },
      py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("tol") = 1e-8);

  m.def(
      "fit_pcqr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau, double gamma,
         double tol) {
        return fit(build_pcqr(make_dataset(X, y), tau, gamma), settings_from_tol(tol));
      },
      py::arg("X"), py::arg("y"), py::arg("tau"), py::arg("gamma"), py::arg("tol") = 1e-8);

  m.def(
      "fit_scqr",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const std::vector<double>& taus,
         double margin, double tol) {
        return fit(build_scqr(make_dataset(X, y), taus, margin), settings_from_tol(tol));
      },
      py::arg("X"), py::arg("y"), py::arg("taus"), py::arg("margin") = 0.0,
      py::arg("tol") = 1e-8);

  m.def(
      "detect_crossing",
      [](const QuantileModel& low, const QuantileModel& high, const Eigen::MatrixXd& points,
         double tol) { return detect_crossing(low, high, points, tol); },
      py::arg("model_low"), py::arg("model_high"), py::arg("points"), py::arg("tol") = 1e-6);

  m.def(
      "search_gamma",
      [](const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double tau1, double tau2,
         double step, double gamma_max, double tol) {
        GammaSearchOptions opts;
        opts.step = step;
        opts.gamma_max = gamma_max;
        opts.solver = settings_from_tol(tol);
        return search_gamma(make_dataset(X, y), tau1, tau2, opts);
      },
      py::arg("X"), py::arg("y"), py::arg("tau1"), py::arg("tau2"), py::arg("step") = 0.01,
      py::arg("gamma_max") = 10.0, py::arg("tol") = 1e-8);

  m.def("split_sigma", &split_sigma, py::arg("sigma_sq"), py::arg("lambda_"));

  m.def(
      "generate",
      [](Eigen::Index n, Eigen::Index d, double sigma_sq, double lambda,
         std::uint64_t seed, int replication) {
        ScenarioConfig cfg;
        cfg.n = n;
        cfg.d = d;
        cfg.noise = NoiseSpec::from_sigma_lambda(sigma_sq, lambda);
        cfg.seed = seed;
        const GeneratedSample sample = generate(cfg, replication);
        py::dict out;
        out["X"] = sample.data.X;
        out["y"] = sample.data.y;
        out["frontier"] = sample.frontier;
        out["v"] = sample.v;
        out["u"] = sample.u;
        return out;
      },
      py::arg("n"), py::arg("d"), py::arg("sigma_sq"), py::arg("lambda_"), py::arg("seed"),
      py::arg("replication") = 0);

  m.def("frontier_value", &frontier_value, py::arg("x"));
  m.def("composed_error_cdf", &composed_error_cdf, py::arg("eps"), py::arg("sigma_v"),
        py::arg("sigma_u"));
  m.def("composed_error_quantile", &composed_error_quantile, py::arg("tau"),
        py::arg("sigma_v"), py::arg("sigma_u"));
  m.def(
      "true_quantile",
      [](const Eigen::VectorXd& x, double tau, double sigma_sq, double lambda) {
        return true_quantile(x, tau, NoiseSpec::from_sigma_lambda(sigma_sq, lambda));
      },
      py::arg("x"), py::arg("tau"), py::arg("sigma_sq"), py::arg("lambda_"));

  m.def("ramp_loss", &ramp_loss, py::arg("y"), py::arg("qhat"), py::arg("tau"));
  m.def("coverage_error", &coverage_error, py::arg("y"), py::arg("qhat"), py::arg("tau"));
  m.def(
      "mse",
      [](const QuantileModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
         double sigma_sq, double lambda) {
        return mse(model, make_dataset(X, y), NoiseSpec::from_sigma_lambda(sigma_sq, lambda));
      },
      py::arg("model"), py::arg("X"), py::arg("y"), py::arg("sigma_sq"), py::arg("lambda_"));
  m.def(
      "quantile_property_check",
      [](const QuantileModel& model, double strict_tol) {
        const auto res = quantile_property_check(model, strict_tol);
        return py::make_tuple(res.n_pos, res.n_neg, res.property_ok);
      },
      py::arg("model"), py::arg("strict_tol") = 1e-6);
}
