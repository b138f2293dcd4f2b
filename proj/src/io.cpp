#include "cqrkit/io.hpp"

#include <json.hpp>

#include <charconv>
#include <fstream>
#include <sstream>

namespace cqrkit {

namespace {

using nlohmann::json;

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_number(const std::string& token, Eigen::Index row, Eigen::Index col) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto res = std::from_chars(first, last, value);
  if (res.ec != std::errc() || res.ptr != last)
    throw InputError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                     ": cannot parse '" + token + "' as a number");
  return value;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

Eigen::VectorXd vector_from_json(const json& arr) {
  Eigen::VectorXd v(arr.size());
  for (size_t i = 0; i < arr.size(); ++i) v[static_cast<Eigen::Index>(i)] = arr[i].get<double>();
  return v;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& rows) {
  const auto n = static_cast<Eigen::Index>(rows.size());
  const auto d = n > 0 ? static_cast<Eigen::Index>(rows[0].size()) : 0;
  Eigen::MatrixXd m(n, d);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index k = 0; k < d; ++k)
      m(i, k) = rows[static_cast<size_t>(i)][static_cast<size_t>(k)].get<double>();
  return m;
}

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return j;
}

void store_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace

Dataset read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw InputError(path.string() + ": empty file");
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header.back() != "y")
    throw InputError(path.string() + ": header must be x1,...,xd,y");
  const auto d = static_cast<Eigen::Index>(header.size()) - 1;
  for (Eigen::Index k = 0; k < d; ++k)
    if (header[static_cast<size_t>(k)] != "x" + std::to_string(k + 1))
      throw InputError(path.string() + ": header column " + std::to_string(k + 1) +
                       " must be x" + std::to_string(k + 1));

  std::vector<std::vector<double>> rows;
  Eigen::Index row_no = 1;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (static_cast<Eigen::Index>(fields.size()) != d + 1)
      throw InputError(path.string() + ": row " + std::to_string(row_no) + " has " +
                       std::to_string(fields.size()) + " fields, expected " +
                       std::to_string(d + 1));
    std::vector<double> parsed(fields.size());
    for (size_t c = 0; c < fields.size(); ++c) {
      try {
        parsed[c] = parse_number(fields[c], row_no, static_cast<Eigen::Index>(c) + 1);
      } catch (const InputError& e) {
        throw InputError(path.string() + ": " + e.what());
      }
    }
    rows.push_back(std::move(parsed));
  }

  Dataset data;
  data.X.resize(static_cast<Eigen::Index>(rows.size()), d);
  data.y.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k)
      data.X(static_cast<Eigen::Index>(i), k) = rows[i][static_cast<size_t>(k)];
    data.y[static_cast<Eigen::Index>(i)] = rows[i].back();
  }
  try {
    check_dataset(data);
  } catch (const std::invalid_argument& e) {
    throw InputError(path.string() + ": " + e.what());
  }
  return data;
}

void write_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  std::ostringstream out;
  for (Eigen::Index k = 0; k < data.d(); ++k) out << "x" << (k + 1) << ',';
  out << "y\n";
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    for (Eigen::Index k = 0; k < data.d(); ++k) out << format_double(data.X(i, k)) << ',';
    out << format_double(data.y[i]) << '\n';
  }
  store_text(path, out.str());
}

FitArtifact make_fit_artifact(const std::string& estimator, const Dataset& data,
                              const std::vector<QuantileModel>& models,
                              const KktResiduals& residuals, int iterations,
                              double margin) {
  FitArtifact artifact;
  artifact.estimator = estimator;
  artifact.n = data.n();
  artifact.d = data.d();
  artifact.x_min = data.X.colwise().minCoeff().transpose();
  artifact.x_max = data.X.colwise().maxCoeff().transpose();
  artifact.solver_residuals = residuals;
  artifact.solver_iterations = iterations;
  artifact.models = models;
  artifact.margin = margin;
  for (const auto& model : models) {
    const Eigen::VectorXd qhat = evaluate_all(model, data.X);
    artifact.fitted.push_back(qhat);
    ArtifactModelMetrics m;
    m.ramp_loss = ramp_loss(data.y, qhat, model.tau);
    m.coverage_error = coverage_error(data.y, qhat, model.tau);
    const auto qp = quantile_property_check(model);
    m.n_pos = qp.n_pos;
    m.n_neg = qp.n_neg;
    m.property_ok = qp.property_ok;
    artifact.metrics.push_back(m);
  }
  return artifact;
}

void write_fit_artifact(const FitArtifact& artifact, const std::filesystem::path& path) {
  json j;
  j["format_version"] = artifact.format_version;
  j["kind"] = "fit";
  j["estimator"] = artifact.estimator;
  j["n"] = artifact.n;
  j["d"] = artifact.d;
  j["x_min"] = vector_to_json(artifact.x_min);
  j["x_max"] = vector_to_json(artifact.x_max);
  j["solver"] = {{"status", artifact.solver_status},
                 {"iterations", artifact.solver_iterations},
                 {"primal_eq", artifact.solver_residuals.primal_eq},
                 {"primal_ineq", artifact.solver_residuals.primal_ineq},
                 {"dual", artifact.solver_residuals.dual},
                 {"gap", artifact.solver_residuals.gap}};
  if (artifact.estimator == "scqr") j["margin"] = artifact.margin;
  json models = json::array();
  for (size_t m = 0; m < artifact.models.size(); ++m) {
    const auto& model = artifact.models[m];
    json jm;
    jm["tau"] = model.tau;
    jm["gamma"] = model.gamma;
    jm["objective"] = model.objective;
    jm["alpha"] = vector_to_json(model.alpha);
    jm["beta"] = matrix_to_json(model.beta);
    jm["eps_pos"] = vector_to_json(model.eps_pos);
    jm["eps_neg"] = vector_to_json(model.eps_neg);
    jm["fitted"] = vector_to_json(artifact.fitted[m]);
    const auto& met = artifact.metrics[m];
    jm["metrics"] = {{"ramp_loss", met.ramp_loss},
                     {"coverage_error", met.coverage_error},
                     {"n_pos", met.n_pos},
                     {"n_neg", met.n_neg},
                     {"property_ok", met.property_ok}};
    models.push_back(std::move(jm));
  }
  j["models"] = std::move(models);
  store_text(path, j.dump(1) + "\n");
}

FitArtifact read_fit_artifact(const std::filesystem::path& path) {
  const json j = load_json(path);
  try {
    FitArtifact artifact;
    artifact.format_version = j.at("format_version").get<int>();
    if (artifact.format_version != 1)
      throw InputError(path.string() + ": unsupported format_version");
    artifact.estimator = j.at("estimator").get<std::string>();
    artifact.n = j.at("n").get<Eigen::Index>();
    artifact.d = j.at("d").get<Eigen::Index>();
    artifact.x_min = vector_from_json(j.at("x_min"));
    artifact.x_max = vector_from_json(j.at("x_max"));
    artifact.solver_status = j.at("solver").at("status").get<std::string>();
    artifact.solver_iterations = j.at("solver").at("iterations").get<int>();
    artifact.solver_residuals.primal_eq = j.at("solver").at("primal_eq").get<double>();
    artifact.solver_residuals.primal_ineq = j.at("solver").at("primal_ineq").get<double>();
    artifact.solver_residuals.dual = j.at("solver").at("dual").get<double>();
    artifact.solver_residuals.gap = j.at("solver").at("gap").get<double>();
    artifact.margin = j.value("margin", 0.0);
    for (const auto& jm : j.at("models")) {
      QuantileModel model;
      model.tau = jm.at("tau").get<double>();
      model.gamma = jm.at("gamma").get<double>();
      model.objective = jm.at("objective").get<double>();
      model.alpha = vector_from_json(jm.at("alpha"));
      model.beta = matrix_from_json(jm.at("beta"));
      model.eps_pos = vector_from_json(jm.at("eps_pos"));
      model.eps_neg = vector_from_json(jm.at("eps_neg"));
      artifact.models.push_back(std::move(model));
      artifact.fitted.push_back(vector_from_json(jm.at("fitted")));
      ArtifactModelMetrics met;
      met.ramp_loss = jm.at("metrics").at("ramp_loss").get<double>();
      met.coverage_error = jm.at("metrics").at("coverage_error").get<double>();
      met.n_pos = jm.at("metrics").at("n_pos").get<int>();
      met.n_neg = jm.at("metrics").at("n_neg").get<int>();
      met.property_ok = jm.at("metrics").at("property_ok").get<bool>();
      artifact.metrics.push_back(met);
    }
    return artifact;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_gamma_report(const GammaReport& report, const std::filesystem::path& path) {
  json j;
  j["format_version"] = report.format_version;
  j["kind"] = "gamma_search";
  j["gamma_star"] = report.gamma_star;
  j["step"] = report.step;
  j["gamma_max"] = report.gamma_max;
  j["iterations"] = report.iterations;
  j["crossing_counts"] = report.crossing_counts;
  store_text(path, j.dump(1) + "\n");
}

GammaReport read_gamma_report(const std::filesystem::path& path) {
  const json j = load_json(path);
  try {
    GammaReport report;
    report.format_version = j.at("format_version").get<int>();
    report.gamma_star = j.at("gamma_star").get<double>();
    report.step = j.at("step").get<double>();
    report.gamma_max = j.at("gamma_max").get<double>();
    report.iterations = j.at("iterations").get<int>();
    report.crossing_counts = j.at("crossing_counts").get<std::vector<int>>();
    return report;
  } catch (const json::exception& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

namespace {

ScenarioSpec parse_scenario(const json& j, const std::string& where) {
  try {
    ScenarioSpec spec;
    spec.cfg.n = j.at("n").get<Eigen::Index>();
    spec.cfg.d = j.at("d").get<Eigen::Index>();
    spec.cfg.noise =
        NoiseSpec::from_sigma_lambda(j.at("sigma_sq").get<double>(), j.at("lambda").get<double>());
    spec.cfg.tau1 = j.at("tau1").get<double>();
    spec.cfg.tau2 = j.at("tau2").get<double>();
    spec.cfg.replications = j.at("replications").get<int>();
    spec.cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("estimators"))
      spec.estimators = j.at("estimators").get<std::vector<std::string>>();
    spec.margin = j.value("C", 0.0);
    spec.step = j.value("step", 0.01);
    spec.gamma_max = j.value("gamma_max", 10.0);

    check_scenario(spec.cfg);
    if (spec.estimators.empty()) throw std::invalid_argument("estimators must not be empty");
    for (const auto& est : spec.estimators)
      if (est != "pcqr" && est != "scqr")
        throw std::invalid_argument("unknown estimator '" + est + "' (use pcqr or scqr)");
    if (spec.margin < 0.0) throw std::invalid_argument("C must be nonnegative");
    if (!(spec.step > 0.0)) throw std::invalid_argument("step must be positive");
    if (spec.gamma_max < 0.0) throw std::invalid_argument("gamma_max must be nonnegative");
    return spec;
  } catch (const json::exception& e) {
    throw InputError(where + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw InputError(where + ": " + e.what());
  }
}

}  // namespace

std::vector<ScenarioSpec> read_scenario_file(const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<ScenarioSpec> specs;
  if (j.is_object() && j.contains("scenarios")) {
    const auto& arr = j.at("scenarios");
    if (!arr.is_array() || arr.empty())
      throw InputError(path.string() + ": 'scenarios' must be a non-empty array");
    for (size_t i = 0; i < arr.size(); ++i)
      specs.push_back(parse_scenario(arr[i], path.string() + ": scenario " + std::to_string(i)));
  } else if (j.is_object()) {
    specs.push_back(parse_scenario(j, path.string()));
  } else {
    throw InputError(path.string() + ": expected a JSON object");
  }
  return specs;
}

CsvTable read_csv_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  CsvTable table;
  std::string line;
  if (std::getline(in, line)) table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    table.rows.push_back(split_csv_line(line));
  }
  return table;
}

}  // namespace cqrkit
