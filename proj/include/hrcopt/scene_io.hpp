#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "hrcopt/gp.hpp"
#include "hrcopt/simulator.hpp"

namespace hrcopt {

using json = nlohmann::ordered_json;

namespace detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

inline const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key))
    throw ConfigError(path + ": missing required field '" + key + "'");
  return j.at(key);
}

inline double num(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw ConfigError(path + "." + key + ": expected a number");
  return v.get<double>();
}

inline double num_or(const json& j, const std::string& key, double fallback) {
  return j.is_object() && j.contains(key) ? j.at(key).get<double>() : fallback;
}

inline Eigen::Vector3d vec3(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_array() || v.size() != 3)
    throw ConfigError(path + "." + key + ": expected an array of 3 numbers");
  return Eigen::Vector3d(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

inline Eigen::VectorXd vecn(const json& v, const std::string& path) {
  if (!v.is_array()) throw ConfigError(path + ": expected an array of numbers");
  Eigen::VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i].get<double>();
  return out;
}

inline Eigen::Quaterniond rpy_to_quat(const Eigen::Vector3d& rpy) {
  return Eigen::Quaterniond(Eigen::AngleAxisd(rpy[2], Eigen::Vector3d::UnitZ()) *
                            Eigen::AngleAxisd(rpy[1], Eigen::Vector3d::UnitY()) *
                            Eigen::AngleAxisd(rpy[0], Eigen::Vector3d::UnitX()));
}

inline void check_format(const json& j, const std::string& expected, const std::string& path) {
  const json& f = require(j, "format", path);
  if (!f.is_string() || f.get<std::string>() != expected)
    throw ConfigError(path + ".format: expected '" + expected + "'");
}

}  // namespace detail

/// Robot description: base pose, joint axes, link offsets, velocity limits.
inline RobotModel parse_robot(const json& j, const std::string& path) {
  using namespace detail;
  RobotModel m;
  if (j.contains("name")) m.name = j.at("name").get<std::string>();
  if (j.contains("base_position")) m.base_pose.position = vec3(j, "base_position", path);
  if (j.contains("base_rpy")) m.base_pose.orientation = rpy_to_quat(vec3(j, "base_rpy", path));
  const json& joints = require(j, "joints", path);
  if (!joints.is_array() || joints.empty())
    throw ConfigError(path + ".joints: expected a non-empty array");
  for (std::size_t k = 0; k < joints.size(); ++k) {
    const std::string jp = path + ".joints[" + std::to_string(k) + "]";
    JointDescriptor jd;
    jd.axis = vec3(joints[k], "axis", jp);
    jd.link.position = vec3(joints[k], "offset", jp);
    if (joints[k].contains("rpy")) jd.link.orientation = rpy_to_quat(vec3(joints[k], "rpy", jp));
    m.joints.push_back(jd);
  }
  if (j.contains("ee_offset")) {
    const json& ee = j.at("ee_offset");
    m.ee_offset.position = vec3(ee, "offset", path + ".ee_offset");
    if (ee.contains("rpy")) m.ee_offset.orientation = rpy_to_quat(vec3(ee, "rpy", path + ".ee_offset"));
  }
  m.qdot_min = vecn(require(j, "qdot_min", path), path + ".qdot_min");
  m.qdot_max = vecn(require(j, "qdot_max", path), path + ".qdot_max");
  m.validate();
  return m;
}

inline RobotModel load_robot_file(const std::filesystem::path& file) {
  json j = json::parse(detail::read_file(file), nullptr, true, true);
  detail::check_format(j, "hrcopt-robot/1", file.string());
  return parse_robot(j, file.string());
}

/// Scene loader. Robot models may be inline objects or `model_file`
/// references resolved relative to the scene file's directory.
inline SceneConfig load_scene(const std::filesystem::path& file) {
  using namespace detail;
  const std::string text = read_file(file);
  json j = json::parse(text, nullptr, true, true);
  const std::string path = file.string();
  check_format(j, "hrcopt-scene/1", path);

  SceneConfig scene;
  scene.dt = num(j, "dt", path);
  scene.trial_timeout = num(j, "trial_timeout", path);
  scene.reach_tol = num_or(j, "reach_tol", 0.02);
  if (j.contains("seed")) scene.seed = j.at("seed").get<std::uint64_t>();

  const json& col = require(j, "collision", path);
  scene.collision.d_s = num(col, "security_distance", path + ".collision");
  scene.collision.d_i = num(col, "influenced_distance", path + ".collision");
  scene.collision.xi = num(col, "xi", path + ".collision");

  const json& pri = require(j, "priority", path);
  scene.priority.l_max = num(pri, "l_max", path + ".priority");
  scene.priority.w_o = num(pri, "nominal_weight", path + ".priority");
  scene.priority.gamma = num(pri, "gamma", path + ".priority");
  scene.priority.epsilon = num(pri, "epsilon", path + ".priority");

  const json& mh = require(j, "mh", path);
  scene.mh.proposal_std = num(mh, "proposal_std", path + ".mh");
  scene.mh.burn_in = static_cast<int>(num(mh, "burn_in", path + ".mh"));
  scene.mh.thinning = static_cast<int>(num(mh, "thinning", path + ".mh"));

  const json& prior = require(j, "prior", path);
  const json& comps = require(prior, "components", path + ".prior");
  if (!comps.is_array() || comps.empty())
    throw ConfigError(path + ".prior.components: expected a non-empty array");
  for (std::size_t c = 0; c < comps.size(); ++c) {
    const std::string cp = path + ".prior.components[" + std::to_string(c) + "]";
    GmmComponent comp;
    comp.weight = num(comps[c], "weight", cp);
    comp.mean = vec3(comps[c], "mean", cp);
    comp.variance = vec3(comps[c], "variance", cp);
    scene.prior.components.push_back(comp);
  }
  scene.prior.workspace_min = vec3(prior, "workspace_min", path + ".prior");
  scene.prior.workspace_max = vec3(prior, "workspace_max", path + ".prior");

  const json& robots = require(j, "robots", path);
  if (!robots.is_array() || robots.size() < 2)
    throw ConfigError(path + ".robots: expected an array of at least 2 robots");
  for (std::size_t r = 0; r < robots.size(); ++r) {
    const std::string rp = path + ".robots[" + std::to_string(r) + "]";
    const json& jr = robots[r];
    RobotSpec spec;
    if (jr.contains("model_file")) {
      const std::filesystem::path mf = jr.at("model_file").get<std::string>();
      spec.model = load_robot_file(mf.is_absolute() ? mf : file.parent_path() / mf);
    } else {
      spec.model = parse_robot(require(jr, "model", rp), rp + ".model");
    }
    if (jr.contains("name")) spec.model.name = jr.at("name").get<std::string>();
    if (jr.contains("base_position")) spec.model.base_pose.position = vec3(jr, "base_position", rp);
    if (jr.contains("base_rpy")) spec.model.base_pose.orientation = rpy_to_quat(vec3(jr, "base_rpy", rp));
    const std::string role = require(jr, "role", rp).get<std::string>();
    if (role == "manufacturing")
      spec.role = RobotRole::manufacturing;
    else if (role == "recovery")
      spec.role = RobotRole::recovery;
    else
      throw ConfigError(rp + ".role: expected 'manufacturing' or 'recovery'");
    spec.home = vecn(require(jr, "home", rp), rp + ".home");
    const json& imp = require(jr, "impedance", rp);
    const Eigen::Vector3d mass = vec3(imp, "mass", rp + ".impedance");
    const Eigen::Vector3d stiffness = vec3(imp, "stiffness", rp + ".impedance");
    if (imp.contains("damping")) {
      spec.impedance.mass = mass;
      spec.impedance.stiffness = stiffness;
      spec.impedance.damping = vec3(imp, "damping", rp + ".impedance");
    } else {
      spec.impedance = critically_damped(mass, stiffness);
    }
    spec.orientation_gain = num_or(jr, "orientation_gain", 0.0);
    if (jr.contains("waypoints")) {
      for (const auto& w : jr.at("waypoints")) {
        if (!w.is_array() || w.size() != 3)
          throw ConfigError(rp + ".waypoints: each waypoint must be 3 numbers");
        spec.waypoints.emplace_back(w[0].get<double>(), w[1].get<double>(), w[2].get<double>());
      }
    }
    scene.robots.push_back(std::move(spec));
  }

  scene.normalize_order();
  scene.validate();
  return scene;
}

inline std::uint64_t file_content_hash(const std::filesystem::path& file) {
  return fnv1a64(detail::read_file(file));
}

// ---------------------------------------------------------------------------
// Dataset (delimited text, one row per SampleRecord)
// ---------------------------------------------------------------------------

/// Streams dataset rows to disk as they arrive.
class DatasetWriter {
public:
  DatasetWriter(const std::filesystem::path& path, int n_m, double l_max) : n_m_(n_m) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw IoError("cannot write '" + path.string() + "'");
    out_ << "# format: hrcopt-dataset/1\n";
    out_ << "# n_m: " << n_m << "\n";
    out_ << "# l_max: " << format_double(l_max) << "\n";
    for (int i = 0; i < n_m; ++i) out_ << "l_bar_" << (i + 1) << ",";
    out_ << "x_product,x_risk,n_trials,discarded,seed\n";
    out_.flush();
  }

  void write(const SampleRecord& rec) {
    if (rec.thresholds.size() != n_m_) throw IoError("dataset row: threshold arity mismatch");
    for (int i = 0; i < n_m_; ++i) out_ << format_double(rec.thresholds[i]) << ",";
    out_ << format_double(rec.x_product) << "," << format_double(rec.x_risk) << ","
         << rec.n_trials << "," << rec.discarded_trials << "," << rec.seed << "\n";
    out_.flush();
  }

private:
  std::ofstream out_;
  int n_m_;
};

struct Dataset {
  int n_m = 0;
  double l_max = 0.5;
  std::vector<SampleRecord> rows;

  Eigen::MatrixXd thresholds_matrix() const {
    Eigen::MatrixXd x(rows.size(), n_m);
    for (std::size_t r = 0; r < rows.size(); ++r) x.row(static_cast<int>(r)) = rows[r].thresholds;
    return x;
  }
  Eigen::VectorXd productivity() const {
    Eigen::VectorXd y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) y[static_cast<int>(r)] = rows[r].x_product;
    return y;
  }
  Eigen::VectorXd risk() const {
    Eigen::VectorXd y(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) y[static_cast<int>(r)] = rows[r].x_risk;
    return y;
  }
};

inline Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  Dataset ds;
  std::string line;
  bool saw_format = false, saw_header = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("hrcopt-dataset/1") != std::string::npos) saw_format = true;
      const auto pos = line.find("l_max:");
      if (pos != std::string::npos) {
        std::string tail = line.substr(pos + 6);
        const auto start = tail.find_first_not_of(' ');
        if (start != std::string::npos) ds.l_max = parse_double(tail.substr(start));
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!saw_header) {
      int n_m = 0;
      for (const auto& c : cells) n_m += c.rfind("l_bar_", 0) == 0 ? 1 : 0;
      if (n_m < 1 || cells.size() != static_cast<std::size_t>(n_m) + 5)
        throw IoError(path.string() + ": malformed dataset header");
      ds.n_m = n_m;
      saw_header = true;
      continue;
    }
    if (cells.size() != static_cast<std::size_t>(ds.n_m) + 5)
      throw IoError(path.string() + ": malformed dataset row '" + line + "'");
    SampleRecord rec;
    rec.thresholds.resize(ds.n_m);
    for (int i = 0; i < ds.n_m; ++i) rec.thresholds[i] = parse_double(cells[i]);
    rec.x_product = parse_double(cells[ds.n_m]);
    rec.x_risk = parse_double(cells[ds.n_m + 1]);
    rec.n_trials = static_cast<int>(parse_double(cells[ds.n_m + 2]));
    rec.discarded_trials = static_cast<int>(parse_double(cells[ds.n_m + 3]));
    rec.seed = std::stoull(cells[ds.n_m + 4]);
    ds.rows.push_back(std::move(rec));
  }
  if (!saw_format) throw IoError(path.string() + ": missing dataset format header");
  if (!saw_header || ds.rows.empty()) throw IoError(path.string() + ": empty dataset");
  return ds;
}

// ---------------------------------------------------------------------------
// GP model serialization (exact round trip of predictions)
// ---------------------------------------------------------------------------

inline void save_gp_model(const GpModel& m, const std::string& target_name,
                          const std::filesystem::path& path) {
  json j;
  j["format"] = "hrcopt-gp/1";
  j["target"] = target_name;
  json hyper;
  hyper["lengthscales"] = std::vector<double>(m.hyper().lengthscales.data(),
                                              m.hyper().lengthscales.data() + m.hyper().lengthscales.size());
  hyper["signal_variance"] = m.hyper().signal_variance;
  hyper["noise_variance"] = m.hyper().noise_variance;
  j["hyper"] = hyper;
  j["lml"] = m.log_marginal_likelihood();
  json xs = json::array();
  for (int r = 0; r < m.train_x().rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < m.train_x().cols(); ++c) row.push_back(m.train_x()(r, c));
    xs.push_back(row);
  }
  j["x"] = xs;
  const Eigen::VectorXd y = m.train_y();
  j["y"] = std::vector<double>(y.data(), y.data() + y.size());
  detail::write_file(path, j.dump(2) + "\n");
}

inline GpModel load_gp_model(const std::filesystem::path& path, std::string* target_name = nullptr) {
  json j = json::parse(detail::read_file(path));
  detail::check_format(j, "hrcopt-gp/1", path.string());
  if (target_name) *target_name = j.value("target", "");
  const json& hyper = detail::require(j, "hyper", path.string());
  GpHyper h;
  h.lengthscales = detail::vecn(detail::require(hyper, "lengthscales", path.string() + ".hyper"),
                                path.string() + ".hyper.lengthscales");
  h.signal_variance = detail::num(hyper, "signal_variance", path.string() + ".hyper");
  h.noise_variance = detail::num(hyper, "noise_variance", path.string() + ".hyper");
  const json& xs = detail::require(j, "x", path.string());
  if (!xs.is_array() || xs.empty()) throw IoError(path.string() + ".x: expected rows");
  const int n = static_cast<int>(xs.size());
  const int d = static_cast<int>(xs[0].size());
  Eigen::MatrixXd x(n, d);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) x(r, c) = xs[r][c].get<double>();
  const Eigen::VectorXd y = detail::vecn(detail::require(j, "y", path.string()), path.string() + ".y");
  return GpModel::restore(x, y, h, j.value("lml", 0.0));
}

}  // namespace hrcopt
