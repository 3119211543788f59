#include "unionrec/config.hpp"

#include <fstream>
#include <sstream>

#include "unionrec/errors.hpp"

namespace unionrec::config {

using montecarlo::Axis;
using montecarlo::Basis;
using montecarlo::ExperimentConfig;

namespace {

const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key)) throw ConfigError(path + key, "missing required field");
  return obj.at(key);
}

template <class T>
T get_as(const json& v, const std::string& field) {
  try {
    return v.get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(field, std::string("wrong type (") + v.type_name() + ")");
  }
}

template <class T>
void read_optional(const json& obj, const std::string& key, const std::string& path, T& out) {
  if (obj.is_object() && obj.contains(key)) out = get_as<T>(obj.at(key), path + key);
}

linalg::Mat matrix_from_json(const json& rows, const std::string& field) {
  if (!rows.is_array() || rows.empty() || !rows.front().is_array()) {
    throw ConfigError(field, "expected a non-empty array of rows");
  }
  const std::size_t nc = rows.front().size();
  linalg::Mat m(rows.size(), nc);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (!rows[r].is_array() || rows[r].size() != nc) {
      throw ConfigError(field + "[" + std::to_string(r) + "]", "ragged row");
    }
    for (std::size_t c = 0; c < nc; ++c) {
      m(r, c) = get_as<double>(rows[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
  }
  return m;
}

json matrix_to_json(const linalg::Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

ExperimentConfig experiment_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("", "config must be a JSON object");
  ExperimentConfig c;
  read_optional(j, "name", "", c.name);

  if (j.contains("union_bases")) {
    const json& ub = j.at("union_bases");
    if (!ub.is_array()) throw ConfigError("union_bases", "expected an array of matrices");
    for (std::size_t i = 0; i < ub.size(); ++i) {
      c.union_bases.push_back(matrix_from_json(ub[i], "union_bases[" + std::to_string(i) + "]"));
    }
  } else {
    const json& m = require(j, "model", "");
    c.L = get_as<int>(require(m, "L", "model."), "model.L");
    c.d = get_as<int>(require(m, "d", "model."), "model.d");
    c.k0 = get_as<int>(require(m, "k0", "model."), "model.k0");
    std::string basis = "identity";
    read_optional(m, "basis", "model.", basis);
    if (basis == "identity") {
      c.basis = Basis::identity;
    } else if (basis == "random") {
      c.basis = Basis::random;
    } else {
      throw ConfigError("model.basis", "expected \"identity\" or \"random\"");
    }
  }

  const json& s = require(j, "sweep", "");
  const std::string axis = get_as<std::string>(require(s, "axis", "sweep."), "sweep.axis");
  if (axis == "M") {
    c.axis = Axis::M;
  } else if (axis == "bsnr_db") {
    c.axis = Axis::bsnr_db;
  } else {
    throw ConfigError("sweep.axis", "expected \"M\" or \"bsnr_db\"");
  }
  c.axis_values = get_as<std::vector<double>>(require(s, "values", "sweep."), "sweep.values");
  if (c.axis == Axis::bsnr_db) {
    c.M = get_as<int>(require(s, "M", "sweep."), "sweep.M");
  } else {
    c.bsnr_db = get_as<double>(require(s, "bsnr_db", "sweep."), "sweep.bsnr_db");
  }
  read_optional(s, "bsnr_ratio", "sweep.", c.bsnr_ratio);

  c.trials = get_as<long long>(require(j, "trials", ""), "trials");
  read_optional(j, "trials_per_matrix", "", c.trials_per_matrix);
  read_optional(j, "seed", "", c.seed);
  if (j.contains("decoders")) {
    const auto decs = get_as<std::vector<std::string>>(j.at("decoders"), "decoders");
    c.use_ml = c.use_bomp = false;
    for (const auto& dname : decs) {
      if (dname == "ml") {
        c.use_ml = true;
      } else if (dname == "bomp") {
        c.use_bomp = true;
      } else {
        throw ConfigError("decoders", "unknown decoder \"" + dname + "\"");
      }
    }
  }
  read_optional(j, "eta0", "", c.bound.eta0);
  read_optional(j, "r0", "", c.bound.r0);
  read_optional(j, "sigma_w2", "", c.noise.sigma_w2);
  read_optional(j, "noiseless", "", c.noise.noiseless);
  c.validate();
  return c;
}

json experiment_to_json(const ExperimentConfig& c) {
  json j;
  j["name"] = c.name;
  if (c.general()) {
    json ub = json::array();
    for (const auto& b : c.union_bases) ub.push_back(matrix_to_json(b));
    j["union_bases"] = std::move(ub);
  } else {
    j["model"] = {{"L", c.L}, {"d", c.d}, {"k0", c.k0},
                  {"basis", c.basis == Basis::identity ? "identity" : "random"}};
  }
  json s;
  s["axis"] = c.axis == Axis::M ? "M" : "bsnr_db";
  s["values"] = c.axis_values;
  if (c.axis == Axis::M) {
    s["bsnr_db"] = c.bsnr_db;
  } else {
    s["M"] = c.M;
  }
  s["bsnr_ratio"] = c.bsnr_ratio;
  j["sweep"] = std::move(s);
  j["trials"] = c.trials;
  j["trials_per_matrix"] = c.trials_per_matrix;
  j["seed"] = c.seed;
  json decs = json::array();
  if (c.use_ml) decs.push_back("ml");
  if (c.use_bomp) decs.push_back("bomp");
  j["decoders"] = std::move(decs);
  j["eta0"] = c.bound.eta0;
  j["r0"] = c.bound.r0;
  j["sigma_w2"] = c.noise.sigma_w2;
  j["noiseless"] = c.noise.noiseless;
  return j;
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path, "cannot open config file");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line:column.
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(path + ":" + std::to_string(line) + ":" + std::to_string(col), "JSON syntax error");
  }
}

ExperimentConfig preset(const std::string& name, bool desk) {
  ExperimentConfig c;
  c.name = name + (desk ? "-desk" : "");
  c.bound.eta0 = 0.25;
  if (name == "fig1a") {
    c.axis = Axis::M;
    c.bsnr_db = 13.0;
    if (desk) {
      c.L = 10, c.d = 2, c.k0 = 3;
      c.axis_values = {8, 10, 12, 16, 20};
      c.trials = 2000;
      c.trials_per_matrix = 100;
    } else {
      c.L = 25, c.d = 2, c.k0 = 5;
      c.axis_values = {15, 20, 25, 30, 35, 40, 45, 50};
      c.trials = 100000;
      c.trials_per_matrix = 1000;
    }
  } else if (name == "fig1b") {
    c.axis = Axis::M;
    c.d = 1;
    c.bsnr_db = 10.0;
    if (desk) {
      c.L = 20, c.k0 = 3;
      c.axis_values = {5, 6, 8, 10, 14, 18};
      c.trials = 2000;
      c.trials_per_matrix = 100;
    } else {
      c.L = 50, c.k0 = 4;
      c.axis_values = {10, 15, 20, 25, 30, 35, 40, 45, 50};
      c.trials = 100000;
      c.trials_per_matrix = 1000;
    }
  } else if (name == "fig2") {
    c.axis = Axis::bsnr_db;
    c.axis_values = {7, 10, 13, 16, 19};
    c.bsnr_ratio = 1.825;
    c.use_bomp = true;
    if (desk) {
      c.L = 10, c.d = 2, c.k0 = 3;
      c.M = 14;
      c.trials = 2000;
      c.trials_per_matrix = 100;
    } else {
      c.L = 25, c.d = 2, c.k0 = 5;
      c.M = 25;
      c.trials = 1000000;
      c.trials_per_matrix = 10000;
    }
  } else {
    throw ConfigError("preset", "unknown preset \"" + name + "\" (expected fig1a, fig1b or fig2)");
  }
  c.validate();
  return c;
}

}  // namespace unionrec::config
