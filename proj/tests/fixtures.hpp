#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatrack/atomic_admm.hpp"

namespace fatrack::testkit {

struct OracleInstance {
  std::string name;
  DenoiseProblem problem;
  Eigen::VectorXcd truth;
  std::vector<SpectralLine> lines;
  std::vector<int> planted;  // omega slots
  Eigen::VectorXcd oracle_x;
  Eigen::VectorXcd oracle_e;
  double oracle_objective = 0.0;
};

inline Eigen::VectorXcd complex_vector(const nlohmann::json& j) {
  const auto& re = j.at("re");
  const auto& im = j.at("im");
  Eigen::VectorXcd v(static_cast<Eigen::Index>(re.size()));
  for (std::size_t i = 0; i < re.size(); ++i) {
    v(static_cast<Eigen::Index>(i)) = cplx(re[i].get<double>(), im[i].get<double>());
  }
  return v;
}

inline std::vector<OracleInstance> load_oracle(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto root = nlohmann::json::parse(in);
  std::vector<OracleInstance> out;
  for (const auto& j : root.at("instances")) {
    OracleInstance inst;
    inst.name = j.at("name").get<std::string>();
    inst.problem.pattern.n = j.at("n").get<int>();
    inst.problem.pattern.omega = j.at("omega").get<std::vector<int>>();
    inst.problem.z_tilde = complex_vector(j.at("z"));
    inst.problem.gamma = j.at("gamma").get<double>();
    inst.problem.lambda = j.at("lambda").get<double>();
    if (j.contains("prior")) {
      inst.problem.prior = OverlapPrior{complex_vector(j.at("prior").at("x_bar")), j.at("prior").at("zeta").get<double>()};
    }
    inst.truth = complex_vector(j.at("truth"));
    for (const auto& l : j.at("lines")) {
      inst.lines.push_back({l.at("amplitude").get<double>(), l.at("frequency").get<double>(), l.at("phase").get<double>()});
    }
    inst.planted = j.at("planted_outliers").get<std::vector<int>>();
    inst.oracle_x = complex_vector(j.at("oracle").at("x"));
    inst.oracle_e = complex_vector(j.at("oracle").at("e"));
    inst.oracle_objective = j.at("oracle").at("objective").get<double>();
    out.push_back(std::move(inst));
  }
  return out;
}

inline const OracleInstance& find_instance(const std::vector<OracleInstance>& all, const std::string& name) {
  for (const auto& i : all) {
    if (i.name == name) return i;
  }
  throw std::runtime_error("no oracle instance " + name);
}

}  // namespace fatrack::testkit
