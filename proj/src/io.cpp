#include "mcalign/io.hpp"

#include "mcalign/errors.hpp"

#include <cmath>
#include <fstream>

namespace mcalign {

Json to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Json to_json(const Vector& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

namespace {

double number(const Json& j, const std::string& key) {
  if (!j.is_number()) throw ValidationError("mdp file: '" + key + "' must contain numbers");
  return j.get<double>();
}

const Json& require_key(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key)) throw ValidationError("mdp file: missing key '" + key + "'");
  return j.at(key);
}

int positive_int(const Json& j, const std::string& key) {
  const Json& v = require_key(j, key);
  if (!v.is_number_integer() || v.get<long>() < 1) {
    throw ValidationError("mdp file: '" + key + "' must be a positive integer");
  }
  return v.get<int>();
}

}  // namespace

Matrix matrix_from_json(const Json& j, const std::string& key) {
  if (!j.is_array() || j.empty()) throw ValidationError("'" + key + "' must be a nonempty array of rows");
  const auto rows = j.size();
  if (!j[0].is_array()) throw ValidationError("'" + key + "' must be a nonempty array of rows");
  const auto cols = j[0].size();
  Matrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw DimensionError("'" + key + "' has ragged rows");
    for (std::size_t c = 0; c < cols; ++c) m(r, c) = number(j[r][c], key);
  }
  return m;
}

Vector vector_from_json(const Json& j, const std::string& key) {
  if (!j.is_array()) throw ValidationError("'" + key + "' must be an array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v(i) = number(j[i], key);
  return v;
}

MdpFile mdp_from_json(const Json& j) {
  const int n = positive_int(j, "n_states");
  const int a = positive_int(j, "n_actions");
  const Json& gamma = require_key(j, "gamma");
  if (!gamma.is_number()) throw ValidationError("mdp file: 'gamma' must be a number");
  const Vector p0 = vector_from_json(require_key(j, "p0"), "p0");
  if (p0.size() != n) throw DimensionError("mdp file: 'p0' must have n_states entries");
  const Json& pj = require_key(j, "P");
  if (!pj.is_array() || static_cast<int>(pj.size()) != a) {
    throw DimensionError("mdp file: 'P' must have n_actions blocks");
  }
  std::vector<Matrix> dyn;
  for (int k = 0; k < a; ++k) {
    Matrix pa = matrix_from_json(pj[k], "P");
    if (pa.rows() != n || pa.cols() != n) throw DimensionError("mdp file: each 'P' block must be n x n");
    dyn.push_back(std::move(pa));
  }
  MdpFile out{TabularMdp(std::move(dyn), p0, gamma.get<double>()), std::nullopt};
  if (j.contains("policy")) {
    Matrix probs = matrix_from_json(j.at("policy"), "policy");
    if (probs.rows() != n || probs.cols() != a) throw DimensionError("mdp file: 'policy' must be n x a");
    out.policy = StochasticPolicy(std::move(probs));
  }
  return out;
}

Json mdp_to_json(const TabularMdp& mdp, const StochasticPolicy* policy) {
  Json j;
  j["n_states"] = mdp.n_states();
  j["n_actions"] = mdp.n_actions();
  j["gamma"] = mdp.gamma();
  j["p0"] = to_json(mdp.p0());
  Json blocks = Json::array();
  for (const auto& pa : mdp.dynamics()) blocks.push_back(to_json(pa));
  j["P"] = std::move(blocks);
  if (policy) j["policy"] = to_json(policy->probs());
  return j;
}

MdpFile load_mdp_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mdp file '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw ValidationError("mdp file '" + path + "': " + e.what());
  }
  return mdp_from_json(j);
}

void save_mdp_file(const std::string& path, const TabularMdp& mdp, const StochasticPolicy* policy) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write mdp file '" + path + "'");
  out << mdp_to_json(mdp, policy).dump(2) << '\n';
}

Json to_json(const FriendlinessCertificate& cert) {
  // JSON has no infinity; a single-state chain reports alpha as null.
  Json j;
  j["alpha"] = std::isfinite(cert.alpha) ? Json(cert.alpha) : Json(nullptr);
  j["beta"] = cert.beta;
  j["tol_alpha"] = cert.tol_alpha;
  j["tol_beta"] = cert.tol_beta;
  j["is_friendly"] = cert.is_friendly;
  return j;
}

Json to_json(const ChainSummary& s) {
  Json j;
  j["M"] = to_json(s.m);
  j["mu"] = to_json(s.mu);
  j["D"] = to_json(s.d);
  j["L"] = to_json(s.l);
  j["svd"] = {{"U", to_json(s.svd.u)},
              {"sigma", to_json(s.svd.sigma)},
              {"V", to_json(s.svd.v)},
              {"orientation_tie", s.svd.orientation_tie}};
  return j;
}

Json to_json(const AlignmentResult& r) {
  Json j;
  j["pi_hat"] = r.pi_hat.forward();
  j["matched_indices"] = r.matched_indices;
  j["source_indices"] = r.source_indices;
  j["policy_hat"] = to_json(r.policy_hat.probs());
  j["certificate"] = to_json(r.certificate);
  j["diagnostics"] = {{"m", r.diagnostics.m},
                      {"matched", r.diagnostics.matched},
                      {"gap", r.diagnostics.gap},
                      {"assignment_cost", r.diagnostics.assignment_cost},
                      {"empirical_certificate", to_json(r.diagnostics.empirical_certificate)}};
  return j;
}

}  // namespace mcalign
