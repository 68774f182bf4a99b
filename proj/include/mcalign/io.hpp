#pragma once

#include "mcalign/alignment.hpp"
#include "mcalign/chain_spectral.hpp"
#include "mcalign/tabular_mdp.hpp"

#include "json.hpp"

#include <optional>
#include <string>

namespace mcalign {

using Json = nlohmann::json;

Json to_json(const Matrix& m);
Json to_json(const Vector& v);
Matrix matrix_from_json(const Json& j, const std::string& key);
Vector vector_from_json(const Json& j, const std::string& key);

/// MDP file contents: the MDP and an optional policy.
struct MdpFile {
  TabularMdp mdp;
  std::optional<StochasticPolicy> policy;
};

/// Keys: n_states, n_actions, gamma, p0 (length n), P (a x s x s), optional
/// policy (s x a). Validation uses the 1e-9 stochasticity tolerance.
MdpFile mdp_from_json(const Json& j);
Json mdp_to_json(const TabularMdp& mdp, const StochasticPolicy* policy = nullptr);

MdpFile load_mdp_file(const std::string& path);
void save_mdp_file(const std::string& path, const TabularMdp& mdp,
                   const StochasticPolicy* policy = nullptr);

Json to_json(const FriendlinessCertificate& cert);
Json to_json(const ChainSummary& summary);
Json to_json(const AlignmentResult& result);

}  // namespace mcalign
