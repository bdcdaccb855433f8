#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/types.hpp"

namespace mfg {

enum class EnvName { kInvest, kMalware, kVirus, kRps, kLr };
enum class EnvVariant { kOriginal, kNew };

std::string to_string(EnvName name);
std::string to_string(EnvVariant variant);
EnvName parse_env_name(const std::string& text);
EnvVariant parse_env_variant(const std::string& text);
std::vector<EnvName> all_env_names();

/// Whether demonstrations for this model come from a social optimum
/// (cooperative) rather than a Nash equilibrium.
bool is_cooperative(EnvName name);

/// Fully populated benchmark model, ground-truth reward included.
/// State/action index conventions:
///   LR:      states [C, L, R], actions [go-L, go-R]
///   RPS:     states = actions = [rock, paper, scissors]
///   VIRUS:   states [susceptible, infected], actions [go-out, distance]
///   INVEST:  states 0..9 (product quality), actions [hold, invest]
///   MALWARE: states 0..9 (infection level), actions [do-nothing, intervene]
MfgSpec make_env(EnvName name, EnvVariant variant, int horizon = 50,
                 double discount = 0.99);

/// [onehot(s) | onehot(a) | mu], total length 2|S| + |A|.
std::vector<double> encode_features(const MfgSpec& spec, int s, int a,
                                    const MeanField& mu);

nlohmann::json env_description(EnvName name, EnvVariant variant);

namespace detail {
/// Distribution of floor(X) for X ~ U(lo/2, hi/2); endpoints given in
/// halves so the interval measures stay exact integer arithmetic.
/// Entry k of the result is P(floor(X) = k), k = 0..(hi-1)/2.
std::vector<double> floor_uniform_pmf(long lo_halves, long hi_halves);
}  // namespace detail

}  // namespace mfg
