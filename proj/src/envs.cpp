#include "mfg/envs.hpp"

#include <algorithm>
#include <cctype>

namespace mfg {

namespace detail {

std::vector<double> floor_uniform_pmf(long lo_halves, long hi_halves) {
  if (hi_halves <= lo_halves) {
    throw ArgumentError("floor_uniform_pmf: empty interval");
  }
  const long span = hi_halves - lo_halves;
  const long num_values = (hi_halves - 1) / 2 + 1;  // floor caps at (hi-1)/2
  std::vector<double> pmf(static_cast<size_t>(num_values), 0.0);
  for (long k = 0; k < num_values; ++k) {
    const long cell_lo = 2 * k;
    const long cell_hi = 2 * k + 2;
    const long overlap =
        std::min(cell_hi, hi_halves) - std::max(cell_lo, lo_halves);
    if (overlap > 0) {
      pmf[static_cast<size_t>(k)] =
          static_cast<double>(overlap) / static_cast<double>(span);
    }
  }
  return pmf;
}

}  // namespace detail

namespace {

constexpr int kLrC = 0;
constexpr int kLrL = 1;
constexpr int kLrR = 2;
constexpr int kVirusS = 0;
constexpr int kVirusI = 1;
constexpr int kVirusGoOut = 0;
constexpr int kVirusDistance = 1;

std::vector<double> point_mass(int n, int s) {
  std::vector<double> p(static_cast<size_t>(n), 0.0);
  p[static_cast<size_t>(s)] = 1.0;
  return p;
}

// Next-state law for a jump s -> s + floor(chi * (10 - s) / divisor),
// chi ~ U(chi_lo_halves/2, 1); all floor-of-uniform models reduce to this.
std::vector<double> quality_jump_row(int num_states, int s, long chi_lo_halves,
                                     long divisor) {
  const long n = num_states - s;  // jump support is {0..n-1}
  // X = chi * n / divisor ~ U(chi_lo * n / divisor, n / divisor)
  const std::vector<double> jump = detail::floor_uniform_pmf(
      chi_lo_halves * n / divisor, 2 * n / divisor);
  std::vector<double> row(static_cast<size_t>(num_states), 0.0);
  for (size_t k = 0; k < jump.size(); ++k) {
    row[static_cast<size_t>(s) + k] += jump[k];
  }
  return row;
}

MfgSpec make_lr(EnvVariant variant, int horizon, double discount) {
  const int S = 3;
  const int A = 2;
  const bool noisy = variant == EnvVariant::kNew;
  TransitionKernel kernel(
      S, A, [S, noisy](int /*s*/, int a, const MeanField&) {
        const int target = a + 1;  // action 0 -> L, action 1 -> R
        std::vector<double> row = point_mass(S, target);
        if (noisy) {
          row[static_cast<size_t>(target)] = 0.8;
          row[kLrL] += 0.2 * 0.5;
          row[kLrR] += 0.2 * 0.5;
        }
        return row;
      });
  RewardOracle reward(
      [](int s, int /*a*/, const MeanField& mu) {
        if (s == kLrL) return -mu[kLrL];
        if (s == kLrR) return -mu[kLrR];
        return 0.0;
      },
      [S](int s, int /*a*/, const MeanField&) {
        std::vector<double> g(static_cast<size_t>(S), 0.0);
        if (s == kLrL) g[kLrL] = -1.0;
        if (s == kLrR) g[kLrR] = -1.0;
        return g;
      });
  MeanField mu0(std::vector<double>{0.0, 0.5, 0.5});
  return MfgSpec{S, A, horizon, discount, mu0, kernel, reward};
}

MfgSpec make_rps(EnvVariant variant, int horizon, double discount) {
  const int S = 3;
  const int A = 3;
  const bool noisy = variant == EnvVariant::kNew;
  TransitionKernel kernel(S, A,
                          [S, noisy](int /*s*/, int a, const MeanField&) {
                            std::vector<double> row = point_mass(S, a);
                            if (noisy) {
                              row[static_cast<size_t>(a)] = 0.8;
                              for (int sn = 0; sn < S; ++sn) {
                                row[static_cast<size_t>(sn)] += 0.2 / S;
                              }
                            }
                            return row;
                          });
  // rows of the payoff coupling: r(s,.,mu) = coef[s] . mu
  static constexpr double kCoef[3][3] = {
      {0.0, -1.0, 2.0},   // rock:     2 mu(S) - mu(P)
      {4.0, 0.0, -2.0},   // paper:    4 mu(R) - 2 mu(S)
      {-3.0, 6.0, 0.0}};  // scissors: 6 mu(P) - 3 mu(R)
  RewardOracle reward(
      [](int s, int /*a*/, const MeanField& mu) {
        double r = 0.0;
        for (int k = 0; k < 3; ++k) r += kCoef[s][k] * mu[k];
        return r;
      },
      [](int s, int /*a*/, const MeanField&) {
        return std::vector<double>(std::begin(kCoef[s]), std::end(kCoef[s]));
      });
  return MfgSpec{S, A, horizon, discount, MeanField::uniform(S), kernel,
                 reward};
}

MfgSpec make_virus(EnvVariant variant, int horizon, double discount) {
  const int S = 2;
  const int A = 2;
  const double infect =
      variant == EnvVariant::kOriginal ? 0.9 * 0.9 : 0.8 * 0.8;
  TransitionKernel kernel(
      S, A,
      [infect](int s, int a, const MeanField& mu) {
        std::vector<double> row(2, 0.0);
        if (s == kVirusI) {
          row[kVirusS] = 0.3;
          row[kVirusI] = 0.7;
        } else if (a == kVirusGoOut) {
          row[kVirusI] = infect * mu[kVirusI];
          row[kVirusS] = 1.0 - row[kVirusI];
        } else {
          row[kVirusS] = 1.0;
        }
        return row;
      },
      [infect](int s, int a, const MeanField&) {
        std::vector<double> jac(4, 0.0);  // [s'][k] row-major
        if (s == kVirusS && a == kVirusGoOut) {
          jac[static_cast<size_t>(kVirusI) * 2 + kVirusI] = infect;
          jac[static_cast<size_t>(kVirusS) * 2 + kVirusI] = -infect;
        }
        return jac;
      });
  RewardOracle reward(
      [](int s, int a, const MeanField&) {
        return -(s == kVirusI ? 1.0 : 0.0) -
               0.5 * (a == kVirusDistance ? 1.0 : 0.0);
      },
      [](int, int, const MeanField&) { return std::vector<double>(2, 0.0); });
  return MfgSpec{S, A, horizon, discount, MeanField::uniform(S), kernel,
                 reward};
}

MfgSpec make_malware(EnvVariant variant, int horizon, double discount) {
  const int S = 10;
  const int A = 2;
  const double k = 0.2;
  const double alpha = 0.5;
  // chi ~ U(0,1) originally, U(0.5,1) under the new dynamics
  const long chi_lo_halves = variant == EnvVariant::kOriginal ? 0 : 1;
  TransitionKernel kernel(
      S, A, [S, chi_lo_halves](int s, int a, const MeanField&) {
        if (a == 1) return point_mass(S, 0);  // intervene: reset to healthy
        return quality_jump_row(S, s, chi_lo_halves, 1);
      });
  RewardOracle reward(
      [k, alpha](int s, int a, const MeanField& mu) {
        return -(k + average_state(mu)) * s / 10.0 - alpha * a;
      },
      [S](int s, int /*a*/, const MeanField&) {
        std::vector<double> g(static_cast<size_t>(S));
        for (int j = 0; j < S; ++j) g[static_cast<size_t>(j)] = -s * j / 10.0;
        return g;
      });
  return MfgSpec{S, A, horizon, discount, MeanField::uniform(S), kernel,
                 reward};
}

MfgSpec make_invest(EnvVariant variant, int horizon, double discount) {
  const int S = 10;
  const int A = 2;
  const double d = 0.3;
  const double c = 0.2;
  const double alpha = 0.2;
  const double q = variant == EnvVariant::kOriginal ? 4.0 : 5.0;
  TransitionKernel kernel(
      S, A,
      [S, q](int s, int a, const MeanField& mu) {
        if (a == 0) return point_mass(S, s);  // no investment: quality holds
        const bool crowded = average_state(mu) >= q;
        return quality_jump_row(S, s, 0, crowded ? 2 : 1);
      },
      // The mean field only enters through the threshold test, which is
      // piecewise constant; zero almost everywhere.
      [S](int, int, const MeanField&) {
        return std::vector<double>(static_cast<size_t>(S) * S, 0.0);
      });
  RewardOracle reward(
      [d, c, alpha](int s, int a, const MeanField& mu) {
        return d * s / 10.0 - c * average_state(mu) - alpha * a;
      },
      [S, c](int /*s*/, int /*a*/, const MeanField&) {
        std::vector<double> g(static_cast<size_t>(S));
        for (int j = 0; j < S; ++j) g[static_cast<size_t>(j)] = -c * j;
        return g;
      });
  return MfgSpec{S, A, horizon, discount, MeanField::uniform(S), kernel,
                 reward};
}

}  // namespace

std::string to_string(EnvName name) {
  switch (name) {
    case EnvName::kInvest: return "INVEST";
    case EnvName::kMalware: return "MALWARE";
    case EnvName::kVirus: return "VIRUS";
    case EnvName::kRps: return "RPS";
    case EnvName::kLr: return "LR";
  }
  throw ArgumentError("unknown EnvName");
}

std::string to_string(EnvVariant variant) {
  return variant == EnvVariant::kOriginal ? "original" : "new";
}

namespace {
std::string upper(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::toupper(c); });
  return s;
}
}  // namespace

EnvName parse_env_name(const std::string& text) {
  const std::string u = upper(text);
  for (EnvName name : all_env_names()) {
    if (u == to_string(name)) return name;
  }
  throw ArgumentError("unknown environment name: " + text);
}

EnvVariant parse_env_variant(const std::string& text) {
  const std::string u = upper(text);
  if (u == "ORIGINAL") return EnvVariant::kOriginal;
  if (u == "NEW") return EnvVariant::kNew;
  throw ArgumentError("unknown environment variant: " + text);
}

std::vector<EnvName> all_env_names() {
  return {EnvName::kInvest, EnvName::kMalware, EnvName::kVirus, EnvName::kRps,
          EnvName::kLr};
}

bool is_cooperative(EnvName name) {
  return name == EnvName::kVirus || name == EnvName::kLr;
}

MfgSpec make_env(EnvName name, EnvVariant variant, int horizon,
                 double discount) {
  if (horizon < 1) throw ArgumentError("make_env: horizon must be >= 1");
  MfgSpec spec;
  switch (name) {
    case EnvName::kInvest: spec = make_invest(variant, horizon, discount); break;
    case EnvName::kMalware: spec = make_malware(variant, horizon, discount); break;
    case EnvName::kVirus: spec = make_virus(variant, horizon, discount); break;
    case EnvName::kRps: spec = make_rps(variant, horizon, discount); break;
    case EnvName::kLr: spec = make_lr(variant, horizon, discount); break;
  }
  spec.validate();
  return spec;
}

std::vector<double> encode_features(const MfgSpec& spec, int s, int a,
                                    const MeanField& mu) {
  if (s < 0 || s >= spec.num_states) {
    throw ArgumentError("encode_features: state index out of range");
  }
  if (a < 0 || a >= spec.num_actions) {
    throw ArgumentError("encode_features: action index out of range");
  }
  if (mu.num_states() != spec.num_states) {
    throw ContractError("encode_features: mean field dimension mismatch");
  }
  std::vector<double> f(static_cast<size_t>(2 * spec.num_states +
                                            spec.num_actions),
                        0.0);
  f[static_cast<size_t>(s)] = 1.0;
  f[static_cast<size_t>(spec.num_states + a)] = 1.0;
  std::copy(mu.probs().begin(), mu.probs().end(),
            f.begin() + spec.num_states + spec.num_actions);
  return f;
}

nlohmann::json env_description(EnvName name, EnvVariant variant) {
  const MfgSpec spec = make_env(name, variant);
  nlohmann::json j{
      {"name", to_string(name)},
      {"variant", to_string(variant)},
      {"num_states", spec.num_states},
      {"num_actions", spec.num_actions},
      {"default_horizon", spec.horizon},
      {"default_discount", spec.discount},
      {"cooperative", is_cooperative(name)},
      {"initial_mean_field", spec.initial_mean_field.probs()},
      {"feature_length", 2 * spec.num_states + spec.num_actions},
  };
  switch (name) {
    case EnvName::kInvest:
      j["parameters"] = {{"d", 0.3},
                         {"c", 0.2},
                         {"alpha", 0.2},
                         {"q", variant == EnvVariant::kOriginal ? 4 : 5}};
      break;
    case EnvName::kMalware:
      j["parameters"] = {
          {"k", 0.2},
          {"alpha", 0.5},
          {"chi_low", variant == EnvVariant::kOriginal ? 0.0 : 0.5}};
      break;
    case EnvName::kVirus:
      j["parameters"] = {
          {"infection_coef",
           variant == EnvVariant::kOriginal ? 0.81 : 0.64},
          {"recovery", 0.3},
          {"distancing_cost", 0.5}};
      break;
    case EnvName::kRps:
    case EnvName::kLr:
      j["parameters"] = {
          {"move_noise", variant == EnvVariant::kOriginal ? 0.0 : 0.2}};
      break;
  }
  return j;
}

}  // namespace mfg
