#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace sinai {

using Site = std::int64_t;

enum class EnvKind { two_point_symmetric, uniform_symmetric };

std::string_view to_string(EnvKind kind);
EnvKind env_kind_from_string(std::string_view name);

/// Law of a single site's right-jump probability. Only laws symmetric about
/// 1/2 are representable, so E[log((1-a)/a)] = 0 holds exactly.
struct EnvDistribution {
  EnvKind kind = EnvKind::two_point_symmetric;
  double rho0 = 0.25;

  /// Validating constructor; throws ConfigError unless 0 < rho0 < 1/2.
  static EnvDistribution make(EnvKind kind, double rho0);

  /// Maps a uniform variate in (0,1) to a site value.
  double draw(double u) const noexcept;

  /// log((1 - rho0) / rho0), the largest possible |potential increment|.
  double max_increment() const noexcept;

  friend bool operator==(const EnvDistribution&, const EnvDistribution&) = default;
};

/// An i.i.d. environment restricted to the window [lo, hi].
///
/// Sampled environments are regenerable: alpha(i) is a pure function of
/// (master_seed, i), so extending the window never rewrites existing sites.
class Environment {
 public:
  /// Builds an environment from explicit values, bypassing the law. Values
  /// only need to lie in [0, 1]; such environments cannot be extended.
  static Environment custom(Site lo, std::vector<double> alpha);

  Site lo() const noexcept { return lo_; }
  Site hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return alpha_.size(); }
  bool contains(Site i) const noexcept { return i >= lo_ && i <= hi_; }

  /// Right-jump probability at site i; throws RangeError outside the window.
  double alpha(Site i) const;
  std::span<const double> values() const noexcept { return alpha_; }

  const std::optional<EnvDistribution>& distribution() const noexcept { return dist_; }
  std::uint64_t master_seed() const noexcept { return seed_; }
  bool regenerable() const noexcept { return dist_.has_value(); }

  friend bool operator==(const Environment&, const Environment&) = default;

 private:
  friend Environment sample_environment(const EnvDistribution&, Site, Site, std::uint64_t);
  friend Environment extend_environment(const Environment&, Site, Site);

  Site lo_ = 0;
  Site hi_ = -1;
  std::vector<double> alpha_;
  std::optional<EnvDistribution> dist_;
  std::uint64_t seed_ = 0;
};

/// Site value for (seed, i) under dist; the single source of truth for sampling.
double site_alpha(const EnvDistribution& dist, std::uint64_t master_seed, Site i) noexcept;

Environment sample_environment(const EnvDistribution& dist, Site lo, Site hi,
                               std::uint64_t master_seed);

/// Widens the window to [new_lo, new_hi]; the old window is left untouched.
Environment extend_environment(const Environment& env, Site new_lo, Site new_hi);

/// The random potential on integer nodes: S[0] = 0, S[k] - S[k-1] = eps_k for
/// k >= 1 and S[k] = -(eps_{k+1} + ... + eps_0) for k <= -1, where
/// eps_i = log((1 - alpha_i) / alpha_i). The window must contain 0.
class Potential {
 public:
  /// Builds a potential from explicit node values (fixtures, tests).
  static Potential from_values(Site lo, std::vector<double> values, double sigma2 = 0.0);

  Site lo() const noexcept { return lo_; }
  Site hi() const noexcept { return hi_; }
  std::size_t size() const noexcept { return s_.size(); }
  bool contains(Site i) const noexcept { return i >= lo_ && i <= hi_; }

  double at(Site k) const;
  /// Unchecked access; k must lie in the window.
  double operator[](Site k) const noexcept { return s_[static_cast<std::size_t>(k - lo_)]; }
  std::span<const double> values() const noexcept { return s_; }

  /// Analytic variance of eps under the environment law (0 if unknown).
  double sigma2() const noexcept { return sigma2_; }

  /// Increment eps_k recovered from the stored nodes (k in (lo, hi]).
  double increment(Site k) const { return at(k) - at(k - 1); }

 private:
  friend Potential compute_potential(const Environment& env);

  Site lo_ = 0;
  Site hi_ = -1;
  std::vector<double> s_;
  double sigma2_ = 0.0;
};

/// For two-point environments the nodes are stored as exact multiples of
/// log((1-rho0)/rho0), so equal heights compare equal.
Potential compute_potential(const Environment& env);

/// Exact variance of log((1-a)/a) under dist.
double sigma2_analytic(const EnvDistribution& dist);

struct HypothesisReport {
  double mean_eps = 0.0;
  double sigma2 = 0.0;
  double rho0 = 0.0;
  double max_increment = 0.0;
  bool ok = false;
};

HypothesisReport verify_hypotheses(const EnvDistribution& dist);

}  // namespace sinai
