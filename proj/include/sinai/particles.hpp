#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sinai/environment.hpp"
#include "sinai/kernels.hpp"
#include "sinai/rng.hpp"

namespace sinai {

/// Occupation numbers eta(x, .) on [lo, hi] with an absorbing boundary.
struct ParticleField {
  Site lo = 0;
  Site hi = -1;
  std::vector<std::int64_t> counts;
  std::optional<int> origin_label;
  std::int64_t elapsed = 0;
  std::int64_t leaked_left = 0;
  std::int64_t leaked_right = 0;

  std::size_t size() const noexcept { return counts.size(); }
  bool contains(Site x) const noexcept { return x >= lo && x <= hi; }
  std::int64_t at(Site x) const;
  std::int64_t total() const noexcept;
  /// total() plus everything that crossed the boundary.
  std::int64_t conserved_mass() const noexcept { return total() + leaked_left + leaked_right; }
};

/// Exact law of X_t started from `start`, restricted to [lo, hi].
struct LawVector {
  Site lo = 0;
  Site hi = -1;
  std::vector<double> probs;
  Site start = 0;
  std::int64_t steps = 0;
  double leaked_left = 0.0;
  double leaked_right = 0.0;

  double at(Site x) const;
  double mass() const noexcept;
};

/// Exact per-site mean of eta(., t) from a deterministic initial intensity.
struct MeanField {
  Site lo = 0;
  Site hi = -1;
  std::vector<double> means;
  std::int64_t steps = 0;
  double leaked_left = 0.0;
  double leaked_right = 0.0;

  double at(Site x) const;
  double total() const noexcept;
};

enum class Engine { split, per_particle, poisson };

std::string_view to_string(Engine engine);
Engine engine_from_string(std::string_view name);

/// floor(t) for t >= 0; throws ConfigError otherwise.
std::int64_t whole_steps(double t);

/// Exact Binomial(n, p): Bernoulli counting for small n, Boost's BTRD
/// (inversion / transformed rejection) otherwise.
std::int64_t sample_binomial(std::int64_t n, double p, CounterRng& rng);

/// i.i.d. Poisson(lambda) counts; counts[x] depends only on (seed, x).
ParticleField init_field(double lambda, Site lo, Site hi, std::uint64_t seed);

/// One synchronous step: each site's c particles send Binomial(c, alpha_x)
/// to x + 1 and the rest to x - 1.
ParticleField step_field(const ParticleField& field, const Environment& env, CounterRng& rng);

/// floor(t) steps of step_field.
ParticleField evolve_field(ParticleField field, const Environment& env, double t, CounterRng& rng);

/// Independent particles on [lo, hi]; particles leaving the window are
/// removed and counted.
struct ParticleCloud {
  Site lo = 0;
  Site hi = -1;
  std::vector<Site> positions;
  std::int64_t elapsed = 0;
  std::int64_t leaked_left = 0;
  std::int64_t leaked_right = 0;
};

std::vector<Site> to_positions(const ParticleField& field);
ParticleField to_field(const ParticleCloud& cloud);

/// Moves every particle independently for floor(t) steps, one particle at a
/// time, with a shared sequential stream.
ParticleCloud evolve_per_particle(std::vector<Site> positions, const Environment& env, double t,
                                  CounterRng& rng, Site lo, Site hi);

/// Forward equation p_{n+1}(x) = alpha_{x-1} p_n(x-1) + (1 - alpha_{x+1}) p_n(x+1)
/// from p_0 = delta_{x0}, absorbing outside [lo, hi]. No renormalization.
LawVector evolve_law(const Environment& env, Site x0, double t, Site lo, Site hi,
                     kernels::Isa isa = kernels::active());
inline LawVector evolve_law(const Environment& env, Site x0, double t) {
  return evolve_law(env, x0, t, env.lo(), env.hi());
}

/// The same forward recursion applied to an arbitrary initial intensity
/// (initial[k] is the value at lo + k).
MeanField propagate_intensity(const Environment& env, Site lo, std::span<const double> initial,
                              double t, kernels::Isa isa = kernels::active());

/// Per-site means of eta(., t) from a Poisson(lambda) field on [lo, hi].
MeanField mean_field(const Environment& env, double lambda, double t, Site lo, Site hi,
                     kernels::Isa isa = kernels::active());

/// h(x) = P_x[X_t in [a, b]] for every x in [lo, hi], absorbing outside the
/// window; the adjoint of evolve_law.
std::vector<double> hit_probability(const Environment& env, Site a, Site b, double t, Site lo,
                                    Site hi, kernels::Isa isa = kernels::active());

/// Independent Poisson(means[x]) counts. This is the exact law of eta(., t)
/// when particles start from a Poisson field and move independently.
ParticleField sample_poisson_field(const MeanField& means, std::uint64_t seed,
                                   std::uint64_t substream);

/// The time-t field of one trial under the chosen engine. Initial fields and
/// dynamics are keyed by (seed, trial). For the poisson engine a precomputed
/// mean field for (lambda, t, [lo, hi]) may be supplied.
ParticleField simulate_field(Engine engine, const Environment& env, double lambda, double t,
                             Site lo, Site hi, std::uint64_t seed, std::uint64_t trial,
                             const MeanField* cached_means = nullptr);

}  // namespace sinai
