#include "sinai/particles.hpp"

#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "sinai/errors.hpp"

namespace sinai {

namespace {

std::size_t offset(Site lo, Site x) { return static_cast<std::size_t>(x - lo); }

void require_window(const Environment& env, Site lo, Site hi) {
  if (hi < lo) throw ConfigError("simulation window has hi < lo");
  if (lo < env.lo() || hi > env.hi()) {
    throw RangeError("window [" + std::to_string(lo) + ", " + std::to_string(hi) +
                     "] not inside environment [" + std::to_string(env.lo()) + ", " +
                     std::to_string(env.hi()) + "]");
  }
}

// alpha and 1 - alpha on the padded layout of kernels.hpp.
struct Coefficients {
  std::size_t n = 0;
  std::vector<double> right;
  std::vector<double> left;

  Coefficients(const Environment& env, Site lo, Site hi) {
    require_window(env, lo, hi);
    n = static_cast<std::size_t>(hi - lo + 1);
    right.assign(n + 2, 0.0);
    left.assign(n + 2, 0.0);
    const auto values = env.values();
    const std::size_t base = offset(env.lo(), lo);
    for (std::size_t k = 0; k < n; ++k) {
      right[k + 1] = values[base + k];
      left[k + 1] = 1.0 - values[base + k];
    }
  }
};

// Bernoulli(p) as a comparison of one raw 64-bit draw against p * 2^64.
std::uint64_t bernoulli_threshold(double p) {
  if (p <= 0.0) return 0;
  if (p >= 1.0) return std::numeric_limits<std::uint64_t>::max();
  return static_cast<std::uint64_t>(std::ldexp(p, 64));
}

}  // namespace

// ---------------------------------------------------------------- containers

std::int64_t ParticleField::at(Site x) const {
  if (!contains(x)) throw RangeError("site " + std::to_string(x) + " outside particle field");
  return counts[offset(lo, x)];
}

std::int64_t ParticleField::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

double LawVector::at(Site x) const {
  if (x < lo || x > hi) return 0.0;
  return probs[offset(lo, x)];
}

double LawVector::mass() const noexcept { return std::accumulate(probs.begin(), probs.end(), 0.0); }

double MeanField::at(Site x) const {
  if (x < lo || x > hi) throw RangeError("site " + std::to_string(x) + " outside mean field");
  return means[offset(lo, x)];
}

double MeanField::total() const noexcept { return std::accumulate(means.begin(), means.end(), 0.0); }

std::string_view to_string(Engine engine) {
  switch (engine) {
    case Engine::split: return "split";
    case Engine::per_particle: return "per_particle";
    case Engine::poisson: return "poisson";
  }
  return "unknown";
}

Engine engine_from_string(std::string_view name) {
  if (name == "split") return Engine::split;
  if (name == "per_particle") return Engine::per_particle;
  if (name == "poisson") return Engine::poisson;
  throw ConfigError("unknown engine '" + std::string(name) + "' (expected split, per_particle or poisson)");
}

std::int64_t whole_steps(double t) {
  if (!(t >= 0.0) || !std::isfinite(t)) throw ConfigError("time must be a finite value >= 0");
  return static_cast<std::int64_t>(std::floor(t));
}

// ---------------------------------------------------------------- samplers

std::int64_t sample_binomial(std::int64_t n, double p, CounterRng& rng) {
  if (n <= 0 || p <= 0.0) return 0;
  if (p >= 1.0) return n;
  if (n <= 16) {
    const std::uint64_t threshold = bernoulli_threshold(p);
    std::int64_t k = 0;
    for (std::int64_t i = 0; i < n; ++i) k += rng() < threshold ? 1 : 0;
    return k;
  }
  boost::random::binomial_distribution<std::int64_t, double> dist(n, p);
  return dist(rng);
}

ParticleField init_field(double lambda, Site lo, Site hi, std::uint64_t seed) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
  if (hi < lo) throw ConfigError("particle window has hi < lo");
  ParticleField f;
  f.lo = lo;
  f.hi = hi;
  f.counts.resize(static_cast<std::size_t>(hi - lo + 1));
  std::poisson_distribution<std::int64_t> poisson(lambda);
  for (Site x = lo; x <= hi; ++x) {
    CounterRng rng(seed, Stream::initial_field, static_cast<std::uint64_t>(x));
    poisson.reset();
    f.counts[offset(lo, x)] = poisson(rng);
  }
  return f;
}

// ---------------------------------------------------------------- split engine

namespace {

// In-place stepping on a padded buffer; cells 0 and n + 1 collect leaks.
class SplitStepper {
 public:
  SplitStepper(const ParticleField& field, const Environment& env) : field_(field) {
    require_window(env, field.lo, field.hi);
    n_ = field.size();
    alpha_.resize(n_ + 2, 0.5);
    const auto values = env.values();
    const std::size_t base = offset(env.lo(), field.lo);
    for (std::size_t k = 0; k < n_; ++k) alpha_[k + 1] = values[base + k];
    cur_.assign(n_ + 2, 0);
    next_.assign(n_ + 2, 0);
    std::copy(field.counts.begin(), field.counts.end(), cur_.begin() + 1);
    first_ = n_ + 1;
    last_ = 0;
    for (std::size_t j = 1; j <= n_; ++j) {
      if (cur_[j] != 0) {
        first_ = std::min(first_, j);
        last_ = j;
      }
    }
  }

  void step(CounterRng& rng) {
    ++field_.elapsed;
    if (first_ > last_) return;
    const std::size_t lo = first_ - 1;
    const std::size_t hi = last_ + 1;
    for (std::size_t j = first_; j <= last_; ++j) {
      const std::int64_t c = cur_[j];
      if (c == 0) continue;
      const std::int64_t r = sample_binomial(c, alpha_[j], rng);
      next_[j + 1] += r;
      next_[j - 1] += c - r;
    }
    field_.leaked_left += next_[0];
    field_.leaked_right += next_[n_ + 1];
    next_[0] = 0;
    next_[n_ + 1] = 0;
    std::swap(cur_, next_);
    // next_ now holds the previous field, nonzero only on [first_, last_].
    std::fill(next_.begin() + static_cast<std::ptrdiff_t>(first_),
              next_.begin() + static_cast<std::ptrdiff_t>(last_) + 1, 0);
    std::size_t a = std::max<std::size_t>(lo, 1);
    std::size_t b = std::min(hi, n_);
    while (a <= b && cur_[a] == 0) ++a;
    while (b >= a && b > 0 && cur_[b] == 0) --b;
    first_ = a;
    last_ = b;
    if (first_ > last_) {
      first_ = n_ + 1;
      last_ = 0;
    }
  }

  ParticleField result() const {
    ParticleField out = field_;
    std::copy(cur_.begin() + 1, cur_.begin() + 1 + static_cast<std::ptrdiff_t>(n_), out.counts.begin());
    return out;
  }

 private:
  ParticleField field_;
  std::size_t n_ = 0;
  std::vector<double> alpha_;
  std::vector<std::int64_t> cur_;
  std::vector<std::int64_t> next_;
  std::size_t first_ = 0;
  std::size_t last_ = 0;
};

}  // namespace

ParticleField step_field(const ParticleField& field, const Environment& env, CounterRng& rng) {
  SplitStepper stepper(field, env);
  stepper.step(rng);
  return stepper.result();
}

ParticleField evolve_field(ParticleField field, const Environment& env, double t, CounterRng& rng) {
  const std::int64_t steps = whole_steps(t);
  if (steps == 0) return field;
  SplitStepper stepper(field, env);
  for (std::int64_t s = 0; s < steps; ++s) stepper.step(rng);
  return stepper.result();
}

// ---------------------------------------------------------------- per particle

std::vector<Site> to_positions(const ParticleField& field) {
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(field.total()));
  for (std::size_t k = 0; k < field.size(); ++k) {
    out.insert(out.end(), static_cast<std::size_t>(field.counts[k]), field.lo + static_cast<Site>(k));
  }
  return out;
}

ParticleField to_field(const ParticleCloud& cloud) {
  ParticleField f;
  f.lo = cloud.lo;
  f.hi = cloud.hi;
  f.counts.assign(static_cast<std::size_t>(cloud.hi - cloud.lo + 1), 0);
  for (Site x : cloud.positions) ++f.counts[offset(cloud.lo, x)];
  f.elapsed = cloud.elapsed;
  f.leaked_left = cloud.leaked_left;
  f.leaked_right = cloud.leaked_right;
  return f;
}

ParticleCloud evolve_per_particle(std::vector<Site> positions, const Environment& env, double t,
                                  CounterRng& rng, Site lo, Site hi) {
  require_window(env, lo, hi);
  const std::int64_t steps = whole_steps(t);
  const std::size_t n = static_cast<std::size_t>(hi - lo + 1);
  std::vector<std::uint64_t> threshold(n);
  const auto values = env.values();
  for (std::size_t k = 0; k < n; ++k) threshold[k] = bernoulli_threshold(values[offset(env.lo(), lo) + k]);

  ParticleCloud cloud;
  cloud.lo = lo;
  cloud.hi = hi;
  cloud.elapsed = steps;
  cloud.positions.reserve(positions.size());
  for (Site start : positions) {
    if (start < lo || start > hi) throw RangeError("particle starts outside the window");
    Site x = start;
    bool inside = true;
    for (std::int64_t s = 0; s < steps; ++s) {
      x += rng() < threshold[offset(lo, x)] ? 1 : -1;
      if (x < lo) {
        ++cloud.leaked_left;
        inside = false;
        break;
      }
      if (x > hi) {
        ++cloud.leaked_right;
        inside = false;
        break;
      }
    }
    if (inside) cloud.positions.push_back(x);
  }
  return cloud;
}

// ---------------------------------------------------------------- exact laws

LawVector evolve_law(const Environment& env, Site x0, double t, Site lo, Site hi, kernels::Isa isa) {
  const std::int64_t steps = whole_steps(t);
  Coefficients coef(env, lo, hi);
  if (x0 < lo || x0 > hi) throw RangeError("law start outside the window");
  const auto& k = kernels::table(isa);
  const std::size_t n = coef.n;
  std::vector<double> cur(n + 2, 0.0), next(n + 2, 0.0);
  const std::size_t s0 = offset(lo, x0) + 1;
  cur[s0] = 1.0;
  std::size_t first = s0, last = s0;

  LawVector law;
  law.lo = lo;
  law.hi = hi;
  law.start = x0;
  law.steps = steps;
  for (std::int64_t s = 0; s < steps; ++s) {
    law.leaked_left += coef.left[1] * cur[1];
    law.leaked_right += coef.right[n] * cur[n];
    first = std::max<std::size_t>(1, first - 1);
    last = std::min(n, last + 1);
    k.forward(coef.right.data(), coef.left.data(), cur.data(), next.data(), first, last);
    std::swap(cur, next);
  }
  law.probs.assign(cur.begin() + 1, cur.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  return law;
}

MeanField propagate_intensity(const Environment& env, Site lo, std::span<const double> initial,
                              double t, kernels::Isa isa) {
  const std::int64_t steps = whole_steps(t);
  if (initial.empty()) throw ConfigError("empty initial intensity");
  const Site hi = lo + static_cast<Site>(initial.size()) - 1;
  Coefficients coef(env, lo, hi);
  const auto& k = kernels::table(isa);
  const std::size_t n = coef.n;
  std::vector<double> cur(n + 2, 0.0), next(n + 2, 0.0);
  std::copy(initial.begin(), initial.end(), cur.begin() + 1);

  MeanField mf;
  mf.lo = lo;
  mf.hi = hi;
  mf.steps = steps;
  for (std::int64_t s = 0; s < steps; ++s) {
    mf.leaked_left += coef.left[1] * cur[1];
    mf.leaked_right += coef.right[n] * cur[n];
    k.forward(coef.right.data(), coef.left.data(), cur.data(), next.data(), 1, n);
    std::swap(cur, next);
  }
  mf.means.assign(cur.begin() + 1, cur.begin() + 1 + static_cast<std::ptrdiff_t>(n));
  return mf;
}

MeanField mean_field(const Environment& env, double lambda, double t, Site lo, Site hi,
                     kernels::Isa isa) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("lambda must be > 0");
  if (hi < lo) throw ConfigError("mean-field window has hi < lo");
  const std::vector<double> initial(static_cast<std::size_t>(hi - lo + 1), lambda);
  return propagate_intensity(env, lo, initial, t, isa);
}

std::vector<double> hit_probability(const Environment& env, Site a, Site b, double t, Site lo,
                                    Site hi, kernels::Isa isa) {
  const std::int64_t steps = whole_steps(t);
  Coefficients coef(env, lo, hi);
  const auto& k = kernels::table(isa);
  const std::size_t n = coef.n;
  std::vector<double> cur(n + 2, 0.0), next(n + 2, 0.0);
  const Site ca = std::max(a, lo), cb = std::min(b, hi);
  if (ca > cb) return std::vector<double>(n, 0.0);
  for (Site x = ca; x <= cb; ++x) cur[offset(lo, x) + 1] = 1.0;
  std::size_t first = offset(lo, ca) + 1, last = offset(lo, cb) + 1;
  for (std::int64_t s = 0; s < steps; ++s) {
    first = std::max<std::size_t>(1, first - 1);
    last = std::min(n, last + 1);
    k.backward(coef.right.data(), coef.left.data(), cur.data(), next.data(), first, last);
    std::swap(cur, next);
  }
  return std::vector<double>(cur.begin() + 1, cur.begin() + 1 + static_cast<std::ptrdiff_t>(n));
}

ParticleField sample_poisson_field(const MeanField& means, std::uint64_t seed, std::uint64_t substream) {
  ParticleField f;
  f.lo = means.lo;
  f.hi = means.hi;
  f.elapsed = means.steps;
  f.counts.resize(means.means.size());
  CounterRng rng(seed, Stream::poisson_field, substream);
  for (std::size_t k = 0; k < means.means.size(); ++k) {
    const double mu = means.means[k];
    if (mu <= 0.0) continue;
    std::poisson_distribution<std::int64_t> poisson(mu);
    f.counts[k] = poisson(rng);
  }
  // Leaked mass is an expectation here; keep the rounded value for reports.
  f.leaked_left = static_cast<std::int64_t>(std::llround(means.leaked_left));
  f.leaked_right = static_cast<std::int64_t>(std::llround(means.leaked_right));
  return f;
}

ParticleField simulate_field(Engine engine, const Environment& env, double lambda, double t, Site lo,
                             Site hi, std::uint64_t seed, std::uint64_t trial,
                             const MeanField* cached_means) {
  switch (engine) {
    case Engine::split: {
      auto f = init_field(lambda, lo, hi, derive_key(seed, Stream::trial_seed, trial));
      CounterRng rng(seed, Stream::dynamics, trial);
      return evolve_field(std::move(f), env, t, rng);
    }
    case Engine::per_particle: {
      auto f = init_field(lambda, lo, hi, derive_key(seed, Stream::trial_seed, trial));
      CounterRng rng(seed, Stream::dynamics, trial);
      return to_field(evolve_per_particle(to_positions(f), env, t, rng, lo, hi));
    }
    case Engine::poisson: {
      if (cached_means) {
        if (cached_means->lo != lo || cached_means->hi != hi || cached_means->steps != whole_steps(t)) {
          throw ContractError("cached mean field does not match the requested window/time");
        }
        return sample_poisson_field(*cached_means, seed, trial);
      }
      return sample_poisson_field(mean_field(env, lambda, t, lo, hi), seed, trial);
    }
  }
  throw ContractError("unknown engine");
}

}  // namespace sinai
