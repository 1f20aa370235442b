#include "sinai/environment.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <string>

#include "sinai/errors.hpp"
#include "sinai/rng.hpp"

namespace sinai {

std::string_view to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::two_point_symmetric:
      return "two_point_symmetric";
    case EnvKind::uniform_symmetric:
      return "uniform_symmetric";
  }
  return "unknown";
}

EnvKind env_kind_from_string(std::string_view name) {
  if (name == "two_point_symmetric" || name == "two_point") return EnvKind::two_point_symmetric;
  if (name == "uniform_symmetric" || name == "uniform") return EnvKind::uniform_symmetric;
  throw ConfigError("unknown environment kind '" + std::string(name) + "'");
}

EnvDistribution EnvDistribution::make(EnvKind kind, double rho0) {
  if (!(rho0 > 0.0 && rho0 < 0.5)) {
    throw ConfigError("env.rho0 must lie in (0, 1/2), got " + std::to_string(rho0));
  }
  return EnvDistribution{kind, rho0};
}

double EnvDistribution::draw(double u) const noexcept {
  switch (kind) {
    case EnvKind::two_point_symmetric:
      return u < 0.5 ? rho0 : 1.0 - rho0;
    case EnvKind::uniform_symmetric:
      return rho0 + (1.0 - 2.0 * rho0) * u;
  }
  return 0.5;
}

double EnvDistribution::max_increment() const noexcept { return std::log((1.0 - rho0) / rho0); }

double site_alpha(const EnvDistribution& dist, std::uint64_t master_seed, Site i) noexcept {
  const CounterRng rng(master_seed, Stream::environment);
  return dist.draw(CounterRng::to_unit(rng.at(static_cast<std::uint64_t>(i))));
}

Environment Environment::custom(Site lo, std::vector<double> alpha) {
  for (double a : alpha) {
    if (!(a >= 0.0 && a <= 1.0)) throw ConfigError("custom environment value outside [0, 1]");
  }
  Environment env;
  env.lo_ = lo;
  env.hi_ = lo + static_cast<Site>(alpha.size()) - 1;
  env.alpha_ = std::move(alpha);
  return env;
}

double Environment::alpha(Site i) const {
  if (!contains(i)) {
    throw RangeError("site " + std::to_string(i) + " outside environment window [" +
                     std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
  }
  return alpha_[static_cast<std::size_t>(i - lo_)];
}

Environment sample_environment(const EnvDistribution& dist, Site lo, Site hi,
                               std::uint64_t master_seed) {
  const auto checked = EnvDistribution::make(dist.kind, dist.rho0);
  if (hi < lo) throw ConfigError("environment window has hi < lo");
  if (lo > 0 || hi < 0) throw ConfigError("environment window must contain the origin");
  Environment env;
  env.lo_ = lo;
  env.hi_ = hi;
  env.dist_ = checked;
  env.seed_ = master_seed;
  env.alpha_.resize(static_cast<std::size_t>(hi - lo + 1));
  for (Site i = lo; i <= hi; ++i) {
    env.alpha_[static_cast<std::size_t>(i - lo)] = site_alpha(checked, master_seed, i);
  }
  return env;
}

Environment extend_environment(const Environment& env, Site new_lo, Site new_hi) {
  if (new_lo > env.lo() || new_hi < env.hi()) {
    throw ConfigError("extend_environment cannot shrink the window");
  }
  if (new_lo == env.lo() && new_hi == env.hi()) return env;
  if (!env.regenerable()) throw ContractError("custom environments cannot be extended");

  Environment out;
  out.lo_ = new_lo;
  out.hi_ = new_hi;
  out.dist_ = env.dist_;
  out.seed_ = env.seed_;
  out.alpha_.resize(static_cast<std::size_t>(new_hi - new_lo + 1));
  for (Site i = new_lo; i <= new_hi; ++i) {
    out.alpha_[static_cast<std::size_t>(i - new_lo)] =
        env.contains(i) ? env.alpha_[static_cast<std::size_t>(i - env.lo())]
                        : site_alpha(*env.dist_, env.seed_, i);
  }
  return out;
}

Potential Potential::from_values(Site lo, std::vector<double> values, double sigma2) {
  if (values.empty()) throw ConfigError("potential needs at least one node");
  Potential p;
  p.lo_ = lo;
  p.hi_ = lo + static_cast<Site>(values.size()) - 1;
  p.s_ = std::move(values);
  p.sigma2_ = sigma2;
  return p;
}

double Potential::at(Site k) const {
  if (!contains(k)) {
    throw RangeError("node " + std::to_string(k) + " outside potential window [" +
                     std::to_string(lo_) + ", " + std::to_string(hi_) + "]");
  }
  return s_[static_cast<std::size_t>(k - lo_)];
}

Potential compute_potential(const Environment& env) {
  if (env.lo() > 0 || env.hi() < 0) throw ConfigError("potential window must contain the origin");
  Potential p;
  p.lo_ = env.lo();
  p.hi_ = env.hi();
  p.s_.assign(env.size(), 0.0);
  const auto& dist = env.distribution();
  p.sigma2_ = dist ? sigma2_analytic(*dist) : 0.0;

  auto idx = [&](Site k) { return static_cast<std::size_t>(k - env.lo()); };

  if (dist && dist->kind == EnvKind::two_point_symmetric) {
    // Heights are c * (net number of up-steps); keep the count exact.
    const double c = dist->max_increment();
    std::int64_t n = 0;
    for (Site k = 1; k <= env.hi(); ++k) {
      n += env.alpha(k) < 0.5 ? 1 : -1;
      p.s_[idx(k)] = c * static_cast<double>(n);
    }
    n = 0;
    for (Site k = -1; k >= env.lo(); --k) {
      n -= env.alpha(k + 1) < 0.5 ? 1 : -1;
      p.s_[idx(k)] = c * static_cast<double>(n);
    }
    return p;
  }

  auto eps = [&](Site i) {
    const double a = env.alpha(i);
    return std::log((1.0 - a) / a);
  };
  double s = 0.0;
  for (Site k = 1; k <= env.hi(); ++k) {
    s += eps(k);
    p.s_[idx(k)] = s;
  }
  s = 0.0;
  for (Site k = -1; k >= env.lo(); --k) {
    s -= eps(k + 1);
    p.s_[idx(k)] = s;
  }
  return p;
}

double sigma2_analytic(const EnvDistribution& dist) {
  const auto d = EnvDistribution::make(dist.kind, dist.rho0);
  const double c = d.max_increment();
  switch (d.kind) {
    case EnvKind::two_point_symmetric:
      return c * c;
    case EnvKind::uniform_symmetric: {
      using boost::math::quadrature::gauss_kronrod;
      auto integrand = [](double a) {
        const double e = std::log((1.0 - a) / a);
        return e * e;
      };
      // The integrand is symmetric about 1/2.
      // Potentials ask for this once per window; keep the last result.
      thread_local double cached_rho = -1.0;
      thread_local double cached_value = 0.0;
      if (d.rho0 != cached_rho) {
        const double half = gauss_kronrod<double, 61>::integrate(integrand, d.rho0, 0.5, 15, 1e-12);
        cached_value = 2.0 * half / (1.0 - 2.0 * d.rho0);
        cached_rho = d.rho0;
      }
      return cached_value;
    }
  }
  return 0.0;
}

HypothesisReport verify_hypotheses(const EnvDistribution& dist) {
  const auto d = EnvDistribution::make(dist.kind, dist.rho0);
  HypothesisReport r;
  r.mean_eps = 0.0;  // symmetric law
  r.sigma2 = sigma2_analytic(d);
  r.rho0 = d.rho0;
  r.max_increment = d.max_increment();
  r.ok = r.sigma2 > 0.0 && d.rho0 > 0.0 && d.rho0 < 0.5;
  return r;
}

}  // namespace sinai
