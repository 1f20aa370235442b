#include "sinai/observables.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "sinai/errors.hpp"
#include "sinai/parallel.hpp"
#include "sinai/rng.hpp"

namespace sinai {

namespace {

double log_scale(double t) {
  if (!(t > 1.0) || !std::isfinite(t)) throw ConfigError("t must be finite and > 1");
  const double l = std::log(t);
  return l * l;
}

}  // namespace

// ---------------------------------------------------------------- test functions

std::string_view to_string(FunctionKind kind) {
  switch (kind) {
    case FunctionKind::triangle_bump: return "triangle_bump";
    case FunctionKind::smooth_bump: return "smooth_bump";
    case FunctionKind::zero: return "zero";
  }
  return "unknown";
}

FunctionKind function_kind_from_string(std::string_view name) {
  if (name == "triangle_bump" || name == "triangle") return FunctionKind::triangle_bump;
  if (name == "smooth_bump" || name == "smooth") return FunctionKind::smooth_bump;
  if (name == "zero") return FunctionKind::zero;
  throw ConfigError("unknown f kind '" + std::string(name) + "'");
}

FunctionSpec FunctionSpec::make(FunctionKind kind, double K, double amplitude) {
  if (!(K > 0.0) || !std::isfinite(K)) throw ConfigError("K must be positive");
  if (!std::isfinite(amplitude)) throw ConfigError("amplitude must be finite");
  return FunctionSpec{kind, K, amplitude};
}

double FunctionSpec::operator()(double u) const noexcept {
  const double r = std::abs(u) / K;
  if (r >= 1.0) return 0.0;
  switch (kind) {
    case FunctionKind::triangle_bump: return amplitude * (1.0 - r);
    case FunctionKind::smooth_bump: return amplitude * std::exp(-1.0 / (1.0 - r * r));
    case FunctionKind::zero: return 0.0;
  }
  return 0.0;
}

double empirical_functional(const ParticleField& field, const FunctionSpec& f, double t) {
  const double L2 = log_scale(t);
  double sum = 0.0;
  for (std::size_t k = 0; k < field.counts.size(); ++k) {
    if (field.counts[k] == 0) continue;
    const double x = static_cast<double>(field.lo + static_cast<Site>(k));
    sum += static_cast<double>(field.counts[k]) * f(x / L2);
  }
  return sum / L2;
}

double empirical_functional(const MeanField& field, const FunctionSpec& f, double t) {
  const double L2 = log_scale(t);
  double sum = 0.0;
  for (std::size_t k = 0; k < field.means.size(); ++k) {
    const double x = static_cast<double>(field.lo + static_cast<Site>(k));
    sum += field.means[k] * f(x / L2);
  }
  return sum / L2;
}

double predicted_functional(const ValleyDecomposition& d, const FunctionSpec& f, double lambda,
                            double t) {
  const double L2 = log_scale(t);
  double sum = 0.0;
  for (int i = 1; i <= d.n_f; ++i) {
    const Valley v = d.valley(i);
    const double width = static_cast<double>(std::abs(v.M_right - v.M_left));
    sum += width * f(static_cast<double>(v.m) / L2);
  }
  return lambda * sum / L2;
}

double localization_radius(double t, double cte) {
  if (!(cte > 0.0)) throw ConfigError("cte must be positive");
  const double l = std::log(t);
  if (!(l > 0.0)) throw ConfigError("t must be > 1");
  return cte * l * std::sqrt(l);
}

double localization_mass(const LawVector& law, Site m, double t, double cte) {
  const double r = localization_radius(t, cte);
  double mass = 0.0;
  for (std::size_t k = 0; k < law.probs.size(); ++k) {
    const Site x = law.lo + static_cast<Site>(k);
    if (std::abs(static_cast<double>(x - m)) <= r) mass += law.probs[k];
  }
  return mass;
}

// ---------------------------------------------------------------- localization

std::vector<Site> sample_valley_starts(const ValleyDecomposition& d, int i, int n,
                                       std::uint64_t seed, std::uint64_t substream) {
  if (i < 1 || i > d.n_f) throw RangeError("valley index out of range");
  const Valley v = d.valley(i);
  std::vector<Site> band;
  for (Site x = v.M_left; x <= v.M_right; ++x) {
    if (origin_tag(d, x) == i) band.push_back(x);
  }
  CounterRng rng(seed, Stream::start_sites, substream);
  const std::size_t take = std::min(band.size(), static_cast<std::size_t>(std::max(0, n)));
  for (std::size_t k = 0; k < take; ++k) {
    std::uniform_int_distribution<std::size_t> pick(k, band.size() - 1);
    std::swap(band[k], band[pick(rng)]);
  }
  band.resize(take);
  std::sort(band.begin(), band.end());
  return band;
}

LocalizationReport localize(const Environment& env, const ValleyDecomposition& d, double t,
                            double cte, int starts_per_valley, std::uint64_t seed, Site lo,
                            Site hi, kernels::Isa isa) {
  LocalizationReport rep;
  rep.t = t;
  rep.cte = cte;
  rep.radius = localization_radius(t, cte);
  rep.window_lo = lo;
  rep.window_hi = hi;
  const Site r = static_cast<Site>(std::floor(rep.radius));
  for (int i = 1; i <= d.n_f; ++i) {
    ValleyLocalization vl;
    vl.valley_index = i;
    vl.m = d.m[static_cast<std::size_t>(i - 1)];
    if (vl.m < lo || vl.m > hi) throw RangeError("valley bottom outside the simulation window");
    const LawVector law = evolve_law(env, vl.m, t, lo, hi, isa);
    vl.bottom_mass = localization_mass(law, vl.m, t, cte);
    for (Site x : sample_valley_starts(d, i, starts_per_valley, seed, static_cast<std::uint64_t>(i))) {
      if (x >= lo && x <= hi) vl.starts.push_back(x);
    }
    if (!vl.starts.empty()) {
      const auto h = hit_probability(env, vl.m - r, vl.m + r, t, lo, hi, isa);
      for (Site x : vl.starts) vl.start_mass.push_back(h[static_cast<std::size_t>(x - lo)]);
    }
    rep.valleys.push_back(std::move(vl));
  }
  return rep;
}

// ---------------------------------------------------------------- migration

int origin_tag(const ValleyDecomposition& d, Site x) {
  for (const auto& u : d.U) {
    if (x >= u.lo && x <= u.hi) return tag_indeterminate;
  }
  if (d.n_f == 0 || x < d.M.front() || x > d.M.back()) return tag_outside;
  const auto it = std::upper_bound(d.M.begin(), d.M.end(), x);
  return static_cast<int>(it - d.M.begin());
}

std::vector<int> origin_tags(const ValleyDecomposition& d, Site lo, Site hi) {
  std::vector<int> tags;
  tags.reserve(static_cast<std::size_t>(std::max<Site>(0, hi - lo + 1)));
  for (Site x = lo; x <= hi; ++x) tags.push_back(origin_tag(d, x));
  return tags;
}

MigrationReport migration_report(const std::vector<ParticleField>& tagged_fields,
                                 const ValleyDecomposition& d) {
  MigrationReport rep;
  rep.n_f = d.n_f;
  const auto nf = static_cast<std::size_t>(d.n_f);
  rep.origin_mass.assign(nf, 0.0);
  rep.cross_valley.assign(nf, std::vector<double>(nf, 0.0));
  rep.stayed.assign(nf, 0.0);
  rep.elsewhere.assign(nf, 0.0);

  for (const auto& field : tagged_fields) {
    if (!field.origin_label) throw ContractError("migration_report needs origin-tagged fields");
    const int label = *field.origin_label;
    if (label < tag_outside || label > d.n_f) {
      throw ContractError("origin label " + std::to_string(label) + " does not match the decomposition");
    }
    for (std::size_t k = 0; k < field.counts.size(); ++k) {
      const std::int64_t c = field.counts[k];
      if (c == 0) continue;
      const Site x = field.lo + static_cast<Site>(k);
      const double mass = static_cast<double>(c);
      const bool in_cover = d.n_f > 0 && x >= d.M.front() && x <= d.M.back();
      if (label >= 1) {
        const auto i = static_cast<std::size_t>(label - 1);
        const int dest = origin_tag(d, x);
        if (dest >= 1) rep.cross_valley[i][static_cast<std::size_t>(dest - 1)] += mass;
        if (x >= d.M[i] && x <= d.M[i + 1]) rep.stayed[i] += mass;
      } else if (label == tag_outside) {
        if (in_cover) rep.influx_from_outside += mass;
      } else if (in_cover) {
        rep.indeterminate_mass += mass;
      }
    }
    if (label >= 1) rep.origin_mass[static_cast<std::size_t>(label - 1)] += static_cast<double>(field.conserved_mass());
  }

  double origin = 0.0, moved = 0.0;
  for (std::size_t i = 0; i < nf; ++i) {
    rep.elsewhere[i] = rep.origin_mass[i] - rep.stayed[i];
    origin += rep.origin_mass[i];
    moved += rep.elsewhere[i];
  }
  rep.cross_fraction = origin > 0.0 ? moved / origin : 0.0;
  return rep;
}

std::vector<ParticleField> split_by_origin(const ParticleField& field, const ValleyDecomposition& d) {
  std::vector<ParticleField> out;
  std::vector<int> index_of(static_cast<std::size_t>(d.n_f + 2), -1);  // label + 1 -> slot
  for (std::size_t k = 0; k < field.counts.size(); ++k) {
    const int label = origin_tag(d, field.lo + static_cast<Site>(k));
    int& slot = index_of[static_cast<std::size_t>(label + 1)];
    if (slot < 0) {
      slot = static_cast<int>(out.size());
      ParticleField f;
      f.lo = field.lo;
      f.hi = field.hi;
      f.counts.assign(field.counts.size(), 0);
      f.origin_label = label;
      f.elapsed = field.elapsed;
      out.push_back(std::move(f));
    }
    out[static_cast<std::size_t>(slot)].counts[k] = field.counts[k];
  }
  std::sort(out.begin(), out.end(),
            [](const ParticleField& a, const ParticleField& b) { return *a.origin_label < *b.origin_label; });
  return out;
}

// ---------------------------------------------------------------- renewal

namespace {

struct EnvGaps {
  bool ok = false;
  std::vector<double> gaps;
  std::vector<double> half_gaps;
};

EnvGaps scan_environment(const EnvDistribution& dist, double Gamma, int target, std::uint64_t env_seed,
                         double rescale, std::int64_t max_sites) {
  EnvGaps out;
  GammaScanner scanner(Gamma, GammaScanner::Mode::undecided);
  std::vector<Extremum> extrema;
  extrema.reserve(static_cast<std::size_t>(target) + 1);
  double s = 0.0;
  scanner.push(0, 0.0);
  for (Site k = 1; k <= max_sites; ++k) {
    const double a = site_alpha(dist, env_seed, k);
    s += std::log((1.0 - a) / a);
    if (auto c = scanner.push(k, s)) {
      extrema.push_back(c->extremum);
      if (static_cast<int>(extrema.size()) == target + 1) break;
    }
  }
  if (static_cast<int>(extrema.size()) < target + 1) return out;
  // The first extremum depends on where the scan started; drop it.
  extrema.erase(extrema.begin());
  Site last_min = 0;
  bool have_min = false;
  for (std::size_t k = 0; k < extrema.size(); ++k) {
    if (k > 0) {
      out.half_gaps.push_back(rescale * static_cast<double>(extrema[k].position - extrema[k - 1].position));
    }
    if (extrema[k].kind == ExtremumKind::minimum) {
      if (have_min) out.gaps.push_back(rescale * static_cast<double>(extrema[k].position - last_min));
      last_min = extrema[k].position;
      have_min = true;
    }
  }
  out.ok = true;
  return out;
}

}  // namespace

RenewalSample renewal_gap_sample(const EnvDistribution& dist, double Gamma, int n_envs,
                                 int target_extrema, std::uint64_t seed, std::int64_t max_sites,
                                 int workers) {
  if (!(Gamma > 0.0)) throw ConfigError("Gamma must be positive");
  if (n_envs < 1) throw ConfigError("n_envs must be >= 1");
  if (target_extrema < 3) throw ConfigError("target_extrema must be >= 3");
  RenewalSample sample;
  sample.sigma2 = sigma2_analytic(dist);
  sample.Gamma = Gamma;
  const double rescale = sample.sigma2 / (Gamma * Gamma);

  std::vector<EnvGaps> per_env(static_cast<std::size_t>(n_envs));
  parallel_for(per_env.size(), workers, [&](std::size_t e) {
    per_env[e] = scan_environment(dist, Gamma, target_extrema,
                                  derive_key(seed, Stream::environment, e), rescale, max_sites);
  });

  sample.env_offsets.push_back(0);
  for (auto& g : per_env) {
    if (!g.ok) {
      ++sample.envs_skipped;
      continue;
    }
    ++sample.envs_used;
    sample.gaps.insert(sample.gaps.end(), g.gaps.begin(), g.gaps.end());
    sample.half_gaps.insert(sample.half_gaps.end(), g.half_gaps.begin(), g.half_gaps.end());
    sample.env_offsets.push_back(sample.gaps.size());
  }
  return sample;
}

double laplace_cosh(double lambda, int power) {
  if (!(lambda >= 0.0)) throw ConfigError("Laplace argument must be >= 0");
  return std::pow(1.0 / std::cosh(std::sqrt(2.0 * lambda)), power);
}

std::vector<LaplaceRow> empirical_laplace(const std::vector<double>& sample,
                                          const std::vector<double>& lambdas, std::uint64_t seed,
                                          int bootstrap) {
  if (sample.empty()) throw ConfigError("empirical_laplace needs a nonempty sample");
  const std::size_t n = sample.size();
  std::vector<LaplaceRow> rows;
  for (std::size_t li = 0; li < lambdas.size(); ++li) {
    const double lambda = lambdas[li];
    LaplaceRow row;
    row.lambda = lambda;
    row.paper_value = laplace_cosh(lambda, 2);
    row.alternative_value = laplace_cosh(lambda, 1);
    std::vector<double> terms(n);
    for (std::size_t k = 0; k < n; ++k) terms[k] = std::exp(-lambda * sample[k]);
    row.empirical = std::accumulate(terms.begin(), terms.end(), 0.0) / static_cast<double>(n);

    if (bootstrap > 0) {
      std::vector<double> reps(static_cast<std::size_t>(bootstrap));
      for (int b = 0; b < bootstrap; ++b) {
        CounterRng rng(seed, Stream::bootstrap, static_cast<std::uint64_t>(b));
        std::uniform_int_distribution<std::size_t> pick(0, n - 1);
        double acc = 0.0;
        for (std::size_t k = 0; k < n; ++k) acc += terms[pick(rng)];
        reps[static_cast<std::size_t>(b)] = acc / static_cast<double>(n);
      }
      std::sort(reps.begin(), reps.end());
      auto quantile = [&](double q) {
        const double pos = q * static_cast<double>(reps.size() - 1);
        const auto i = static_cast<std::size_t>(std::floor(pos));
        const std::size_t j = std::min(i + 1, reps.size() - 1);
        return reps[i] + (pos - static_cast<double>(i)) * (reps[j] - reps[i]);
      };
      row.ci_low = quantile(0.025);
      row.ci_high = quantile(0.975);
    } else {
      row.ci_low = row.ci_high = row.empirical;
    }
    rows.push_back(row);
  }
  return rows;
}

SampleSummary summarize(const std::vector<double>& xs) {
  SampleSummary s;
  s.count = xs.size();
  if (xs.empty()) return s;
  s.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - s.mean) * (x - s.mean);
  s.variance = xs.size() > 1 ? ss / static_cast<double>(xs.size() - 1) : 0.0;
  s.std_error = std::sqrt(s.variance / static_cast<double>(xs.size()));
  const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
  s.min = *lo;
  s.max = *hi;
  return s;
}

double lag1_autocorrelation(const RenewalSample& sample) {
  const auto& g = sample.gaps;
  if (g.size() < 2) return 0.0;
  const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
  double var = 0.0;
  for (double x : g) var += (x - mean) * (x - mean);
  var /= static_cast<double>(g.size());
  double cov = 0.0;
  std::size_t pairs = 0;
  for (std::size_t e = 0; e + 1 < sample.env_offsets.size(); ++e) {
    for (std::size_t k = sample.env_offsets[e]; k + 1 < sample.env_offsets[e + 1]; ++k) {
      cov += (g[k] - mean) * (g[k + 1] - mean);
      ++pairs;
    }
  }
  if (pairs == 0 || var == 0.0) return 0.0;
  return cov / static_cast<double>(pairs) / var;
}

NfStatistics nf_statistics(const std::vector<int>& n_f_samples, double sigma2, double K) {
  if (n_f_samples.empty()) throw ConfigError("nf_statistics needs a nonempty sample");
  if (!(K > 0.0)) throw ConfigError("K must be positive");
  NfStatistics st;
  std::vector<double> xs(n_f_samples.begin(), n_f_samples.end());
  const SampleSummary s = summarize(xs);
  st.count = s.count;
  st.mean_emp = s.mean;
  st.var_emp = s.variance;

  for (const auto& [name, supp] : {std::pair<std::string_view, double>{"2K", 2.0 * K}, {"K", K}}) {
    st.candidates.push_back(
        {name, supp, sigma2 * supp / 2.0, 3.0 * sigma2 * sigma2 * supp / 4.0, sigma2 * supp / 6.0});
  }
  const auto best = std::min_element(st.candidates.begin(), st.candidates.end(), [&](const auto& a, const auto& b) {
    return std::abs(a.mean_paper - st.mean_emp) < std::abs(b.mean_paper - st.mean_emp);
  });
  st.convention = best->name;
  st.supp = best->supp;
  st.mean_paper = best->mean_paper;
  st.var_paper = best->var_paper;
  st.var_alternative = best->var_alternative;

  // Jarque-Bera on the raw counts; chi-square with 2 degrees of freedom.
  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (double x : xs) {
    const double d = x - s.mean;
    m2 += d * d;
    m3 += d * d * d;
    m4 += d * d * d * d;
  }
  const double n = static_cast<double>(xs.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  if (m2 > 0.0) {
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    st.jarque_bera = n / 6.0 * (skew * skew + (kurt - 3.0) * (kurt - 3.0) / 4.0);
    st.jarque_bera_p = std::exp(-st.jarque_bera / 2.0);
  }
  return st;
}

}  // namespace sinai
