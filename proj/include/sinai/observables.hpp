#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "sinai/environment.hpp"
#include "sinai/kernels.hpp"
#include "sinai/particles.hpp"
#include "sinai/valleys.hpp"

namespace sinai {

enum class FunctionKind { triangle_bump, smooth_bump, zero };

std::string_view to_string(FunctionKind kind);
FunctionKind function_kind_from_string(std::string_view name);

/// Test function f with support [-K, K] in rescaled units x / (log t)^2.
struct FunctionSpec {
  FunctionKind kind = FunctionKind::triangle_bump;
  double K = 1.0;
  double amplitude = 1.0;

  static FunctionSpec make(FunctionKind kind, double K, double amplitude = 1.0);
  double operator()(double u) const noexcept;
};

/// (1 / (log t)^2) * sum_x eta(x, t) f(x / (log t)^2).
double empirical_functional(const ParticleField& field, const FunctionSpec& f, double t);
/// The same sum with expected counts.
double empirical_functional(const MeanField& field, const FunctionSpec& f, double t);

/// lambda * sum_i |M_{i+1} - M_i| f(m_i / (log t)^2) / (log t)^2.
double predicted_functional(const ValleyDecomposition& d, const FunctionSpec& f, double lambda,
                            double t);

/// cte * (log t)^{3/2}.
double localization_radius(double t, double cte);

/// Mass of the law within localization_radius(t, cte) of m.
double localization_mass(const LawVector& law, Site m, double t, double cte);

// ---------------------------------------------------------------- localization

struct ValleyLocalization {
  int valley_index = 0;  // 1-based
  Site m = 0;
  double bottom_mass = 0.0;           // forward law from m
  std::vector<Site> starts;           // sampled non-indeterminate starts
  std::vector<double> start_mass;     // P_x[X_t in I] for each start
};

struct LocalizationReport {
  double t = 0.0;
  double cte = 0.0;
  double radius = 0.0;
  Site window_lo = 0;
  Site window_hi = 0;
  std::vector<ValleyLocalization> valleys;
};

/// Start sites for valley i: up to n uniform draws from [M_i, M_{i+1}] minus
/// every indeterminate set, without replacement. Fewer when the band is small.
std::vector<Site> sample_valley_starts(const ValleyDecomposition& d, int i, int n,
                                       std::uint64_t seed, std::uint64_t substream);

/// Localization of every valley of d on the simulation window [lo, hi].
LocalizationReport localize(const Environment& env, const ValleyDecomposition& d, double t,
                            double cte, int starts_per_valley, std::uint64_t seed, Site lo,
                            Site hi, kernels::Isa isa = kernels::active());

// ---------------------------------------------------------------- migration

/// Origin labels: 1..n_f for valley i minus indeterminate sets, 0 for the
/// indeterminate sets, -1 for everything else.
inline constexpr int tag_indeterminate = 0;
inline constexpr int tag_outside = -1;

int origin_tag(const ValleyDecomposition& d, Site x);
std::vector<int> origin_tags(const ValleyDecomposition& d, Site lo, Site hi);

struct MigrationReport {
  int n_f = 0;
  std::vector<double> origin_mass;                 // per valley, at time 0
  std::vector<std::vector<double>> cross_valley;  // [i][j]: origin i found in valley j
  std::vector<double> stayed;       // origin i found in the closed valley [M_i, M_{i+1}]
  std::vector<double> elsewhere;    // origin i found anywhere else, including leaks
  double influx_from_outside = 0.0; // outside-origin mass found in V_f
  double indeterminate_mass = 0.0;  // indeterminate-origin mass found in V_f
  double cross_fraction = 0.0;      // sum_i elsewhere_i / sum_i origin_i
};

/// Tagged fields carry origin_label; each field must also carry its
/// initial mass through conserved_mass(). Valley j for destinations is the
/// set [M_j, M_{j+1}] minus indeterminate sets.
MigrationReport migration_report(const std::vector<ParticleField>& tagged_fields,
                                 const ValleyDecomposition& d);

/// Splits an initial field by origin tag, one field per label present.
std::vector<ParticleField> split_by_origin(const ParticleField& field, const ValleyDecomposition& d);

// ---------------------------------------------------------------- renewal

struct RenewalSample {
  std::vector<double> gaps;           // consecutive minima, rescaled by sigma^2 / Gamma^2
  std::vector<double> half_gaps;      // consecutive extrema of opposite kind, same scaling
  std::vector<std::size_t> env_offsets;  // gaps[env_offsets[e] .. env_offsets[e+1]) per env
  std::vector<int> n_f_samples;
  double sigma2 = 0.0;
  double Gamma = 0.0;
  double supp_rescaled = 0.0;  // |supp f| = 2K, in units of (log t)^2
  int envs_used = 0;
  int envs_skipped = 0;
};

/// Streams each environment to the right of the origin until target_extrema
/// Gamma-extrema are confirmed after the first one, which is discarded.
/// Environments exceeding max_sites are skipped and counted.
RenewalSample renewal_gap_sample(const EnvDistribution& dist, double Gamma, int n_envs,
                                 int target_extrema, std::uint64_t seed,
                                 std::int64_t max_sites = 50'000'000, int workers = 1);

/// 1 / cosh(sqrt(2 lambda))^power.
double laplace_cosh(double lambda, int power);

struct LaplaceRow {
  double lambda = 0.0;
  double empirical = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double paper_value = 0.0;      // 1 / cosh^2
  double alternative_value = 0.0;  // 1 / cosh
};

std::vector<LaplaceRow> empirical_laplace(const std::vector<double>& sample,
                                          const std::vector<double>& lambdas, std::uint64_t seed,
                                          int bootstrap = 200);
inline std::vector<LaplaceRow> empirical_laplace(const RenewalSample& sample,
                                                 const std::vector<double>& lambdas,
                                                 std::uint64_t seed, int bootstrap = 200) {
  return empirical_laplace(sample.gaps, lambdas, seed, bootstrap);
}

struct SampleSummary {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double std_error = 0.0;
  double min = 0.0;
  double max = 0.0;
};

SampleSummary summarize(const std::vector<double>& xs);

/// Lag-1 autocorrelation pooled over environments (pairs never cross an
/// environment boundary).
double lag1_autocorrelation(const RenewalSample& sample);

struct NfConvention {
  std::string_view name;  // "2K" or "K"
  double supp = 0.0;
  double mean_paper = 0.0;     // sigma^2 supp / 2
  double var_paper = 0.0;      // 3 sigma^4 supp / 4
  double var_alternative = 0.0;  // sigma^2 supp / 6
};

struct NfStatistics {
  std::size_t count = 0;
  double mean_emp = 0.0;
  double var_emp = 0.0;
  double mean_paper = 0.0;
  double var_paper = 0.0;
  double var_alternative = 0.0;
  double supp = 0.0;
  std::string_view convention;
  std::vector<NfConvention> candidates;
  double jarque_bera = 0.0;
  double jarque_bera_p = 0.0;
};

/// Empirical mean and variance of n(f) against the paper's formulas. The
/// supp convention (2K or K, in units of (log t)^2) whose mean is closest to
/// the empirical one is reported as identified.
NfStatistics nf_statistics(const std::vector<int>& n_f_samples, double sigma2, double K);
inline NfStatistics nf_statistics(const RenewalSample& sample) {
  return nf_statistics(sample.n_f_samples, sample.sigma2, sample.supp_rescaled / 2.0);
}

}  // namespace sinai
