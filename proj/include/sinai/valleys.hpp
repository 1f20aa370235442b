#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sinai/environment.hpp"

namespace sinai {

/// Depth threshold Gamma_t = log t + gamma * log log t.
struct GammaParams {
  double t = 0.0;
  double gamma = 0.0;

  /// Throws ConfigError unless (log log t)^2 >= 1 and gamma >= 0.
  static GammaParams make(double t, double gamma);

  double log_t() const;
  double log2_t() const;
  double threshold() const;
  /// (log t)^2, the spatial scale of Sinai's walk.
  double scale() const;
  /// floor((log log t)^2): half-width of each indeterminate set.
  Site indeterminate_radius() const;
};

/// A triplet {M_left, m, M_right}: two walls and a bottom.
struct Valley {
  Site M_left = 0;
  Site m = 0;
  Site M_right = 0;
  friend bool operator==(const Valley&, const Valley&) = default;
};

/// True when |a| < |b|, or |a| == |b| and a is the positive one.
constexpr bool closer_to_origin(Site a, Site b) noexcept {
  const Site aa = a < 0 ? -a : a;
  const Site bb = b < 0 ? -b : b;
  return aa < bb || (aa == bb && a > b);
}

/// The single comparison used for every "rise/drop reaches Gamma" test.
constexpr bool reaches(double high, double low, double gamma) noexcept {
  return high - low >= gamma;
}

double depth(const Potential& P, Site M_left, Site m, Site M_right);
bool is_valley(const Potential& P, Site M_left, Site m, Site M_right);
inline double depth(const Potential& P, const Valley& v) { return depth(P, v.M_left, v.m, v.M_right); }
inline bool is_valley(const Potential& P, const Valley& v) { return is_valley(P, v.M_left, v.m, v.M_right); }

/// Deepest internal descent of a valley. For a right refinement
/// M1 <= m1 lie in [m, M_right] and drop = S[M1] - S[m1]; for a left
/// refinement m1 <= M1 lie in [M_left, m] and drop = S[M1] - S[m1].
struct Refinement {
  Site m1 = 0;
  Site M1 = 0;
  double drop = 0.0;
};

Refinement refine_right(const Potential& P, const Valley& v);
Refinement refine_left(const Potential& P, const Valley& v);

enum class ExtremumKind { minimum, maximum };

struct Extremum {
  ExtremumKind kind = ExtremumKind::minimum;
  Site position = 0;
  double value = 0.0;
  friend bool operator==(const Extremum&, const Extremum&) = default;
};

/// Streaming alternating Gamma-range scan. Nodes are pushed in scan order;
/// ties keep the first node seen, which for outward scans from the origin is
/// the one closest to it.
class GammaScanner {
 public:
  enum class Mode { seek_min, seek_max, undecided };

  struct Commit {
    Extremum extremum;
    Site closing = 0;  // node at which the range first reached Gamma
  };

  GammaScanner(double gamma, Mode start);

  std::optional<Commit> push(Site position, double value);
  Mode mode() const noexcept { return mode_; }

 private:
  double gamma_;
  Mode mode_;
  bool started_ = false;
  Site min_pos_ = 0;
  double min_val_ = 0.0;
  Site max_pos_ = 0;
  double max_val_ = 0.0;
};

enum class Direction { right, left };

enum class MarkerKind {
  tau_plus,
  m_plus,
  sigma_plus,
  M_plus,
  tau_minus,
  m_minus,
  sigma_minus,
  M_minus,
  M_zero
};

std::string_view to_string(MarkerKind kind);

struct Marker {
  MarkerKind kind = MarkerKind::tau_plus;
  Site position = 0;
  double value = 0.0;
};

/// Markers in commit order: tau_0, m_0, sigma_0, M_1, tau_1, m_1, ...
struct ExtremaScan {
  Direction direction = Direction::right;
  std::vector<Marker> markers;

  /// Committed extrema only (m and M markers), in scan order.
  std::vector<Extremum> extrema() const;
};

/// Raised when a scan cannot close within the available window.
class ScanIncomplete : public std::runtime_error {
 public:
  ScanIncomplete(const std::string& what, Direction side, ExtremaScan partial)
      : std::runtime_error(what), side_(side), partial_(std::move(partial)) {}
  Direction side() const noexcept { return side_; }
  const ExtremaScan& partial() const noexcept { return partial_; }

 private:
  Direction side_;
  ExtremaScan partial_;
};

/// Scans from the origin to the window edge in the given direction, starting
/// in minimum-seeking mode. Throws ScanIncomplete unless at least m_0 and M_1
/// were committed.
ExtremaScan gamma_extrema_scan(const Potential& P, double Gamma, Direction direction);
inline ExtremaScan gamma_extrema_scan(const Potential& P, const GammaParams& params,
                                      Direction direction) {
  return gamma_extrema_scan(P, params.threshold(), direction);
}

/// How the two valleys adjacent to the origin were resolved.
struct CentralResolution {
  Site M0 = 0;
  Site m0_minus = 0;
  Site m0_plus = 0;
  Site M1_minus = 0;
  Site M1_plus = 0;
  double depth_left = 0.0;   // d([M_1^-, M_0])
  double depth_right = 0.0;  // d([M_0, M_1^+])
  bool case_At = false;      // both central depths >= Gamma: M_0 is kept
  Site merged_m = 0;         // bottom of {M_1^-, ., M_1^+}; only set when !case_At
};

/// Both origin scans plus the central resolution, before any truncation to
/// the support of f.
struct ResolvedExtrema {
  ExtremaScan right;
  ExtremaScan left;
  CentralResolution central;
  std::vector<Extremum> ordered;  // all resolved extrema, increasing position
};

ResolvedExtrema resolve_extrema(const Potential& P, double Gamma);

struct IntegerInterval {
  Site lo = 0;
  Site hi = 0;
  friend bool operator==(const IntegerInterval&, const IntegerInterval&) = default;
};

enum class FringeRule {
  none,      // n_f = 0
  included,  // last bottom inside, summit beyond K (log t)^2: fringe joins the valley
  excluded,  // summit inside K (log t)^2: (summit, K (log t)^2) is left out
};

std::string_view to_string(FringeRule rule);

struct ValleyDecomposition {
  GammaParams params;
  double K = 0.0;
  std::vector<Site> M;  // M_1 .. M_{n_f+1} (empty when n_f = 0)
  std::vector<Site> m;  // m_1 .. m_{n_f}
  int n_f = 0;
  int n_plus = 0;
  int n_minus = 0;
  bool case_At = false;
  std::vector<IntegerInterval> U;  // U_1 .. U_{n_f+1}
  CentralResolution central;
  FringeRule right_fringe = FringeRule::none;
  FringeRule left_fringe = FringeRule::none;
  std::vector<Extremum> extrema;  // resolved extrema the cover was cut from

  Valley valley(int i) const;  // 1-based: {M_i, m_i, M_{i+1}}
  /// V_f = [M_1, M_{n_f+1}]; nullopt when n_f = 0.
  std::optional<IntegerInterval> cover() const;
  Site cover_size() const;
};

/// Builds the cover of [-K (log t)^2, K (log t)^2] on a fixed potential,
/// taking the window to be the whole potential. Throws ScanIncomplete when a
/// bottom inside the bound has no wall beyond it in the window.
ValleyDecomposition construct_cover(const Potential& P, const GammaParams& params, double K);

struct AdaptiveWindow {
  double chunk_factor = 4.0;  // extension step, in units of (log t)^2
  double cap_factor = 512.0;  // hard cap per side, in units of (log t)^2
};

struct CoverResult {
  ValleyDecomposition decomposition;
  Environment environment;  // the window actually generated
  Potential potential;
};

/// Same as above, widening the environment on demand.
CoverResult construct_cover(const Environment& env, const GammaParams& params, double K,
                            const AdaptiveWindow& window = {});

std::vector<IntegerInterval> indeterminate_sets(const ValleyDecomposition& d);

/// Independent O(n^2) oracle: x is a Gamma-minimum on [lo, hi] iff there are
/// lo <= u < x < v <= hi with S[x] = min over [u, v], S[u] >= S[x] + Gamma and
/// S[v] >= S[x] + Gamma (maxima symmetric). Runs of equal same-kind
/// candidates collapse to the one closest to the origin.
std::vector<Extremum> brute_force_extrema(const Potential& P, Site lo, Site hi, double Gamma);

struct GoodEnvReport {
  bool finite = true;
  Site vf_size = 0;
  bool vf_ok = true;
  double min_spacing = 0.0;
  double max_spacing = 0.0;
  bool spacing_ok = true;
  bool no_subvalley = true;
  double worst_refinement = 0.0;
  bool ok = true;
};

GoodEnvReport check_good_environment(const Potential& P, const ValleyDecomposition& d, double c1,
                                     double c2_low, double c2_high);

}  // namespace sinai
