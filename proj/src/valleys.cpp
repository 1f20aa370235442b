#include "sinai/valleys.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "sinai/errors.hpp"

namespace sinai {

// ---------------------------------------------------------------- params

GammaParams GammaParams::make(double t, double gamma) {
  if (!std::isfinite(t) || t <= 1.0) throw ConfigError("t must be a finite time > 1");
  const double ll = std::log(std::log(t));
  if (!(ll * ll >= 1.0)) {
    throw ConfigError("t too small: (log log t)^2 must be at least 1 (t >= e^e)");
  }
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw ConfigError("gamma must be >= 0");
  return GammaParams{t, gamma};
}

double GammaParams::log_t() const { return std::log(t); }
double GammaParams::log2_t() const { return std::log(std::log(t)); }
double GammaParams::threshold() const { return log_t() + gamma * log2_t(); }
double GammaParams::scale() const { return log_t() * log_t(); }
Site GammaParams::indeterminate_radius() const {
  const double l2 = log2_t();
  return static_cast<Site>(std::floor(l2 * l2));
}

// ---------------------------------------------------------------- valleys

namespace {

void require_ordered(const Potential& P, Site a, Site b, Site c) {
  if (!(a <= b && b <= c)) throw ContractError("valley indices must satisfy M_left <= m <= M_right");
  if (!P.contains(a) || !P.contains(c)) {
    throw RangeError("valley [" + std::to_string(a) + ", " + std::to_string(c) +
                     "] outside potential window");
  }
}

}  // namespace

double depth(const Potential& P, Site M_left, Site m, Site M_right) {
  require_ordered(P, M_left, m, M_right);
  return std::min(P[M_left] - P[m], P[M_right] - P[m]);
}

bool is_valley(const Potential& P, Site M_left, Site m, Site M_right) {
  require_ordered(P, M_left, m, M_right);
  for (Site k = M_left; k <= M_right; ++k) {
    if (P[k] < P[m]) return false;
    if (k <= m && P[k] > P[M_left]) return false;
    if (k >= m && P[k] > P[M_right]) return false;
  }
  return true;
}

Refinement refine_right(const Potential& P, const Valley& v) {
  if (!is_valley(P, v)) throw ContractError("refine_right: not a valley");
  Refinement best{v.m, v.m, 0.0};
  Site top = v.m;  // argmax of S over [v.m, k]
  for (Site k = v.m; k <= v.M_right; ++k) {
    if (P[k] > P[top] || (P[k] == P[top] && closer_to_origin(k, top))) top = k;
    const double drop = P[top] - P[k];
    if (drop > best.drop || (drop == best.drop && closer_to_origin(k, best.m1))) {
      best = Refinement{k, top, drop};
    }
  }
  return best;
}

Refinement refine_left(const Potential& P, const Valley& v) {
  if (!is_valley(P, v)) throw ContractError("refine_left: not a valley");
  Refinement best{v.m, v.m, 0.0};
  Site top = v.m;  // argmax of S over [k, v.m]
  for (Site k = v.m; k >= v.M_left; --k) {
    if (P[k] > P[top] || (P[k] == P[top] && closer_to_origin(k, top))) top = k;
    const double drop = P[top] - P[k];
    if (drop > best.drop || (drop == best.drop && closer_to_origin(k, best.m1))) {
      best = Refinement{k, top, drop};
    }
  }
  return best;
}

// ---------------------------------------------------------------- scanner

GammaScanner::GammaScanner(double gamma, Mode start) : gamma_(gamma), mode_(start) {
  if (!(gamma > 0.0)) throw ConfigError("Gamma must be positive");
}

std::optional<GammaScanner::Commit> GammaScanner::push(Site position, double value) {
  if (!started_) {
    started_ = true;
    min_pos_ = max_pos_ = position;
    min_val_ = max_val_ = value;
    return std::nullopt;
  }
  auto commit_min = [&] {
    Commit c{Extremum{ExtremumKind::minimum, min_pos_, min_val_}, position};
    mode_ = Mode::seek_max;
    max_pos_ = position;
    max_val_ = value;
    return c;
  };
  auto commit_max = [&] {
    Commit c{Extremum{ExtremumKind::maximum, max_pos_, max_val_}, position};
    mode_ = Mode::seek_min;
    min_pos_ = position;
    min_val_ = value;
    return c;
  };

  switch (mode_) {
    case Mode::seek_min:
      if (value < min_val_) {
        min_pos_ = position;
        min_val_ = value;
      } else if (reaches(value, min_val_, gamma_)) {
        return commit_min();
      }
      return std::nullopt;
    case Mode::seek_max:
      if (value > max_val_) {
        max_pos_ = position;
        max_val_ = value;
      } else if (reaches(max_val_, value, gamma_)) {
        return commit_max();
      }
      return std::nullopt;
    case Mode::undecided:
      if (value < min_val_) {
        min_pos_ = position;
        min_val_ = value;
      }
      if (value > max_val_) {
        max_pos_ = position;
        max_val_ = value;
      }
      if (reaches(value, min_val_, gamma_)) return commit_min();
      if (reaches(max_val_, value, gamma_)) return commit_max();
      return std::nullopt;
  }
  return std::nullopt;
}

std::string_view to_string(MarkerKind kind) {
  switch (kind) {
    case MarkerKind::tau_plus: return "tau_plus";
    case MarkerKind::m_plus: return "m_plus";
    case MarkerKind::sigma_plus: return "sigma_plus";
    case MarkerKind::M_plus: return "M_plus";
    case MarkerKind::tau_minus: return "tau_minus";
    case MarkerKind::m_minus: return "m_minus";
    case MarkerKind::sigma_minus: return "sigma_minus";
    case MarkerKind::M_minus: return "M_minus";
    case MarkerKind::M_zero: return "M_zero";
  }
  return "unknown";
}

std::vector<Extremum> ExtremaScan::extrema() const {
  std::vector<Extremum> out;
  for (const auto& mk : markers) {
    switch (mk.kind) {
      case MarkerKind::m_plus:
      case MarkerKind::m_minus:
        out.push_back({ExtremumKind::minimum, mk.position, mk.value});
        break;
      case MarkerKind::M_plus:
      case MarkerKind::M_minus:
      case MarkerKind::M_zero:
        out.push_back({ExtremumKind::maximum, mk.position, mk.value});
        break;
      default:
        break;
    }
  }
  return out;
}

ExtremaScan gamma_extrema_scan(const Potential& P, double Gamma, Direction direction) {
  if (!P.contains(0)) throw RangeError("potential window must contain the origin");
  ExtremaScan scan;
  scan.direction = direction;
  const bool right = direction == Direction::right;
  const Site step = right ? 1 : -1;
  const Site end = right ? P.hi() : P.lo();

  GammaScanner scanner(Gamma, GammaScanner::Mode::seek_min);
  int commits = 0;
  for (Site k = 0;; k += step) {
    if (auto c = scanner.push(k, P[k])) {
      const bool is_min = c->extremum.kind == ExtremumKind::minimum;
      const MarkerKind closing = is_min ? (right ? MarkerKind::tau_plus : MarkerKind::tau_minus)
                                        : (right ? MarkerKind::sigma_plus : MarkerKind::sigma_minus);
      const MarkerKind at = is_min ? (right ? MarkerKind::m_plus : MarkerKind::m_minus)
                                   : (right ? MarkerKind::M_plus : MarkerKind::M_minus);
      scan.markers.push_back({closing, c->closing, P[c->closing]});
      scan.markers.push_back({at, c->extremum.position, c->extremum.value});
      ++commits;
    }
    if (k == end) break;
  }
  if (commits < 2) {
    throw ScanIncomplete(std::string("Gamma-extrema scan to the ") + (right ? "right" : "left") +
                             " did not close within the window (" + std::to_string(commits) +
                             " extrema committed)",
                         direction, std::move(scan));
  }
  return scan;
}

// ---------------------------------------------------------------- cover

namespace {

Site argmax_closest(const Potential& P, Site a, Site b) {
  Site best = a;
  for (Site k = a; k <= b; ++k) {
    if (P[k] > P[best] || (P[k] == P[best] && closer_to_origin(k, best))) best = k;
  }
  return best;
}

Site argmin_closest(const Potential& P, Site a, Site b) {
  Site best = a;
  for (Site k = a; k <= b; ++k) {
    if (P[k] < P[best] || (P[k] == P[best] && closer_to_origin(k, best))) best = k;
  }
  return best;
}

}  // namespace

ResolvedExtrema resolve_extrema(const Potential& P, double Gamma) {
  ResolvedExtrema r;
  r.right = gamma_extrema_scan(P, Gamma, Direction::right);
  r.left = gamma_extrema_scan(P, Gamma, Direction::left);
  const auto re = r.right.extrema();
  const auto le = r.left.extrema();

  auto& c = r.central;
  c.m0_plus = re[0].position;
  c.M1_plus = re[1].position;
  c.m0_minus = le[0].position;
  c.M1_minus = le[1].position;
  c.M0 = argmax_closest(P, c.m0_minus, c.m0_plus);
  c.depth_left = depth(P, c.M1_minus, c.m0_minus, c.M0);
  c.depth_right = depth(P, c.M0, c.m0_plus, c.M1_plus);
  c.case_At = reaches(P[c.M1_minus], P[c.m0_minus], Gamma) && reaches(P[c.M0], P[c.m0_minus], Gamma) &&
              reaches(P[c.M0], P[c.m0_plus], Gamma) && reaches(P[c.M1_plus], P[c.m0_plus], Gamma);
  if (!c.case_At) c.merged_m = argmin_closest(P, c.M1_minus, c.M1_plus);

  for (std::size_t i = le.size(); i-- > 1;) r.ordered.push_back(le[i]);
  if (c.case_At) {
    r.ordered.push_back(le[0]);
    r.ordered.push_back({ExtremumKind::maximum, c.M0, P[c.M0]});
    r.ordered.push_back(re[0]);
  } else {
    r.ordered.push_back({ExtremumKind::minimum, c.merged_m, P[c.merged_m]});
  }
  for (std::size_t i = 1; i < re.size(); ++i) r.ordered.push_back(re[i]);
  return r;
}

std::string_view to_string(FringeRule rule) {
  switch (rule) {
    case FringeRule::none: return "none";
    case FringeRule::included: return "included";
    case FringeRule::excluded: return "excluded";
  }
  return "unknown";
}

Valley ValleyDecomposition::valley(int i) const {
  if (i < 1 || i > n_f) throw RangeError("valley index out of range");
  const auto k = static_cast<std::size_t>(i - 1);
  return Valley{M[k], m[k], M[k + 1]};
}

std::optional<IntegerInterval> ValleyDecomposition::cover() const {
  if (n_f == 0) return std::nullopt;
  return IntegerInterval{M.front(), M.back()};
}

Site ValleyDecomposition::cover_size() const {
  const auto c = cover();
  return c ? c->hi - c->lo : 0;
}

std::vector<IntegerInterval> indeterminate_sets(const ValleyDecomposition& d) {
  const Site r = d.params.indeterminate_radius();
  std::vector<IntegerInterval> out;
  out.reserve(d.M.size());
  for (Site M : d.M) out.push_back({M - r, M + r});
  return out;
}

namespace {

bool is_maximum_marker(MarkerKind k) { return k == MarkerKind::M_plus || k == MarkerKind::M_minus; }

// With `settled` the window must also rule out further bottoms inside the
// bound; otherwise the window is taken to be the whole potential.
ValleyDecomposition cover_on_window(const Potential& P, const GammaParams& params, double K, bool settled) {
  if (!(K > 0.0) || !std::isfinite(K)) throw ConfigError("K must be positive");
  const double Gamma = params.threshold();
  const double bound = K * params.scale();
  auto r = resolve_extrema(P, Gamma);
  const auto re = r.right.extrema();
  const auto le = r.left.extrema();

  std::vector<Site> right_min, left_min;
  for (const auto& e : re) {
    if (e.kind == ExtremumKind::minimum) right_min.push_back(e.position);
  }
  for (const auto& e : le) {
    if (e.kind == ExtremumKind::minimum) left_min.push_back(e.position);
  }
  auto inside_right = [&](Site x) { return static_cast<double>(x) < bound; };
  auto inside_left = [&](Site x) { return static_cast<double>(x) > -bound; };
  // A bottom inside the bound needs the wall after it, and in settled mode
  // the last committed wall must close beyond the bound.
  auto check_side = [&](const ExtremaScan& scan, const std::vector<Site>& mins, auto inside, Direction dir,
                        const char* what) {
    if (!inside(mins.back())) return;
    const auto& mk = scan.markers;
    const bool ends_on_wall = is_maximum_marker(mk.back().kind);
    if (!ends_on_wall || (settled && inside(mk[mk.size() - 2].position))) {
      throw ScanIncomplete(what, dir, scan);
    }
  };
  check_side(r.right, right_min, inside_right, Direction::right, "right scan ended before leaving K (log t)^2");
  check_side(r.left, left_min, inside_left, Direction::left, "left scan ended before leaving -K (log t)^2");

  ValleyDecomposition d;
  d.params = params;
  d.K = K;
  d.case_At = r.central.case_At;
  d.central = r.central;
  d.extrema = r.ordered;
  d.n_plus = static_cast<int>(std::count_if(right_min.begin(), right_min.end(), inside_right));
  d.n_minus = static_cast<int>(std::count_if(left_min.begin(), left_min.end(), inside_left));

  // Selected bottoms, per the renumbering: in case A^c the two central
  // minima collapse into one, and that one counts only when both were inside.
  std::vector<Site> chosen;
  const int first = d.case_At ? 0 : 1;
  for (int j = d.n_minus - 1; j >= first; --j) chosen.push_back(left_min[static_cast<std::size_t>(j)]);
  if (!d.case_At && d.n_plus >= 1 && d.n_minus >= 1) chosen.push_back(r.central.merged_m);
  for (int j = first; j < d.n_plus; ++j) chosen.push_back(right_min[static_cast<std::size_t>(j)]);

  d.n_f = static_cast<int>(chosen.size());
  const int expected = std::max(0, d.n_plus + d.n_minus - (d.case_At ? 0 : 1));
  if (d.n_f != expected) throw ContractError("valley count disagrees with n(f) formula");

  if (d.n_f > 0) {
    const auto& ord = r.ordered;
    auto it = std::find_if(ord.begin(), ord.end(), [&](const Extremum& e) {
      return e.kind == ExtremumKind::minimum && e.position == chosen.front();
    });
    if (it == ord.end() || it == ord.begin()) throw ContractError("cover bottom missing from extrema");
    auto idx = static_cast<std::size_t>(it - ord.begin());
    d.M.push_back(ord[idx - 1].position);
    for (Site bottom : chosen) {
      if (idx + 1 >= ord.size() || ord[idx].position != bottom) {
        throw ContractError("cover bottoms are not contiguous in the extrema sequence");
      }
      d.m.push_back(bottom);
      d.M.push_back(ord[idx + 1].position);
      idx += 2;
    }
    d.right_fringe = static_cast<double>(d.M.back()) > bound ? FringeRule::included : FringeRule::excluded;
    d.left_fringe = static_cast<double>(d.M.front()) < -bound ? FringeRule::included : FringeRule::excluded;
  }
  d.U = indeterminate_sets(d);
  return d;
}

}  // namespace

ValleyDecomposition construct_cover(const Potential& P, const GammaParams& params, double K) {
  return cover_on_window(P, params, K, false);
}

CoverResult construct_cover(const Environment& env, const GammaParams& params, double K,
                            const AdaptiveWindow& window) {
  if (!(K > 0.0) || !std::isfinite(K)) throw ConfigError("K must be positive");
  if (!env.regenerable()) {
    auto P = compute_potential(env);
    auto d = construct_cover(P, params, K);
    return CoverResult{std::move(d), env, std::move(P)};
  }
  const double L2 = params.scale();
  const Site chunk = std::max<Site>(1, static_cast<Site>(std::ceil(window.chunk_factor * L2)));
  const Site cap = std::max<Site>(chunk, static_cast<Site>(std::ceil(window.cap_factor * L2)));
  const Site start = static_cast<Site>(std::ceil(K * L2)) + chunk;
  Site left = std::max(-env.lo(), std::min(start, cap));
  Site right = std::max(env.hi(), std::min(start, cap));

  for (;;) {
    Environment grown = extend_environment(env, -left, right);
    Potential P = compute_potential(grown);
    try {
      auto d = cover_on_window(P, params, K, true);
      return CoverResult{std::move(d), std::move(grown), std::move(P)};
    } catch (const ScanIncomplete& e) {
      Site& side = e.side() == Direction::right ? right : left;
      if (side >= cap) {
        throw ScanIncomplete(std::string(e.what()) + "; hard cap of " + std::to_string(cap) +
                                 " sites per side reached",
                             e.side(), e.partial());
      }
      side = std::min(side + chunk, cap);
    }
  }
}

// ---------------------------------------------------------------- oracle

std::vector<Extremum> brute_force_extrema(const Potential& P, Site lo, Site hi, double Gamma) {
  if (!P.contains(lo) || !P.contains(hi)) throw RangeError("oracle interval outside potential window");
  if (!(Gamma > 0.0)) throw ConfigError("Gamma must be positive");

  auto is_min = [&](Site x) {
    bool left = false, right = false;
    for (Site j = x - 1; j >= lo; --j) {
      if (P[j] < P[x]) break;
      if (reaches(P[j], P[x], Gamma)) {
        left = true;
        break;
      }
    }
    if (!left) return false;
    for (Site j = x + 1; j <= hi; ++j) {
      if (P[j] < P[x]) break;
      if (reaches(P[j], P[x], Gamma)) {
        right = true;
        break;
      }
    }
    return right;
  };
  auto is_max = [&](Site x) {
    bool left = false, right = false;
    for (Site j = x - 1; j >= lo; --j) {
      if (P[j] > P[x]) break;
      if (reaches(P[x], P[j], Gamma)) {
        left = true;
        break;
      }
    }
    if (!left) return false;
    for (Site j = x + 1; j <= hi; ++j) {
      if (P[j] > P[x]) break;
      if (reaches(P[x], P[j], Gamma)) {
        right = true;
        break;
      }
    }
    return right;
  };

  std::vector<Extremum> out;
  for (Site x = lo + 1; x < hi; ++x) {
    std::optional<ExtremumKind> kind;
    if (is_min(x)) {
      kind = ExtremumKind::minimum;
    } else if (is_max(x)) {
      kind = ExtremumKind::maximum;
    }
    if (!kind) continue;
    if (!out.empty() && out.back().kind == *kind) {
      // Same-kind neighbours are tied heights: keep the one closest to 0.
      if (closer_to_origin(x, out.back().position)) out.back() = Extremum{*kind, x, P[x]};
      continue;
    }
    out.push_back(Extremum{*kind, x, P[x]});
  }
  return out;
}

// ---------------------------------------------------------------- good env

GoodEnvReport check_good_environment(const Potential& P, const ValleyDecomposition& d, double c1,
                                     double c2_low, double c2_high) {
  GoodEnvReport r;
  const double L2 = d.params.scale();
  const double Gamma = d.params.threshold();
  r.finite = d.n_f >= 0;
  r.vf_size = d.cover_size();
  r.vf_ok = static_cast<double>(r.vf_size) <= c1 * L2;
  if (d.n_f > 0) {
    r.min_spacing = std::numeric_limits<double>::infinity();
    r.max_spacing = 0.0;
  }
  for (int i = 1; i <= d.n_f; ++i) {
    const Valley v = d.valley(i);
    const double width = static_cast<double>(v.M_right - v.M_left);
    r.min_spacing = std::min(r.min_spacing, width / L2);
    r.max_spacing = std::max(r.max_spacing, width / L2);
    if (width < c2_low * L2 || width > c2_high * L2) r.spacing_ok = false;
    if (!is_valley(P, v)) {
      r.no_subvalley = false;
      continue;
    }
    for (const auto& ref : {refine_right(P, v), refine_left(P, v)}) {
      r.worst_refinement = std::max(r.worst_refinement, ref.drop);
      if (reaches(P[ref.M1], P[ref.m1], Gamma)) r.no_subvalley = false;
    }
  }
  r.ok = r.finite && r.vf_ok && r.spacing_ok && r.no_subvalley;
  return r;
}

}  // namespace sinai
