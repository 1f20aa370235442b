#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "sinai/acceptance.hpp"
#include "sinai/environment.hpp"
#include "sinai/errors.hpp"
#include "sinai/valleys.hpp"

using namespace sinai;

namespace {

const double e3 = std::exp(3.0);

Potential flat(Site lo, Site hi) { return Potential::from_values(lo, std::vector<double>(static_cast<std::size_t>(hi - lo + 1), 0.0)); }

Potential reflected(const Potential& P) {
  std::vector<double> v(P.values().rbegin(), P.values().rend());
  return Potential::from_values(-P.hi(), std::move(v));
}

Potential shifted(const Potential& P, double c) {
  std::vector<double> v(P.values().begin(), P.values().end());
  for (double& x : v) x += c;
  return Potential::from_values(P.lo(), std::move(v));
}

}  // namespace

TEST_CASE("Gamma threshold") {
  const auto p = GammaParams::make(1e6, 0.0);
  CHECK(p.threshold() == doctest::Approx(std::log(1e6)));
  CHECK(p.scale() == doctest::Approx(std::log(1e6) * std::log(1e6)));
  CHECK(GammaParams::make(1e6, 2.0).threshold() == doctest::Approx(std::log(1e6) + 2.0 * std::log(std::log(1e6))));
  CHECK_THROWS_AS(GammaParams::make(10.0, 0.0), ConfigError);
  CHECK_THROWS_AS(GammaParams::make(1e6, -1.0), ConfigError);
}

TEST_CASE("indeterminate radius at t = 1e6") {
  const auto p = GammaParams::make(1e6, 0.0);
  CHECK(p.indeterminate_radius() == 6);
  ValleyDecomposition d;
  d.params = p;
  d.M = {-100, 40};
  const auto U = indeterminate_sets(d);
  REQUIRE(U.size() == 2);
  CHECK(U[0] == IntegerInterval{-106, -94});
  CHECK(U[1] == IntegerInterval{34, 46});
}

TEST_CASE("depth and is_valley on W") {
  const auto W = worked_potential();
  CHECK(depth(W, -3, 3, 8) == 5.0);
  CHECK(depth(W, 2, 2, 2) == 0.0);
  CHECK(depth(flat(-3, 3), -2, 0, 3) == 0.0);
  CHECK(is_valley(W, -3, 3, 8));
  CHECK_FALSE(is_valley(W, -3, 0, 8));
  CHECK(is_valley(flat(-3, 3), -3, 1, 2));
  CHECK_THROWS_AS(depth(W, -6, 3, 8), RangeError);
  CHECK_THROWS_AS(depth(W, 3, -3, 8), ContractError);
}

TEST_CASE("refinements") {
  const auto W = worked_potential();
  const auto r = refine_right(W, {-3, 3, 8});
  CHECK(r.M1 == 6);
  CHECK(r.m1 == 7);
  CHECK(r.drop == 1.0);
  CHECK(refine_right(flat(-3, 3), {-3, 0, 3}).drop == 0.0);
  CHECK_THROWS_AS(refine_right(W, {-3, 0, 8}), ContractError);

  const auto inc = Potential::from_values(0, {0, 1, 2, 3, 4});
  const auto ri = refine_right(inc, {0, 0, 4});
  CHECK(ri.drop == 0.0);
  CHECK(ri.M1 == ri.m1);

  // Left refinement mirrors the right one.
  const auto R = reflected(W);
  const auto rl = refine_left(R, {-8, -3, 3});
  CHECK(rl.M1 == -6);
  CHECK(rl.m1 == -7);
  CHECK(rl.drop == 1.0);
}

TEST_CASE("right scan on W") {
  const auto scan = gamma_extrema_scan(worked_potential(), 3.0, Direction::right);
  REQUIRE(scan.markers.size() == 4);
  CHECK(scan.markers[0].kind == MarkerKind::tau_plus);
  // The rise from S[3] = -2 first reaches 3 at S[5] = 1.
  CHECK(scan.markers[0].position == 5);
  CHECK(scan.markers[1].kind == MarkerKind::m_plus);
  CHECK(scan.markers[1].position == 3);
  CHECK(scan.markers[1].value == -2.0);
  CHECK(scan.markers[2].kind == MarkerKind::sigma_plus);
  CHECK(scan.markers[2].position == 9);
  CHECK(scan.markers[3].kind == MarkerKind::M_plus);
  CHECK(scan.markers[3].position == 8);
  CHECK(scan.markers[3].value == 4.0);
}

TEST_CASE("left scan on W") {
  const auto scan = gamma_extrema_scan(worked_potential(), 3.0, Direction::left);
  REQUIRE(scan.markers.size() == 4);
  CHECK(scan.markers[0].position == -3);
  CHECK(scan.markers[1].kind == MarkerKind::m_minus);
  CHECK(scan.markers[1].position == 0);
  CHECK(scan.markers[2].kind == MarkerKind::sigma_minus);
  CHECK(scan.markers[2].position == -5);
  CHECK(scan.markers[3].kind == MarkerKind::M_minus);
  CHECK(scan.markers[3].position == -3);
}

TEST_CASE("monotone potential never closes a maximum") {
  std::vector<double> v;
  for (int k = -3; k <= 50; ++k) v.push_back(k);
  const auto P = Potential::from_values(-3, v);
  try {
    gamma_extrema_scan(P, 3.0, Direction::right);
    FAIL("expected ScanIncomplete");
  } catch (const ScanIncomplete& e) {
    CHECK(e.side() == Direction::right);
    const auto& mk = e.partial().markers;
    REQUIRE(mk.size() == 2);
    CHECK(mk[0].position == 3);
    CHECK(mk[1].position == 0);
  }
}

TEST_CASE("scanner ties keep the first node") {
  GammaScanner s(2.0, GammaScanner::Mode::seek_min);
  CHECK_FALSE(s.push(0, 0.0));
  CHECK_FALSE(s.push(1, -1.0));
  CHECK_FALSE(s.push(2, -1.0));
  const auto c = s.push(3, 1.0);
  REQUIRE(c);
  CHECK(c->extremum.position == 1);
  CHECK(c->closing == 3);
  CHECK(s.mode() == GammaScanner::Mode::seek_max);
  CHECK_THROWS_AS(GammaScanner(0.0, GammaScanner::Mode::undecided), ConfigError);
}

TEST_CASE("cover of W") {
  const auto d = construct_cover(worked_potential(), GammaParams::make(e3, 0.0), 1.0);
  CHECK(d.M == std::vector<Site>{-3, 8});
  CHECK(d.m == std::vector<Site>{3});
  CHECK(d.n_f == 1);
  CHECK_FALSE(d.case_At);
  CHECK(d.central.M0 == 1);
  CHECK(d.central.depth_left == 1.0);
  CHECK(d.central.depth_right == 3.0);
  CHECK(d.central.merged_m == 3);
  CHECK(d.valley(1) == Valley{-3, 3, 8});
  REQUIRE(d.cover());
  CHECK(*d.cover() == IntegerInterval{-3, 8});
  CHECK(d.cover_size() == 11);
  CHECK_THROWS_AS(d.valley(2), RangeError);
}

TEST_CASE("cover with a bound below every bottom") {
  const auto d = construct_cover(worked_potential(), GammaParams::make(e3, 0.0), 0.3);
  CHECK(d.n_f == 0);
  CHECK(d.M.empty());
  CHECK_FALSE(d.cover());
}

TEST_CASE("cover rejects flat potentials and bad K") {
  const auto params = GammaParams::make(e3, 0.0);
  CHECK_THROWS_AS(construct_cover(flat(-20, 20), params, 1.0), ScanIncomplete);
  CHECK_THROWS_AS(construct_cover(worked_potential(), params, 0.0), ConfigError);
  CHECK_THROWS_AS(construct_cover(worked_potential(), params, -1.0), ConfigError);
}

TEST_CASE("brute-force oracle on W") {
  const auto W = worked_potential();
  const auto ex = brute_force_extrema(W, -5, 9, 3.0);
  REQUIRE(ex.size() == 3);
  CHECK(ex[0] == Extremum{ExtremumKind::maximum, -3, 3.0});
  CHECK(ex[1] == Extremum{ExtremumKind::minimum, 3, -2.0});
  CHECK(ex[2] == Extremum{ExtremumKind::maximum, 8, 4.0});
  CHECK(brute_force_extrema(W, -5, 9, 100.0).empty());
  CHECK(brute_force_extrema(flat(-5, 5), -5, 5, 0.5).empty());
  CHECK_THROWS_AS(brute_force_extrema(W, -6, 9, 3.0), RangeError);
}

TEST_CASE("resolved extrema of W agree with the oracle") {
  const auto W = worked_potential();
  const auto r = resolve_extrema(W, 3.0);
  CHECK(r.ordered == brute_force_extrema(W, -5, 9, 3.0));
}

TEST_CASE("scan and oracle agree on sampled environments") {
  for (auto kind : {EnvKind::two_point_symmetric, EnvKind::uniform_symmetric}) {
    const auto dist = EnvDistribution::make(kind, 0.25);
    int compared = 0;
    for (std::uint64_t seed = 1; seed <= 200; ++seed) {
      const auto P = compute_potential(sample_environment(dist, -300, 300, seed));
      ResolvedExtrema r;
      try {
        r = resolve_extrema(P, 4.0);
      } catch (const ScanIncomplete&) {
        continue;
      }
      // Oracle extrema between the outermost committed ones.
      const Site lo = r.ordered.front().position;
      const Site hi = r.ordered.back().position;
      std::vector<Extremum> expect;
      for (const auto& e : brute_force_extrema(P, P.lo(), P.hi(), 4.0))
        if (e.position >= lo && e.position <= hi) expect.push_back(e);
      CHECK(r.ordered == expect);
      ++compared;
    }
    CHECK(compared > 150);
  }
}

TEST_CASE("extrema are alternating and Gamma-separated") {
  const auto dist = EnvDistribution::make(EnvKind::uniform_symmetric, 0.3);
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const auto P = compute_potential(sample_environment(dist, -2000, 2000, seed));
    const auto r = resolve_extrema(P, 6.0);
    for (std::size_t i = 1; i < r.ordered.size(); ++i) {
      const auto& a = r.ordered[i - 1];
      const auto& b = r.ordered[i];
      CHECK(a.kind != b.kind);
      CHECK(a.position < b.position);
      CHECK(std::abs(a.value - b.value) >= 6.0);
    }
  }
}

TEST_CASE("adding a constant to the potential changes nothing") {
  const auto dist = EnvDistribution::make(EnvKind::uniform_symmetric, 0.25);
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const auto P = compute_potential(sample_environment(dist, -1500, 1500, seed));
    const auto Q = shifted(P, 17.25);
    const auto a = resolve_extrema(P, 5.0).ordered;
    const auto b = resolve_extrema(Q, 5.0).ordered;
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].position == b[i].position);
      CHECK(a[i].kind == b[i].kind);
    }
  }
}

TEST_CASE("reflection maps the cover onto its mirror image") {
  const auto dist = EnvDistribution::make(EnvKind::uniform_symmetric, 0.25);
  const auto params = GammaParams::make(1e3, 0.0);
  int checked = 0;
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto P = compute_potential(sample_environment(dist, -3000, 3000, seed));
    ValleyDecomposition d, e;
    try {
      d = construct_cover(P, params, 2.0);
      e = construct_cover(reflected(P), params, 2.0);
    } catch (const ScanIncomplete&) {
      continue;
    }
    REQUIRE(d.n_f == e.n_f);
    CHECK(d.case_At == e.case_At);
    for (std::size_t i = 0; i < d.M.size(); ++i) CHECK(d.M[i] == -e.M[d.M.size() - 1 - i]);
    for (std::size_t i = 0; i < d.m.size(); ++i) CHECK(d.m[i] == -e.m[d.m.size() - 1 - i]);
    ++checked;
  }
  CHECK(checked >= 30);
}

TEST_CASE("cover invariants on sampled environments") {
  const auto dist = EnvDistribution::make(EnvKind::two_point_symmetric, 0.25);
  const auto params = GammaParams::make(1e4, 0.0);
  const double Gamma = params.threshold();
  const double bound = 3.0 * params.scale();
  for (std::uint64_t seed = 1; seed <= 40; ++seed) {
    const auto env = sample_environment(dist, -1, 1, seed);
    const auto res = construct_cover(env, params, 3.0);
    const auto& d = res.decomposition;
    const auto& P = res.potential;
    REQUIRE(d.M.size() == static_cast<std::size_t>(d.n_f) + (d.n_f > 0 ? 1 : 0));
    REQUIRE(d.m.size() == static_cast<std::size_t>(d.n_f));
    CHECK(d.U.size() == d.M.size());
    for (int i = 1; i <= d.n_f; ++i) {
      const Valley v = d.valley(i);
      CHECK(is_valley(P, v));
      CHECK(depth(P, v) >= Gamma);
      CHECK(std::abs(static_cast<double>(v.m)) < bound);
    }
    if (d.n_f > 0) {
      CHECK(static_cast<double>(d.M.back()) >= static_cast<double>(d.m.back()));
      CHECK(static_cast<double>(d.M.front()) <= static_cast<double>(d.m.front()));
    }
  }
}

TEST_CASE("adaptive cover matches the cover of a large fixed window") {
  const auto dist = EnvDistribution::make(EnvKind::uniform_symmetric, 0.3);
  const auto params = GammaParams::make(1e4, 0.0);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto adaptive = construct_cover(sample_environment(dist, -1, 1, seed), params, 2.0);
    const auto big = compute_potential(sample_environment(dist, -40000, 40000, seed));
    const auto fixed = construct_cover(big, params, 2.0);
    CHECK(adaptive.decomposition.M == fixed.M);
    CHECK(adaptive.decomposition.m == fixed.m);
    CHECK(adaptive.decomposition.n_f == fixed.n_f);
  }
}

TEST_CASE("adaptive cover gives up at the cap") {
  const auto env = Environment::custom(-50, std::vector<double>(101, 0.5));
  CHECK_THROWS_AS(construct_cover(env, GammaParams::make(1e4, 0.0), 1.0), ScanIncomplete);
}

TEST_CASE("good environment checks") {
  ValleyDecomposition empty;
  empty.params = GammaParams::make(1e6, 0.0);
  const auto r0 = check_good_environment(flat(-5, 5), empty, 40.0, 0.01, 40.0);
  CHECK(r0.ok);
  CHECK(r0.vf_size == 0);

  // One valley on [0, 10] with a descent of 4 inside [m, M_right].
  const auto P = Potential::from_values(0, {10, 6, 3, 0, 3, 6, 4, 2, 5, 9, 12});
  ValleyDecomposition d;
  d.params = GammaParams::make(e3, 0.0);
  d.M = {0, 10};
  d.m = {3};
  d.n_f = 1;
  const auto r = check_good_environment(P, d, 40.0, 0.01, 40.0);
  CHECK(refine_right(P, d.valley(1)).drop == 4.0);
  CHECK_FALSE(r.no_subvalley);
  CHECK_FALSE(r.ok);
}

TEST_CASE("sampled environments are mostly good at t = 1e6") {
  const auto dist = EnvDistribution::make(EnvKind::two_point_symmetric, 0.25);
  const auto params = GammaParams::make(1e6, 0.0);
  int good = 0, total = 0;
  for (std::uint64_t seed = 1; seed <= 1000; ++seed) {
    const auto res = construct_cover(sample_environment(dist, -1, 1, seed), params, 1.0);
    const auto r = check_good_environment(res.potential, res.decomposition, 40.0, 0.01, 40.0);
    good += r.ok ? 1 : 0;
    ++total;
  }
  CHECK(static_cast<double>(good) / total >= 0.95);
}
