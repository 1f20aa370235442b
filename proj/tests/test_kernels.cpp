#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstring>
#include <vector>

#include "sinai/kernels.hpp"
#include "sinai/rng.hpp"

using namespace sinai;
namespace k = sinai::kernels;

namespace {

struct Buffers {
  std::vector<double> right, left, in;

  explicit Buffers(std::size_t n, std::uint64_t seed) : right(n + 2, 0.0), left(n + 2, 0.0), in(n + 2, 0.0) {
    CounterRng rng(seed, Stream::environment);
    for (std::size_t j = 1; j <= n; ++j) {
      right[j] = 0.2 + 0.6 * rng.uniform();
      left[j] = 1.0 - right[j];
      in[j] = rng.uniform();
    }
  }
};

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

std::vector<k::Isa> available_isas() {
  std::vector<k::Isa> out;
  for (auto isa : {k::Isa::scalar, k::Isa::avx2, k::Isa::neon})
    if (k::available(isa)) out.push_back(isa);
  return out;
}

}  // namespace

TEST_CASE("scalar is always available and detection picks an available variant") {
  CHECK(k::available(k::Isa::scalar));
  CHECK(k::available(k::detected()));
  CHECK(k::available(k::active()));
  CHECK(k::to_string(k::Isa::avx2) == "avx2");
}

TEST_CASE("forward stencil by hand") {
  // Three sites, padded.
  const std::vector<double> right{0, 0.25, 0.5, 0.75, 0};
  const std::vector<double> left{0, 0.75, 0.5, 0.25, 0};
  const std::vector<double> in{0, 0, 1, 0, 0};
  std::vector<double> out(5, -1.0);
  k::scalar::forward(right.data(), left.data(), in.data(), out.data(), 1, 3);
  CHECK(out[1] == 0.5);
  CHECK(out[2] == 0.0);
  CHECK(out[3] == 0.5);
  CHECK(out[0] == -1.0);
  CHECK(out[4] == -1.0);

  std::vector<double> h(5, 0.0);
  const std::vector<double> ind{0, 0, 0, 1, 0};
  k::scalar::backward(right.data(), left.data(), ind.data(), h.data(), 1, 3);
  CHECK(h[2] == 0.5);
  CHECK(h[1] == 0.0);
  CHECK(h[3] == 0.0);
}

TEST_CASE("every variant is bit-identical to the scalar reference") {
  for (std::size_t n : {1u, 2u, 3u, 4u, 5u, 7u, 8u, 9u, 31u, 64u, 1001u}) {
    const Buffers b(n, n);
    for (std::size_t first = 1; first <= std::min<std::size_t>(n, 5); ++first) {
      for (std::size_t last : {n, n - (n > first ? 1 : 0)}) {
        if (last < first) continue;
        std::vector<double> fref(n + 2, 0.0), bref(n + 2, 0.0);
        k::scalar::forward(b.right.data(), b.left.data(), b.in.data(), fref.data(), first, last);
        k::scalar::backward(b.right.data(), b.left.data(), b.in.data(), bref.data(), first, last);
        for (auto isa : available_isas()) {
          CAPTURE(k::to_string(isa));
          CAPTURE(n);
          CAPTURE(first);
          CAPTURE(last);
          std::vector<double> f(n + 2, 0.0), g(n + 2, 0.0);
          k::table(isa).forward(b.right.data(), b.left.data(), b.in.data(), f.data(), first, last);
          k::table(isa).backward(b.right.data(), b.left.data(), b.in.data(), g.data(), first, last);
          CHECK(same_bits(f, fref));
          CHECK(same_bits(g, bref));
        }
      }
    }
  }
}

TEST_CASE("variants agree over many iterated steps") {
  const std::size_t n = 513;
  const Buffers b(n, 77);
  for (auto isa : available_isas()) {
    std::vector<double> ref(n + 2, 0.0), cur(n + 2, 0.0), tmp(n + 2, 0.0), tref(n + 2, 0.0);
    ref[n / 2] = cur[n / 2] = 1.0;
    for (int s = 0; s < 300; ++s) {
      k::scalar::forward(b.right.data(), b.left.data(), ref.data(), tref.data(), 1, n);
      k::table(isa).forward(b.right.data(), b.left.data(), cur.data(), tmp.data(), 1, n);
      std::swap(ref, tref);
      std::swap(cur, tmp);
    }
    CHECK(same_bits(ref, cur));
  }
}

TEST_CASE("forward and backward are adjoint") {
  const std::size_t n = 200;
  const Buffers b(n, 5);
  std::vector<double> g(n + 2, 0.0);
  CounterRng rng(9, Stream::dynamics);
  for (std::size_t j = 1; j <= n; ++j) g[j] = rng.uniform();
  // Guards must stay zero for the duality to hold on a window.
  std::vector<double> Fp(n + 2, 0.0), Bg(n + 2, 0.0);
  k::scalar::forward(b.right.data(), b.left.data(), b.in.data(), Fp.data(), 1, n);
  k::scalar::backward(b.right.data(), b.left.data(), g.data(), Bg.data(), 1, n);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t j = 1; j <= n; ++j) {
    lhs += Fp[j] * g[j];
    rhs += b.in[j] * Bg[j];
  }
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
}

TEST_CASE("forward conserves mass up to what reaches the guards") {
  const std::size_t n = 50;
  Buffers b(n, 3);
  double before = 0.0;
  for (std::size_t j = 1; j <= n; ++j) before += b.in[j];
  std::vector<double> out(n + 2, 0.0);
  k::scalar::forward(b.right.data(), b.left.data(), b.in.data(), out.data(), 1, n);
  double after = 0.0;
  for (std::size_t j = 1; j <= n; ++j) after += out[j];
  const double leaked = b.left[1] * b.in[1] + b.right[n] * b.in[n];
  CHECK(after + leaked == doctest::Approx(before).epsilon(1e-13));
}
