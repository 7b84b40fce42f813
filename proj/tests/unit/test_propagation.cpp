#include <doctest.h>

#include "scatterpty/errors.hpp"
#include "scatterpty/field.hpp"
#include "scatterpty/propagation.hpp"
#include "support.hpp"

using namespace scatterpty;

namespace {

constexpr double kLambda = 532e-9;

ComplexField disc(int n, double pitch, double diameter) {
  ComplexField f(n, n, pitch);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double rx = (x - f.center_x()) * pitch, ry = (y - f.center_y()) * pitch;
      if (rx * rx + ry * ry <= diameter * diameter / 4.0) f(x, y) = 1.0;
    }
  }
  return f;
}

}  // namespace

TEST_CASE("angular spectrum matches a direct DFT evaluation") {
  auto r = gen::rng(11);
  SUBCASE("all components propagating") {
    const auto f = gen::random_field(r, 16, 16, 2e-6);
    const auto got = asm_propagate(f, kLambda, 10e-6);
    CHECK(oracle::relative_l2(got, oracle::asm_by_direct_dft(f, kLambda, 10e-6)) < 1e-10);
  }
  SUBCASE("grid fine enough to carry evanescent components") {
    const auto f = gen::random_field(r, 16, 16, 0.2e-6);
    const auto got = asm_propagate(f, kLambda, 0.1e-6);
    CHECK(oracle::relative_l2(got, oracle::asm_by_direct_dft(f, kLambda, 0.1e-6)) < 1e-10);
  }
}

TEST_CASE("zero distance is the identity") {
  auto r = gen::rng(12);
  const auto f = gen::random_field(r, 32, 32, 5e-6);
  CHECK(relative_error(asm_propagate(f, kLambda, 0.0), f) < 1e-12);
}

TEST_CASE("transfer function magnitude is exactly one or zero") {
  auto r = gen::rng(13);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 * gen::integer(r, 4, 64);
    const double pitch = gen::uniform(r, 0.2e-6, 20e-6);
    const double z = gen::uniform(r, -1.0, 1.0);
    const auto h = asm_transfer_function(n, pitch, kLambda, z, gen::uniform(r, 1e3, 1e6));
    for (auto v : h) {
      const double m = std::abs(v);
      CHECK((m == 0.0 || std::abs(m - 1.0) < 1e-15));
    }
  }
}

TEST_CASE("band-limited fields: unitarity, reversibility and composition") {
  auto r = gen::rng(14);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 64 * gen::integer(r, 1, 4);
    const double pitch = gen::uniform(r, 2e-6, 20e-6);
    const auto f = gen::band_limited_field(r, n, pitch, 0.3);
    // keep z inside the chirp band limit of 0.3 Nyquist
    const double zmax = 0.5 * n * pitch * pitch / kLambda;
    const double z1 = gen::uniform(r, -zmax, zmax);
    const double z2 = gen::uniform(r, -zmax, zmax);
    const auto g = asm_propagate(f, kLambda, z1);
    CHECK(energy(g) == doctest::Approx(energy(f)).epsilon(1e-10));
    CHECK(relative_error(asm_propagate(g, kLambda, -z1), f) < 1e-10);
    const auto two_step = asm_propagate(g, kLambda, z2);
    CHECK(relative_error(two_step, asm_propagate(f, kLambda, z1 + z2)) < 1e-9);
  }
}

TEST_CASE("Gaussian beam matches the paraxial closed form") {
  const int n = 1024;
  const double pitch = 10e-6, w0 = 200e-6, z = 0.05;
  ComplexField f(n, n, pitch);
  ComplexField expect(n, n, pitch);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double rx = (x - f.center_x()) * pitch, ry = (y - f.center_y()) * pitch;
      f(x, y) = oracle::gaussian_beam(rx * rx + ry * ry, w0, kLambda, 0.0);
      expect(x, y) = oracle::gaussian_beam(rx * rx + ry * ry, w0, kLambda, z);
    }
  }
  CHECK(relative_error(asm_propagate(f, kLambda, z), expect) < 1e-4);
}

TEST_CASE("focused disc gives the Airy first dark ring") {
  const int n = 1024;
  const double pitch = 10e-6, d = 4e-3, focal = 0.5;
  auto f = disc(n, pitch, d);
  const double k = 2.0 * oracle::kPi / kLambda;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double rx = (x - f.center_x()) * pitch, ry = (y - f.center_y()) * pitch;
      f(x, y) *= std::polar(1.0, -k * (rx * rx + ry * ry) / (2.0 * focal));
    }
  }
  const auto g = asm_propagate(f, kLambda, focal);
  // first local minimum of |g| along +x from the centre
  const int cx = g.center_x(), cy = g.center_y();
  int first_min = -1;
  for (int i = 1; i < n / 2 - 1; ++i) {
    const double a = std::abs(g(cx + i - 1, cy)), b = std::abs(g(cx + i, cy)),
                 c = std::abs(g(cx + i + 1, cy));
    if (b < a && b <= c) {
      first_min = i;
      break;
    }
  }
  const double expected = oracle::airy_first_zero(kLambda, focal, d) / pitch;
  CHECK(std::abs(first_min - expected) <= 1.0);
}

TEST_CASE("multistage propagation without resampling equals single-stage") {
  auto r = gen::rng(15);
  const int n = 128;
  const double pitch = 10e-6;
  const auto f = gen::random_field(r, n, n, pitch);
  const auto plan = make_plan(kLambda, 0.02, pitch, n, 1.0);
  const auto masm = masm_propagate(f, plan);
  CHECK(relative_error(masm, asm_propagate(f, kLambda, 0.02)) < 1e-12);
  CHECK(relative_error(masm_inverse(masm, plan), asm_propagate(masm, kLambda, -0.02)) < 1e-12);
}

TEST_CASE("plan bookkeeping") {
  const auto plan = make_plan(kLambda, 2.654, 10e-6, 2048, 0.25, 512);
  CHECK(plan.output_pitch() == doctest::Approx(40e-6).epsilon(1e-14));
  CHECK(plan.resolved_output_grid() == 512);
  REQUIRE(plan.stage_boundaries.size() == 1);
  CHECK(plan.stage_boundaries[0] == doctest::Approx(2.654 * 0.25));
  const auto tenth = make_plan(kLambda, 2.654, 10e-6, 1024, 0.25, 1024, 0.1);
  CHECK(tenth.stage_boundaries[0] == doctest::Approx(0.2654));
  CHECK(make_plan(kLambda, 1.0, 10e-6, 64, 1.0).stage_boundaries.empty());
  CHECK_THROWS_AS(make_plan(kLambda, 1.0, 10e-6, 64, 1.5), ParameterError);
  CHECK_THROWS_AS(make_plan(kLambda, 1.0, 10e-6, 64, 0.25, 0, 1.5), ParameterError);
  CHECK_THROWS_AS(make_plan(-1.0, 1.0, 10e-6, 64, 0.25), ParameterError);
}

TEST_CASE("multistage round trip on a band-limited target") {
  // 5 x 5 mm target, about 4 lp/mm, 10 um pitch, 40 um scatter pitch
  auto r = gen::rng(16);
  const int n = 1024;
  const double pitch = 10e-6;
  ComplexField f(n, n, pitch);
  const auto waves = gen::band_limited_field(r, 512, pitch, 0.08);
  for (int y = 0; y < 500; ++y) {
    for (int x = 0; x < 500; ++x) {
      const double wx = std::sin(oracle::kPi * x / 499.0), wy = std::sin(oracle::kPi * y / 499.0);
      f(262 + x, 262 + y) = waves(x, y) * wx * wx * wy * wy;
    }
  }
  const auto plan = make_plan(kLambda, 0.5, pitch, n, 0.25, 512);
  const MasmPropagator prop(plan);
  const auto scatter = prop.forward(f);
  CHECK(scatter.width() == 512);
  CHECK(scatter.pitch() == doctest::Approx(40e-6));
  CHECK(energy(scatter) == doctest::Approx(energy(f)).epsilon(1e-2));
  const auto back = prop.inverse(scatter);
  REQUIRE(back.width() == n);
  CHECK(relative_error(back, f) < 1e-2);

  const auto zero = prop.forward(ComplexField(n, n, pitch));
  for (auto v : zero.data()) CHECK(v == Complex{});
}

TEST_CASE("propagator rejects mismatched inputs") {
  const auto plan = make_plan(kLambda, 0.1, 10e-6, 64, 0.5);
  const MasmPropagator prop(plan);
  CHECK_THROWS_AS(prop.forward(ComplexField(32, 32, 10e-6)), ParameterError);
  CHECK_THROWS_AS(prop.inverse(ComplexField(64, 64, 10e-6)), ParameterError);
  CHECK_THROWS_AS(asm_propagate(ComplexField(8, 6, 1e-6), kLambda, 0.1), ParameterError);
}
