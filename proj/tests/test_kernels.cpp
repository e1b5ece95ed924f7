#include "doctest.h"

#include <array>
#include <cmath>
#include <vector>

#include "cerl/error.hpp"
#include "cerl/kernels.hpp"
#include "cerl/rng.hpp"

using cerl::Matrix;
namespace serial = cerl::kernels::serial;
namespace parallel = cerl::kernels::parallel;

namespace {

Matrix random(std::size_t r, std::size_t c, cerl::Rng& rng) {
  Matrix m(r, c);
  for (double& v : m.values()) v = cerl::gaussian(rng);
  return m;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a.values()[i] - b.values()[i]));
  return d;
}

}  // namespace

TEST_CASE("parallel kernels agree with the serial reference") {
  cerl::Rng rng(11);
  // The last shape is above the threshold where OpenMP regions engage.
  const std::vector<std::array<std::size_t, 3>> shapes{{1, 1, 1}, {3, 5, 2}, {64, 6, 64}, {256, 64, 64}, {512, 40, 30}};
  for (auto [rows, in, out] : shapes) {
    CAPTURE(rows);
    CAPTURE(in);
    CAPTURE(out);
    const Matrix x = random(rows, in, rng);
    const Matrix w = random(in, out, rng);
    const Matrix dy = random(rows, out, rng);
    std::vector<double> bias(out);
    for (double& b : bias) b = cerl::gaussian(rng);

    Matrix y1(rows, out), y2(rows, out);
    serial::affine(x, w, bias, y1);
    parallel::affine(x, w, bias, y2);
    CHECK(max_abs_diff(y1, y2) < 1e-12);

    Matrix dx1(rows, in), dx2(rows, in);
    serial::backprop_input(dy, w, dx1);
    parallel::backprop_input(dy, w, dx2);
    CHECK(max_abs_diff(dx1, dx2) < 1e-12);

    Matrix dw1(in, out, 0.5), dw2(in, out, 0.5);
    std::vector<double> db1(out, 1.0), db2(out, 1.0);
    serial::accumulate_weight_grad(x, dy, dw1, db1);
    parallel::accumulate_weight_grad(x, dy, dw2, db2);
    CHECK(max_abs_diff(dw1, dw2) < 1e-10);
    for (std::size_t o = 0; o < out; ++o) CHECK(std::abs(db1[o] - db2[o]) < 1e-10);
  }
}

TEST_CASE("affine against a hand-computed product") {
  const Matrix x(1, 2, {1.0, 2.0});
  const Matrix w(2, 2, {1.0, 2.0, 3.0, 4.0});
  const std::vector<double> b{0.5, -0.5};
  Matrix y(1, 2);
  parallel::affine(x, w, b, y);
  CHECK(y(0, 0) == 7.5);
  CHECK(y(0, 1) == 9.5);
}

TEST_CASE("parallel kernels are deterministic") {
  cerl::Rng rng(5);
  const Matrix x = random(512, 64, rng), w = random(64, 64, rng), dy = random(512, 64, rng);
  Matrix a(64, 64), b(64, 64);
  std::vector<double> da(64), db(64);
  parallel::accumulate_weight_grad(x, dy, a, da);
  parallel::accumulate_weight_grad(x, dy, b, db);
  CHECK(a == b);
  CHECK(da == db);
}

TEST_CASE("kernel shape errors") {
  Matrix x(2, 3), w(4, 2), y(2, 2);
  std::vector<double> b(2);
  CHECK_THROWS_AS(parallel::affine(x, w, b, y), cerl::ShapeError);
  CHECK_THROWS_AS(serial::affine(x, w, b, y), cerl::ShapeError);
  Matrix dx(2, 3);
  CHECK_THROWS_AS(parallel::backprop_input(y, w, dx), cerl::ShapeError);
  Matrix dw(3, 3);
  CHECK_THROWS_AS(parallel::accumulate_weight_grad(x, y, dw, b), cerl::ShapeError);
}
