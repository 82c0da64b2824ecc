#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "hktorus/torus.hpp"

using namespace hktorus;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an hktorus::Error";
  return ErrorCode::IoError;
}

}  // namespace

TEST(CircleParams, ValidatesInputs) {
  EXPECT_EQ(code_of([] { CircleParams::make(0.0, 1.0); }), ErrorCode::NonPositivePerimeter);
  EXPECT_EQ(code_of([] { CircleParams::make(-3.0, 1.0); }), ErrorCode::NonPositivePerimeter);
  EXPECT_EQ(code_of([] { CircleParams::make(NAN, 1.0); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([] { CircleParams::make(10.0, INFINITY); }), ErrorCode::NonFinite);
  EXPECT_EQ(code_of([] { CircleParams::make(10.0, 0.0); }), ErrorCode::InvalidRadius);
  EXPECT_EQ(code_of([] { CircleParams::make(10.0, 5.5); }), ErrorCode::InvalidRadius);
  EXPECT_NO_THROW(CircleParams::make(10.0, 5.0));
}

TEST(CircleParams, StrictSixth) {
  EXPECT_TRUE(CircleParams::make(10.0, 1.0).strict_sixth());
  EXPECT_FALSE(CircleParams::make(6.0, 1.0).strict_sixth());
  EXPECT_FALSE(CircleParams::make(5.0, 1.0).strict_sixth());
}

TEST(Canonicalize, FoldsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(canonicalize(-0.1, 10).rep(), 9.9);
  EXPECT_DOUBLE_EQ(canonicalize(23.5, 10).rep(), 3.5);
  EXPECT_EQ(canonicalize(10.0, 10).rep(), 0.0);
  EXPECT_EQ(canonicalize(-10.0, 10).rep(), 0.0);
  EXPECT_FALSE(std::signbit(canonicalize(-0.0, 10).rep()));
  // fmod of a tiny negative plus p rounds to p; must land on 0.
  EXPECT_LT(canonicalize(-1e-18, 10).rep(), 10.0);
  EXPECT_EQ(code_of([] { canonicalize(NAN, 10); }), ErrorCode::NonFinite);
}

TEST(Vect, Examples) {
  const double p = 10;
  EXPECT_NEAR(torus_vect(canonicalize(9.5, p), canonicalize(0.5, p)), 1.0, 1e-12);
  EXPECT_NEAR(torus_vect(canonicalize(0.5, p), canonicalize(9.5, p)), -1.0, 1e-12);
  EXPECT_NEAR(torus_distance(canonicalize(9.5, p), canonicalize(0.5, p)), 1.0, 1e-12);
  // Antipodal pairs resolve to +p/2 in both directions.
  EXPECT_DOUBLE_EQ(torus_vect(canonicalize(0, p), canonicalize(5, p)), 5.0);
  EXPECT_DOUBLE_EQ(torus_vect(canonicalize(5, p), canonicalize(0, p)), 5.0);
  EXPECT_EQ(torus_vect(canonicalize(3, p), canonicalize(3, p)), 0.0);
}

TEST(Vect, RejectsMixedCircles) {
  EXPECT_EQ(code_of([] { torus_vect(canonicalize(1, 10), canonicalize(1, 12)); }),
            ErrorCode::PerimeterMismatch);
}

TEST(Phi, ChartWrapsUpperHalf) {
  EXPECT_DOUBLE_EQ(phi(canonicalize(9.5, 10)), -0.5);
  EXPECT_DOUBLE_EQ(phi(canonicalize(2.0, 10)), 2.0);
  EXPECT_DOUBLE_EQ(phi(canonicalize(5.0, 10)), 5.0);
  EXPECT_DOUBLE_EQ(phi(canonicalize(5.0 + 1e-9, 10)), 5.0 + 1e-9 - 10.0);
}

TEST(TorusProperties, RandomPairs) {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  std::uniform_real_distribution<double> up(0.5, 20.0);
  for (int trial = 0; trial < 2000; ++trial) {
    const double p = up(gen);
    const double a = u(gen), b = u(gen);
    const auto x = canonicalize(a, p), y = canonicalize(b, p);
    ASSERT_GE(x.rep(), 0.0);
    ASSERT_LT(x.rep(), p);
    const double v = torus_vect(x, y);
    ASSERT_GT(v, -p / 2);
    ASSERT_LE(v, p / 2);
    // x + vect(x, y) lands on y.
    ASSERT_LT(torus_distance(canonicalize(x.rep() + v, p), y), 1e-9 * p);
    // Antisymmetric except at the antipode.
    if (std::abs(v) < p / 2 - 1e-9 * p) {
      ASSERT_NEAR(torus_vect(y, x), -v, 1e-9 * p);
    }
    ASSERT_NEAR(torus_distance(x, y), torus_distance(y, x), 1e-12 * p);
    ASSERT_LE(torus_distance(x, y), p / 2);
    // Canonicalization is idempotent and shift invariant.
    ASSERT_EQ(canonicalize(x.rep(), p).rep(), x.rep());
    ASSERT_LT(torus_distance(canonicalize(a + 3 * p, p), x), 1e-9 * p);
  }
}
