#include <cmath>
#include <filesystem>
#include <numbers>

#include <gtest/gtest.h>

#include "fraccv/field_io.hpp"
#include "fraccv/grid.hpp"
#include "fraccv/params.hpp"

using namespace fraccv;

TEST(Grid, RejectsOddOrTinyN) {
  EXPECT_THROW(periodic_grid(1, 7), Error);
  EXPECT_THROW(periodic_grid(1, 2), Error);
  EXPECT_THROW(box_grid(1, 0.0, 16), Error);
  EXPECT_THROW(box_grid(4, 1.0, 16), Error);
}

TEST(Grid, SpacingAndCoordinates) {
  auto p = periodic_grid(2, 8);
  EXPECT_DOUBLE_EQ(p.spacing, 0.125);
  EXPECT_DOUBLE_EQ(p.coordinate(3), 0.375);
  auto b = box_grid(1, 4.0, 16);
  EXPECT_DOUBLE_EQ(b.spacing, 0.5);
  EXPECT_DOUBLE_EQ(b.coordinate(0), -4.0);
  EXPECT_EQ(b.num_points(), 16u);
}

TEST(Grid, FlatIndexRoundTrip) {
  auto g = periodic_grid(3, 6);
  for (std::size_t i = 0; i < g.num_points(); ++i) {
    auto idx = g.multi_index(i);
    EXPECT_EQ(g.flat_index(idx), i);
  }
}

TEST(Grid, NormsOfConstants) {
  auto g = periodic_grid(2, 16);
  auto one = SampledField::scalar(g, [](auto) { return 1.0; }, DecayClass::Unknown);
  EXPECT_NEAR(lp_norm(one, 2.0), 1.0, 1e-14);
  EXPECT_NEAR(lp_norm(one, INFINITY), 1.0, 0.0);
  EXPECT_NEAR(integral(one)[0], 1.0, 1e-14);
  EXPECT_NEAR(inner_product(one, one), 1.0, 1e-14);
}

TEST(Grid, LipschitzOfLinearRamp) {
  auto g = box_grid(1, 1.0, 32);
  auto u = SampledField::scalar(g, [](auto x) { return 3.0 * x[0]; }, DecayClass::CompactSupport);
  EXPECT_NEAR(lipschitz_constant(u), 3.0, 1e-12);
}

TEST(Grid, IncompatibleFieldsRejected) {
  SampledField a(periodic_grid(1, 8), 1);
  SampledField b(periodic_grid(1, 16), 1);
  EXPECT_THROW(a + b, Error);
}

TEST(Params, ConstantsMatchClosedForms) {
  // Direct Gamma evaluations at a = 1/2, n = 1.
  const double pi = std::numbers::pi;
  const double mu = std::sqrt(2.0) / std::sqrt(pi) * std::tgamma(1.25) / std::tgamma(0.25);
  EXPECT_NEAR(gradient_constant(1, 0.5), mu, 1e-15);
  EXPECT_NEAR(riesz_potential_constant(1, 0.5),
              std::sqrt(pi) * std::sqrt(2.0) * std::tgamma(0.25) / std::tgamma(0.25), 1e-14);
  EXPECT_LT(laplacian_constant(2, 1.0), 0.0);
  EXPECT_THROW(compute_constants(1, 1.0), Error);
  EXPECT_THROW(compute_constants(1, 0.5, 1.0), Error);
}

TEST(FieldIo, BinaryRoundTrip) {
  auto g = box_grid(2, 2.0, 8);
  auto u = SampledField::from_function(
      g, 2,
      [](auto x, auto out) {
        out[0] = x[0];
        out[1] = std::sin(x[1]);
      },
      DecayClass::CompactSupport);
  auto path = std::filesystem::temp_directory_path() / "fraccv_roundtrip.bin";
  write_field_binary(u, path.string());
  auto v = read_field_binary(path.string());
  EXPECT_TRUE(v.grid() == u.grid());
  EXPECT_EQ(v.components(), 2);
  EXPECT_EQ(v.decay(), DecayClass::CompactSupport);
  for (std::size_t i = 0; i < u.values().size(); ++i) EXPECT_EQ(u.values()[i], v.values()[i]);
}
