#include <doctest.h>

#include <cmath>

#include "ilaclab/eigen.hpp"
#include "ilaclab/error.hpp"
#include "ilaclab/lattice.hpp"
#include "ilaclab/spectral.hpp"
#include "ilaclab/tails.hpp"

using namespace ilac;

namespace {

TailProfile synthetic(double c, double alpha, const std::vector<double>& deltas, double noise = 0.0) {
  TailProfile p;
  for (std::size_t k = 0; k < deltas.size(); ++k) {
    const double sign = k % 2 == 0 ? 1.0 : -1.0;
    p.samples.push_back({deltas[k], std::exp(-c * std::pow(deltas[k], -alpha)) * (1.0 + sign * noise)});
  }
  return p;
}

const std::vector<double> kGrid{0.5, 0.2, 0.1, 0.05};

}  // namespace

TEST_CASE("tail side names round-trip") {
  for (auto s : {TailSide::TwoSided, TailSide::Right, TailSide::Left}) CHECK(parse_tail_side(to_string(s)) == s);
  CHECK_THROWS_AS(parse_tail_side("both"), InvalidArgument);
}

TEST_CASE("delta grid validation and default grid") {
  CHECK_THROWS_AS(validate_delta_grid({}), InvalidArgument);
  CHECK_THROWS_AS(validate_delta_grid({0.1, 0.2}), InvalidArgument);
  CHECK_THROWS_AS(validate_delta_grid({0.1, 0.1}), InvalidArgument);
  CHECK_THROWS_AS(validate_delta_grid({0.1, -0.1}), InvalidArgument);
  const auto g = default_delta_grid(5.0);
  REQUIRE(g.size() == 8);
  CHECK(g.front() == doctest::Approx(2.5));
  CHECK(g.back() == doctest::Approx(0.25));
  for (std::size_t k = 1; k < g.size(); ++k) CHECK(g[k] / g[k - 1] == doctest::Approx(std::pow(0.1, 1.0 / 7)));
  CHECK_THROWS_AS(default_delta_grid(0.0), InvalidArgument);
}

TEST_CASE("profiles of simple measures") {
  EmpiricalMeasure1D point({{1.0, 0.3}}, Estimator::CountPerVolume);
  const auto p = tail_profile(point, 1.0, kGrid);
  for (const auto& s : p.samples) CHECK(s.mass == 0.3);

  const auto right = tail_profile(point, 1.0, kGrid, TailSide::Right);
  const auto left = tail_profile(point, 1.0, kGrid, TailSide::Left);
  for (std::size_t k = 0; k < kGrid.size(); ++k) {
    CHECK(right.samples[k].mass == 0.3);
    CHECK(left.samples[k].mass == 0.3);
  }

  const auto far = tail_profile(point, 5.0, kGrid);
  for (const auto& s : far.samples) CHECK(s.mass == 0.0);
  const auto fit = lifshitz_exponent_fit(far);
  CHECK_FALSE(fit.valid);
  CHECK(fit.zero_mass_points == 4);
  CHECK(fit.verdict == "no tail mass resolved");
}

TEST_CASE("one-sided windows split at the edge") {
  EmpiricalMeasure1D m({{-0.1, 0.2}, {0.0, 0.3}, {0.1, 0.5}}, Estimator::CountPerVolume);
  const std::vector<double> d{0.2};
  CHECK(tail_profile(m, 0.0, d, TailSide::TwoSided).samples[0].mass == doctest::Approx(1.0));
  CHECK(tail_profile(m, 0.0, d, TailSide::Right).samples[0].mass == doctest::Approx(0.8));
  CHECK(tail_profile(m, 0.0, d, TailSide::Left).samples[0].mass == doctest::Approx(0.5));

  IlacCurve curve({-0.1, 0.0, 0.1}, {0.2, 0.5, 1.0});
  CHECK(tail_profile(curve, 0.0, d, TailSide::TwoSided).samples[0].mass == doctest::Approx(1.0));
  CHECK(tail_profile(curve, 0.0, d, TailSide::Right).samples[0].mass == doctest::Approx(0.5));
  CHECK(tail_profile(curve, 0.0, d, TailSide::Left).samples[0].mass == doctest::Approx(0.5));
}

TEST_CASE("exact recovery on noise-free synthetic profiles") {
  const auto a = lifshitz_exponent_fit(synthetic(1.0, 0.5, kGrid));
  CHECK(a.valid);
  CHECK(std::abs(a.alpha - 0.5) < 1e-9);
  CHECK(std::abs(a.constant - 1.0) < 1e-9);
  CHECK(a.r_squared == doctest::Approx(1.0));
  CHECK(a.lifshitz_like);
  CHECK(a.verdict == "stretched-exponential decay");

  const auto b = lifshitz_exponent_fit(synthetic(2.0, 1.0, kGrid));
  CHECK(std::abs(b.alpha - 1.0) < 1e-9);
  CHECK(std::abs(b.constant - 2.0) < 1e-9);
}

TEST_CASE("a flat profile is not a tail") {
  TailProfile flat;
  for (double d : kGrid) flat.samples.push_back({d, 0.3});
  const auto f = lifshitz_exponent_fit(flat);
  CHECK(f.valid);
  CHECK(std::abs(f.alpha) < 1e-9);
  CHECK_FALSE(f.lifshitz_like);
  CHECK(f.verdict == "flat profile, not a Lifshitz tail");
}

TEST_CASE("fit bookkeeping for unusable samples") {
  TailProfile p = synthetic(1.0, 0.5, kGrid);
  p.samples[0].mass = 1.0;
  p.samples[3].mass = 0.0;
  const auto f = lifshitz_exponent_fit(p);
  CHECK_FALSE(f.valid);
  CHECK(f.saturated_points == 1);
  CHECK(f.zero_mass_points == 1);
  CHECK(f.points_used == 2);
  CHECK(f.verdict == "fewer than three usable samples");
  CHECK(f.warnings.size() == 1);
}

TEST_CASE("noisy recovery stays within ten percent") {
  const std::vector<double> grid{0.5, 0.35, 0.25, 0.18, 0.12, 0.09, 0.065, 0.05};
  for (auto [c, alpha] : {std::pair{1.0, 0.5}, std::pair{2.0, 1.0}, std::pair{0.5, 1.5}}) {
    const auto f = lifshitz_exponent_fit(synthetic(c, alpha, grid, 0.01));
    CHECK(std::abs(f.alpha - alpha) <= 0.1 * alpha);
    CHECK(std::abs(f.constant - c) <= 0.1 * c);
  }
}

TEST_CASE("convexity proxy") {
  const auto stretched = convexity_proxy(synthetic(1.0, 0.5, kGrid));
  CHECK(stretched.satisfied);
  CHECK(stretched.slopes.size() == 3);
  CHECK(stretched.second_differences.size() == 2);

  TailProfile power;  // m = delta^2 has constant slope 2
  for (double d : kGrid) power.samples.push_back({d, d * d});
  const auto pw = convexity_proxy(power);
  for (double s : pw.slopes) CHECK(s == doctest::Approx(2.0));

  TailProfile concave;  // slopes shrink toward small delta
  concave.samples = {{0.5, 0.5}, {0.2, 0.1}, {0.1, 0.06}, {0.05, 0.05}};
  CHECK_FALSE(convexity_proxy(concave).satisfied);

  TailProfile short_profile;
  short_profile.samples = {{0.5, 0.5}, {0.2, 0.1}, {0.1, 0.0}};
  CHECK_FALSE(convexity_proxy(short_profile).satisfied);
}

TEST_CASE("tail masses are monotone in delta on an Anderson density of states") {
  BoxSpec box{1, 200, Boundary::Dirichlet};
  const auto r = sample_potential(PotentialDistribution::uniform(0, 1), box, 1, 0);
  const auto dec = eig_symmetric(assemble_hamiltonians(build_laplacian(box), r, box).h_plus);
  const auto p = tail_profile(dos_estimate(dec, box), -2.0, default_delta_grid(5.0));
  for (std::size_t k = 1; k < p.samples.size(); ++k) CHECK(p.samples[k].mass <= p.samples[k - 1].mass);
}

TEST_CASE("band-edge inequality on a deterministic free chain") {
  BoxSpec box{1, 40, Boundary::Dirichlet};
  const Matrix lap = build_laplacian(box);
  const auto dec = eig_symmetric(lap);
  const auto w = overlap_matrix(dec, dec);
  const auto rho = rho_estimate(dec, dec, w, box);
  const auto curve = ilac_curve(rho);
  const auto n = dos_estimate(dec, box);
  std::vector<double> grid;
  for (int k = 1; k <= 20; ++k) grid.push_back(0.05 * k);
  const auto rows = theorem21_verify(curve, n, n, -2, -2, 2, 2, grid);
  REQUIRE(rows.size() == 40);
  for (const auto& row : rows) {
    CHECK(row.holds);
    CHECK(row.holds_wide);
    CHECK(row.bound_tight <= row.bound_wide + 1e-15);
  }
  // identical decompositions: rho sits on the diagonal, A jumps at 2 lambda_k
  const double lam0 = dec.values().front();
  const auto& first = rows.front();
  CHECK(first.edge == "lower");
  CHECK(first.lhs == doctest::Approx(curve.at(-4 + 0.05) - curve.at(-4 - 0.05)));
  CHECK(curve.at(2 * lam0) == doctest::Approx(1.0 / 40));
}

TEST_CASE("band-edge inequality saturates for huge windows") {
  BoxSpec box{1, 10, Boundary::Dirichlet};
  const auto r = sample_potential(PotentialDistribution::uniform(0, 1), box, 3, 0);
  const auto pair = assemble_hamiltonians(build_laplacian(box), r, box);
  const auto dp = eig_symmetric(pair.h_plus);
  const auto dm = eig_symmetric(pair.h_minus);
  const auto curve = ilac_curve(rho_estimate(dp, dm, overlap_matrix(dp, dm), box));
  const auto rows = theorem21_verify(curve, dos_estimate(dp, box), dos_estimate(dm, box), -2, -3, 3, 2, {100.0});
  for (const auto& row : rows) {
    CHECK(row.lhs == doctest::Approx(1.0));
    CHECK(row.bound_wide == doctest::Approx(1.0));
    CHECK(row.holds_wide);
  }
  CHECK_THROWS_AS(theorem21_verify(curve, dos_estimate(dp, box), dos_estimate(dm, box), -2, -3, 3, 2, {}),
                  InvalidArgument);
}

TEST_CASE("edge plans") {
  const auto one = theorem31_plan(PotentialDistribution::uniform(0, 1), 1);
  CHECK(one.energies.size() == 2);
  CHECK_FALSE(one.internal_probed);
  CHECK(one.energies[0].energy == -5.0);
  CHECK(one.energies[1].energy == 5.0);
  CHECK(one.regularity_met);
  CHECK(one.regularity_power == 1);

  const auto two = theorem31_plan(PotentialDistribution::two_interval(0, 1, 9, 10), 1);
  CHECK(two.internal_probed);
  REQUIRE(two.energies.size() == 8);
  CHECK(two.energies[2].label == "b1+ + a1-");
  // H+ bands [-2,3] u [7,12], H- bands [-12,-7] u [-3,2]
  CHECK(two.energies[2].energy == 3.0 - 12.0);
  CHECK(two.energies[0].energy == -14.0);
  CHECK(two.energies[1].energy == 14.0);

  const auto merged = theorem31_plan(PotentialDistribution::two_interval(0, 1, 4, 5), 1);
  CHECK_FALSE(merged.internal_probed);
  CHECK(merged.energies.size() == 2);
  CHECK_FALSE(merged.internal_note.empty());

  const auto bern = theorem31_plan(PotentialDistribution::bernoulli(0, 1, 0.5), 1);
  CHECK_FALSE(bern.regularity_met);
}
