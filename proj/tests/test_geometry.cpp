#include <doctest.h>

#include <algorithm>

#include "ilaclab/error.hpp"
#include "ilaclab/geometry.hpp"
#include "ilaclab/rng.hpp"
#include "oracles.hpp"

using namespace ilac;

namespace {

Rational q(std::int64_t n, std::int64_t d = 1) { return Rational(n) / d; }
Corner at(std::int64_t p, std::int64_t m) { return {q(p), q(m)}; }

RectangleSet fixture() {
  const auto b = ExactBands::parse("0 1; 5 6");
  return build_sigma(b, b);
}

ExactBands random_two_bands(CounterRng& rng) {
  // four sorted edges from 0..9, first band strictly below the second
  for (;;) {
    std::int64_t e[4];
    for (auto& x : e) x = static_cast<std::int64_t>(rng.below(10));
    std::sort(e, e + 4);
    if (e[1] < e[2]) return ExactBands{{{q(e[0]), q(e[1])}, {q(e[2]), q(e[3])}}};
  }
}

}  // namespace

TEST_CASE("rational parsing and printing") {
  CHECK(parse_rational("3") == 3);
  CHECK(parse_rational("-1/2") == q(-1, 2));
  CHECK(parse_rational("0.1") == q(1, 10));
  CHECK(parse_rational("2.5e-3") == q(1, 400));
  CHECK(parse_rational("+4/6") == q(2, 3));
  CHECK(parse_rational("1E2") == 100);
  CHECK_THROWS_AS(parse_rational(""), InvalidArgument);
  CHECK_THROWS_AS(parse_rational("1/0"), InvalidArgument);
  CHECK_THROWS_AS(parse_rational("abc"), InvalidArgument);
  CHECK_THROWS_AS(parse_rational("1e99999"), InvalidArgument);
  CHECK(to_string(q(-3, 4)) == "-3/4");
  CHECK(to_string(q(5)) == "5");
  CHECK(exact_rational(0.5) == q(1, 2));
  CHECK(exact_rational(-3.0) == -3);
  CHECK(exact_rational(0.1) != q(1, 10));
  CHECK(to_double(exact_rational(0.1)) == 0.1);
  CHECK_THROWS_AS(exact_rational(INFINITY), InvalidArgument);
}

TEST_CASE("band parsing and validation") {
  const auto b = ExactBands::parse("0 1; 5 6");
  REQUIRE(b.bands.size() == 2);
  CHECK(b.bands[1].lo == 5);
  CHECK(ExactBands::parse(b.to_string()) == b);
  CHECK_THROWS_AS(ExactBands::parse("0 1 2"), InvalidArgument);
  CHECK_THROWS_AS(ExactBands::parse("5 6; 0 1"), InvalidArgument);
  CHECK_THROWS_AS(ExactBands::parse("0 2; 1 3"), InvalidArgument);
  CHECK_THROWS_AS(ExactBands::parse("1 0"), InvalidArgument);

  BandStructure bs;
  bs.bands = {{-2, 3}, {7, 12}};
  const auto e = ExactBands::from(bs);
  CHECK(e.bands[0].lo == -2);
  CHECK(e.bands[1].hi == 12);
}

TEST_CASE("sigma is the cartesian product of the bands") {
  const auto one = ExactBands::parse("0 1");
  CHECK(build_sigma(one, one).rectangles.size() == 1);
  const auto s = fixture();
  REQUIRE(s.rectangles.size() == 4);
  for (const auto& r : s.rectangles) {
    CHECK(r.lower_left() == Corner{s.plus.bands[r.i].lo, s.minus.bands[r.j].lo});
    CHECK(r.top_right() == Corner{s.plus.bands[r.i].hi, s.minus.bands[r.j].hi});
  }
  CHECK(s.corners().size() == 16);
  CHECK(s.contains({q(1, 2), q(11, 2)}));
  CHECK_FALSE(s.contains(at(3, 0)));
  CHECK(s.is_corner(at(6, 1)));
  CHECK_FALSE(s.is_corner({q(1, 2), q(0)}));
}

TEST_CASE("classify_corner on the two-band fixture") {
  const auto s = fixture();

  const auto origin = classify_corner(s, at(0, 0));
  CHECK(origin.is_good);
  CHECK(origin.k_set == std::vector<Corner>{at(0, 0)});

  const auto mixed = classify_corner(s, at(5, 0));
  CHECK(mixed.is_good);
  CHECK(mixed.k_set == std::vector<Corner>{at(0, 5), at(5, 0)});

  const auto bad = classify_corner(s, at(1, 0));
  CHECK_FALSE(bad.is_good);
  REQUIRE(bad.witness);
  const auto& wr = s.rectangles[bad.witness->rectangle];
  CHECK(wr.plus_lo == 0);
  CHECK(wr.plus_hi == 1);
  CHECK(wr.minus_lo == 0);
  CHECK(wr.minus_hi == 1);
  CHECK(bad.witness->plus_from == 0);
  CHECK(bad.witness->plus_to == 1);

  CHECK_THROWS_AS(classify_corner(s, at(2, 2)), InvalidArgument);
}

TEST_CASE("ordering condition on the equal-band fixture") {
  const auto b = ExactBands::parse("0 1; 5 6");
  const auto r = theorem23_predicate(b, b);
  CHECK(r.ordering_holds);
  CHECK(r.chain == std::vector<Rational>{0, 2, 5, 7, 10, 12});
  CHECK(r.good_corners == std::vector<Corner>{at(0, 0), at(1, 1), at(5, 5), at(6, 6)});
  std::vector<Corner> extras = r.symmetric_extras;
  std::sort(extras.begin(), extras.end());
  CHECK(extras == std::vector<Corner>{at(0, 5), at(1, 6), at(5, 0), at(6, 1)});
  CHECK(r.cross_checks.size() == 8);
  CHECK(r.all_confirmed);
  for (const auto& c : r.cross_checks) CHECK(c.is_good);
}

TEST_CASE("ordering condition failures") {
  const auto b = ExactBands::parse("0 3; 4 5");
  const auto r = theorem23_predicate(b, b);
  CHECK_FALSE(r.ordering_holds);
  CHECK(r.good_corners.empty());
  const auto one = ExactBands::parse("0 1");
  CHECK_THROWS_AS(theorem23_predicate(one, one), InvalidArgument);
  CHECK_THROWS_AS(theorem23_predicate(ExactBands::parse("0 1; 2 3"), one), InvalidArgument);
}

TEST_CASE("unequal bands get no symmetric extras") {
  const auto p = ExactBands::parse("0 1; 6 7");
  const auto m = ExactBands::parse("0 1; 5 6");
  const auto r = theorem23_predicate(p, m);
  CHECK(r.ordering_holds);
  CHECK(r.symmetric_extras.empty());
  CHECK(r.good_corners.size() == 4);
}

TEST_CASE("classify_corner agrees with the brute-force line walk") {
  CounterRng rng(2024);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    const auto sigma = build_sigma(random_two_bands(rng), random_two_bands(rng));
    for (const auto& c : sigma.corners()) {
      const auto mine = classify_corner(sigma, c);
      const auto ref = oracle::brute_force_corner(sigma, c);
      CHECK(mine.is_good == ref.is_good);
      if (ref.is_good) CHECK(mine.k_set == ref.points);
      ++compared;
    }
  }
  CHECK(compared > 200);
}

TEST_CASE("only lower-left and top-right corners of proper rectangles are good") {
  CounterRng rng(7);
  for (int trial = 0; trial < 40; ++trial) {
    auto p = random_two_bands(rng);
    auto m = random_two_bands(rng);
    bool proper = true;
    for (const auto* b : {&p, &m})
      for (const auto& iv : b->bands) proper = proper && iv.lo < iv.hi;
    if (!proper) continue;
    const auto sigma = build_sigma(p, m);
    for (const auto& r : sigma.rectangles)
      for (const Corner& c : {r.lower_right(), r.top_left()}) CHECK_FALSE(classify_corner(sigma, c).is_good);
  }
}

TEST_CASE("strip cover squares on the fixture") {
  const auto s = fixture();
  const auto a = q(1, 10);

  const auto origin = strip_cover(s, at(0, 0), a);
  REQUIRE(origin.squares.size() == 1);
  CHECK(origin.squares[0].plus_lo == 0);
  CHECK(origin.squares[0].plus_hi == q(1, 5));
  CHECK(origin.squares[0].minus_lo == 0);
  CHECK(origin.squares[0].minus_hi == q(1, 5));
  CHECK(origin.contained);

  const auto mixed = strip_cover(s, at(5, 0), a);
  REQUIRE(mixed.squares.size() == 2);
  std::vector<Corner> anchors;
  for (const auto& sq : mixed.squares) anchors.push_back(sq.anchor);
  std::sort(anchors.begin(), anchors.end());
  CHECK(anchors == std::vector<Corner>{at(0, 5), at(5, 0)});
  CHECK(mixed.contained);

  const auto top = strip_cover(s, at(6, 6), a);
  REQUIRE(top.squares.size() == 1);
  CHECK(top.squares[0].plus_lo == q(29, 5));
  CHECK(top.squares[0].plus_hi == 6);
  CHECK(top.contained);

  CHECK_THROWS_AS(strip_cover(s, at(1, 0), a), InvalidArgument);
  CHECK_THROWS_AS(strip_cover(s, at(0, 0), q(0)), InvalidArgument);
}

TEST_CASE("strip cover containment agrees with lattice sampling") {
  const auto s = fixture();
  const auto b = ExactBands::parse("0 1; 5 6");
  const auto r = theorem23_predicate(b, b);
  for (const auto& a : {q(1, 100), q(1, 10), q(1, 2)}) {
    std::vector<Corner> all = r.good_corners;
    all.insert(all.end(), r.symmetric_extras.begin(), r.symmetric_extras.end());
    for (const auto& c : all) {
      const auto cover = strip_cover(s, c, a);
      CHECK(cover.contained);
      CHECK_FALSE(oracle::sample_strip_cover(s, c, a, cover.squares, 8));
    }
  }
}

TEST_CASE("a strip wider than the band gaps yields a counterexample") {
  const auto s = fixture();
  // |s - 5| <= 3 reaches the corner (1, 1) of [0,1]^2, far from both squares
  const auto cover = strip_cover(s, at(5, 0), q(3));
  CHECK_FALSE(cover.contained);
  REQUIRE(cover.counterexample);
  const Corner& p = *cover.counterexample;
  CHECK(s.contains(p));
  CHECK(p.sum() >= 2);
  for (const auto& sq : cover.squares)
    CHECK_FALSE((sq.plus_lo <= p.plus && p.plus <= sq.plus_hi && sq.minus_lo <= p.minus && p.minus <= sq.minus_hi));
  CHECK(oracle::sample_strip_cover(s, at(5, 0), q(3), cover.squares, 24));
}

TEST_CASE("corner bound sums the smaller window masses") {
  EmpiricalMeasure1D plus({{0.0, 0.1}, {20.0, 0.9}}, Estimator::CountPerVolume);
  EmpiricalMeasure1D minus({{0.0, 0.2}, {20.0, 0.8}}, Estimator::CountPerVolume);
  CHECK(theorem22_bound({at(0, 0)}, plus, minus, 0.1) == doctest::Approx(0.1));

  EmpiricalMeasure1D plus2({{0.0, 0.1}, {5.0, 0.05}, {20.0, 0.85}}, Estimator::CountPerVolume);
  EmpiricalMeasure1D minus2({{0.0, 0.2}, {5.0, 0.3}, {20.0, 0.5}}, Estimator::CountPerVolume);
  CHECK(theorem22_bound({at(0, 0), at(5, 5)}, plus2, minus2, 0.1) == doctest::Approx(0.15));

  // windows are open: atoms exactly 2a away do not count
  EmpiricalMeasure1D far({{0.2, 1.0}}, Estimator::CountPerVolume);
  CHECK(theorem22_bound({at(0, 0)}, far, far, 0.1) == 0.0);
  CHECK_THROWS_AS(theorem22_bound({}, plus, minus, 0.1), InvalidArgument);
}
