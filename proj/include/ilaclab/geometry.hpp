#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "ilaclab/lattice.hpp"
#include "ilaclab/spectral.hpp"

namespace ilac {

using Rational = boost::multiprecision::cpp_rational;

/// The exact binary value of a finite double.
Rational exact_rational(double x);
/// Accepts integers, fractions "p/q" and decimals with optional exponent,
/// e.g. "3", "-1/2", "0.1", "2.5e-3". Decimals are read exactly.
Rational parse_rational(std::string_view text);
std::string to_string(const Rational& r);
double to_double(const Rational& r);

struct ExactInterval {
  Rational lo;
  Rational hi;
  friend bool operator==(const ExactInterval&, const ExactInterval&) = default;
};

/// Band edges held exactly. Bands are sorted, pairwise disjoint, lo <= hi.
struct ExactBands {
  std::vector<ExactInterval> bands;

  void validate() const;
  static ExactBands from(const BandStructure& bands);
  /// "lo hi; lo hi; ..." with each number in parse_rational syntax.
  static ExactBands parse(std::string_view text);
  std::string to_string() const;

  friend bool operator==(const ExactBands&, const ExactBands&) = default;
};

/// A point of the (lambda+, lambda-) plane.
struct Corner {
  Rational plus;
  Rational minus;

  Rational sum() const { return plus + minus; }
  friend bool operator==(const Corner&, const Corner&) = default;
  friend bool operator<(const Corner& a, const Corner& b) {
    return a.plus < b.plus || (a.plus == b.plus && a.minus < b.minus);
  }
};

std::string to_string(const Corner& c);

/// R_ij = [a_i+, b_i+] x [a_j-, b_j-].
struct BandRectangle {
  Rational plus_lo, plus_hi;
  Rational minus_lo, minus_hi;
  std::size_t i = 0;  // band index on the + side
  std::size_t j = 0;  // band index on the - side

  Corner lower_left() const { return {plus_lo, minus_lo}; }
  Corner top_right() const { return {plus_hi, minus_hi}; }
  Corner lower_right() const { return {plus_hi, minus_lo}; }
  Corner top_left() const { return {plus_lo, minus_hi}; }
  bool is_corner(const Corner& c) const;
  bool contains(const Corner& c) const;
  /// Zero width on either axis (a segment or a point).
  bool degenerate() const { return plus_lo == plus_hi || minus_lo == minus_hi; }
};

/// The support Sigma as the union of all band rectangles.
struct RectangleSet {
  std::vector<BandRectangle> rectangles;
  ExactBands plus;
  ExactBands minus;

  bool is_corner(const Corner& c) const;
  bool contains(const Corner& c) const;
  /// Every rectangle corner, sorted and without duplicates.
  std::vector<Corner> corners() const;
};

RectangleSet build_sigma(const ExactBands& plus, const ExactBands& minus);

/// A rectangle meeting the line in more than finitely many points, or in a
/// point that is not one of its corners.
struct CornerWitness {
  std::size_t rectangle = 0;
  Rational plus_from;  // lambda+ range of the intersection
  Rational plus_to;
};

struct GoodCornerReport {
  Corner corner;
  bool is_good = false;
  /// Rectangle corners on the line lambda+ + lambda- = c + d.
  std::vector<Corner> k_set;
  std::optional<CornerWitness> witness;
};

/// Exact classification of a corner by intersecting the anti-diagonal line
/// through it with every rectangle. Throws InvalidArgument when `corner` is
/// not a corner of any rectangle.
GoodCornerReport classify_corner(const RectangleSet& sigma, const Corner& corner);

struct Theorem23Result {
  bool ordering_holds = false;
  /// The six chain values, in order.
  std::vector<Rational> chain;
  std::vector<Corner> good_corners;
  std::vector<Corner> symmetric_extras;
  /// classify_corner on every returned corner, good_corners first.
  std::vector<GoodCornerReport> cross_checks;
  bool all_confirmed = false;
};

/// Two-band ordering condition
///   a1+ + a1- < b1+ + b1- < max(a2+ + a1-, a1+ + a2-)
///     < max(b2+ + b1-, b1+ + b2-) < a2+ + a2- < b2+ + b2-
/// and the corners it certifies. Throws InvalidArgument unless both sides
/// have exactly two bands.
Theorem23Result theorem23_predicate(const ExactBands& plus, const ExactBands& minus);

struct Square {
  Rational plus_lo, plus_hi;
  Rational minus_lo, minus_hi;
  Corner anchor;
  friend bool operator==(const Square&, const Square&) = default;
};

struct StripCoverResult {
  std::vector<Square> squares;
  bool contained = false;
  std::optional<Corner> counterexample;
};

/// Squares of side 2a anchored at each corner of K, pointing into the
/// rectangle that owns the corner (up-right from a lower-left corner,
/// down-left from a top-right corner), and an exact check that
/// {|lambda+ + lambda- - (c + d)| <= a} intersected with Sigma lies in their
/// union. Throws InvalidArgument for a bad corner or a <= 0.
StripCoverResult strip_cover(const RectangleSet& sigma, const Corner& corner, const Rational& a);

/// Sum over K of min(n+((c - 2a, c + 2a)), n-((d - 2a, d + 2a))).
double theorem22_bound(const std::vector<Corner>& k_set, const EmpiricalMeasure1D& dos_plus,
                       const EmpiricalMeasure1D& dos_minus, double a);

}  // namespace ilac
