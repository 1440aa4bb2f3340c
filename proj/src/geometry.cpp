#include "ilaclab/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "ilaclab/error.hpp"

namespace ilac {

using boost::multiprecision::cpp_int;

// ---------------------------------------------------------------------------
// Rational helpers

Rational exact_rational(double x) {
  if (!std::isfinite(x)) throw InvalidArgument("cannot represent a non-finite value exactly");
  if (x == 0.0) return Rational(0);
  int exponent = 0;
  const double mantissa = std::frexp(x, &exponent);  // x = mantissa * 2^exponent
  const auto scaled = static_cast<long long>(std::ldexp(mantissa, 53));
  cpp_int num = scaled;
  const int shift = exponent - 53;
  if (shift >= 0) return Rational(num << shift);
  return Rational(num, cpp_int(1) << -shift);
}

namespace {

cpp_int parse_integer(std::string_view digits, std::string_view whole) {
  if (digits.empty()) throw InvalidArgument("malformed number '" + std::string(whole) + "'");
  for (char ch : digits)
    if (!std::isdigit(static_cast<unsigned char>(ch)))
      throw InvalidArgument("malformed number '" + std::string(whole) + "'");
  return cpp_int(std::string(digits));
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

}  // namespace

Rational parse_rational(std::string_view text) {
  const std::string_view whole = trim(text);
  std::string_view s = whole;
  bool negative = false;
  if (!s.empty() && (s.front() == '-' || s.front() == '+')) {
    negative = s.front() == '-';
    s.remove_prefix(1);
  }
  Rational value;
  if (const auto slash = s.find('/'); slash != std::string_view::npos) {
    const cpp_int num = parse_integer(trim(s.substr(0, slash)), whole);
    const cpp_int den = parse_integer(trim(s.substr(slash + 1)), whole);
    if (den == 0) throw InvalidArgument("zero denominator in '" + std::string(whole) + "'");
    value = Rational(num, den);
  } else {
    long exponent = 0;
    if (const auto e = s.find_first_of("eE"); e != std::string_view::npos) {
      std::string_view exp_text = s.substr(e + 1);
      bool exp_negative = false;
      if (!exp_text.empty() && (exp_text.front() == '-' || exp_text.front() == '+')) {
        exp_negative = exp_text.front() == '-';
        exp_text.remove_prefix(1);
      }
      const cpp_int mag = parse_integer(exp_text, whole);
      if (mag > 4096) throw InvalidArgument("exponent too large in '" + std::string(whole) + "'");
      exponent = mag.convert_to<long>();
      if (exp_negative) exponent = -exponent;
      s = s.substr(0, e);
    }
    std::string digits;
    if (const auto dot = s.find('.'); dot != std::string_view::npos) {
      const std::string_view int_part = s.substr(0, dot);
      const std::string_view frac_part = s.substr(dot + 1);
      if (int_part.empty() && frac_part.empty())
        throw InvalidArgument("malformed number '" + std::string(whole) + "'");
      digits = std::string(int_part) + std::string(frac_part);
      exponent -= static_cast<long>(frac_part.size());
    } else {
      digits = std::string(s);
    }
    const cpp_int mantissa = parse_integer(digits, whole);
    const cpp_int ten_power = boost::multiprecision::pow(cpp_int(10), static_cast<unsigned>(std::labs(exponent)));
    value = exponent >= 0 ? Rational(mantissa * ten_power) : Rational(mantissa, ten_power);
  }
  return negative ? Rational(-value) : value;
}

std::string to_string(const Rational& r) {
  const cpp_int num = boost::multiprecision::numerator(r);
  const cpp_int den = boost::multiprecision::denominator(r);
  if (den == 1) return num.str();
  return num.str() + "/" + den.str();
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

std::string to_string(const Corner& c) { return "(" + to_string(c.plus) + ", " + to_string(c.minus) + ")"; }

// ---------------------------------------------------------------------------
// Bands and rectangles

void ExactBands::validate() const {
  if (bands.empty()) throw InvalidArgument("band structure is empty");
  for (std::size_t k = 0; k < bands.size(); ++k) {
    if (bands[k].lo > bands[k].hi) throw InvalidArgument("band with lo > hi");
    if (k > 0 && !(bands[k - 1].hi < bands[k].lo))
      throw InvalidArgument("bands must be sorted and pairwise disjoint");
  }
}

ExactBands ExactBands::from(const BandStructure& structure) {
  ExactBands out;
  for (const auto& b : structure.bands) out.bands.push_back({exact_rational(b.lo), exact_rational(b.hi)});
  out.validate();
  return out;
}

ExactBands ExactBands::parse(std::string_view text) {
  ExactBands out;
  std::string_view rest = text;
  while (!trim(rest).empty()) {
    const auto semi = rest.find(';');
    const std::string_view item = trim(rest.substr(0, semi));
    rest = semi == std::string_view::npos ? std::string_view{} : rest.substr(semi + 1);
    if (item.empty()) continue;
    std::istringstream fields{std::string(item)};
    std::string lo, hi, extra;
    if (!(fields >> lo >> hi) || (fields >> extra))
      throw InvalidArgument("band entry '" + std::string(item) + "' needs exactly two numbers");
    out.bands.push_back({parse_rational(lo), parse_rational(hi)});
  }
  out.validate();
  return out;
}

std::string ExactBands::to_string() const {
  std::string s;
  for (std::size_t k = 0; k < bands.size(); ++k) {
    if (k) s += "; ";
    s += ilac::to_string(bands[k].lo) + " " + ilac::to_string(bands[k].hi);
  }
  return s;
}

bool BandRectangle::is_corner(const Corner& c) const {
  return (c.plus == plus_lo || c.plus == plus_hi) && (c.minus == minus_lo || c.minus == minus_hi);
}

bool BandRectangle::contains(const Corner& c) const {
  return plus_lo <= c.plus && c.plus <= plus_hi && minus_lo <= c.minus && c.minus <= minus_hi;
}

bool RectangleSet::is_corner(const Corner& c) const {
  return std::any_of(rectangles.begin(), rectangles.end(), [&](const BandRectangle& r) { return r.is_corner(c); });
}

bool RectangleSet::contains(const Corner& c) const {
  return std::any_of(rectangles.begin(), rectangles.end(), [&](const BandRectangle& r) { return r.contains(c); });
}

std::vector<Corner> RectangleSet::corners() const {
  std::vector<Corner> out;
  for (const auto& r : rectangles) {
    out.push_back(r.lower_left());
    out.push_back(r.lower_right());
    out.push_back(r.top_left());
    out.push_back(r.top_right());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

RectangleSet build_sigma(const ExactBands& plus, const ExactBands& minus) {
  plus.validate();
  minus.validate();
  RectangleSet sigma{{}, plus, minus};
  for (std::size_t i = 0; i < plus.bands.size(); ++i)
    for (std::size_t j = 0; j < minus.bands.size(); ++j)
      sigma.rectangles.push_back({plus.bands[i].lo, plus.bands[i].hi, minus.bands[j].lo, minus.bands[j].hi, i, j});
  return sigma;
}

// ---------------------------------------------------------------------------
// Good corners

GoodCornerReport classify_corner(const RectangleSet& sigma, const Corner& corner) {
  if (!sigma.is_corner(corner))
    throw InvalidArgument("point " + to_string(corner) + " is not a corner of any rectangle");
  const Rational s = corner.sum();
  GoodCornerReport report{corner, true, {}, std::nullopt};
  std::optional<CornerWitness> stray_point;

  for (std::size_t k = 0; k < sigma.rectangles.size(); ++k) {
    const auto& r = sigma.rectangles[k];
    // lambda+ range of the line inside r
    const Rational from = std::max(r.plus_lo, Rational(s - r.minus_hi));
    const Rational to = std::min(r.plus_hi, Rational(s - r.minus_lo));
    if (from > to) continue;
    if (from < to) {
      report.is_good = false;
      if (!report.witness) report.witness = CornerWitness{k, from, to};
      continue;
    }
    const Corner hit{from, s - from};
    if (r.is_corner(hit)) {
      report.k_set.push_back(hit);
    } else {
      report.is_good = false;
      if (!stray_point) stray_point = CornerWitness{k, from, to};
    }
  }
  if (!report.is_good && !report.witness) report.witness = stray_point;
  std::sort(report.k_set.begin(), report.k_set.end());
  report.k_set.erase(std::unique(report.k_set.begin(), report.k_set.end()), report.k_set.end());
  return report;
}

Theorem23Result theorem23_predicate(const ExactBands& plus, const ExactBands& minus) {
  if (plus.bands.size() != 2 || minus.bands.size() != 2)
    throw InvalidArgument("theorem23_predicate needs exactly two bands on each side");
  plus.validate();
  minus.validate();
  const Rational& a1p = plus.bands[0].lo;
  const Rational& b1p = plus.bands[0].hi;
  const Rational& a2p = plus.bands[1].lo;
  const Rational& b2p = plus.bands[1].hi;
  const Rational& a1m = minus.bands[0].lo;
  const Rational& b1m = minus.bands[0].hi;
  const Rational& a2m = minus.bands[1].lo;
  const Rational& b2m = minus.bands[1].hi;

  Theorem23Result out;
  out.chain = {a1p + a1m,
               b1p + b1m,
               std::max(Rational(a2p + a1m), Rational(a1p + a2m)),
               std::max(Rational(b2p + b1m), Rational(b1p + b2m)),
               a2p + a2m,
               b2p + b2m};
  out.ordering_holds = true;
  for (std::size_t k = 0; k + 1 < out.chain.size(); ++k)
    if (!(out.chain[k] < out.chain[k + 1])) out.ordering_holds = false;
  if (!out.ordering_holds) return out;

  out.good_corners = {{a1p, a1m}, {b1p, b1m}, {a2p, a2m}, {b2p, b2m}};
  if (plus == minus) out.symmetric_extras = {{a2p, a1m}, {a1p, a2m}, {b2p, b1m}, {b1p, b2m}};

  const RectangleSet sigma = build_sigma(plus, minus);
  out.all_confirmed = true;
  for (const auto* list : {&out.good_corners, &out.symmetric_extras}) {
    for (const auto& c : *list) {
      out.cross_checks.push_back(classify_corner(sigma, c));
      out.all_confirmed = out.all_confirmed && out.cross_checks.back().is_good;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strip cover

namespace {

using Polygon = std::vector<Corner>;

// Keeps the part of a convex polygon where coef_plus * x + coef_minus * y <= bound.
Polygon clip(const Polygon& poly, const Rational& coef_plus, const Rational& coef_minus, const Rational& bound) {
  Polygon out;
  if (poly.empty()) return out;
  auto value = [&](const Corner& p) { return Rational(coef_plus * p.plus + coef_minus * p.minus - bound); };
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Corner& cur = poly[k];
    const Corner& next = poly[(k + 1) % poly.size()];
    const Rational fc = value(cur);
    const Rational fn = value(next);
    if (fc <= 0) out.push_back(cur);
    if ((fc < 0 && fn > 0) || (fc > 0 && fn < 0)) {
      const Rational t = fc / (fc - fn);
      out.push_back({cur.plus + t * (next.plus - cur.plus), cur.minus + t * (next.minus - cur.minus)});
    }
  }
  return out;
}

Polygon clip_box(Polygon poly, const Rational& x0, const Rational& x1, const Rational& y0, const Rational& y1) {
  poly = clip(poly, Rational(1), Rational(0), x1);
  poly = clip(poly, Rational(-1), Rational(0), -x0);
  poly = clip(poly, Rational(0), Rational(1), y1);
  poly = clip(poly, Rational(0), Rational(-1), -y0);
  return poly;
}

bool in_square(const Square& q, const Corner& p) {
  return q.plus_lo <= p.plus && p.plus <= q.plus_hi && q.minus_lo <= p.minus && p.minus <= q.minus_hi;
}

std::vector<Rational> unique_sorted(std::vector<Rational> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

}  // namespace

StripCoverResult strip_cover(const RectangleSet& sigma, const Corner& corner, const Rational& a) {
  if (a <= 0) throw InvalidArgument("strip half-width must be positive");
  const GoodCornerReport report = classify_corner(sigma, corner);
  if (!report.is_good) throw InvalidArgument("strip_cover needs a good corner; " + to_string(corner) + " is bad");

  StripCoverResult out;
  const Rational side = 2 * a;
  for (const auto& k : report.k_set) {
    for (const auto& r : sigma.rectangles) {
      if (k == r.lower_left())
        out.squares.push_back({k.plus, k.plus + side, k.minus, k.minus + side, k});
      if (k == r.top_right())
        out.squares.push_back({k.plus - side, k.plus, k.minus - side, k.minus, k});
    }
  }
  std::vector<Square> unique;
  for (const auto& q : out.squares)
    if (std::find(unique.begin(), unique.end(), q) == unique.end()) unique.push_back(q);
  out.squares = std::move(unique);

  const Rational s = corner.sum();
  const Rational strip_hi = s + a;
  const Rational strip_lo = s - a;

  // Within a cell bounded by consecutive polygon and square coordinates,
  // membership in every closed square is the same on the whole open face
  // that holds the relative interior of (polygon ∩ cell); testing the vertex
  // average of that piece is therefore exact.
  for (const auto& r : sigma.rectangles) {
    Polygon piece = {r.lower_left(), r.lower_right(), r.top_right(), r.top_left()};
    piece = clip(piece, Rational(1), Rational(1), strip_hi);
    piece = clip(piece, Rational(-1), Rational(-1), -strip_lo);
    if (piece.empty()) continue;

    std::vector<Rational> xs, ys;
    for (const auto& p : piece) {
      xs.push_back(p.plus);
      ys.push_back(p.minus);
    }
    for (const auto& q : out.squares) {
      xs.insert(xs.end(), {q.plus_lo, q.plus_hi});
      ys.insert(ys.end(), {q.minus_lo, q.minus_hi});
    }
    xs = unique_sorted(std::move(xs));
    ys = unique_sorted(std::move(ys));
    if (xs.size() == 1) xs.push_back(xs.front());
    if (ys.size() == 1) ys.push_back(ys.front());

    for (std::size_t ix = 0; ix + 1 < xs.size(); ++ix) {
      for (std::size_t iy = 0; iy + 1 < ys.size(); ++iy) {
        const Polygon cell_piece = clip_box(piece, xs[ix], xs[ix + 1], ys[iy], ys[iy + 1]);
        if (cell_piece.empty()) continue;
        Corner probe{0, 0};
        for (const auto& p : cell_piece) {
          probe.plus += p.plus;
          probe.minus += p.minus;
        }
        probe.plus /= static_cast<long>(cell_piece.size());
        probe.minus /= static_cast<long>(cell_piece.size());
        const bool covered =
            std::any_of(out.squares.begin(), out.squares.end(), [&](const Square& q) { return in_square(q, probe); });
        if (!covered) {
          out.contained = false;
          out.counterexample = probe;
          return out;
        }
      }
    }
  }
  out.contained = true;
  return out;
}

double theorem22_bound(const std::vector<Corner>& k_set, const EmpiricalMeasure1D& dos_plus,
                       const EmpiricalMeasure1D& dos_minus, double a) {
  if (k_set.empty()) throw InvalidArgument("theorem22_bound needs a nonempty corner set");
  double bound = 0.0;
  for (const auto& k : k_set) {
    const double c = to_double(k.plus);
    const double d = to_double(k.minus);
    const double np = dos_plus.mass(Interval::open(c - 2.0 * a, c + 2.0 * a));
    const double nm = dos_minus.mass(Interval::open(d - 2.0 * a, d + 2.0 * a));
    bound += std::min(np, nm);
  }
  return bound;
}

}  // namespace ilac
