#include "ilaclab/covariance.hpp"

#include <algorithm>
#include <cmath>

#include "ilaclab/eigen.hpp"
#include "ilaclab/error.hpp"
#include "ilaclab/rng.hpp"

namespace ilac {

namespace {

constexpr std::size_t kMaxTorusSites = 4096;

BoxSpec torus_box(int dimension, int modulus) {
  if (modulus < 3) throw InvalidArgument("torus modulus must be at least 3");
  BoxSpec box{dimension, modulus, Boundary::Periodic, kMaxTorusSites};
  box.validate();
  return box;
}

}  // namespace

TorusSpace::TorusSpace(int dimension, int modulus)
    : box_(torus_box(dimension, modulus)), size_(box_.site_count()), laplacian_(build_laplacian(box_)) {}

std::size_t TorusSpace::translate(std::size_t x, std::size_t n) const {
  auto cx = box_.coords(x);
  const auto cn = box_.coords(n);
  for (std::size_t k = 0; k < cx.size(); ++k) cx[k] = (cx[k] + cn[k]) % box_.side_length;
  return box_.index(cx);
}

std::size_t TorusSpace::negate(std::size_t n) const {
  auto c = box_.coords(n);
  for (int& v : c) v = (box_.side_length - v) % box_.side_length;
  return box_.index(c);
}

Matrix TorusSpace::shift(std::size_t n) const {
  Matrix u(size_, size_);
  const std::size_t minus_n = negate(n);
  for (std::size_t x = 0; x < size_; ++x) u(x, translate(x, minus_n)) = 1.0;
  return u;
}

Matrix TorusSpace::projection() const {
  Matrix p(size_, size_);
  p(0, 0) = 1.0;
  return p;
}

Matrix TorusSpace::projection_conjugated(std::size_t n) const {
  const Matrix u = shift(n);
  return multiply(multiply(transpose(u), projection()), u);
}

Matrix TorusSpace::projection_tilde(std::size_t n) const {
  const Matrix u = shift(n);
  return multiply(multiply(u, projection()), transpose(u));
}

double TorusSpace::partition_of_unity_error() const {
  Matrix sum(size_, size_), sum_tilde(size_, size_);
  for (std::size_t n = 0; n < size_; ++n) {
    sum = add(sum, projection_conjugated(n));
    sum_tilde = add(sum_tilde, projection_tilde(n));
  }
  const Matrix id = Matrix::identity(size_);
  return std::max(max_abs_diff(sum, id), max_abs_diff(sum_tilde, id));
}

double TorusSpace::group_law_error() const {
  double worst = max_abs_diff(shift(0), Matrix::identity(size_));
  for (std::size_t m = 0; m < size_; ++m) {
    const Matrix um = shift(m);
    for (std::size_t n = 0; n < size_; ++n)
      worst = std::max(worst, max_abs_diff(shift(translate(m, n)), multiply(um, shift(n))));
  }
  return worst;
}

std::vector<double> TorusSpace::shift_potential(const std::vector<double>& omega, std::size_t n) const {
  if (omega.size() != size_) throw DimensionMismatch("potential size does not match the torus");
  std::vector<double> out(size_);
  for (std::size_t x = 0; x < size_; ++x) out[x] = omega[translate(x, n)];
  return out;
}

Matrix TorusSpace::conjugate(const Matrix& a, std::size_t n) const {
  if (a.rows() != size_ || a.cols() != size_) throw DimensionMismatch("operator size does not match the torus");
  // (U_n^* A U_n)(x, y) = A(x + n, y + n)
  std::vector<std::size_t> moved(size_);
  for (std::size_t x = 0; x < size_; ++x) moved[x] = translate(x, n);
  Matrix out(size_, size_);
  for (std::size_t x = 0; x < size_; ++x)
    for (std::size_t y = 0; y < size_; ++y) out(x, y) = a(moved[x], moved[y]);
  return out;
}

std::string to_string(BoundedFunction f) {
  switch (f) {
    case BoundedFunction::Exp: return "exp";
    case BoundedFunction::Cos: return "cos";
    case BoundedFunction::Lorentzian: return "lorentzian";
    case BoundedFunction::Tanh: return "tanh";
  }
  return "exp";
}

double apply(BoundedFunction f, double parameter, double x) {
  switch (f) {
    case BoundedFunction::Exp: return std::exp(-parameter * x);
    case BoundedFunction::Cos: return std::cos(parameter * x);
    case BoundedFunction::Lorentzian: return 1.0 / (1.0 + (parameter * x) * (parameter * x));
    case BoundedFunction::Tanh: return std::tanh(parameter * x);
  }
  return 0.0;
}

Recipe Recipe::identity() { return Recipe{}; }

Recipe Recipe::laplacian() {
  Recipe r;
  r.kind = Kind::Laplacian;
  return r;
}

Recipe Recipe::multiplication(std::vector<double> coefficients) {
  Recipe r;
  r.kind = Kind::Multiplication;
  r.coefficients = std::move(coefficients);
  return r;
}

Recipe Recipe::function_of_h(BoundedFunction f, double parameter, Sign sign) {
  Recipe r;
  r.kind = Kind::FunctionOfH;
  r.function = f;
  r.parameter = parameter;
  r.sign = sign;
  return r;
}

Recipe Recipe::spectral_projection(Interval interval, Sign sign) {
  Recipe r;
  r.kind = Kind::SpectralProjection;
  r.interval = interval;
  r.sign = sign;
  return r;
}

Recipe Recipe::product(std::vector<Recipe> factors) {
  if (factors.empty()) throw InvalidArgument("product recipe needs at least one factor");
  Recipe r;
  r.kind = Kind::Product;
  r.factors = std::move(factors);
  return r;
}

Recipe Recipe::gram(Recipe factor) {
  Recipe r;
  r.kind = Kind::Gram;
  r.factors.push_back(std::move(factor));
  return r;
}

Recipe Recipe::fixed_matrix(Matrix m) {
  Recipe r;
  r.kind = Kind::Fixed;
  r.fixed = std::move(m);
  return r;
}

std::string Recipe::describe() const {
  auto num = [](double v) {
    std::string s = std::to_string(v);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
  };
  switch (kind) {
    case Kind::Identity: return "I";
    case Kind::Laplacian: return "Lap";
    case Kind::Multiplication: {
      std::string s = "mult[";
      for (std::size_t k = 0; k < coefficients.size(); ++k) s += (k ? "," : "") + num(coefficients[k]);
      return s + "]";
    }
    case Kind::FunctionOfH:
      return to_string(function) + "(" + num(parameter) + "*H" + (sign == Sign::Plus ? "+" : "-") + ")";
    case Kind::SpectralProjection:
      return std::string("E") + (sign == Sign::Plus ? "+" : "-") + (interval.lo_closed ? "[" : "(") +
             num(interval.lo) + "," + num(interval.hi) + (interval.hi_closed ? "]" : ")");
    case Kind::Product: {
      std::string s;
      for (std::size_t k = 0; k < factors.size(); ++k) s += (k ? "*" : "") + factors[k].describe();
      return "(" + s + ")";
    }
    case Kind::Gram: return "gram(" + factors.front().describe() + ")";
    case Kind::Fixed: return "fixed";
  }
  return "?";
}

bool Recipe::positive() const {
  switch (kind) {
    case Kind::Identity:
    case Kind::SpectralProjection:
    case Kind::Gram: return true;
    case Kind::FunctionOfH: return function == BoundedFunction::Exp || function == BoundedFunction::Lorentzian;
    default: return false;
  }
}

namespace {

Matrix hamiltonian(const TorusSpace& torus, const std::vector<double>& omega, Sign sign) {
  Matrix h = torus.laplacian();
  const double s = sign == Sign::Plus ? 1.0 : -1.0;
  for (std::size_t x = 0; x < torus.size(); ++x) h(x, x) += s * omega[x];
  return h;
}

template <class F>
Matrix spectral_function(const EigenDecomposition& dec, F weight) {
  const std::size_t n = dec.size();
  Matrix out(n, n);
  for (std::size_t k = 0; k < n; ++k) {
    const double w = weight(dec.values()[k]);
    if (w == 0.0) continue;
    const auto v = dec.eigenvector(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w * v[i];
      auto row = out.row(i);
      for (std::size_t j = 0; j < n; ++j) row[j] += wi * v[j];
    }
  }
  return out;
}

}  // namespace

Matrix realize(const Recipe& recipe, const TorusSpace& torus, const std::vector<double>& omega) {
  if (omega.size() != torus.size()) throw DimensionMismatch("potential size does not match the torus");
  const std::size_t n = torus.size();
  switch (recipe.kind) {
    case Recipe::Kind::Identity: return Matrix::identity(n);
    case Recipe::Kind::Laplacian: return torus.laplacian();
    case Recipe::Kind::Multiplication: {
      Matrix m(n, n);
      for (std::size_t x = 0; x < n; ++x) {
        double v = 0.0;
        for (auto it = recipe.coefficients.rbegin(); it != recipe.coefficients.rend(); ++it) v = v * omega[x] + *it;
        m(x, x) = v;
      }
      return m;
    }
    case Recipe::Kind::FunctionOfH: {
      const auto dec = eig_symmetric(hamiltonian(torus, omega, recipe.sign));
      return spectral_function(dec, [&](double x) { return apply(recipe.function, recipe.parameter, x); });
    }
    case Recipe::Kind::SpectralProjection: {
      const auto dec = eig_symmetric(hamiltonian(torus, omega, recipe.sign));
      return spectral_function(dec, [&](double x) { return recipe.interval.contains(x) ? 1.0 : 0.0; });
    }
    case Recipe::Kind::Product: {
      Matrix out = realize(recipe.factors.front(), torus, omega);
      for (std::size_t k = 1; k < recipe.factors.size(); ++k)
        out = multiply(out, realize(recipe.factors[k], torus, omega));
      return out;
    }
    case Recipe::Kind::Gram: {
      const Matrix m = realize(recipe.factors.front(), torus, omega);
      return multiply(transpose(m), m);
    }
    case Recipe::Kind::Fixed:
      if (recipe.fixed.rows() != n || recipe.fixed.cols() != n)
        throw DimensionMismatch("fixed operator size does not match the torus");
      return recipe.fixed;
  }
  throw InvalidArgument("unknown recipe kind");
}

double equivariance_error(const Recipe& recipe, const TorusSpace& torus, const std::vector<double>& omega,
                          const std::vector<std::size_t>& shifts) {
  const Matrix base = realize(recipe, torus, omega);
  double worst = 0.0;
  for (std::size_t n : shifts) {
    const Matrix moved = realize(recipe, torus, torus.shift_potential(omega, n));
    worst = std::max(worst, max_abs_diff(moved, torus.conjugate(base, n)));
  }
  return worst;
}

void require_covariant(const Recipe& recipe, const TorusSpace& torus, const std::vector<double>& omega,
                       const std::vector<std::size_t>& shifts) {
  const double scale = std::max(1.0, max_abs(realize(recipe, torus, omega)));
  const double err = equivariance_error(recipe, torus, omega, shifts);
  if (err > 1e-12 * scale)
    throw NotCovariant("family " + recipe.describe() + " is not shift covariant (error " + std::to_string(err) + ")");
}

double orbit_expectation(const std::vector<Recipe>& factors, const TorusSpace& torus,
                         const std::vector<double>& omega) {
  if (factors.empty()) throw InvalidArgument("orbit_expectation needs at least one factor");
  if (omega.size() != torus.size()) throw DimensionMismatch("potential size does not match the torus");
  const std::size_t n = torus.size();
  double total = 0.0;
  std::vector<double> row(n), next(n);
  for (std::size_t s = 0; s < n; ++s) {
    const auto moved = torus.shift_potential(omega, s);
    std::fill(row.begin(), row.end(), 0.0);
    row[0] = 1.0;
    for (const auto& f : factors) {
      const Matrix a = realize(f, torus, moved);
      std::fill(next.begin(), next.end(), 0.0);
      for (std::size_t k = 0; k < n; ++k) {
        if (row[k] == 0.0) continue;
        const auto ak = a.row(k);
        for (std::size_t j = 0; j < n; ++j) next[j] += row[k] * ak[j];
      }
      row.swap(next);
    }
    total += row[0];
  }
  return total / static_cast<double>(n);
}

double trace_per_volume(const std::vector<Recipe>& factors, const TorusSpace& torus,
                        const std::vector<double>& omega) {
  if (factors.empty()) throw InvalidArgument("trace_per_volume needs at least one factor");
  Matrix prod = realize(factors.front(), torus, omega);
  for (std::size_t k = 1; k < factors.size(); ++k) prod = multiply(prod, realize(factors[k], torus, omega));
  return trace(prod) / static_cast<double>(torus.size());
}

namespace {

IdentityCheck make_check(std::string name, double lhs, double rhs) {
  const double diff = std::abs(lhs - rhs);
  return {std::move(name), lhs, rhs, diff, diff <= kIdentityTolerance};
}

}  // namespace

IdentityCheck prop1_identity_check(const Recipe& a, const Recipe& b, const TorusSpace& torus,
                                   const std::vector<double>& omega) {
  const std::vector<std::size_t> shifts{1 % torus.size(), torus.size() / 2};
  require_covariant(a, torus, omega, shifts);
  require_covariant(b, torus, omega, shifts);
  return make_check("trace_commutation", orbit_expectation({a, b}, torus, omega),
                    orbit_expectation({b, a}, torus, omega));
}

Cor2Report cor2_checks(const Recipe& a, const Recipe& b, const Recipe& c, const TorusSpace& torus,
                       const std::vector<double>& omega) {
  Cor2Report out;
  out.cyclic = make_check("cyclic_triple", orbit_expectation({a, b, c}, torus, omega),
                          orbit_expectation({c, a, b}, torus, omega));
  out.positivity_applicable = a.positive() && b.positive();
  if (out.positivity_applicable) {
    out.positivity_value = orbit_expectation({a, b}, torus, omega);
    out.positivity_pass = out.positivity_value >= -kPositivityTolerance;
  }
  return out;
}

IdentityCheck orbit_consistency_check(const Recipe& a, const Recipe& b, const TorusSpace& torus,
                                      const std::vector<double>& omega) {
  return make_check("orbit_vs_trace", orbit_expectation({a, b}, torus, omega),
                    trace_per_volume({a, b}, torus, omega));
}

std::vector<double> random_potential(const TorusSpace& torus, std::uint64_t key, double lo, double hi) {
  std::vector<double> out(torus.size());
  for (std::size_t x = 0; x < out.size(); ++x) out[x] = lo + (hi - lo) * draw_unit(key, x);
  return out;
}

namespace {

Recipe random_leaf(CounterRng& rng, bool spectral) {
  const Sign sign = rng.below(2) == 0 ? Sign::Plus : Sign::Minus;
  if (spectral) {
    const double lo = rng.uniform(-3.5, 2.0);
    const double width = rng.uniform(0.5, 3.0);
    return Recipe::spectral_projection(Interval::open(lo, lo + width), sign);
  }
  switch (rng.below(3)) {
    case 0: return Recipe::multiplication({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    case 1: {
      const auto f = static_cast<BoundedFunction>(rng.below(4));
      const double parameter = rng.uniform(0.3, 1.5);
      return Recipe::function_of_h(f, parameter, sign);
    }
    default: return Recipe::laplacian();
  }
}

}  // namespace

Recipe random_recipe(std::uint64_t key, std::uint64_t salt, bool force_positive) {
  CounterRng rng(mix64(key ^ mix64(salt + 0x9e3779b97f4a7c15ULL)));
  const bool spectral = salt % 4 == 0;
  if (force_positive) {
    if (spectral) return random_leaf(rng, true);
    switch (rng.below(3)) {
      case 0: {
        const auto f = rng.below(2) ? BoundedFunction::Exp : BoundedFunction::Lorentzian;
        const double parameter = rng.uniform(0.3, 1.5);
        const Sign sign = rng.below(2) ? Sign::Plus : Sign::Minus;
        return Recipe::function_of_h(f, parameter, sign);
      }
      case 1: return Recipe::gram(random_leaf(rng, false));
      default: return Recipe::gram(Recipe::product({random_leaf(rng, false), random_leaf(rng, rng.below(2) == 0)}));
    }
  }
  if (spectral) return random_leaf(rng, true);
  switch (rng.below(3)) {
    case 0: return random_leaf(rng, false);
    case 1: return Recipe::product({random_leaf(rng, false), random_leaf(rng, rng.below(2) == 0)});
    default: return Recipe::gram(random_leaf(rng, false));
  }
}

}  // namespace ilac
