#pragma once

#include "constructions.hpp"
#include "morphism.hpp"

namespace natspace {

// Tightest sigma_R dot containing [lo, hi]: largest m, then least n. MaxDot if none.
inline Dot round_hull(const Rational& lo, const Rational& hi) {
  if (lo > hi) throw SpaceError("round_hull: empty hull");
  Rational w = hi - lo;
  if (w > 2) return MaxDot{};
  if (w == 0) throw SpaceError("round_hull: degenerate hull");
  // 2^(1-m) >= w  <=>  m <= 1 - log2(w); start at the bound and step down.
  std::int64_t m = 0;
  while (pow2(1 - (m + 1)) >= w) ++m;
  for (; m >= 0; --m) {
    Rational scale = pow2(m);
    Integer n = ceil_q(hi * scale - 2);
    if (n <= floor_q(lo * scale)) return DyadicInterval{n, static_cast<std::uint64_t>(m)};
  }
  return MaxDot{};
}

// Degenerate hull {c} from an input of exponent m: the middle-half dot at level m.
inline Dot round_point(const Rational& c, std::uint64_t m) {
  return DyadicInterval{floor_q(c * pow2(static_cast<std::int64_t>(m)) - Rational(1, 2)), m};
}

enum class ArithOp { Add, Neg, Mul, Scalar, Min, Max, Abs };

inline bool is_binary(ArithOp op) { return op == ArithOp::Add || op == ArithOp::Mul || op == ArithOp::Min || op == ArithOp::Max; }

inline const char* to_string(ArithOp op) {
  switch (op) {
    case ArithOp::Add: return "add";
    case ArithOp::Neg: return "neg";
    case ArithOp::Mul: return "mul";
    case ArithOp::Scalar: return "scalar";
    case ArithOp::Min: return "min";
    case ArithOp::Max: return "max";
    case ArithOp::Abs: return "abs";
  }
  return "?";
}

inline SpacePtr sigma_R_pair_space() {
  static SpacePtr s = product({shared_space("sigma_R"), shared_space("sigma_R")}, ProductKind::Sigma);
  return s;
}

// Exact image hull of the operation on rational intervals.
inline Interval image_hull(ArithOp op, const Rational& q, const Interval& x, const Interval& y) {
  switch (op) {
    case ArithOp::Add: return {x.lo + y.lo, x.hi + y.hi};
    case ArithOp::Neg: return {-x.hi, -x.lo};
    case ArithOp::Scalar: return q >= 0 ? Interval{q * x.lo, q * x.hi} : Interval{q * x.hi, q * x.lo};
    case ArithOp::Min: return {std::min(x.lo, y.lo), std::min(x.hi, y.hi)};
    case ArithOp::Max: return {std::max(x.lo, y.lo), std::max(x.hi, y.hi)};
    case ArithOp::Abs:
      if (x.lo >= 0) return x;
      if (x.hi <= 0) return {-x.hi, -x.lo};
      return {0, std::max(Rational(-x.lo), x.hi)};
    case ArithOp::Mul: {
      Rational c[4] = {x.lo * y.lo, x.lo * y.hi, x.hi * y.lo, x.hi * y.hi};
      return {*std::min_element(c, c + 4), *std::max_element(c, c + 4)};
    }
  }
  throw SpaceError("unknown op");
}

inline std::size_t bit_length(const Rational& v) {
  Integer z = ceil_q(Rational(abs(v)));
  return z == 0 ? 0 : mpz_sizeinbase(z.get_mpz_t(), 2);
}

// Interval arithmetic on sigma_R: unary ops act on sigma_R, binary ops on
// the sigma product sigma_R x sigma_R. Outputs are hull-rounded.
inline Morphism arith(ArithOp op, const Rational& q = 1) {
  SpacePtr r = shared_space("sigma_R");
  Morphism f;
  f.kind = MorphismKind::Refinement;
  f.source = is_binary(op) ? sigma_R_pair_space() : r;
  f.target = r;
  f.name = op == ArithOp::Scalar ? "scalar(" + q.get_str() + ")" : to_string(op);
  const bool binary = is_binary(op);
  f.map = [op, q, binary](const Dot& a) -> Dot {
    const Dot& x = binary ? a.as<Tuple>().items[0] : a;
    const Dot& y = binary ? a.as<Tuple>().items[1] : a;
    if (x.is_max() || y.is_max()) return MaxDot{};
    auto h = image_hull(op, q, *interval_of(x), *interval_of(y));
    if (h.lo == h.hi) return round_point(h.lo, x.as<DyadicInterval>().m);
    return round_hull(h.lo, h.hi);
  };
  f.liveness = [op, q, binary](const Dot& a) -> std::size_t {
    switch (op) {
      case ArithOp::Neg: return 2;
      case ArithOp::Scalar: return 3 + bit_length(q);
      case ArithOp::Mul: {
        Rational mag = 0;
        for (const auto& d : binary ? a.as<Tuple>().items : std::vector<Dot>{a})
          if (auto iv = interval_of(d)) mag = std::max({mag, Rational(abs(iv->lo)), Rational(abs(iv->hi))});
        return 4 + 2 * bit_length(mag);
      }
      default: return 4;
    }
  };
  return f;
}

// Pairs two sigma_R points at equal grade, as a point of the sigma product.
inline Point sigma_pair(const Point& p, const Point& q) {
  Point a = successor_normalize(p), b = successor_normalize(q);
  return indexed_point(sigma_R_pair_space(), [a, b](std::size_t k) -> Dot { return Tuple{{a.at(k), b.at(k)}}; });
}

inline Point apply_unary(ArithOp op, const Point& p, const Rational& q = 1) { return apply_point(arith(op, q), p); }

inline Point apply_binary(ArithOp op, const Point& p, const Point& q) {
  return apply_point(arith(op), sigma_pair(p, q));
}

}  // namespace natspace
