#pragma once

#include <gmpxx.h>

#include <cstdint>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <ostream>
#include <variant>
#include <vector>

#include <json.hpp>

namespace natspace {

using Integer = mpz_class;
using Rational = mpq_class;

inline Rational make_rational(const Integer& num, const Integer& den = 1) {
  Rational q(num, den);
  q.canonicalize();
  return q;
}

inline Rational parse_rational(const std::string& s) {
  Rational q;
  if (q.set_str(s, 10) != 0 || q.get_den() == 0)
    throw std::invalid_argument("bad rational: " + s);
  q.canonicalize();
  return q;
}

inline std::string to_string(const Rational& q) { return q.get_str(); }
inline std::string to_string(const Integer& z) { return z.get_str(); }

inline Integer pow_int(unsigned long base, std::uint64_t e) {
  Integer r;
  mpz_ui_pow_ui(r.get_mpz_t(), base, static_cast<unsigned long>(e));
  return r;
}

inline Rational pow2(std::int64_t e) {
  if (e >= 0) return Rational(pow_int(2, static_cast<std::uint64_t>(e)));
  return make_rational(1, pow_int(2, static_cast<std::uint64_t>(-e)));
}

inline Integer floor_q(const Rational& q) {
  Integer r;
  mpz_fdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

inline Integer ceil_q(const Rational& q) {
  Integer r;
  mpz_cdiv_q(r.get_mpz_t(), q.get_num_mpz_t(), q.get_den_mpz_t());
  return r;
}

struct Dot;

struct MaxDot {};
struct RatInterval {
  Rational lo, hi;
};
// [n/2^m, (n+2)/2^m]
struct DyadicInterval {
  Integer n;
  std::uint64_t m = 0;
};
// [n/base^m, (n+1)/base^m]
struct NaryInterval {
  std::uint32_t base = 2;
  Integer n;
  std::uint64_t m = 0;
};
struct Seq {
  std::vector<std::uint64_t> syms;
};
struct Tuple {
  std::vector<Dot> items;
};
struct Ball {
  std::uint64_t i = 0;
  std::uint64_t s = 0;
};
struct Trail {
  std::vector<Dot> items;
};
struct Isolated {
  std::uint64_t k = 1;
};

struct Dot {
  using Variant = std::variant<MaxDot, RatInterval, DyadicInterval, NaryInterval,
                               Seq, Tuple, Ball, Trail, Isolated>;
  Variant v;

  Dot() : v(MaxDot{}) {}
  template <class T, class = std::enable_if_t<!std::is_same_v<std::decay_t<T>, Dot> &&
                                              std::is_constructible_v<Variant, T&&>>>
  Dot(T&& x) : v(std::forward<T>(x)) {}

  template <class T> bool is() const { return std::holds_alternative<T>(v); }
  template <class T> const T& as() const { return std::get<T>(v); }
  template <class T> const T* get_if() const { return std::get_if<T>(&v); }
  bool is_max() const { return is<MaxDot>(); }
};

int compare(const Dot& a, const Dot& b);

namespace detail {
inline int cmp_int(const Integer& a, const Integer& b) {
  int c = ::cmp(a, b);
  return (c > 0) - (c < 0);
}
inline int cmp_rat(const Rational& a, const Rational& b) {
  int c = ::cmp(a, b);
  return (c > 0) - (c < 0);
}
template <class T> int cmp_u(T a, T b) { return (a > b) - (a < b); }
inline int cmp_list(const std::vector<Dot>& a, const std::vector<Dot>& b) {
  std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i)
    if (int c = compare(a[i], b[i])) return c;
  return cmp_u(a.size(), b.size());
}
}  // namespace detail

// Total order on dot values: variant index first, then fields.
inline int compare(const Dot& a, const Dot& b) {
  using namespace detail;
  if (a.v.index() != b.v.index()) return cmp_u(a.v.index(), b.v.index());
  return std::visit(
      [&](const auto& x) -> int {
        using T = std::decay_t<decltype(x)>;
        const T& y = std::get<T>(b.v);
        if constexpr (std::is_same_v<T, MaxDot>) {
          return 0;
        } else if constexpr (std::is_same_v<T, RatInterval>) {
          if (int c = cmp_rat(x.lo, y.lo)) return c;
          return cmp_rat(x.hi, y.hi);
        } else if constexpr (std::is_same_v<T, DyadicInterval>) {
          if (int c = cmp_u(x.m, y.m)) return c;
          return cmp_int(x.n, y.n);
        } else if constexpr (std::is_same_v<T, NaryInterval>) {
          if (int c = cmp_u(x.base, y.base)) return c;
          if (int c = cmp_u(x.m, y.m)) return c;
          return cmp_int(x.n, y.n);
        } else if constexpr (std::is_same_v<T, Seq>) {
          if (x.syms < y.syms) return -1;
          return x.syms == y.syms ? 0 : 1;
        } else if constexpr (std::is_same_v<T, Tuple> || std::is_same_v<T, Trail>) {
          return cmp_list(x.items, y.items);
        } else if constexpr (std::is_same_v<T, Ball>) {
          if (int c = cmp_u(x.i, y.i)) return c;
          return cmp_u(x.s, y.s);
        } else {
          return cmp_u(x.k, y.k);
        }
      },
      a.v);
}

inline bool operator==(const Dot& a, const Dot& b) { return compare(a, b) == 0; }
inline bool operator!=(const Dot& a, const Dot& b) { return compare(a, b) != 0; }
inline bool operator<(const Dot& a, const Dot& b) { return compare(a, b) < 0; }

// ---- constructors -------------------------------------------------------

inline Dot max_dot() { return MaxDot{}; }
inline Dot dyadic(const Integer& n, std::uint64_t m) { return DyadicInterval{n, m}; }
inline Dot dyadic(long n, std::uint64_t m) { return DyadicInterval{Integer(n), m}; }
inline Dot nary(std::uint32_t base, const Integer& n, std::uint64_t m) {
  return NaryInterval{base, n, m};
}
inline Dot nary(std::uint32_t base, long n, std::uint64_t m) {
  return NaryInterval{base, Integer(n), m};
}
inline Dot rat(const Rational& lo, const Rational& hi) {
  if (!(lo < hi)) throw std::invalid_argument("RatInterval needs lo < hi");
  return RatInterval{lo, hi};
}
inline Dot seq(std::vector<std::uint64_t> s) { return Seq{std::move(s)}; }
inline Dot tuple(std::vector<Dot> items) { return Tuple{std::move(items)}; }
inline Dot trail(std::vector<Dot> items) { return Trail{std::move(items)}; }
inline Dot ball(std::uint64_t i, std::uint64_t s) { return Ball{i, s}; }
inline Dot isolated(std::uint64_t k) { return Isolated{k}; }

// ---- interval view ------------------------------------------------------

struct Interval {
  Rational lo, hi;
};

inline std::optional<Interval> interval_of(const Dot& d) {
  if (auto r = d.get_if<RatInterval>()) return Interval{r->lo, r->hi};
  if (auto y = d.get_if<DyadicInterval>()) {
    Rational s = pow2(-static_cast<std::int64_t>(y->m));
    return Interval{Rational(y->n) * s, Rational(y->n + 2) * s};
  }
  if (auto a = d.get_if<NaryInterval>()) {
    Rational s = make_rational(1, pow_int(a->base, a->m));
    return Interval{Rational(a->n) * s, Rational(a->n + 1) * s};
  }
  return std::nullopt;
}

inline bool intervals_apart(const Interval& a, const Interval& b) {
  return a.hi < b.lo || b.hi < a.lo;
}
inline bool interval_within(const Interval& a, const Interval& b) {
  return b.lo <= a.lo && a.hi <= b.hi;
}

// ---- JSON ---------------------------------------------------------------

using json = nlohmann::json;

namespace detail {
inline json int_to_json(const Integer& z) {
  if (z.fits_slong_p()) return json(static_cast<std::int64_t>(z.get_si()));
  return json(z.get_str());
}
inline Integer int_from_json(const json& j) {
  if (j.is_string()) return Integer(j.get<std::string>());
  if (j.is_number_unsigned()) return Integer(std::to_string(j.get<std::uint64_t>()));
  if (j.is_number_integer()) return Integer(std::to_string(j.get<std::int64_t>()));
  throw std::invalid_argument("expected integer");
}
}  // namespace detail

inline json to_json(const Dot& d) {
  return std::visit(
      [](const auto& x) -> json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MaxDot>) {
          return {{"kind", "max"}};
        } else if constexpr (std::is_same_v<T, RatInterval>) {
          return {{"kind", "rat"}, {"lo", x.lo.get_str()}, {"hi", x.hi.get_str()}};
        } else if constexpr (std::is_same_v<T, DyadicInterval>) {
          return {{"kind", "dyadic"}, {"n", detail::int_to_json(x.n)}, {"m", x.m}};
        } else if constexpr (std::is_same_v<T, NaryInterval>) {
          return {{"kind", "nary"}, {"base", x.base}, {"n", detail::int_to_json(x.n)}, {"m", x.m}};
        } else if constexpr (std::is_same_v<T, Seq>) {
          return {{"kind", "seq"}, {"syms", x.syms}};
        } else if constexpr (std::is_same_v<T, Tuple> || std::is_same_v<T, Trail>) {
          json items = json::array();
          for (const auto& it : x.items) items.push_back(to_json(it));
          return {{"kind", std::is_same_v<T, Tuple> ? "tuple" : "trail"}, {"items", items}};
        } else if constexpr (std::is_same_v<T, Ball>) {
          return {{"kind", "ball"}, {"i", x.i}, {"s", x.s}};
        } else {
          return {{"kind", "iso"}, {"k", x.k}};
        }
      },
      d.v);
}

inline Dot from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "max") return MaxDot{};
  if (kind == "rat")
    return rat(parse_rational(j.at("lo").get<std::string>()),
               parse_rational(j.at("hi").get<std::string>()));
  if (kind == "dyadic")
    return DyadicInterval{detail::int_from_json(j.at("n")), j.at("m").get<std::uint64_t>()};
  if (kind == "nary") {
    auto base = j.at("base").get<std::uint32_t>();
    if (base < 2) throw std::invalid_argument("nary base < 2");
    return NaryInterval{base, detail::int_from_json(j.at("n")), j.at("m").get<std::uint64_t>()};
  }
  if (kind == "seq") return Seq{j.at("syms").get<std::vector<std::uint64_t>>()};
  if (kind == "tuple" || kind == "trail") {
    std::vector<Dot> items;
    for (const auto& it : j.at("items")) items.push_back(from_json(it));
    if (kind == "tuple") return Tuple{std::move(items)};
    return Trail{std::move(items)};
  }
  if (kind == "ball") return Ball{j.at("i").get<std::uint64_t>(), j.at("s").get<std::uint64_t>()};
  if (kind == "iso") {
    auto k = j.at("k").get<std::uint64_t>();
    if (k < 1) throw std::invalid_argument("iso k < 1");
    return Isolated{k};
  }
  throw std::invalid_argument("unknown dot kind: " + kind);
}

inline std::string to_string(const Dot& d) { return to_json(d).dump(); }

// Short human form used in reports: [lo,hi], <0,1,2>, (a,b), ...
inline std::string show(const Dot& d) {
  std::ostringstream os;
  std::visit(
      [&](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, MaxDot>) {
          os << "max";
        } else if constexpr (std::is_same_v<T, Seq>) {
          os << '<';
          for (std::size_t i = 0; i < x.syms.size(); ++i) os << (i ? "," : "") << x.syms[i];
          os << '>';
        } else if constexpr (std::is_same_v<T, Tuple> || std::is_same_v<T, Trail>) {
          os << (std::is_same_v<T, Tuple> ? '(' : '{');
          for (std::size_t i = 0; i < x.items.size(); ++i) os << (i ? "," : "") << show(x.items[i]);
          os << (std::is_same_v<T, Tuple> ? ')' : '}');
        } else if constexpr (std::is_same_v<T, Ball>) {
          os << "B(" << x.i << ',' << x.s << ')';
        } else if constexpr (std::is_same_v<T, Isolated>) {
          os << "iso" << x.k;
        } else {
          auto iv = *interval_of(Dot(x));
          os << '[' << iv.lo.get_str() << ',' << iv.hi.get_str() << ']';
        }
      },
      d.v);
  return os.str();
}

inline std::ostream& operator<<(std::ostream& os, const Dot& d) { return os << show(d); }

}  // namespace natspace
