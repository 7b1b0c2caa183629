#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <string>

#include "space.hpp"

namespace natspace {

namespace detail {

inline Integer shl(const Integer& x, std::uint64_t k) {
  Integer r;
  mpz_mul_2exp(r.get_mpz_t(), x.get_mpz_t(), static_cast<mp_bitcnt_t>(k));
  return r;
}

// Interval relations with integer fast paths for same-family dots.
inline bool dots_apart_iv(const Dot& a, const Dot& b) {
  auto x = a.get_if<DyadicInterval>();
  auto y = b.get_if<DyadicInterval>();
  if (x && y) {
    auto M = std::max(x->m, y->m);
    Integer xl = shl(x->n, M - x->m), yl = shl(y->n, M - y->m);
    Integer xh = shl(x->n + 2, M - x->m), yh = shl(y->n + 2, M - y->m);
    return xh < yl || yh < xl;
  }
  auto p = a.get_if<NaryInterval>();
  auto q = b.get_if<NaryInterval>();
  if (p && q && p->base == q->base) {
    auto M = std::max(p->m, q->m);
    Integer sp = pow_int(p->base, M - p->m), sq = pow_int(q->base, M - q->m);
    return (p->n + 1) * sp < q->n * sq || (q->n + 1) * sq < p->n * sp;
  }
  return intervals_apart(*interval_of(a), *interval_of(b));
}

inline bool dots_within_iv(const Dot& a, const Dot& b) {
  auto x = a.get_if<DyadicInterval>();
  auto y = b.get_if<DyadicInterval>();
  if (x && y) {
    if (x->m < y->m) return false;
    auto d = x->m - y->m;
    Integer yl = shl(y->n, d), yh = shl(y->n + 2, d);
    return yl <= x->n && x->n + 2 <= yh;
  }
  auto p = a.get_if<NaryInterval>();
  auto q = b.get_if<NaryInterval>();
  if (p && q && p->base == q->base) {
    if (p->m < q->m) return false;
    Integer s = pow_int(q->base, p->m - q->m);
    return q->n * s <= p->n && p->n + 1 <= (q->n + 1) * s;
  }
  return interval_within(*interval_of(a), *interval_of(b));
}

inline bool is_prefix(const std::vector<std::uint64_t>& p, const std::vector<std::uint64_t>& s) {
  return p.size() <= s.size() && std::equal(p.begin(), p.end(), s.begin());
}

inline std::shared_ptr<Space> new_space(std::string name) {
  auto s = std::make_shared<Space>();
  s->name = std::move(name);
  s->pairs = std::make_shared<ApartPairs>();
  return s;
}

// Relations shared by every space whose dots are intervals below a maximal dot.
inline void interval_relations(Space& s) {
  Dot top = s.max;
  s.apart = [top](const Dot& a, const Dot& b) {
    if (a == top || b == top || a.is_max() || b.is_max()) return false;
    return dots_apart_iv(a, b);
  };
  s.refines = [top](const Dot& a, const Dot& b) {
    if (b == top) return true;
    if (a == top) return false;
    return dots_within_iv(a, b);
  };
  s.isolated = [](const Dot&) { return false; };
}

inline std::uint64_t ipow(std::uint64_t b, std::uint64_t e) {
  std::uint64_t r = 1;
  while (e--) r *= b;
  return r;
}

}  // namespace detail

// ---- sigma_R and sigma_[0,1] --------------------------------------------

inline SpacePtr make_sigma_R() {
  auto s = detail::new_space("sigma_R");
  s->max = MaxDot{};
  detail::interval_relations(*s);
  s->contains = [](const Dot& d) { return d.is_max() || d.is<DyadicInterval>(); };
  s->enumerate = [](std::uint64_t k) -> Dot {
    if (k == 0) return MaxDot{};
    auto [m, z] = enumeration::unpair(k - 1);
    return DyadicInterval{enumeration::zigzag(z), m};
  };
  s->index_of = [](const Dot& d) -> std::optional<std::uint64_t> {
    if (d.is_max()) return 0;
    auto y = d.get_if<DyadicInterval>();
    if (!y) return std::nullopt;
    auto z = enumeration::unzigzag(y->n);
    if (!z || *z > (1ULL << 31) || y->m > (1ULL << 31)) return std::nullopt;
    return enumeration::pair(y->m, *z) + 1;
  };
  SpraidInfo sp;
  sp.finitely_branching = false;
  sp.grade = [](const Dot& d) -> std::uint64_t {
    return d.is_max() ? 0 : d.as<DyadicInterval>().m + 1;
  };
  sp.successors = [](const Dot& d, std::size_t limit) {
    Successors out;
    if (d.is_max()) {
      for (std::size_t k = 0; k < limit; ++k) out.dots.push_back(DyadicInterval{enumeration::zigzag(k), 0});
      out.unbounded = true;
      return out;
    }
    const auto& y = d.as<DyadicInterval>();
    for (int i = 0; i < 3 && out.dots.size() < limit; ++i)
      out.dots.push_back(DyadicInterval{2 * y.n + i, y.m + 1});
    return out;
  };
  sp.predecessors = [](const Dot& d) -> std::vector<Dot> {
    const auto& y = d.as<DyadicInterval>();
    if (y.m == 0) return {MaxDot{}};
    Integer h;
    if (mpz_even_p(y.n.get_mpz_t())) {
      h = y.n / 2;
      return {DyadicInterval{h - 1, y.m - 1}, DyadicInterval{h, y.m - 1}};
    }
    mpz_fdiv_q_2exp(h.get_mpz_t(), y.n.get_mpz_t(), 1);
    return {DyadicInterval{h, y.m - 1}};
  };
  sp.level = [](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    if (g == 0) return r == 0 ? std::optional<Dot>(MaxDot{}) : std::nullopt;
    return Dot(DyadicInterval{enumeration::zigzag(r), g - 1});
  };
  sp.level_size = [](std::uint64_t g) -> std::optional<std::uint64_t> {
    if (g == 0) return 1;
    return std::nullopt;
  };
  s->spraid = sp;
  return s;
}

// sigma_[0,1]: dyadic dots inside [0,1]; [0,1] itself is the maximal dot.
inline bool in_unit_sigma(const DyadicInterval& y) {
  if (y.m < 1 || y.n < 0) return false;
  return y.n + 2 <= pow_int(2, y.m);
}

inline SpacePtr make_sigma_unit() {
  auto s = detail::new_space("sigma_[0,1]");
  s->max = DyadicInterval{Integer(0), 1};
  detail::interval_relations(*s);
  s->contains = [](const Dot& d) {
    auto y = d.get_if<DyadicInterval>();
    return y && in_unit_sigma(*y);
  };
  // level m (m >= 1) holds 2^m - 1 dots
  s->enumerate = [](std::uint64_t k) -> Dot {
    std::uint64_t m = 1;
    while (k >= (1ULL << m) - 1) {
      k -= (1ULL << m) - 1;
      ++m;
    }
    return DyadicInterval{Integer(std::to_string(k)), m};
  };
  s->index_of = [](const Dot& d) -> std::optional<std::uint64_t> {
    auto y = d.get_if<DyadicInterval>();
    if (!y || !in_unit_sigma(*y) || y->m > 62) return std::nullopt;
    std::uint64_t k = 0;
    for (std::uint64_t m = 1; m < y->m; ++m) k += (1ULL << m) - 1;
    return k + y->n.get_ui();
  };
  SpraidInfo sp;
  sp.graded_enumeration = true;
  sp.grade = [](const Dot& d) -> std::uint64_t { return d.as<DyadicInterval>().m - 1; };
  sp.successors = [](const Dot& d, std::size_t limit) {
    Successors out;
    const auto& y = d.as<DyadicInterval>();
    for (int i = 0; i < 3 && out.dots.size() < limit; ++i)
      out.dots.push_back(DyadicInterval{2 * y.n + i, y.m + 1});
    return out;
  };
  sp.predecessors = [](const Dot& d) -> std::vector<Dot> {
    const auto& y = d.as<DyadicInterval>();
    std::vector<Dot> out;
    if (y.m <= 1) return out;
    auto add = [&](const Integer& n) {
      DyadicInterval p{n, y.m - 1};
      if (in_unit_sigma(p)) out.push_back(p);
    };
    if (mpz_even_p(y.n.get_mpz_t())) {
      add(y.n / 2 - 1);
      add(y.n / 2);
    } else {
      add((y.n - 1) / 2);
    }
    return out;
  };
  sp.level = [](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    std::uint64_t m = g + 1;
    if (m > 62 || r + 2 > (1ULL << m)) return std::nullopt;
    return Dot(DyadicInterval{Integer(std::to_string(r)), m});
  };
  sp.level_size = [](std::uint64_t g) -> std::optional<std::uint64_t> {
    return (1ULL << (g + 1)) - 1;
  };
  s->spraid = sp;
  return s;
}

// ---- rational intervals -------------------------------------------------

inline SpacePtr make_R_rat() {
  auto s = detail::new_space("R_rat");
  s->max = MaxDot{};
  detail::interval_relations(*s);
  s->contains = [](const Dot& d) { return d.is_max() || d.is<RatInterval>(); };
  // index k -> (i, j) -> [q_i, q_j] when q_i < q_j, max otherwise
  s->enumerate = [](std::uint64_t k) -> Dot {
    auto [i, j] = enumeration::unpair(k);
    Rational lo = enumeration::rational_at(i), hi = enumeration::rational_at(j);
    if (lo < hi) return RatInterval{lo, hi};
    return MaxDot{};
  };
  s->index_of = [](const Dot& d) -> std::optional<std::uint64_t> {
    if (d.is_max()) return 0;
    auto r = d.get_if<RatInterval>();
    if (!r) return std::nullopt;
    auto i = enumeration::rational_index(r->lo), j = enumeration::rational_index(r->hi);
    if (!i || !j || *i > (1ULL << 31) || *j > (1ULL << 31)) return std::nullopt;
    return enumeration::pair(*i, *j);
  };
  return s;
}

// ---- n-ary reals --------------------------------------------------------

inline SpacePtr make_nary_R(std::uint32_t base, std::string name) {
  if (base < 2) throw SpaceError("n-ary base must be >= 2");
  auto s = detail::new_space(std::move(name));
  s->max = MaxDot{};
  detail::interval_relations(*s);
  s->contains = [base](const Dot& d) {
    auto a = d.get_if<NaryInterval>();
    return d.is_max() || (a && a->base == base);
  };
  s->enumerate = [base](std::uint64_t k) -> Dot {
    if (k == 0) return MaxDot{};
    auto [m, z] = enumeration::unpair(k - 1);
    return NaryInterval{base, enumeration::zigzag(z), m};
  };
  s->index_of = [base](const Dot& d) -> std::optional<std::uint64_t> {
    if (d.is_max()) return 0;
    auto a = d.get_if<NaryInterval>();
    if (!a || a->base != base) return std::nullopt;
    auto z = enumeration::unzigzag(a->n);
    if (!z || *z > (1ULL << 31) || a->m > (1ULL << 31)) return std::nullopt;
    return enumeration::pair(a->m, *z) + 1;
  };
  SpraidInfo sp;
  sp.tree = true;
  sp.finitely_branching = false;
  sp.grade = [](const Dot& d) -> std::uint64_t {
    return d.is_max() ? 0 : d.as<NaryInterval>().m + 1;
  };
  sp.successors = [base](const Dot& d, std::size_t limit) {
    Successors out;
    if (d.is_max()) {
      for (std::size_t k = 0; k < limit; ++k) out.dots.push_back(NaryInterval{base, enumeration::zigzag(k), 0});
      out.unbounded = true;
      return out;
    }
    const auto& a = d.as<NaryInterval>();
    for (std::uint32_t i = 0; i < base && out.dots.size() < limit; ++i)
      out.dots.push_back(NaryInterval{base, a.n * base + i, a.m + 1});
    return out;
  };
  sp.predecessors = [base](const Dot& d) -> std::vector<Dot> {
    const auto& a = d.as<NaryInterval>();
    if (a.m == 0) return {MaxDot{}};
    Integer q;
    mpz_fdiv_q_ui(q.get_mpz_t(), a.n.get_mpz_t(), base);
    return {NaryInterval{base, q, a.m - 1}};
  };
  sp.level = [base](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    if (g == 0) return r == 0 ? std::optional<Dot>(MaxDot{}) : std::nullopt;
    return Dot(NaryInterval{base, enumeration::zigzag(r), g - 1});
  };
  sp.level_size = [](std::uint64_t g) -> std::optional<std::uint64_t> {
    if (g == 0) return 1;
    return std::nullopt;
  };
  s->spraid = sp;
  return s;
}

inline SpacePtr make_nary_unit(std::uint32_t base, std::string name) {
  if (base < 2) throw SpaceError("n-ary base must be >= 2");
  auto s = detail::new_space(std::move(name));
  s->max = NaryInterval{base, Integer(0), 0};
  detail::interval_relations(*s);
  s->contains = [base](const Dot& d) {
    auto a = d.get_if<NaryInterval>();
    return a && a->base == base && a->n >= 0 && a->n < pow_int(base, a->m);
  };
  s->enumerate = [base](std::uint64_t k) -> Dot {
    std::uint64_t m = 0, size = 1;
    while (k >= size) {
      k -= size;
      ++m;
      size *= base;
    }
    return NaryInterval{base, Integer(std::to_string(k)), m};
  };
  s->index_of = [base, s_contains = s->contains](const Dot& d) -> std::optional<std::uint64_t> {
    if (!s_contains(d)) return std::nullopt;
    const auto& a = d.as<NaryInterval>();
    if (a.m > 30) return std::nullopt;
    std::uint64_t k = 0;
    for (std::uint64_t m = 0; m < a.m; ++m) k += detail::ipow(base, m);
    return k + a.n.get_ui();
  };
  SpraidInfo sp;
  sp.graded_enumeration = true;
  sp.tree = true;
  sp.grade = [](const Dot& d) -> std::uint64_t { return d.as<NaryInterval>().m; };
  sp.successors = [base](const Dot& d, std::size_t limit) {
    Successors out;
    const auto& a = d.as<NaryInterval>();
    for (std::uint32_t i = 0; i < base && out.dots.size() < limit; ++i)
      out.dots.push_back(NaryInterval{base, a.n * base + i, a.m + 1});
    return out;
  };
  sp.predecessors = [base](const Dot& d) -> std::vector<Dot> {
    const auto& a = d.as<NaryInterval>();
    if (a.m == 0) return {};
    Integer q;
    mpz_fdiv_q_ui(q.get_mpz_t(), a.n.get_mpz_t(), base);
    return {NaryInterval{base, q, a.m - 1}};
  };
  sp.level = [base](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    if (Integer(std::to_string(r)) >= pow_int(base, g)) return std::nullopt;
    return Dot(NaryInterval{base, Integer(std::to_string(r)), g});
  };
  sp.level_size = [base](std::uint64_t g) -> std::optional<std::uint64_t> {
    if (g > 30) return std::nullopt;
    return detail::ipow(base, g);
  };
  s->spraid = sp;
  return s;
}

// ---- sequence spaces ----------------------------------------------------

// Finite-alphabet tree {0..k-1}* with tree apartness (incomparable = apart).
// k = 0 gives Baire space (alphabet N).
inline SpacePtr make_tree_space(std::uint64_t k, std::string name) {
  auto s = detail::new_space(std::move(name));
  s->max = Seq{};
  s->contains = [k](const Dot& d) {
    auto q = d.get_if<Seq>();
    if (!q) return false;
    if (k == 0) return true;
    return std::all_of(q->syms.begin(), q->syms.end(), [k](auto c) { return c < k; });
  };
  s->apart = [](const Dot& a, const Dot& b) {
    const auto& x = a.as<Seq>().syms;
    const auto& y = b.as<Seq>().syms;
    return !detail::is_prefix(x, y) && !detail::is_prefix(y, x);
  };
  s->refines = [](const Dot& a, const Dot& b) {
    return detail::is_prefix(b.as<Seq>().syms, a.as<Seq>().syms);
  };
  s->isolated = [](const Dot&) { return false; };
  if (k == 0) {
    s->enumerate = [](std::uint64_t i) -> Dot { return Seq{enumeration::unrank_weightlex(i)}; };
    s->index_of = [](const Dot& d) -> std::optional<std::uint64_t> {
      auto q = d.get_if<Seq>();
      if (!q || enumeration::weight(q->syms) >= 63) return std::nullopt;
      return enumeration::rank_weightlex(q->syms);
    };
  } else {
    s->enumerate = [k](std::uint64_t i) -> Dot { return Seq{enumeration::unrank_lenlex(i, k)}; };
    s->index_of = [k, c = s->contains](const Dot& d) -> std::optional<std::uint64_t> {
      if (!c(d)) return std::nullopt;
      const auto& q = d.as<Seq>().syms;
      if (static_cast<double>(q.size()) * std::log2(static_cast<double>(k)) > 62) return std::nullopt;
      return enumeration::rank_lenlex(q, k);
    };
  }
  SpraidInfo sp;
  sp.graded_enumeration = k != 0;
  sp.tree = true;
  sp.finitely_branching = k != 0;
  sp.grade = [](const Dot& d) -> std::uint64_t { return d.as<Seq>().syms.size(); };
  sp.successors = [k](const Dot& d, std::size_t limit) {
    Successors out;
    const auto& q = d.as<Seq>().syms;
    std::uint64_t n = k == 0 ? limit : std::min<std::uint64_t>(k, limit);
    for (std::uint64_t c = 0; c < n; ++c) {
      auto t = q;
      t.push_back(c);
      out.dots.push_back(Seq{std::move(t)});
    }
    out.unbounded = k == 0;
    return out;
  };
  sp.predecessors = [](const Dot& d) -> std::vector<Dot> {
    auto q = d.as<Seq>().syms;
    if (q.empty()) return {};
    q.pop_back();
    return {Seq{std::move(q)}};
  };
  sp.level = [k](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    std::vector<std::uint64_t> syms(g);
    if (k == 0) {
      for (std::uint64_t i = 0; i + 1 < g; ++i) {
        auto [x, y] = enumeration::unpair(r);
        syms[i] = x;
        r = y;
      }
      if (g > 0) syms[g - 1] = r;
      else if (r != 0) return std::nullopt;
      return Dot(Seq{std::move(syms)});
    }
    for (std::size_t i = g; i-- > 0;) {
      syms[i] = r % k;
      r /= k;
    }
    if (r != 0) return std::nullopt;
    return Dot(Seq{std::move(syms)});
  };
  sp.level_size = [k](std::uint64_t g) -> std::optional<std::uint64_t> {
    if (k == 0) return g == 0 ? std::optional<std::uint64_t>(1) : std::nullopt;
    if (static_cast<double>(g) * std::log2(static_cast<double>(k)) > 62) return std::nullopt;
    return detail::ipow(k, g);
  };
  s->spraid = sp;
  return s;
}

// T_p: p points, dots are constant sequences c^n; c^n # d^m for c != d, n, m > 0.
inline SpacePtr make_finite_points(std::uint64_t p, std::string name) {
  auto s = detail::new_space(std::move(name));
  s->max = Seq{};
  auto constant = [p](const Dot& d) {
    auto q = d.get_if<Seq>();
    if (!q) return false;
    for (auto c : q->syms)
      if (c >= p || c != q->syms.front()) return false;
    return true;
  };
  s->contains = constant;
  s->apart = [](const Dot& a, const Dot& b) {
    const auto& x = a.as<Seq>().syms;
    const auto& y = b.as<Seq>().syms;
    return !x.empty() && !y.empty() && x[0] != y[0];
  };
  s->refines = [](const Dot& a, const Dot& b) {
    const auto& x = a.as<Seq>().syms;
    const auto& y = b.as<Seq>().syms;
    return y.empty() || (!x.empty() && x[0] == y[0] && x.size() >= y.size());
  };
  s->isolated = [](const Dot& d) { return !d.as<Seq>().syms.empty(); };
  s->enumerate = [p](std::uint64_t i) -> Dot {
    if (i == 0) return Seq{};
    return Seq{std::vector<std::uint64_t>((i - 1) / p + 1, (i - 1) % p)};
  };
  s->index_of = [p, constant](const Dot& d) -> std::optional<std::uint64_t> {
    if (!constant(d)) return std::nullopt;
    const auto& q = d.as<Seq>().syms;
    if (q.empty()) return 0;
    return 1 + (q.size() - 1) * p + q[0];
  };
  SpraidInfo sp;
  sp.graded_enumeration = true;
  sp.tree = true;
  sp.grade = [](const Dot& d) -> std::uint64_t { return d.as<Seq>().syms.size(); };
  sp.successors = [p](const Dot& d, std::size_t limit) {
    Successors out;
    const auto& q = d.as<Seq>().syms;
    if (q.empty()) {
      for (std::uint64_t c = 0; c < p && out.dots.size() < limit; ++c) out.dots.push_back(Seq{{c}});
    } else {
      out.dots.push_back(Seq{std::vector<std::uint64_t>(q.size() + 1, q[0])});
    }
    return out;
  };
  sp.predecessors = [](const Dot& d) -> std::vector<Dot> {
    auto q = d.as<Seq>().syms;
    if (q.empty()) return {};
    q.pop_back();
    return {Seq{std::move(q)}};
  };
  sp.level = [p](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    if (g == 0) return r == 0 ? std::optional<Dot>(Seq{}) : std::nullopt;
    if (r >= p) return std::nullopt;
    return Dot(Seq{std::vector<std::uint64_t>(g, r)});
  };
  sp.level_size = [p](std::uint64_t g) -> std::optional<std::uint64_t> { return g == 0 ? 1 : p; };
  s->spraid = sp;
  return s;
}

inline const std::vector<std::string>& std_space_names() {
  static const std::vector<std::string> names = {
      "R_rat", "sigma_R", "sigma_[0,1]", "R_bin", "R_ter", "R_dec", "[0,1]_bin",
      "[0,1]_ter", "baire", "cantor", "T2", "T3"};
  return names;
}

// The shipped spaces. "sigma_3" (the ternary tree used as the Cantor function
// domain) is accepted in addition to the documented names.
inline SpacePtr std_space(const std::string& name) {
  if (name == "R_rat") return make_R_rat();
  if (name == "sigma_R") return make_sigma_R();
  if (name == "sigma_[0,1]") return make_sigma_unit();
  if (name == "R_bin") return make_nary_R(2, name);
  if (name == "R_ter") return make_nary_R(3, name);
  if (name == "R_dec") return make_nary_R(10, name);
  if (name == "[0,1]_bin") return make_nary_unit(2, name);
  if (name == "[0,1]_ter") return make_nary_unit(3, name);
  if (name == "baire") return make_tree_space(0, name);
  if (name == "cantor") return make_tree_space(2, name);
  if (name == "sigma_3") return make_tree_space(3, name);
  if (name == "T2") return make_finite_points(2, name);
  if (name == "T3") return make_finite_points(3, name);
  throw SpaceError("unknown space: " + name);
}

// One process-wide instance per name, so morphisms and points can share descriptors.
inline SpacePtr shared_space(const std::string& name) {
  static std::mutex mu;
  static std::map<std::string, SpacePtr> cache;
  std::lock_guard<std::mutex> lk(mu);
  auto it = cache.find(name);
  if (it != cache.end()) return it->second;
  return cache[name] = std_space(name);
}

}  // namespace natspace
