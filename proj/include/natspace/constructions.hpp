#pragma once

#include <bit>
#include <functional>
#include <map>
#include <mutex>
#include <tuple>

#include "spaces.hpp"

namespace natspace {

enum class ProductKind { Simple, Sigma, Circ, Strict };

inline const char* to_string(ProductKind k) {
  switch (k) {
    case ProductKind::Simple: return "simple";
    case ProductKind::Sigma: return "sigma";
    case ProductKind::Circ: return "circ";
    case ProductKind::Strict: return "strict";
  }
  return "?";
}

namespace detail {

// n-fold unpairing of an index into coordinates.
inline std::vector<std::uint64_t> split_index(std::uint64_t k, std::size_t n) {
  std::vector<std::uint64_t> out(n);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto [x, y] = enumeration::unpair(k);
    out[i] = x;
    k = y;
  }
  if (n > 0) out[n - 1] = k;
  return out;
}

inline std::optional<Dot> level_dot(const Space& s, std::uint64_t g, std::uint64_t r) {
  const auto& sp = *s.spraid;
  if (auto size = sp.level_size(g)) {
    if (*size == 0) return std::nullopt;
    r %= *size;
  }
  return sp.level(g, r);
}

// Cartesian product of per-coordinate candidate lists, capped at `limit`.
inline std::vector<Dot> cartesian(const std::vector<std::vector<Dot>>& opts, std::size_t limit) {
  std::vector<Dot> out;
  std::vector<Dot> cur;
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (out.size() >= limit) return;
    if (i == opts.size()) {
      out.push_back(Tuple{cur});
      return;
    }
    for (const auto& d : opts[i]) {
      cur.push_back(d);
      rec(i + 1);
      cur.pop_back();
      if (out.size() >= limit) return;
    }
  };
  rec(0);
  return out;
}

}  // namespace detail

// Finite product of the given factors; dots are Tuples of equal length.
inline SpacePtr product(const std::vector<SpacePtr>& factors, ProductKind kind) {
  if (factors.empty()) throw SpaceError("product needs at least one factor");
  for (const auto& f : factors) {
    if (kind == ProductKind::Sigma && !f->spraid)
      throw SpaceError("sigma product needs spraid factors, got " + f->name);
    if (kind == ProductKind::Circ && !f->isolated)
      throw SpaceError("circ product needs decidable-isolation factors, got " + f->name);
  }
  std::string name = std::string(to_string(kind)) + "(";
  for (std::size_t i = 0; i < factors.size(); ++i) name += (i ? "," : "") + factors[i]->name;
  auto s = detail::new_space(name + ")");
  const std::size_t n = factors.size();
  std::vector<Dot> tops;
  for (const auto& f : factors) tops.push_back(f->max);
  s->max = Tuple{tops};

  auto items = [](const Dot& d) -> const std::vector<Dot>& { return d.as<Tuple>().items; };
  s->contains = [factors, kind, n](const Dot& d) {
    auto t = d.get_if<Tuple>();
    if (!t || t->items.size() != n) return false;
    for (std::size_t i = 0; i < n; ++i)
      if (!factors[i]->contains(t->items[i])) return false;
    if (kind == ProductKind::Sigma)
      for (std::size_t i = 1; i < n; ++i)
        if (factors[i]->grade(t->items[i]) != factors[0]->grade(t->items[0])) return false;
    return true;
  };
  s->apart = [factors, items, n](const Dot& a, const Dot& b) {
    const auto& x = items(a);
    const auto& y = items(b);
    for (std::size_t i = 0; i < n; ++i)
      if (factors[i]->apart(x[i], y[i])) return true;
    return false;
  };
  s->refines = [factors, items, n, kind, top = s->max](const Dot& a, const Dot& b) {
    const auto& x = items(a);
    const auto& y = items(b);
    if (x == y || b == top) return true;
    for (std::size_t i = 0; i < n; ++i) {
      const auto& f = *factors[i];
      if (!f.refines(x[i], y[i])) return false;
      bool strict_needed = kind == ProductKind::Strict || (kind == ProductKind::Circ && f.is_isolated(y[i]));
      if (strict_needed && x[i] == y[i]) return false;
    }
    return true;
  };
  s->isolated = [factors, items, n](const Dot& d) {
    const auto& x = items(d);
    for (std::size_t i = 0; i < n; ++i)
      if (!factors[i]->is_isolated(x[i])) return false;
    return true;
  };
  if (kind == ProductKind::Sigma) {
    s->enumerate = [factors, n](std::uint64_t k) -> Dot {
      auto [g, r] = enumeration::unpair(k);
      auto idx = detail::split_index(r, n);
      std::vector<Dot> out;
      for (std::size_t i = 0; i < n; ++i) {
        auto d = detail::level_dot(*factors[i], g, idx[i]);
        if (!d) {
          std::vector<Dot> tops;
          for (const auto& f : factors) tops.push_back(f->max);
          return Tuple{tops};
        }
        out.push_back(*d);
      }
      return Tuple{out};
    };
    SpraidInfo sp;
    sp.tree = true;
    sp.finitely_branching = true;
    for (const auto& f : factors) {
      sp.tree = sp.tree && f->spraid->tree;
      sp.finitely_branching = sp.finitely_branching && f->spraid->finitely_branching;
    }
    sp.grade = [f0 = factors[0], items](const Dot& d) { return f0->grade(items(d)[0]); };
    sp.successors = [factors, items, n](const Dot& d, std::size_t limit) {
      Successors out;
      std::vector<std::vector<Dot>> opts;
      const auto& x = items(d);
      for (std::size_t i = 0; i < n; ++i) {
        auto si = factors[i]->spraid->successors(x[i], limit);
        out.unbounded = out.unbounded || si.unbounded;
        opts.push_back(std::move(si.dots));
      }
      out.dots = detail::cartesian(opts, limit);
      return out;
    };
    sp.predecessors = [factors, items, n](const Dot& d) {
      std::vector<std::vector<Dot>> opts;
      const auto& x = items(d);
      for (std::size_t i = 0; i < n; ++i) opts.push_back(factors[i]->spraid->predecessors(x[i]));
      return detail::cartesian(opts, SIZE_MAX);
    };
    sp.level = [factors, n](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
      auto idx = detail::split_index(r, n);
      std::vector<Dot> out;
      for (std::size_t i = 0; i < n; ++i) {
        auto d = detail::level_dot(*factors[i], g, idx[i]);
        if (!d) return std::nullopt;
        out.push_back(*d);
      }
      return Dot(Tuple{out});
    };
    sp.level_size = [factors](std::uint64_t g) -> std::optional<std::uint64_t> {
      std::uint64_t total = 1;
      for (const auto& f : factors) {
        auto sz = f->spraid->level_size(g);
        if (!sz || (*sz != 0 && total > UINT64_MAX / *sz)) return std::nullopt;
        total *= *sz;
      }
      return total;
    };
    s->spraid = sp;
  } else {
    s->enumerate = [factors, n](std::uint64_t k) -> Dot {
      auto idx = detail::split_index(k, n);
      std::vector<Dot> out;
      for (std::size_t i = 0; i < n; ++i) out.push_back(factors[i]->enumerate(idx[i]));
      return Tuple{out};
    };
  }
  return s;
}

// Infinite sigma product: grade-n dots are n-tuples of grade-n factor dots,
// the maximal dot is the empty tuple.
inline SpacePtr infinite_sigma_product(std::function<SpacePtr(std::size_t)> factor, std::string name) {
  auto s = detail::new_space(std::move(name));
  s->max = Tuple{};
  auto cache = std::make_shared<std::vector<SpacePtr>>();
  auto mu = std::make_shared<std::mutex>();
  auto fac = [factor, cache, mu](std::size_t i) -> SpacePtr {
    std::lock_guard<std::mutex> lk(*mu);
    while (cache->size() <= i) {
      auto f = factor(cache->size());
      if (!f->spraid) throw SpaceError("infinite sigma product needs spraid factors");
      cache->push_back(f);
    }
    return (*cache)[i];
  };
  auto items = [](const Dot& d) -> const std::vector<Dot>& { return d.as<Tuple>().items; };
  s->contains = [fac](const Dot& d) {
    auto t = d.get_if<Tuple>();
    if (!t) return false;
    for (std::size_t i = 0; i < t->items.size(); ++i) {
      auto f = fac(i);
      if (!f->contains(t->items[i]) || f->grade(t->items[i]) != t->items.size()) return false;
    }
    return true;
  };
  s->apart = [fac, items](const Dot& a, const Dot& b) {
    const auto& x = items(a);
    const auto& y = items(b);
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i)
      if (fac(i)->apart(x[i], y[i])) return true;
    return false;
  };
  s->refines = [fac, items](const Dot& a, const Dot& b) {
    const auto& x = items(a);
    const auto& y = items(b);
    if (x.size() < y.size()) return false;
    for (std::size_t i = 0; i < y.size(); ++i)
      if (!fac(i)->refines(x[i], y[i])) return false;
    return true;
  };
  s->isolated = [](const Dot&) { return false; };
  auto level = [fac](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    auto idx = detail::split_index(r, g);
    std::vector<Dot> out;
    for (std::size_t i = 0; i < g; ++i) {
      auto d = detail::level_dot(*fac(i), g, idx[i]);
      if (!d) return std::nullopt;
      out.push_back(*d);
    }
    if (g == 0 && r != 0) return std::nullopt;
    return Dot(Tuple{out});
  };
  s->enumerate = [level](std::uint64_t k) -> Dot {
    if (k == 0) return Tuple{};
    auto [g, r] = enumeration::unpair(k - 1);
    auto d = level(g + 1, r);
    return d ? *d : Dot(Tuple{});
  };
  SpraidInfo sp;
  sp.finitely_branching = true;
  sp.tree = false;
  sp.grade = [items](const Dot& d) -> std::uint64_t { return items(d).size(); };
  sp.successors = [fac, items](const Dot& d, std::size_t limit) {
    Successors out;
    const auto& x = items(d);
    std::vector<std::vector<Dot>> opts;
    for (std::size_t i = 0; i < x.size(); ++i) {
      auto si = fac(i)->spraid->successors(x[i], limit);
      out.unbounded = out.unbounded || si.unbounded;
      opts.push_back(std::move(si.dots));
    }
    auto fresh = fac(x.size());
    std::vector<Dot> last;
    const std::uint64_t g = x.size() + 1;
    for (std::uint64_t r = 0; last.size() < limit; ++r) {
      auto dd = fresh->spraid->level(g, r);
      if (!dd) break;
      last.push_back(*dd);
    }
    auto sz = fresh->spraid->level_size(g);
    if (!sz || *sz > last.size()) out.unbounded = out.unbounded || !sz;
    opts.push_back(std::move(last));
    out.dots = detail::cartesian(opts, limit);
    return out;
  };
  sp.predecessors = [fac, items](const Dot& d) {
    const auto& x = items(d);
    if (x.empty()) return std::vector<Dot>{};
    std::vector<std::vector<Dot>> opts;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) opts.push_back(fac(i)->spraid->predecessors(x[i]));
    return detail::cartesian(opts, SIZE_MAX);
  };
  sp.level = level;
  sp.level_size = [](std::uint64_t) -> std::optional<std::uint64_t> { return std::nullopt; };
  s->spraid = sp;
  return s;
}

// ---- direct limit of R^n ------------------------------------------------

namespace detail {
inline bool contains_zero(const Dot& d) {
  auto iv = *interval_of(d);
  return iv.lo <= 0 && 0 <= iv.hi;
}
}  // namespace detail

// Dots are finite tuples of rational intervals; the empty tuple is the
// maximal dot and is special-cased (touches everything, refined by everything).
inline SpacePtr direct_limit_Romega() {
  auto s = detail::new_space("R_omega");
  s->max = Tuple{};
  auto items = [](const Dot& d) -> const std::vector<Dot>& { return d.as<Tuple>().items; };
  s->contains = [](const Dot& d) {
    auto t = d.get_if<Tuple>();
    if (!t) return false;
    for (const auto& x : t->items)
      if (!x.is<RatInterval>()) return false;
    return true;
  };
  s->apart = [items](const Dot& a, const Dot& b) {
    const auto* x = &items(a);
    const auto* y = &items(b);
    if (x->empty() || y->empty()) return false;
    if (x->size() > y->size()) std::swap(x, y);
    for (std::size_t i = 0; i < x->size(); ++i)
      if (detail::dots_apart_iv((*x)[i], (*y)[i])) return true;
    for (std::size_t i = x->size(); i < y->size(); ++i)
      if (!detail::contains_zero((*y)[i])) return true;
    return false;
  };
  s->refines = [items](const Dot& b, const Dot& a) {
    const auto& x = items(a);
    const auto& y = items(b);
    if (x.empty()) return true;
    if (y.size() < x.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!detail::dots_within_iv(y[i], x[i])) return false;
    for (std::size_t i = x.size(); i < y.size(); ++i)
      if (!detail::contains_zero(y[i])) return false;
    return true;
  };
  s->isolated = [](const Dot&) { return false; };
  s->enumerate = [](std::uint64_t k) -> Dot {
    std::vector<Dot> out;
    for (auto c : enumeration::unrank_weightlex(k)) {
      auto [i, j] = enumeration::unpair(c);
      Rational p = enumeration::rational_at(i), q = enumeration::rational_at(j);
      if (p < q) out.push_back(RatInterval{p, q});
      else if (q < p) out.push_back(RatInterval{q, p});
      else out.push_back(RatInterval{p, p + 1});
    }
    return Tuple{out};
  };
  return s;
}

// ---- isolated-point extension -------------------------------------------

// Adds Isolated(k), k >= 1, with Isolated(k+1) ⊲ Isolated(k) ⊲ max.
inline SpacePtr extend_with_isolated_point(const SpacePtr& base) {
  if (!base->spraid) throw SpaceError("isolated-point extension needs a spraid");
  auto s = detail::new_space(base->name + "+");
  s->max = base->max;
  auto iso = [](const Dot& d) { return d.is<Isolated>(); };
  s->contains = [base, iso](const Dot& d) { return iso(d) || base->contains(d); };
  s->apart = [base, iso](const Dot& a, const Dot& b) {
    bool ia = iso(a), ib = iso(b);
    if (ia && ib) return false;
    if (ia) return b != base->max;
    if (ib) return a != base->max;
    return base->apart(a, b);
  };
  s->refines = [base, iso](const Dot& a, const Dot& b) {
    bool ia = iso(a), ib = iso(b);
    if (ia && ib) return a.as<Isolated>().k >= b.as<Isolated>().k;
    if (ia) return b == base->max;
    if (ib) return false;
    return base->refines(a, b);
  };
  s->isolated = [base, iso](const Dot& d) { return iso(d) || base->is_isolated(d); };
  s->enumerate = [base](std::uint64_t k) -> Dot {
    if (k % 2 == 1) return Isolated{k / 2 + 1};
    return base->enumerate(k / 2);
  };
  s->index_of = [base](const Dot& d) -> std::optional<std::uint64_t> {
    if (auto i = d.get_if<Isolated>()) return 2 * (i->k - 1) + 1;
    if (!base->index_of) return std::nullopt;
    auto k = base->index_of(d);
    if (!k) return std::nullopt;
    return 2 * *k;
  };
  SpraidInfo sp = *base->spraid;
  sp.tree = false;
  const SpraidInfo bsp = *base->spraid;
  sp.grade = [bsp, iso](const Dot& d) -> std::uint64_t {
    return iso(d) ? d.as<Isolated>().k : bsp.grade(d);
  };
  sp.successors = [bsp, base, iso](const Dot& d, std::size_t limit) {
    if (iso(d)) return Successors{{Isolated{d.as<Isolated>().k + 1}}, false};
    if (d != base->max) return bsp.successors(d, limit);
    if (limit == 0) return Successors{};
    auto rest = bsp.successors(d, limit - 1);
    rest.dots.insert(rest.dots.begin(), Isolated{1});
    return rest;
  };
  sp.predecessors = [bsp, base, iso](const Dot& d) -> std::vector<Dot> {
    if (!iso(d)) return bsp.predecessors(d);
    auto k = d.as<Isolated>().k;
    if (k == 1) return {base->max};
    return {Isolated{k - 1}};
  };
  // grade g >= 1: Isolated(g) first, then the base level
  sp.level = [bsp](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    if (g == 0) return bsp.level(g, r);
    if (r == 0) return Dot(Isolated{g});
    return bsp.level(g, r - 1);
  };
  sp.level_size = [bsp](std::uint64_t g) -> std::optional<std::uint64_t> {
    auto sz = bsp.level_size(g);
    if (!sz || g == 0) return sz;
    return *sz + 1;
  };
  s->spraid = sp;
  return s;
}

// ---- metric spreads ------------------------------------------------------

enum class Cmp { Below, Above };

// compare(i, j, q, slack): Below means d(a_i, a_j) < q, Above means d > q - slack.
struct DistanceOracle {
  std::optional<std::uint64_t> dense_point_count;  // nullopt: unbounded
  std::function<Cmp(std::uint64_t, std::uint64_t, const Rational&, const Rational&)> compare;
};

// Dyadic rationals in [0,1]: 0, 1, 1/2, 1/4, 3/4, 1/8, ...
inline Rational unit_dyadic_point(std::uint64_t i) {
  if (i == 0) return 0;
  if (i == 1) return 1;
  std::uint64_t j = std::bit_width(i - 1);
  std::uint64_t k = 2 * (i - (1ULL << (j - 1)) - 1) + 1;
  return make_rational(Integer(std::to_string(k)), pow_int(2, j));
}

inline std::optional<std::uint64_t> unit_dyadic_index(const Rational& q) {
  if (q == 0) return 0;
  if (q == 1) return 1;
  if (q < 0 || q > 1) return std::nullopt;
  std::uint64_t j = mpz_sizeinbase(q.get_den_mpz_t(), 2) - 1;
  if (q.get_den() != pow_int(2, j) || j > 60) return std::nullopt;
  std::uint64_t k = q.get_num().get_ui();
  return (k - 1) / 2 + (1ULL << (j - 1)) + 1;
}

// Exact oracle for [0,1] with the dyadic rationals as dense points.
inline DistanceOracle unit_interval_oracle() {
  DistanceOracle o;
  o.compare = [](std::uint64_t i, std::uint64_t j, const Rational& q, const Rational&) {
    Rational d = unit_dyadic_point(i) - unit_dyadic_point(j);
    if (d < 0) d = -d;
    return d < q ? Cmp::Below : Cmp::Above;
  };
  return o;
}

namespace detail {
// Memo turning oracle answers into a fixed relation; rejects inconsistent answers.
class OracleMemo {
 public:
  explicit OracleMemo(DistanceOracle o) : oracle_(std::move(o)) {}

  Cmp ask(std::uint64_t i, std::uint64_t j, const Rational& q, const Rational& slack) {
    if (i > j) std::swap(i, j);
    std::lock_guard<std::mutex> lk(mu_);
    auto key = std::make_tuple(i, j, q.get_str(), slack.get_str());
    if (auto it = memo_.find(key); it != memo_.end()) return it->second;
    Cmp c = oracle_.compare(i, j, q, slack);
    auto& hist = history_[{i, j}];
    for (const auto& [q2, s2, c2] : hist) {
      bool bad = (c == Cmp::Below && c2 == Cmp::Above && q2 - s2 >= q) ||
                 (c == Cmp::Above && c2 == Cmp::Below && q - slack >= q2);
      if (bad)
        throw SpaceError("inconsistent distance oracle on pair (" + std::to_string(i) + "," +
                         std::to_string(j) + ")");
    }
    hist.emplace_back(q, slack, c);
    memo_.emplace(key, c);
    return c;
  }

 private:
  DistanceOracle oracle_;
  std::mutex mu_;
  std::map<std::tuple<std::uint64_t, std::uint64_t, std::string, std::string>, Cmp> memo_;
  std::map<std::pair<std::uint64_t, std::uint64_t>, std::vector<std::tuple<Rational, Rational, Cmp>>> history_;
};
}  // namespace detail

// Ball(n, s) is B(a_n, 2^-s).
inline SpacePtr metric_to_spread(DistanceOracle oracle, std::string name = "metric_spread") {
  auto s = detail::new_space(std::move(name));
  s->max = MaxDot{};
  auto count = oracle.dense_point_count;
  auto memo = std::make_shared<detail::OracleMemo>(std::move(oracle));
  s->contains = [count](const Dot& d) {
    if (d.is_max()) return true;
    auto b = d.get_if<Ball>();
    return b && (!count || b->i < *count);
  };
  s->refines = [memo](const Dot& a, const Dot& b) {
    if (b.is_max() || a == b) return true;
    if (a.is_max()) return false;
    const auto& x = a.as<Ball>();
    const auto& y = b.as<Ball>();
    if (x.s <= y.s) return false;
    Rational q = pow2(-static_cast<std::int64_t>(y.s)) - pow2(-static_cast<std::int64_t>(x.s));
    return memo->ask(x.i, y.i, q, pow2(-2 * static_cast<std::int64_t>(x.s))) == Cmp::Below;
  };
  s->apart = [memo](const Dot& a, const Dot& b) {
    if (a.is_max() || b.is_max()) return false;
    const auto& x = a.as<Ball>();
    const auto& y = b.as<Ball>();
    auto sx = static_cast<std::int64_t>(x.s), sy = static_cast<std::int64_t>(y.s);
    Rational q = pow2(-sx) + pow2(-sy) + pow2(-sx - sy);
    return memo->ask(x.i, y.i, q, pow2(-sx - sy - 1)) == Cmp::Above;
  };
  s->isolated = [](const Dot&) { return false; };
  s->enumerate = [count](std::uint64_t k) -> Dot {
    if (k == 0) return MaxDot{};
    auto [i, sc] = enumeration::unpair(k - 1);
    if (count && *count > 0) i %= *count;
    return Ball{i, sc};
  };
  s->index_of = [](const Dot& d) -> std::optional<std::uint64_t> {
    if (d.is_max()) return 0;
    auto b = d.get_if<Ball>();
    if (!b) return std::nullopt;
    return enumeration::pair(b->i, b->s) + 1;
  };
  return s;
}

}  // namespace natspace
