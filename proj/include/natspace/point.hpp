#pragma once

#include <functional>
#include <istream>
#include <memory>
#include <mutex>
#include <ostream>
#include <set>
#include <variant>

#include "space.hpp"

namespace natspace {

// A stream that stops strictly refining within its declared bound.
struct StallError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A search ran past its grade or step budget.
struct BudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A finite stream (e.g. read from a file) ran out of dots.
struct StreamExhausted : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kDefaultStrictness = 4;
inline constexpr std::size_t kModulusSearchBound = 4096;

class Point {
 public:
  using Generator = std::function<Dot()>;
  using Modulus = std::function<std::size_t(std::size_t)>;

  Point() = default;
  Point(SpacePtr space, Generator gen, std::size_t strictness = kDefaultStrictness)
      : space_(std::move(space)), st_(std::make_shared<State>()), strictness_(strictness) {
    st_->gen = std::move(gen);
  }

  const SpacePtr& space() const { return space_; }
  std::size_t strictness() const { return strictness_; }

  Dot at(std::size_t k) const {
    std::lock_guard<std::mutex> lk(st_->mu);
    while (st_->cache.size() <= k) st_->cache.push_back(st_->gen());
    return st_->cache[k];
  }

  std::vector<Dot> prefix(std::size_t n) const {
    std::vector<Dot> out;
    for (std::size_t k = 0; k < n; ++k) out.push_back(at(k));
    return out;
  }

  // Dots produced so far; never forces the generator.
  std::vector<Dot> materialized() const {
    std::lock_guard<std::mutex> lk(st_->mu);
    return st_->cache;
  }

  // Least index k with p_k apart from one side of the i-th apart pair.
  std::size_t modulus(std::size_t pair_index) const {
    if (modulus_) return modulus_(pair_index);
    auto [a, b] = apart_pair(*space_, pair_index);
    for (std::size_t k = 0; k < kModulusSearchBound; ++k) {
      Dot d = at(k);
      if (space_->apart(d, a) || space_->apart(d, b)) return k;
    }
    throw StallError("no choice within search bound for pair " + std::to_string(pair_index) +
                     " (" + show(a) + ", " + show(b) + ")");
  }

  Point with_modulus(Modulus m) const {
    Point p = *this;
    p.modulus_ = std::move(m);
    return p;
  }

  Point with_strictness(std::size_t s) const {
    Point p = *this;
    p.strictness_ = s;
    return p;
  }

 private:
  struct State {
    std::mutex mu;
    std::vector<Dot> cache;
    Generator gen;
  };
  SpacePtr space_;
  std::shared_ptr<State> st_;
  Modulus modulus_;
  std::size_t strictness_ = kDefaultStrictness;
};

// Index-addressed stream: dot k is f(k).
inline Point indexed_point(SpacePtr space, std::function<Dot(std::size_t)> f,
                           std::size_t strictness = kDefaultStrictness) {
  auto k = std::make_shared<std::size_t>(0);
  return Point(std::move(space), [f, k] { return f((*k)++); }, strictness);
}

// A finite prefix as a stream; reading past the end throws StreamExhausted.
inline Point point_from_dots(SpacePtr space, std::vector<Dot> dots) {
  for (const auto& d : dots)
    if (!space->contains(d)) throw SpaceError("not a dot of " + space->name + ": " + show(d));
  for (std::size_t k = 1; k < dots.size(); ++k)
    if (!space->refines(dots[k], dots[k - 1]))
      throw SpaceError("stream does not refine at index " + std::to_string(k));
  auto v = std::make_shared<std::vector<Dot>>(std::move(dots));
  return indexed_point(std::move(space), [v](std::size_t k) -> Dot {
    if (k >= v->size()) throw StreamExhausted("stream ended after " + std::to_string(v->size()) + " dots");
    return (*v)[k];
  });
}

namespace detail {
inline std::string prefix_text(const Point& p) {
  std::string s;
  for (const auto& d : p.materialized()) s += (s.empty() ? "" : " ") + show(d);
  return s;
}

// Walks the stream, enforcing the strictness bound, until pred holds.
template <class Pred>
std::pair<std::size_t, Dot> scan(const Point& p, Pred pred) {
  const Space& s = *p.space();
  std::size_t last_strict = 0;
  Dot prev;
  for (std::size_t k = 0;; ++k) {
    Dot d = p.at(k);
    if (pred(d)) return {k, d};
    if (k == 0 || s.strictly_refines(d, prev)) last_strict = k;
    if (k - last_strict >= p.strictness())
      throw StallError("stream stalled after prefix: " + prefix_text(p));
    prev = std::move(d);
  }
}
}  // namespace detail

inline Dot approximate(const Point& p, std::uint64_t grade) {
  const Space& s = *p.space();
  if (!s.spraid) throw SpaceError(s.name + " has no grade structure");
  return detail::scan(p, [&](const Dot& d) { return s.grade(d) >= grade; }).second;
}

struct Apart {
  std::size_t witness;
};
struct Unknown {
  std::size_t budget_spent;
};
using ApartVerdict = std::variant<Apart, Unknown>;

inline bool is_apart(const ApartVerdict& v) { return std::holds_alternative<Apart>(v); }

inline ApartVerdict point_apart(const Point& p, const Point& q, std::size_t budget) {
  const Space& s = *p.space();
  for (std::size_t k = 0; k <= budget; ++k)
    if (s.apart(p.at(k), q.at(k))) return Apart{k};
  return Unknown{budget};
}

struct Yes {
  std::size_t index;
};
using InVerdict = std::variant<Yes, Unknown>;

inline InVerdict point_in_dot(const Point& p, const Dot& a, std::size_t budget) {
  const Space& s = *p.space();
  for (std::size_t k = 0; k <= budget; ++k)
    if (s.strictly_refines(p.at(k), a)) return Yes{k};
  return Unknown{budget};
}

// Dots of grade g that d refines, found by walking predecessors upward.
inline std::vector<Dot> ancestors_at(const Space& s, const Dot& d, std::uint64_t g) {
  std::set<Dot> layer = {d};
  for (auto cur = s.grade(d); cur > g; --cur) {
    std::set<Dot> up;
    for (const auto& x : layer)
      for (auto& p : s.spraid->predecessors(x)) up.insert(std::move(p));
    layer = std::move(up);
  }
  return std::vector<Dot>(layer.begin(), layer.end());
}

// The successor point: grade(result_k) = k.
inline Point successor_normalize(const Point& p) {
  const SpacePtr& sp = p.space();
  if (!sp->spraid) throw SpaceError(sp->name + " has no grade structure");
  struct St {
    std::size_t k = 0;
    Dot last;
  };
  auto st = std::make_shared<St>();
  Point src = p;
  return Point(sp, [src, sp, st]() -> Dot {
    const Space& s = *sp;
    std::uint64_t k = st->k++;
    if (k == 0) return st->last = s.max;
    Dot d = approximate(src, k);
    for (const auto& c : ancestors_at(s, d, k)) {
      auto preds = s.spraid->predecessors(c);
      if (std::find(preds.begin(), preds.end(), st->last) != preds.end()) return st->last = c;
    }
    throw SpaceError("successor normalization found no successor of " + show(st->last));
  }, 1);
}

inline Rational interval_gap(const Interval& a, const Interval& b) {
  if (a.hi < b.lo) return b.lo - a.hi;
  if (b.hi < a.lo) return a.lo - b.hi;
  return 0;
}

// Embedding Q -> sigma_R: dot k is at exponent k with q in its middle half.
inline Point rational_to_point(const Rational& q, const SpacePtr& sigma_R) {
  Point p = indexed_point(sigma_R, [q](std::size_t k) -> Dot {
    Rational x = q * pow2(static_cast<std::int64_t>(k)) - Rational(1, 2);
    return DyadicInterval{floor_q(x), k};
  });
  return p.with_modulus([sigma_R](std::size_t i) -> std::size_t {
    auto [a, b] = apart_pair(*sigma_R, i);
    Rational gap = interval_gap(*interval_of(a), *interval_of(b));
    std::size_t m = 0;
    while (pow2(1 - static_cast<std::int64_t>(m)) >= gap) ++m;
    return m;
  });
}

struct Bounds {
  Rational lo, hi;
};

// Endpoints of the first stream dot narrower than base^(1-grade).
inline Bounds point_to_rational_bounds(const Point& p, std::uint64_t grade) {
  Dot first = p.at(0);
  std::uint32_t base = 2;
  if (auto a = first.get_if<NaryInterval>()) base = a->base;
  Rational target = 1;
  for (std::uint64_t i = 1; i < grade; ++i) target /= base;
  if (grade == 0) target = base;
  auto [k, d] = detail::scan(p, [&](const Dot& x) {
    if (x.is_max()) return false;
    auto iv = interval_of(x);
    if (!iv) throw SpaceError("not an interval space: " + p.space()->name);
    return iv->hi - iv->lo <= target;
  });
  (void)k;
  auto iv = *interval_of(d);
  return {iv.lo, iv.hi};
}

inline constexpr std::uint64_t kCanonicalSearchBound = 2'000'000;

// x^a: starts at a, each next dot is the enumeration-least strict refinement.
inline Point canonical_point(const SpacePtr& space, const Dot& a) {
  if (!space->contains(a)) throw SpaceError("not a dot of " + space->name + ": " + show(a));
  if (!space->enumerate) throw SpaceError(space->name + " has no enumeration");
  auto last = std::make_shared<std::optional<Dot>>();
  return Point(space, [space, a, last]() -> Dot {
    if (!*last) {
      *last = a;
      return a;
    }
    const Dot cur = **last;
    if (space->spraid && space->spraid->graded_enumeration) {
      auto next = space->spraid->successors(cur, 1).dots;
      if (next.empty()) throw SpaceError("space defect: " + show(cur) + " has no successor");
      *last = next.front();
      return next.front();
    }
    for (std::uint64_t s = 0; s < kCanonicalSearchBound; ++s) {
      Dot v = space->enumerate(s);
      if (space->strictly_refines(v, cur)) {
        *last = v;
        return v;
      }
    }
    throw SpaceError("space defect: no strict refinement of " + show(cur) + " within search bound");
  });
}

// Varied sample points: walk successors, picking child (seed + step) mod branching.
// Falls back to canonical points when the space has no grade structure.
inline Point successor_walk(const SpacePtr& space, const Dot& start, std::uint64_t seed) {
  if (!space->spraid) return canonical_point(space, start);
  auto cur = std::make_shared<std::optional<Dot>>();
  auto step = std::make_shared<std::uint64_t>(0);
  return Point(space, [space, start, seed, cur, step]() -> Dot {
    if (!*cur) {
      *cur = start;
      return start;
    }
    auto next = space->spraid->successors(**cur, 8).dots;
    if (next.empty()) throw SpaceError("space defect: " + show(**cur) + " has no successor");
    std::uint64_t h = seed * 0x9E3779B97F4A7C15ULL + (*step)++ * 0xBF58476D1CE4E5B9ULL;
    *cur = next[(h >> 17) % next.size()];
    return **cur;
  });
}

// ---- text format: one JSON dot per line ---------------------------------

inline void write_prefix(std::ostream& os, const std::vector<Dot>& dots) {
  for (const auto& d : dots) os << to_string(d) << '\n';
}

inline std::vector<Dot> read_prefix(std::istream& is) {
  std::vector<Dot> out;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    out.push_back(from_json(json::parse(line)));
  }
  return out;
}

}  // namespace natspace
