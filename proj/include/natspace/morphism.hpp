#pragma once

#include "point.hpp"
#include "trail.hpp"

namespace natspace {

enum class MorphismKind { Refinement, Trail };

inline constexpr std::size_t kDefaultPatience = 8;

struct Morphism {
  MorphismKind kind = MorphismKind::Refinement;
  SpacePtr source, target;
  // Refinement: source dot -> target dot. Trail: Trail{strict trail of source dots} -> target dot.
  std::function<Dot(const Dot&)> map;
  // Liveness: how many strict input refinements may pass, given the current
  // input dot, before the output must strictly refine. Empty means kDefaultPatience.
  std::function<std::size_t(const Dot&)> liveness;
  std::string name;

  Dot operator()(const Dot& a) const { return map(a); }

  // Either kind applied to a strict trail; a refinement morphism reads the last dot.
  Dot on_trail(const std::vector<Dot>& t) const {
    if (kind == MorphismKind::Trail) return map(Trail{t});
    return map(t.empty() ? source->max : t.back());
  }

  std::size_t patience(const Dot& input) const { return liveness ? liveness(input) : kDefaultPatience; }
};

inline Morphism identity(const SpacePtr& s) {
  return {MorphismKind::Refinement, s, s, [](const Dot& a) { return a; }, [](const Dot&) -> std::size_t { return 1; },
          "id_" + s->name};
}

// Mapped stream with consecutive duplicates dropped: every emitted dot strictly
// refines the previous one, or the liveness bound is reported as a defect.
inline Point apply_point(const Morphism& f, const Point& p) {
  struct St {
    std::size_t j = 0, idle = 0;
    bool started = false;
    Dot last_in, last_out;
    std::vector<Dot> trail;
  };
  auto st = std::make_shared<St>();
  return Point(f.target, [f, p, st]() -> Dot {
    const Space& src = *f.source;
    std::size_t stuck = 0;
    for (;;) {
      Dot d = p.at(st->j);
      bool first = st->j++ == 0;
      bool strict = first || src.strictly_refines(d, st->last_in);
      if (!first && !strict && d != st->last_in)
        throw SpaceError("input to " + f.name + " does not refine at index " + std::to_string(st->j - 1));
      st->idle = strict ? 0 : st->idle + 1;
      if (st->idle >= p.strictness())
        throw StallError("input to " + f.name + " stalled after prefix: " + detail::prefix_text(p));
      if (f.kind == MorphismKind::Trail && strict && d != src.max) st->trail.push_back(d);
      st->last_in = d;
      Dot o = f.kind == MorphismKind::Trail ? f.map(Trail{st->trail}) : f.map(d);
      if (!st->started || o != st->last_out) {
        st->started = true;
        st->last_out = o;
        return o;
      }
      if (strict && ++stuck > f.patience(d))
        throw StallError("liveness defect: " + f.name + " output stuck at " + show(o) + " for input " + show(d));
    }
  });
}

// Carrier check for composition: sampled dots of f's target must be dots of g's source.
inline bool carriers_match(const Space& from, const Space& to) {
  if (&from == &to || from.name == to.name) return true;
  if (!to.contains(from.max)) return false;
  for (std::uint64_t i = 0; i < 64; ++i)
    if (!to.contains(from.enumerate(i))) return false;
  return true;
}

// g after f. For a trail morphism g the input trail is lifted, b_j = f(a_0..a_j),
// and g reads the strict trail of b.
inline Morphism compose(const Morphism& g, const Morphism& f) {
  if (!carriers_match(*f.target, *g.source))
    throw SpaceError("compose: " + f.name + " lands in " + f.target->name + ", " + g.name + " reads " + g.source->name);
  Morphism h;
  h.source = f.source;
  h.target = g.target;
  h.name = g.name + "∘" + f.name;
  h.liveness = [f, g](const Dot& d) -> std::size_t {
    Dot mid = f.kind == MorphismKind::Trail ? f.on_trail(d == f.source->max ? std::vector<Dot>{} : std::vector<Dot>{d})
                                            : f(d);
    return f.patience(d) * g.patience(mid);
  };
  if (f.kind == MorphismKind::Refinement && g.kind == MorphismKind::Refinement) {
    h.kind = MorphismKind::Refinement;
    h.map = [f, g](const Dot& a) { return g(f(a)); };
    return h;
  }
  h.kind = MorphismKind::Trail;
  if (g.kind == MorphismKind::Refinement) {
    h.map = [f, g](const Dot& t) { return g(f.on_trail(trail_items(t))); };
    return h;
  }
  h.map = [f, g](const Dot& t) -> Dot {
    const auto& a = trail_items(t);
    std::vector<Dot> b;
    for (std::size_t j = 0; j <= a.size(); ++j)
      b.push_back(f.on_trail(std::vector<Dot>(a.begin(), a.begin() + static_cast<std::ptrdiff_t>(j))));
    return g.on_trail(strict_trail(*g.source, b));
  };
  return h;
}

namespace detail {

inline std::vector<Dot> distinct_dots(const Space& s, std::size_t depth) {
  std::vector<Dot> dots;
  std::set<Dot> seen;
  for (std::uint64_t i = 0; dots.size() < depth && i < depth * 8; ++i) {
    Dot d = s.enumerate(i);
    if (seen.insert(d).second) dots.push_back(std::move(d));
  }
  return dots;
}

// Strict trails ending at the first enumerated dots, plus all their prefixes.
inline std::vector<Dot> sample_trails(const Space& s, std::size_t depth) {
  std::set<Dot> out = {Dot(Trail{})};
  for (const auto& d : distinct_dots(s, depth)) {
    if (d == s.max) continue;
    std::vector<std::vector<Dot>> ts;
    if (s.spraid) {
      ts = successor_trails(s, d);
      if (ts.size() > 4) ts.resize(4);
    } else {
      ts = {{d}};
    }
    for (const auto& t : ts)
      for (std::size_t j = 1; j <= t.size(); ++j) out.insert(Trail{std::vector<Dot>(t.begin(), t.begin() + static_cast<std::ptrdiff_t>(j))});
    if (out.size() >= depth) break;
  }
  return std::vector<Dot>(out.begin(), out.end());
}

}  // namespace detail

// Laws (i), (ii) on enumerated dot pairs and (iii) on sampled points.
// Trail morphisms are checked on strict trails of the source.
inline std::vector<std::string> check_morphism(const Morphism& f, std::size_t depth, std::size_t samples = 8) {
  std::vector<std::string> report;
  const Space& src = *f.source;
  const Space& tgt = *f.target;
  const bool trail = f.kind == MorphismKind::Trail;
  std::vector<Dot> dots = trail ? detail::sample_trails(src, depth) : detail::distinct_dots(src, depth);
  std::vector<Dot> img;
  for (const auto& a : dots) {
    img.push_back(f(a));
    if (!tgt.contains(img.back())) report.push_back("image not a dot: " + show(a) + " -> " + show(img.back()));
  }
  auto apart = [&](const Dot& a, const Dot& b) {
    return trail ? !trail_items(a).empty() && !trail_items(b).empty() &&
                       src.apart(trail_items(a).back(), trail_items(b).back())
                 : src.apart(a, b);
  };
  auto refines = [&](const Dot& a, const Dot& b) {
    if (!trail) return src.refines(a, b);
    const auto& x = trail_items(a);
    const auto& y = trail_items(b);
    return y.size() <= x.size() && std::equal(y.begin(), y.end(), x.begin());
  };
  for (std::size_t i = 0; i < dots.size(); ++i)
    for (std::size_t j = 0; j < dots.size(); ++j) {
      if (i < j && tgt.apart(img[i], img[j]) && !apart(dots[i], dots[j]))
        report.push_back("law (i): images apart, inputs touch: " + show(dots[i]) + ", " + show(dots[j]));
      if (refines(dots[i], dots[j]) && !tgt.refines(img[i], img[j]))
        report.push_back("law (ii): " + show(dots[i]) + " refines " + show(dots[j]) + " but " + show(img[i]) +
                         " does not refine " + show(img[j]));
    }
  for (std::size_t k = 0; k < samples; ++k) {
    Dot start = src.enumerate(k);
    Point x = successor_walk(f.source, start, k);
    try {
      Point y = apply_point(f, x);
      for (std::size_t n = 1; n < 12; ++n)
        if (!tgt.strictly_refines(y.at(n), y.at(n - 1)))
          report.push_back("law (iii): output does not refine from " + show(start) + " at " + std::to_string(n));
    } catch (const std::exception& e) {
      report.push_back(std::string("law (iii): from ") + show(start) + ": " + e.what());
    }
  }
  return report;
}

}  // namespace natspace
