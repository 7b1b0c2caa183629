#pragma once

#include "spaces.hpp"

namespace natspace {

// Longest strictly descending subsequence of a refining prefix. The maximal
// dot never appears in a trail (the empty trail plays its role).
inline std::vector<Dot> strict_trail(const Space& s, const std::vector<Dot>& prefix) {
  std::vector<Dot> t;
  for (const auto& d : prefix) {
    if (d == s.max) continue;
    if (t.empty() || s.strictly_refines(d, t.back())) t.push_back(d);
  }
  return t;
}

inline const std::vector<Dot>& trail_items(const Dot& t) { return t.as<Trail>().items; }

// id_str: the last dot of a trail, the maximal dot for the empty trail.
inline Dot id_str(const Space& base, const Dot& t) {
  const auto& v = trail_items(t);
  return v.empty() ? base.max : v.back();
}

inline bool is_chain(const Space& base, const std::vector<Dot>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!base.contains(v[i]) || v[i] == base.max) return false;
    if (i > 0 && !base.strictly_refines(v[i], v[i - 1])) return false;
  }
  return true;
}

// Space of finite strict trails: refinement is extension, apartness compares last dots.
inline SpacePtr trail_space(const SpacePtr& base) {
  auto s = detail::new_space("trail(" + base->name + ")");
  s->max = Trail{};
  s->contains = [base](const Dot& d) {
    auto t = d.get_if<Trail>();
    return t && is_chain(*base, t->items);
  };
  s->apart = [base](const Dot& a, const Dot& b) {
    const auto& x = trail_items(a);
    const auto& y = trail_items(b);
    return !x.empty() && !y.empty() && base->apart(x.back(), y.back());
  };
  s->refines = [](const Dot& a, const Dot& b) {
    const auto& x = trail_items(a);
    const auto& y = trail_items(b);
    return y.size() <= x.size() && std::equal(y.begin(), y.end(), x.begin());
  };
  // Weight-lex sequences of base indices; non-chains map to the empty trail.
  s->enumerate = [base](std::uint64_t k) -> Dot {
    std::vector<Dot> items;
    for (auto i : enumeration::unrank_weightlex(k)) items.push_back(base->enumerate(i));
    if (!is_chain(*base, items)) return Trail{};
    return Trail{items};
  };
  s->index_of = [base](const Dot& d) -> std::optional<std::uint64_t> {
    if (!base->index_of) return std::nullopt;
    std::vector<std::uint64_t> idx;
    for (const auto& x : trail_items(d)) {
      auto i = base->index_of(x);
      if (!i) return std::nullopt;
      idx.push_back(*i);
    }
    if (enumeration::weight(idx) >= 63) return std::nullopt;
    return enumeration::rank_weightlex(idx);
  };
  return s;
}

// Trail form of a point prefix: trail k is the strict trail of p_0..p_k.
inline std::vector<Dot> trails_of_prefix(const Space& s, const std::vector<Dot>& prefix) {
  std::vector<Dot> out;
  std::vector<Dot> t;
  for (const auto& d : prefix) {
    if (d != s.max && (t.empty() || s.strictly_refines(d, t.back()))) t.push_back(d);
    out.push_back(Trail{t});
  }
  return out;
}

}  // namespace natspace
