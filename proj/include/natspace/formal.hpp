#pragma once

#include "induction.hpp"

namespace natspace {

// Formal covering judgements A ◁ B and derivations built from five rules:
//   ind1  b ⊑ c            gives {b} ◁ {c}
//   ind2  {a} ◁ B, a ∈ A   gives A ◁ B
//   ind3  A ◁ B, B ⊆ C     gives A ◁ C
//   ind4  A ◁ B, B ◁ C     gives A ◁ C
//   ind5                   {b} ◁ {d : d ≺ b}

enum class Rule { Ind1, Ind2, Ind3, Ind4, Ind5 };

inline const char* to_string(Rule r) {
  switch (r) {
    case Rule::Ind1: return "ind1";
    case Rule::Ind2: return "ind2";
    case Rule::Ind3: return "ind3";
    case Rule::Ind4: return "ind4";
    case Rule::Ind5: return "ind5";
  }
  return "?";
}

// A finite list of dots, or {d : d ≺ below}.
struct DotSet {
  std::vector<Dot> dots;
  std::optional<Dot> below;

  static DotSet of(std::vector<Dot> d) { return {std::move(d), std::nullopt}; }
  static DotSet strictly_below(Dot a) { return {{}, std::move(a)}; }
};

inline bool same_set(const DotSet& a, const DotSet& b) {
  if (a.below || b.below) return a.below && b.below && *a.below == *b.below;
  return std::set<Dot>(a.dots.begin(), a.dots.end()) == std::set<Dot>(b.dots.begin(), b.dots.end());
}

inline bool subset(const Space& s, const DotSet& a, const DotSet& b) {
  if (a.below) return b.below && s.refines(*a.below, *b.below);
  std::set<Dot> bs(b.dots.begin(), b.dots.end());
  for (const auto& d : a.dots) {
    bool in = b.below ? s.strictly_refines(d, *b.below) : bs.count(d) > 0;
    if (!in) return false;
  }
  return true;
}

// An ind2 step whose left side is {d : d ≺ a} carries no premises: its premise
// for each d is the successor schema, ind3 over ind1 {d} ◁ {b} with b a
// successor of a above d.
struct Derivation {
  Rule rule = Rule::Ind1;
  DotSet lhs, rhs;
  std::vector<Derivation> premises;
};

inline Derivation successor_instance(const Space& s, const Dot& a, const Dot& d, const DotSet& rhs) {
  auto up = detail::successors_above(s, a, d);
  if (up.empty()) throw SpaceError("successor schema: " + show(d) + " is under no successor of " + show(a));
  Derivation one{Rule::Ind1, DotSet::of({d}), DotSet::of({up.front()}), {}};
  return {Rule::Ind3, DotSet::of({d}), rhs, {one}};
}

namespace detail {

inline std::string judgement(const Derivation& d) {
  auto side = [](const DotSet& x) {
    if (x.below) return "{d ≺ " + show(*x.below) + "}";
    std::string s = "{";
    for (std::size_t i = 0; i < x.dots.size(); ++i) s += (i ? ", " : "") + show(x.dots[i]);
    return s + "}";
  };
  return std::string(to_string(d.rule)) + " " + side(d.lhs) + " ◁ " + side(d.rhs);
}

// Strict refinements of a within `levels` grades, at most `limit` per level.
inline std::vector<Dot> schema_samples(const Space& s, const Dot& a, std::size_t levels, std::size_t limit) {
  std::vector<Dot> out, layer = {a};
  for (std::size_t l = 0; l < levels; ++l) {
    std::vector<Dot> next;
    for (const auto& x : layer)
      for (auto& y : s.spraid->successors(x, limit).dots)
        if (next.size() < limit && std::find(next.begin(), next.end(), y) == next.end()) next.push_back(std::move(y));
    out.insert(out.end(), next.begin(), next.end());
    layer = std::move(next);
  }
  return out;
}

inline void verify_into(const Space& s, const Derivation& d, std::vector<std::string>& errs) {
  auto fail = [&](const std::string& why) { errs.push_back(judgement(d) + ": " + why); };
  auto singleton = [](const DotSet& x) { return !x.below && x.dots.size() == 1; };
  const std::size_t before = errs.size();
  switch (d.rule) {
    case Rule::Ind1:
      if (!d.premises.empty()) fail("ind1 takes no premises");
      else if (!singleton(d.lhs) || !singleton(d.rhs)) fail("ind1 relates two singletons");
      else if (!s.refines(d.lhs.dots[0], d.rhs.dots[0])) fail("left dot does not refine right dot");
      break;
    case Rule::Ind5:
      if (!d.premises.empty()) fail("ind5 takes no premises");
      else if (!singleton(d.lhs) || !d.rhs.below || *d.rhs.below != d.lhs.dots[0])
        fail("ind5 concludes {b} ◁ {d ≺ b}");
      break;
    case Rule::Ind3:
      if (d.premises.size() != 1) fail("ind3 takes one premise");
      else if (!same_set(d.premises[0].lhs, d.lhs)) fail("premise has a different left side");
      else if (!subset(s, d.premises[0].rhs, d.rhs)) fail("premise right side is not a subset");
      break;
    case Rule::Ind4:
      if (d.premises.size() != 2) fail("ind4 takes two premises");
      else if (!same_set(d.premises[0].lhs, d.lhs)) fail("first premise has a different left side");
      else if (!same_set(d.premises[0].rhs, d.premises[1].lhs)) fail("premises do not chain");
      else if (!same_set(d.premises[1].rhs, d.rhs)) fail("second premise has a different right side");
      break;
    case Rule::Ind2:
      if (d.lhs.below) {
        if (!d.premises.empty()) {
          fail("schematic ind2 carries no premises");
          break;
        }
        for (const auto& x : schema_samples(s, *d.lhs.below, 2, 16)) {
          try {
            verify_into(s, successor_instance(s, *d.lhs.below, x, d.rhs), errs);
          } catch (const SpaceError& e) {
            fail(e.what());
          }
        }
        break;
      }
      if (d.premises.size() != d.lhs.dots.size()) {
        fail("ind2 needs one premise per left dot");
        break;
      }
      for (std::size_t i = 0; i < d.premises.size(); ++i) {
        const auto& p = d.premises[i];
        if (!singleton(p.lhs) || p.lhs.dots[0] != d.lhs.dots[i]) fail("premise " + std::to_string(i) + " has the wrong left side");
        else if (!same_set(p.rhs, d.rhs)) fail("premise " + std::to_string(i) + " has a different right side");
      }
      break;
  }
  if (errs.size() != before) return;
  for (const auto& p : d.premises) verify_into(s, p, errs);
}

}  // namespace detail

// Empty when every step instantiates one of the five rules. Schematic ind2
// steps are checked on the strict refinements of a two grades deep.
inline std::vector<std::string> verify_derivation(const Space& s, const Derivation& d) {
  std::vector<std::string> errs;
  detail::verify_into(s, d, errs);
  return errs;
}

// {a} ◁ B from a genetic witness G rooted at a that B descends from.
inline Derivation formal_from_genetic(const Dot& a, const std::vector<Dot>& cover, const GeneticBar& g) {
  const Space& s = *g->space;
  if (g->root != a) throw SpaceError("formal_from_genetic: witness rooted at " + show(g->root) + ", not " + show(a));
  if (auto o = orphan(cover, g)) throw SpaceError("formal_from_genetic: witness dot " + show(*o) + " refines no cover dot");
  const DotSet rhs = DotSet::of(cover);
  std::function<Derivation(const GeneticBar&)> rec = [&](const GeneticBar& n) -> Derivation {
    const Dot& x = n->root;
    if (n->leaf) {
      auto c = std::find_if(cover.begin(), cover.end(), [&](const Dot& y) { return s.refines(x, y); });
      Derivation one{Rule::Ind1, DotSet::of({x}), DotSet::of({*c}), {}};
      if (cover.size() == 1) return one;
      return {Rule::Ind3, DotSet::of({x}), rhs, {one}};
    }
    auto succ = detail::bar_kids(s, x, std::nullopt);
    const DotSet next = DotSet::of(succ);
    Derivation down{Rule::Ind2, next, rhs, {}};
    for (const auto& b : succ) down.premises.push_back(rec(n->child(b)));
    Derivation five{Rule::Ind5, DotSet::of({x}), DotSet::strictly_below(x), {}};
    Derivation schema{Rule::Ind2, DotSet::strictly_below(x), next, {}};
    Derivation to_next{Rule::Ind4, DotSet::of({x}), next, {five, schema}};
    return {Rule::Ind4, DotSet::of({x}), rhs, {to_next, down}};
  };
  return rec(g);
}

// ---- JSON -----------------------------------------------------------------

inline json to_json(const DotSet& x) {
  if (x.below) return {{"below", to_json(*x.below)}};
  json d = json::array();
  for (const auto& y : x.dots) d.push_back(to_json(y));
  return {{"dots", d}};
}

inline DotSet dotset_from_json(const json& j) {
  if (j.contains("below")) return DotSet::strictly_below(from_json(j.at("below")));
  DotSet x;
  for (const auto& y : j.at("dots")) x.dots.push_back(from_json(y));
  return x;
}

inline json to_json(const Derivation& d) {
  json p = json::array();
  for (const auto& q : d.premises) p.push_back(to_json(q));
  json j = {{"rule", to_string(d.rule)}, {"lhs", to_json(d.lhs)}, {"rhs", to_json(d.rhs)}, {"premises", p}};
  if (d.rule == Rule::Ind2 && d.lhs.below) j["schema"] = "successor";
  return j;
}

inline Derivation derivation_from_json(const json& j) {
  static const std::map<std::string, Rule> rules = {
      {"ind1", Rule::Ind1}, {"ind2", Rule::Ind2}, {"ind3", Rule::Ind3}, {"ind4", Rule::Ind4}, {"ind5", Rule::Ind5}};
  auto it = rules.find(j.at("rule").get<std::string>());
  if (it == rules.end()) throw SpaceError("unknown rule " + j.at("rule").dump());
  Derivation d{it->second, dotset_from_json(j.at("lhs")), dotset_from_json(j.at("rhs")), {}};
  for (const auto& p : j.value("premises", json::array())) d.premises.push_back(derivation_from_json(p));
  return d;
}

inline std::size_t derivation_size(const Derivation& d) {
  std::size_t n = 1;
  for (const auto& p : d.premises) n += derivation_size(p);
  return n;
}

}  // namespace natspace
