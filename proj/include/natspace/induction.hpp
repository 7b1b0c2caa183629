#pragma once

#include <limits>
#include <map>
#include <mutex>
#include <set>

#include "constructions.hpp"
#include "morphism.hpp"

namespace natspace {

struct BarNode;
using GeneticBar = std::shared_ptr<const BarNode>;

// A genetic bar as its derivation: a Leaf is the bar {root}; a Split holds a
// sub-derivation for every successor of root, built on first use.
struct BarNode {
  SpacePtr space;
  Dot root;
  bool leaf = true;
  std::function<GeneticBar(const Dot&)> make;

  GeneticBar child(const Dot& b) const {
    if (leaf) throw SpaceError("leaf at " + show(root) + " has no children");
    std::lock_guard<std::mutex> lk(mu_);
    auto it = memo_.find(b);
    if (it == memo_.end()) it = memo_.emplace(b, make(b)).first;
    return it->second;
  }

 private:
  mutable std::mutex mu_;
  mutable std::map<Dot, GeneticBar> memo_;
};

inline constexpr std::size_t kBranchLimit = std::size_t{1} << 20;

inline GeneticBar leaf_bar(const SpacePtr& s, const Dot& a) {
  auto n = std::make_shared<BarNode>();
  n->space = s;
  n->root = a;
  return n;
}

inline GeneticBar split_bar(const SpacePtr& s, const Dot& a, std::function<GeneticBar(const Dot&)> make) {
  auto n = std::make_shared<BarNode>();
  n->space = s;
  n->root = a;
  n->leaf = false;
  n->make = std::move(make);
  return n;
}

namespace detail {

inline void require_spraid(const Space& s, const char* op) {
  if (!s.spraid) throw SpaceError(std::string(op) + ": " + s.name + " is not a spraid");
}

// Successors of a; a cone bound caps infinite branching, otherwise it is an error.
inline std::vector<Dot> bar_kids(const Space& s, const Dot& a, std::optional<std::size_t> cone) {
  auto su = s.spraid->successors(a, cone ? *cone : kBranchLimit);
  if (su.unbounded && !cone)
    throw SpaceError(s.name + " branches infinitely at " + show(a) + "; pass a cone bound");
  return su.dots;
}

// Successors of z that y refines, found through y's ancestors.
inline std::vector<Dot> successors_above(const Space& s, const Dot& z, const Dot& y) {
  std::vector<Dot> out;
  const auto gz = s.grade(z);
  if (s.grade(y) <= gz) return out;
  for (auto& c : ancestors_at(s, y, gz + 1)) {
    auto p = s.spraid->predecessors(c);
    if (std::find(p.begin(), p.end(), z) != p.end()) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace detail

// V_{a,n}: split every node down to grade grd(a) + n.
inline GeneticBar genetic_uniform(const SpacePtr& s, const Dot& a, std::uint64_t n) {
  detail::require_spraid(*s, "genetic_uniform");
  if (!s->contains(a)) throw SpaceError("not a dot of " + s->name + ": " + show(a));
  if (n == 0) return leaf_bar(s, a);
  return split_bar(s, a, [s, n](const Dot& b) { return genetic_uniform(s, b, n - 1); });
}

// Distinct bar elements in derivation order.
inline std::vector<Dot> flatten(const GeneticBar& g, std::optional<std::size_t> cone = std::nullopt) {
  std::vector<Dot> out;
  std::set<Dot> seen;
  std::function<void(const GeneticBar&)> rec = [&](const GeneticBar& n) {
    if (n->leaf) {
      if (seen.insert(n->root).second) out.push_back(n->root);
      return;
    }
    for (const auto& b : detail::bar_kids(*n->space, n->root, cone)) rec(n->child(b));
  };
  rec(g);
  return out;
}

inline std::uint64_t bar_depth(const GeneticBar& g, std::optional<std::size_t> cone = std::nullopt) {
  if (g->leaf) return 0;
  std::uint64_t d = 0;
  for (const auto& b : detail::bar_kids(*g->space, g->root, cone)) d = std::max(d, bar_depth(g->child(b), cone));
  return d + 1;
}

// y is a bar element. Walks one derivation level per grade.
inline bool in_bar(const GeneticBar& g, const Dot& y) {
  if (g->leaf) return y == g->root;
  for (const auto& c : detail::successors_above(*g->space, g->root, y))
    if (in_bar(g->child(c), y)) return true;
  return false;
}

// y refines some bar element.
inline bool under_bar(const GeneticBar& g, const Dot& y) {
  if (g->leaf) return g->space->refines(y, g->root);
  for (const auto& c : detail::successors_above(*g->space, g->root, y))
    if (under_bar(g->child(c), y)) return true;
  return false;
}

inline std::optional<Dot> orphan(const std::vector<Dot>& cover, const GeneticBar& g,
                                 std::optional<std::size_t> cone = std::nullopt) {
  const Space& s = *g->space;
  for (const auto& d : flatten(g, cone))
    if (std::none_of(cover.begin(), cover.end(), [&](const Dot& c) { return s.refines(d, c); })) return d;
  return std::nullopt;
}

// Every flattened G-dot refines some C-dot.
inline bool descends(const std::vector<Dot>& cover, const GeneticBar& g, std::optional<std::size_t> cone = std::nullopt) {
  return !orphan(cover, g, cone);
}

// A dot set with an optional genetic witness. `member` decides membership when
// the set is not listed.
struct Cover {
  std::vector<Dot> dots;
  std::function<bool(const Dot&)> member;
  std::optional<GeneticBar> witness;

  bool contains(const Dot& d) const {
    if (member) return member(d);
    return std::find(dots.begin(), dots.end(), d) != dots.end();
  }
};

// The cover dots needed by the witness, in cover order.
inline std::vector<Dot> finite_subcover(const Cover& c) {
  if (!c.witness) throw SpaceError("finite_subcover: cover has no witness");
  const GeneticBar& g = *c.witness;
  const Space& s = *g->space;
  detail::require_spraid(s, "finite_subcover");
  if (!s.spraid->finitely_branching) throw SpaceError("finite_subcover: " + s.name + " is not finitely branching");
  std::set<Dot> picked;
  std::vector<Dot> out;
  for (const auto& d : flatten(g)) {
    std::optional<Dot> hit;
    if (!c.dots.empty()) {
      for (const auto& x : c.dots)
        if (s.refines(d, x)) {
          hit = x;
          break;
        }
    } else if (c.member) {
      for (std::uint64_t k = s.grade(d) + 1; k-- > 0 && !hit;)
        for (const auto& x : ancestors_at(s, d, k))
          if (c.member(x)) {
            hit = x;
            break;
          }
    }
    if (!hit) throw SpaceError("witness dot " + show(d) + " refines no cover dot");
    if (picked.insert(*hit).second) out.push_back(*hit);
  }
  if (!c.dots.empty()) {
    std::vector<Dot> ordered;
    for (const auto& x : c.dots)
      if (picked.count(x) && std::find(ordered.begin(), ordered.end(), x) == ordered.end()) ordered.push_back(x);
    return ordered;
  }
  return out;
}

// ---- bar algebra ----------------------------------------------------------

// B^{↑c}: the sub-derivation reached by walking towards c; a Leaf above c becomes Leaf(c).
inline GeneticBar reduce_bar(const GeneticBar& b, const Dot& c) {
  const Space& s = *b->space;
  if (c == b->root) return b;
  if (!s.refines(c, b->root)) throw SpaceError("reduce_bar: " + show(c) + " is not under " + show(b->root));
  if (b->leaf) return leaf_bar(b->space, c);
  auto up = detail::successors_above(s, b->root, c);
  if (up.empty()) throw SpaceError("reduce_bar: no successor of " + show(b->root) + " above " + show(c));
  return reduce_bar(b->child(up.front()), c);
}

// B^{↓a}: split from a towards c; siblings off the path get uniform bars down to grd(c).
inline GeneticBar expand_bar(const GeneticBar& b, const Dot& a) {
  const SpacePtr& s = b->space;
  const Dot c = b->root;
  if (a == c) return b;
  if (!s->refines(c, a)) throw SpaceError("expand_bar: " + show(c) + " is not under " + show(a));
  auto up = detail::successors_above(*s, a, c);
  if (up.empty()) throw SpaceError("expand_bar: no successor of " + show(a) + " above " + show(c));
  const Dot path = up.front();
  const std::uint64_t gc = s->grade(c);
  return split_bar(s, a, [b, s, path, gc](const Dot& d) {
    if (d == path) return expand_bar(b, d);
    return genetic_uniform(s, d, gc - s->grade(d));
  });
}

// min(B0, B1): a Leaf yields the other bar, Splits recurse child by child.
inline GeneticBar min_bars(const GeneticBar& b0, const GeneticBar& b1) {
  if (b0->root != b1->root) throw SpaceError("min_bars: roots differ, " + show(b0->root) + " vs " + show(b1->root));
  if (b0->leaf) return b1;
  if (b1->leaf) return b0;
  return split_bar(b0->space, b0->root, [b0, b1](const Dot& d) { return min_bars(b0->child(d), b1->child(d)); });
}

// A uniform bar under max whose every element is apart from a or from b.
inline GeneticBar separation_bar(const SpacePtr& s, const Dot& a, const Dot& b) {
  detail::require_spraid(*s, "separation_bar");
  if (!s->apart(a, b)) throw SpaceError("separation_bar: " + show(a) + " and " + show(b) + " touch");
  const auto g0 = s->grade(s->max);
  auto ia = interval_of(a), ib = interval_of(b);
  if (ia && ib) {
    const Rational half = interval_gap(*ia, *ib) / 2;
    for (std::uint64_t g = g0;; ++g) {
      auto d = s->spraid->level(g, 0);
      if (!d) throw SpaceError("separation_bar: " + s->name + " has an empty level " + std::to_string(g));
      auto iv = interval_of(*d);
      if (iv && iv->hi - iv->lo < half) return genetic_uniform(s, s->max, g - g0);
      if (g > g0 + 4096) throw SpaceError("separation_bar: no level narrower than the gap in " + s->name);
    }
  }
  if (s->spraid->tree) return genetic_uniform(s, s->max, std::max(s->grade(a), s->grade(b)) - g0);
  if (s->spraid->finitely_branching) {
    for (std::uint64_t n = 0; n <= 24; ++n) {
      auto g = genetic_uniform(s, s->max, n);
      auto flat = flatten(g);
      if (std::all_of(flat.begin(), flat.end(), [&](const Dot& c) { return s->apart(c, a) || s->apart(c, b); }))
        return g;
    }
    throw SpaceError("separation_bar: no uniform separating bar up to depth 24 in " + s->name);
  }
  throw SpaceError("separation_bar: unsupported space " + s->name);
}

// ---- inductive morphisms --------------------------------------------------

namespace detail {

inline bool registered_preimage(const std::string& part) {
  static const std::vector<std::string> exact = {"neg", "abs", "add", "mul", "min", "max", "f_can", "f_double"};
  static const std::vector<std::string> prefixes = {"id_", "scalar(", "f_evl_", "cantor_onto_"};
  if (std::find(exact.begin(), exact.end(), part) != exact.end()) return true;
  return std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) { return part.rfind(p, 0) == 0; });
}

inline std::vector<std::string> name_parts(const std::string& name) {
  static const std::string sep = "∘";
  std::vector<std::string> out;
  std::size_t pos = 0;
  for (;;) {
    auto k = name.find(sep, pos);
    out.push_back(name.substr(pos, k == std::string::npos ? std::string::npos : k - pos));
    if (k == std::string::npos) return out;
    pos = k + sep.size();
  }
}

}  // namespace detail

namespace detail {

inline GeneticBar preimage_node(const Morphism& f, const Dot& x, GeneticBar z, std::size_t idle) {
  for (;;) {
    if (z->leaf) return leaf_bar(f.source, x);
    auto up = successors_above(*z->space, z->root, f(x));
    if (up.empty()) break;
    z = z->child(up.front());
    idle = 0;
  }
  if (idle > f.patience(x) + 1)
    throw StallError("liveness defect: " + f.name + " image of " + show(x) + " stays at " + show(z->root));
  return split_bar(f.source, x, [f, z, idle](const Dot& b) { return preimage_node(f, b, z, idle + 1); });
}

}  // namespace detail

inline bool has_preimage_strategy(const Morphism& f) {
  if (f.kind != MorphismKind::Refinement) return false;
  auto parts = detail::name_parts(f.name);
  return std::all_of(parts.begin(), parts.end(), detail::registered_preimage);
}

// H on V_d with f(H) under G. At a node x: a G-Leaf gives Leaf(x); if f(x) has
// already reached a G-successor the walk follows G; otherwise x splits. The
// number of splits without G progress is bounded by the liveness of f at x.
inline GeneticBar inductive_preimage(const Morphism& f, const GeneticBar& g, std::optional<Dot> source_root = std::nullopt) {
  if (!has_preimage_strategy(f)) throw SpaceError("inductive_preimage: no registered preimage strategy for " + f.name);
  detail::require_spraid(*f.source, "inductive_preimage");
  const Dot d = source_root ? *source_root : f.source->max;
  if (!source_root && g->root != f.target->max)
    throw SpaceError("inductive_preimage: bar rooted at " + show(g->root) + " needs an explicit source root");
  if (!f.target->refines(f(d), g->root))
    throw SpaceError("inductive_preimage: " + f.name + "(" + show(d) + ") is not under " + show(g->root));
  return detail::preimage_node(f, d, g, 0);
}

// ---- sigma products of bars ------------------------------------------------

struct ProductBar {
  SpacePtr space;  // sigma product of the two factor spaces
  Cover cover;     // G ×_σ H with its genetic witness
};

namespace detail {

inline GeneticBar product_node(const SpacePtr& prod, const GeneticBar& x, const GeneticBar& y) {
  Dot t = Tuple{{x->root, y->root}};
  if (x->leaf && y->leaf) return leaf_bar(prod, t);
  return split_bar(prod, t, [prod, x, y](const Dot& p) {
    const auto& it = p.as<Tuple>().items;
    auto step = [](const GeneticBar& b, const Dot& d) { return b->leaf ? leaf_bar(b->space, d) : b->child(d); };
    return product_node(prod, step(x, it[0]), step(y, it[1]));
  });
}

}  // namespace detail

// Double induction: both factors advance together, a Leaf factor is reduced to
// each successor, and the tuple closes once both factors are Leaves.
inline ProductBar product_bar(const GeneticBar& g, const GeneticBar& h) {
  const SpacePtr& v = g->space;
  const SpacePtr& w = h->space;
  if (v->grade(g->root) != w->grade(h->root))
    throw SpaceError("product_bar: grades differ, " + show(g->root) + " vs " + show(h->root));
  auto prod = product({v, w}, ProductKind::Sigma);
  ProductBar out;
  out.space = prod;
  out.cover.member = [g, h](const Dot& t) {
    const auto& it = t.as<Tuple>().items;
    return under_bar(g, it[0]) && under_bar(h, it[1]) && (in_bar(g, it[0]) || in_bar(h, it[1]));
  };
  out.cover.witness = detail::product_node(prod, g, h);
  return out;
}

// ---- JSON -----------------------------------------------------------------

inline json bar_to_json(const GeneticBar& g, std::optional<std::size_t> cone = std::nullopt) {
  json j = {{"dot", to_json(g->root)}};
  if (g->leaf) {
    j["leaf"] = true;
    return j;
  }
  json kids = json::array();
  for (const auto& b : detail::bar_kids(*g->space, g->root, cone)) kids.push_back(bar_to_json(g->child(b), cone));
  j["children"] = kids;
  return j;
}

// Children must list the successors of the node's dot, all of them, in order.
inline GeneticBar bar_from_json(const SpacePtr& s, const json& j) {
  detail::require_spraid(*s, "bar_from_json");
  Dot a = from_json(j.at("dot"));
  if (!s->contains(a)) throw SpaceError("bar_from_json: not a dot of " + s->name + ": " + show(a));
  if (j.value("leaf", false)) return leaf_bar(s, a);
  const auto& kids = j.at("children");
  auto succ = detail::bar_kids(*s, a, std::nullopt);
  if (kids.size() != succ.size())
    throw SpaceError("bar_from_json: split at " + show(a) + " lists " + std::to_string(kids.size()) + " of " +
                     std::to_string(succ.size()) + " successors");
  auto built = std::make_shared<std::map<Dot, GeneticBar>>();
  for (std::size_t i = 0; i < kids.size(); ++i) {
    auto sub = bar_from_json(s, kids[i]);
    if (sub->root != succ[i])
      throw SpaceError("bar_from_json: child " + show(sub->root) + " is not successor " + show(succ[i]));
    (*built)[succ[i]] = sub;
  }
  return split_bar(s, a, [built](const Dot& b) { return built->at(b); });
}

}  // namespace natspace
