#pragma once

#include <limits>
#include <map>
#include <mutex>
#include <set>

#include "arith.hpp"
#include "morphism.hpp"

namespace natspace {

// ---- unglueing ------------------------------------------------------------

namespace detail {

inline bool is_successor_chain(const Space& base, const std::vector<Dot>& v) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!base.contains(v[i]) || v[i] == base.max) return false;
    const Dot& up = i == 0 ? base.max : v[i - 1];
    auto preds = base.spraid->predecessors(v[i]);
    if (std::find(preds.begin(), preds.end(), up) == preds.end()) return false;
  }
  return true;
}

inline Dot nth_trail(const Space& base, const Dot& d, std::uint64_t j) {
  auto ts = successor_trails(base, d);
  return Trail{ts[j % ts.size()]};
}

}  // namespace detail

// One copy of each dot per ⊲-trail reaching it. The result is a spread whose
// dots are Trail values; the empty trail is the maximal dot.
inline SpacePtr unglue(const SpacePtr& base) {
  if (!base->spraid) throw SpaceError("unglue: " + base->name + " is not a spraid");
  auto s = detail::new_space("unglued(" + base->name + ")");
  s->max = Trail{};
  s->contains = [base](const Dot& d) {
    auto t = d.get_if<Trail>();
    return t && detail::is_successor_chain(*base, t->items);
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
  s->isolated = [base](const Dot& d) {
    const auto& x = trail_items(d);
    return !x.empty() && base->is_isolated(x.back());
  };
  // k -> (grade, rest) -> (level index, trail index)
  s->enumerate = [base](std::uint64_t k) -> Dot {
    auto [g, rest] = enumeration::unpair(k);
    if (g == 0) return Trail{};
    auto [r, j] = enumeration::unpair(rest);
    auto d = detail::level_dot(*base, g, r);
    if (!d) return Trail{};
    return detail::nth_trail(*base, *d, j);
  };
  s->index_of = [](const Dot&) -> std::optional<std::uint64_t> { return std::nullopt; };

  SpraidInfo sp;
  sp.tree = true;
  sp.finitely_branching = base->spraid->finitely_branching;
  sp.grade = [](const Dot& d) -> std::uint64_t { return trail_items(d).size(); };
  sp.successors = [base](const Dot& d, std::size_t limit) {
    const auto& t = trail_items(d);
    Successors next = base->spraid->successors(t.empty() ? base->max : t.back(), limit);
    Successors out;
    out.unbounded = next.unbounded;
    for (auto& b : next.dots) {
      auto u = t;
      u.push_back(std::move(b));
      out.dots.push_back(Trail{std::move(u)});
    }
    return out;
  };
  sp.predecessors = [](const Dot& d) -> std::vector<Dot> {
    auto t = trail_items(d);
    if (t.empty()) return {};
    t.pop_back();
    return {Trail{std::move(t)}};
  };
  sp.level_size = [base](std::uint64_t g) -> std::optional<std::uint64_t> {
    auto n = base->spraid->level_size(g);
    if (!n) return std::nullopt;
    std::uint64_t total = 0;
    for (std::uint64_t r = 0; r < *n; ++r) total += successor_trails(*base, *base->spraid->level(g, r)).size();
    return total;
  };
  sp.level = [base](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    if (g == 0) return r == 0 ? std::optional<Dot>(Trail{}) : std::nullopt;
    if (auto n = base->spraid->level_size(g)) {
      for (std::uint64_t i = 0; i < *n; ++i) {
        auto ts = successor_trails(*base, *base->spraid->level(g, i));
        if (r < ts.size()) return Dot(Trail{ts[r]});
        r -= ts.size();
      }
      return std::nullopt;
    }
    auto [i, j] = enumeration::unpair(r);
    auto d = base->spraid->level(g, i);
    if (!d) return std::nullopt;
    return detail::nth_trail(*base, *d, j);
  };
  s->spraid = sp;
  return s;
}

// id_str as a refinement morphism from the unglued space back to its base.
inline Morphism unglue_projection(const SpacePtr& unglued, const SpacePtr& base) {
  return {MorphismKind::Refinement, unglued, base, [base](const Dot& t) { return id_str(*base, t); },
          [](const Dot&) -> std::size_t { return 1; }, "id_str"};
}

// id_str as a trail morphism on a space: a trail goes to its last dot.
inline Morphism trail_last(const SpacePtr& s) {
  return {MorphismKind::Trail, s, s, [s](const Dot& t) { return id_str(*s, t); },
          [](const Dot&) -> std::size_t { return 1; }, "id_str_" + s->name};
}

// ---- trail morphisms on sigma_R as refinement morphisms -------------------

// [n/2^m,(n+2)/2^m] -> [s/2^t,(s+2)/2^t] with s = floor((n-1)/4), t = m-2.
inline Dot sigma_hat(const Dot& a) {
  auto y = a.get_if<DyadicInterval>();
  if (!y || y->m < 2) return MaxDot{};
  Integer s = y->n - 1;
  mpz_fdiv_q_2exp(s.get_mpz_t(), s.get_mpz_t(), 2);
  return DyadicInterval{s, y->m - 2};
}

// g(a) = hull-rounded intersection of f(b)^ over all ⊲-trails b to a.
inline Morphism compress_sigmaR(const Morphism& f) {
  if (f.kind != MorphismKind::Trail) throw SpaceError("compress_sigmaR: " + f.name + " is not a trail morphism");
  SpacePtr r = shared_space("sigma_R");
  Morphism g;
  g.kind = MorphismKind::Refinement;
  g.source = r;
  g.target = r;
  g.name = "compress(" + f.name + ")";
  g.map = [f, r](const Dot& a) -> Dot {
    if (a.is_max()) return MaxDot{};
    std::optional<Interval> acc;
    for_each_successor_trail(*r, a, [&](const std::vector<Dot>& t) {
      Dot h = sigma_hat(f.on_trail(t));
      if (h.is_max()) return;
      auto iv = *interval_of(h);
      if (!acc) acc = iv;
      else acc = Interval{std::max(acc->lo, iv.lo), std::min(acc->hi, iv.hi)};
      if (acc->lo > acc->hi) throw SpaceError("f-defect: " + f.name + " sends trails to " + show(a) + " to apart dots");
    });
    if (!acc) return MaxDot{};
    if (acc->lo == acc->hi) return round_point(acc->lo, a.as<DyadicInterval>().m);
    return round_hull(acc->lo, acc->hi);
  };
  g.liveness = [f](const Dot& a) -> std::size_t { return f.patience(a) + 4; };
  return g;
}

// ---- Baire space encodes every enumerated natural space -------------------

// Apart pairs of a space behind a sentinel pair at index 0 that every non-max
// dot chooses; e_grade(a) >= n iff a chooses each of the first n pairs.
class Pregrade {
 public:
  explicit Pregrade(SpacePtr v) : v_(std::move(v)) {}

  // nullopt is the sentinel pair.
  std::optional<std::pair<Dot, Dot>> pair(std::size_t i) const {
    if (i == 0) return std::nullopt;
    return apart_pair(*v_, i - 1);
  }

  bool chooses(const Dot& a, std::size_t i) const {
    if (a == v_->max) return false;
    auto p = pair(i);
    return !p || v_->apart(a, p->first) || v_->apart(a, p->second);
  }

  // min(e-grade of a, cap)
  std::size_t e_grade(const Dot& a, std::size_t cap) const {
    std::size_t n = 0;
    while (n < cap && chooses(a, n)) ++n;
    return n;
  }

 private:
  SpacePtr v_;
};

inline constexpr std::uint64_t kEncodeScanBound = 4'000'000;

// Level sets B_n = {v_m : m >= n, e-grade(v_m) >= n} and the maps
// h(a * k) = k-th member of B_{|a|+1} strictly below h(a), in v-order.
// Everything materializes on demand; all members are thread-safe.
class BaireLevels {
 public:
  using Code = std::vector<std::uint64_t>;

  BaireLevels(SpacePtr v, std::uint64_t scan_bound = kEncodeScanBound)
      : v_(std::move(v)), pregrade_(v_), bound_(scan_bound) {
    if (!v_->enumerate) throw SpaceError("baire_encode: " + v_->name + " has no enumeration");
  }

  const SpacePtr& space() const { return v_; }
  const Pregrade& pregrade() const { return pregrade_; }

  Dot v(std::size_t m) {
    std::lock_guard<std::mutex> lk(mu_);
    return v_at(m);
  }

  std::size_t v_index(const Dot& d) {
    std::lock_guard<std::mutex> lk(mu_);
    return v_index_of(d);
  }

  bool in_level(const Dot& d, std::size_t n) {
    std::lock_guard<std::mutex> lk(mu_);
    return member(d, n);
  }

  Dot h(const Code& a) {
    std::lock_guard<std::mutex> lk(mu_);
    return image(a);
  }

  // g_a^{-1}(d): the k with h(a * k) = d.
  std::optional<std::uint64_t> child_index(const Code& a, const Dot& d) {
    std::lock_guard<std::mutex> lk(mu_);
    return index_below(a, d);
  }

  // Minimal-grade subsequence of a strict trail, coded.
  Code decode_trail(const std::vector<Dot>& t) {
    std::lock_guard<std::mutex> lk(mu_);
    Code b;
    for (const auto& d : t) {
      if (!member(d, b.size() + 1)) continue;
      auto k = index_below(b, d);
      if (!k) throw SpaceError("baire_encode: trail dot " + show(d) + " is not below " + show(image(b)));
      b.push_back(*k);
    }
    return b;
  }

 private:
  struct Node {
    Dot img;
    std::vector<Dot> kids;
    std::size_t cursor = 0;       // scan: next v-index to examine
    std::vector<Dot> frontier;    // graded: descendants of one grade, in v-order
    std::size_t pos = 0;          // graded: next frontier entry to examine
  };

  // Graded enumerations list strict refinements grade by grade, so the cone
  // below a dot can be walked level by level instead of scanning all of v.
  bool graded() const { return v_->spraid && v_->spraid->graded_enumeration && v_->index_of; }

  Dot v_at(std::size_t m) {
    std::uint64_t idle = 0;
    while (vs_.size() <= m) {
      Dot d = v_->enumerate(raw_++);
      if (index_.emplace(d, vs_.size()).second) {
        vs_.push_back(std::move(d));
        idle = 0;
      } else if (++idle > bound_) {
        throw SpaceError("baire_encode: " + v_->name + " enumeration exhausted after " + std::to_string(vs_.size()) +
                         " distinct dots (scan bound " + std::to_string(bound_) + ")");
      }
    }
    return vs_[m];
  }

  std::size_t v_index_of(const Dot& d) {
    if (!v_->contains(d)) throw SpaceError("baire_encode: not a dot of " + v_->name + ": " + show(d));
    if (graded()) {
      if (auto i = v_->index_of(d)) return *i;
      throw SpaceError("baire_encode: " + show(d) + " has no index in " + v_->name);
    }
    for (std::uint64_t steps = 0;; ++steps) {
      auto it = index_.find(d);
      if (it != index_.end()) return it->second;
      if (steps > bound_) throw SpaceError("baire_encode: " + show(d) + " not enumerated within scan bound");
      v_at(vs_.size());
    }
  }

  bool member(const Dot& d, std::size_t n) { return v_index_of(d) >= n && pregrade_.e_grade(d, n) >= n; }

  Node& node(const Code& a) {
    auto it = nodes_.find(a);
    if (it != nodes_.end()) return it->second;
    Node nd;
    if (a.empty()) {
      nd.img = v_->max;
    } else {
      Code up(a.begin(), a.end() - 1);
      nd.img = kid(up, a.back());
    }
    nd.cursor = a.size() + 1;
    if (graded()) nd.frontier = {nd.img};
    nd.pos = 1;
    return nodes_.emplace(a, std::move(nd)).first->second;
  }

  // Next candidate strict refinement of node a in v-order.
  Dot next_candidate(Node& nd) {
    if (!graded()) return v_at(nd.cursor++);
    if (nd.pos == nd.frontier.size()) {
      std::vector<std::pair<std::uint64_t, Dot>> next;
      std::set<Dot> seen;
      for (const auto& d : nd.frontier)
        for (auto& c : v_->spraid->successors(d, std::numeric_limits<std::size_t>::max()).dots)
          if (seen.insert(c).second) next.emplace_back(*v_->index_of(c), std::move(c));
      std::sort(next.begin(), next.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      nd.frontier.clear();
      for (auto& [i, c] : next) nd.frontier.push_back(std::move(c));
      nd.pos = 0;
    }
    return nd.frontier[nd.pos++];
  }

  // Examines up to the scan bound of candidates for one more kid of a.
  bool grow(const Code& a) {
    const std::size_t n = a.size() + 1;
    Node& nd = node(a);
    for (std::uint64_t steps = 0; steps < bound_; ++steps) {
      Dot d = next_candidate(nd);
      if (v_->strictly_refines(d, nd.img) && member(d, n)) {
        nd.kids.push_back(std::move(d));
        return true;
      }
    }
    return false;
  }

  Dot kid(const Code& a, std::uint64_t k) {
    Node& nd = node(a);
    while (nd.kids.size() <= k)
      if (!grow(a))
        throw SpaceError("baire_encode: level " + std::to_string(a.size() + 1) + " below " + show(nd.img) +
                         " has fewer than " + std::to_string(k + 1) + " members within scan bound " +
                         std::to_string(bound_));
    return nd.kids[k];
  }

  Dot image(const Code& a) { return node(a).img; }

  std::optional<std::uint64_t> index_below(const Code& a, const Dot& d) {
    Node& nd = node(a);
    if (!v_->strictly_refines(d, nd.img) || !member(d, a.size() + 1)) return std::nullopt;
    // d is a member of the cone, so the kid list reaches it
    for (;;) {
      auto it = std::find(nd.kids.begin(), nd.kids.end(), d);
      if (it != nd.kids.end()) return static_cast<std::uint64_t>(it - nd.kids.begin());
      if (!grow(a)) throw SpaceError("baire_encode: " + show(d) + " not reached below " + show(nd.img) + " within scan bound");
    }
  }

  SpacePtr v_;
  Pregrade pregrade_;
  std::uint64_t bound_;
  std::mutex mu_;
  std::vector<Dot> vs_;
  std::map<Dot, std::size_t> index_;
  std::uint64_t raw_ = 0;
  std::map<Code, Node> nodes_;
};

struct BaireEncoding {
  SpacePtr coded;    // N* with tree refinement and apartness pulled back along h
  Morphism forward;  // coded -> V
  Morphism inverse;  // V -> coded, trail morphism
  std::shared_ptr<BaireLevels> levels;
};

inline BaireEncoding baire_encode(const SpacePtr& v, std::uint64_t scan_bound = kEncodeScanBound) {
  auto lv = std::make_shared<BaireLevels>(v, scan_bound);
  auto tree = make_tree_space(0, "baire");
  auto w = std::make_shared<Space>(*tree);
  w->name = "baire[" + v->name + "]";
  w->pairs = std::make_shared<ApartPairs>();
  w->apart = [lv, v](const Dot& a, const Dot& b) {
    return v->apart(lv->h(a.as<Seq>().syms), lv->h(b.as<Seq>().syms));
  };
  w->isolated = [lv, v](const Dot& a) { return v->is_isolated(lv->h(a.as<Seq>().syms)); };
  BaireEncoding e;
  e.coded = w;
  e.levels = lv;
  e.forward = {MorphismKind::Refinement, w, v, [lv](const Dot& a) { return lv->h(a.as<Seq>().syms); },
               [](const Dot&) -> std::size_t { return 1; }, "h_" + v->name};
  e.inverse = {MorphismKind::Trail, v, w, [lv](const Dot& t) -> Dot { return Seq{lv->decode_trail(trail_items(t))}; },
               [](const Dot&) -> std::size_t { return 64; }, "h_inv_" + v->name};
  return e;
}

// ---- Cantor space onto every fann -----------------------------------------

namespace detail {

inline std::size_t block_bits(std::size_t m) {
  std::size_t n = 1;
  while ((std::size_t{1} << n) < m) ++n;
  return n;
}

}  // namespace detail

// Reads the cantor string in blocks: at a dot with m successors a block of
// max(1, ceil(log2 m)) bits picks successor number (block value); values >= m
// switch to the canonical point through the first successor, one dot per bit.
inline Morphism cantor_surjection(const SpacePtr& fann) {
  if (!fann->spraid || !fann->spraid->finitely_branching)
    throw SpaceError("cantor_surjection: " + fann->name + " is not finitely branching");
  struct Fillers {
    std::mutex mu;
    std::map<Dot, Point> points;
    Point get(const SpacePtr& s, const Dot& a) {
      std::lock_guard<std::mutex> lk(mu);
      auto it = points.find(a);
      if (it == points.end()) it = points.emplace(a, canonical_point(s, a)).first;
      return it->second;
    }
  };
  auto fillers = std::make_shared<Fillers>();
  // image of a bit string and the size of the block it is inside
  auto walk = [fann, fillers](const std::vector<std::uint64_t>& bits) -> std::pair<Dot, std::size_t> {
    Dot cur = fann->max;
    std::size_t pos = 0;
    for (;;) {
      auto succ = fann->spraid->successors(cur, std::numeric_limits<std::size_t>::max()).dots;
      if (succ.empty()) throw SpaceError("cantor_surjection: " + show(cur) + " has no successor");
      const std::size_t n = detail::block_bits(succ.size());
      if (bits.size() - pos < n) return {cur, n};
      std::uint64_t val = 0;
      for (std::size_t i = 0; i < n; ++i) val = val * 2 + bits[pos + i];
      pos += n;
      if (val < succ.size()) {
        cur = succ[val];
        continue;
      }
      Point x = fillers->get(fann, succ[0]);
      return {x.at(bits.size() - pos), 1};
    }
  };
  return {MorphismKind::Refinement, shared_space("cantor"), fann,
          [walk](const Dot& a) { return walk(a.as<Seq>().syms).first; },
          [walk](const Dot& a) -> std::size_t { return walk(a.as<Seq>().syms).second + 1; },
          "cantor_onto_" + fann->name};
}

// A cantor dot mapped onto a by cantor_surjection, via the first ⊲-trail to a.
inline Dot cantor_preimage(const Space& fann, const Dot& a) {
  std::vector<std::uint64_t> bits;
  Dot cur = fann.max;
  const auto trails = successor_trails(fann, a);
  for (const auto& d : trails.front()) {
    auto succ = fann.spraid->successors(cur, std::numeric_limits<std::size_t>::max()).dots;
    auto k = static_cast<std::uint64_t>(std::find(succ.begin(), succ.end(), d) - succ.begin());
    const std::size_t n = detail::block_bits(succ.size());
    for (std::size_t i = n; i-- > 0;) bits.push_back((k >> i) & 1);
    cur = d;
  }
  return Seq{bits};
}

}  // namespace natspace
