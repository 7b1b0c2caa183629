#pragma once

#include <limits>
#include <set>

#include "cantor.hpp"
#include "constructions.hpp"

namespace natspace {

inline constexpr std::size_t kScanCap = 1 << 20;
inline constexpr std::uint64_t kMetricGradeBudget = 160;

namespace detail {

// Successors of w touching v. Infinite successor sets are read in doubling
// windows until v has been seen (when w is its predecessor) and the second
// half of the window holds no toucher.
inline std::vector<Dot> touching_successors(const Space& s, const Dot& w, const Dot& v, bool parent) {
  for (std::size_t lim = 64;; lim *= 2) {
    auto sc = s.spraid->successors(w, lim);
    std::vector<Dot> out;
    bool seen = !parent, late = false;
    for (std::size_t k = 0; k < sc.dots.size(); ++k) {
      if (sc.dots[k] == v) seen = true;
      if (s.touch(sc.dots[k], v)) {
        out.push_back(sc.dots[k]);
        late = late || k >= lim / 2;
      }
    }
    if (!sc.unbounded || (seen && !late)) return out;
    if (lim >= kScanCap)
      throw BudgetError("toucher scan below " + show(w) + " passed " + std::to_string(kScanCap) + " successors");
  }
}

// All grade-(g+k) dots below the grade-g dots xs.
inline std::vector<Dot> descendants(const Space& s, const std::vector<Dot>& xs, std::uint64_t k) {
  std::set<Dot> layer(xs.begin(), xs.end());
  for (std::uint64_t i = 0; i < k; ++i) {
    std::set<Dot> next;
    for (const auto& x : layer) {
      auto sc = s.spraid->successors(x, kScanCap);
      if (sc.unbounded) throw SpaceError(s.name + ": infinitely many successors below " + show(x));
      next.insert(sc.dots.begin(), sc.dots.end());
    }
    layer = std::move(next);
  }
  return {layer.begin(), layer.end()};
}

}  // namespace detail

// Memoized same-grade touchers. A toucher of v has every predecessor touching
// every predecessor of v, so touchers(v) is read off the successors of
// touchers(p) for one predecessor p.
class TouchIndex {
 public:
  explicit TouchIndex(SpacePtr s) : s_(std::move(s)) {
    if (!s_->spraid) throw SpaceError(s_->name + " is not a spraid");
  }

  const Space& space() const { return *s_; }
  const SpacePtr& space_ptr() const { return s_; }

  std::vector<Dot> touchers(const Dot& v) {
    std::lock_guard<std::recursive_mutex> lk(mu_);
    if (auto it = memo_.find(v); it != memo_.end()) return it->second;
    std::vector<Dot> out;
    if (v == s_->max) {
      out = {v};
    } else {
      auto preds = s_->spraid->predecessors(v);
      if (preds.empty()) throw SpaceError("no predecessor: " + show(v));
      const Dot p = preds.front();
      std::set<Dot> acc;
      for (const auto& w : touchers(p))
        for (auto& c : detail::touching_successors(*s_, w, v, w == p)) acc.insert(std::move(c));
      out.assign(acc.begin(), acc.end());
    }
    return memo_.emplace(v, std::move(out)).first->second;
  }

  // St_n(xs): touchers iterated n times.
  std::vector<Dot> star(const std::vector<Dot>& xs, std::size_t n) {
    std::set<Dot> cur(xs.begin(), xs.end());
    for (std::size_t i = 0; i < n; ++i) {
      std::set<Dot> next;
      for (const auto& x : cur)
        for (auto& y : touchers(x)) next.insert(std::move(y));
      cur = std::move(next);
    }
    return {cur.begin(), cur.end()};
  }

 private:
  SpacePtr s_;
  std::recursive_mutex mu_;
  std::map<Dot, std::vector<Dot>> memo_;
};

inline std::vector<Dot> touchers(const SpacePtr& s, const Dot& v) { return TouchIndex(s).touchers(v); }

// ---- star-finiteness -----------------------------------------------------

struct StarGrade {
  std::uint64_t grade = 0;
  std::size_t dots = 0, max_count = 0, max_left = 0, max_right = 0;
};

struct StarReport {
  std::vector<StarGrade> grades;
  std::size_t max_count = 0, max_side = 0;
  std::vector<std::string> errors;
  bool ok() const { return errors.empty(); }
};

inline constexpr std::size_t kStarLevelSample = 256;

// Same-grade toucher counts (the dot itself included) for grades 0..depth; an
// infinite level is sampled on its first kStarLevelSample dots. Left and right
// count the other touchers by lower endpoint on interval spaces.
inline StarReport is_star_finite(const SpacePtr& s, std::uint64_t depth) {
  TouchIndex idx(s);
  StarReport rep;
  for (std::uint64_t g = 0; g <= depth; ++g) {
    StarGrade row{g};
    auto size = s->spraid->level_size(g);
    std::uint64_t n = size ? std::min<std::uint64_t>(*size, kStarLevelSample) : kStarLevelSample;
    for (std::uint64_t r = 0; r < n; ++r) {
      auto v = s->spraid->level(g, r);
      if (!v) break;
      ++row.dots;
      std::vector<Dot> t;
      try {
        t = idx.touchers(*v);
      } catch (const BudgetError& e) {
        rep.errors.push_back(show(*v) + ": " + e.what());
        continue;
      }
      std::size_t left = 0, right = 0;
      auto iv = interval_of(*v);
      for (const auto& w : t) {
        auto iw = interval_of(w);
        if (!iv || !iw || w == *v) continue;
        if (iw->lo < iv->lo) ++left;
        if (iw->lo > iv->lo) ++right;
      }
      row.max_count = std::max(row.max_count, t.size());
      row.max_left = std::max(row.max_left, left);
      row.max_right = std::max(row.max_right, right);
    }
    rep.max_count = std::max(rep.max_count, row.max_count);
    rep.max_side = std::max({rep.max_side, row.max_left, row.max_right});
    rep.grades.push_back(row);
  }
  return rep;
}

// a ⌣_n b: a ⌣-trail of length n from the coarser dot to the other one,
// staying at the coarser grade. ⌣_0 is comparability.
inline bool star_relation(TouchIndex& idx, std::size_t n, Dot a, Dot b) {
  const Space& s = idx.space();
  if (n == 0) return s.refines(a, b) || s.refines(b, a);
  if (s.grade(a) > s.grade(b)) std::swap(a, b);
  for (const auto& c : idx.star({a}, n - 1))
    if (s.touch(c, b)) return true;
  return false;
}

inline bool star_relation(const SpacePtr& s, std::size_t n, const Dot& a, const Dot& b) {
  TouchIndex idx(s);
  return star_relation(idx, n, a, b);
}

// ---- the subfan W_x ------------------------------------------------------

namespace detail {

struct WxState {
  SpacePtr base;
  Point x;
  std::size_t m;
  TouchIndex idx;
  std::mutex mu;
  std::vector<std::vector<Dot>> levels;

  WxState(SpacePtr b, Point p, std::size_t mm) : base(b), x(std::move(p)), m(mm), idx(std::move(b)) {}

  // least-index successor of w
  Dot filler(const Dot& w) {
    auto sc = base->spraid->successors(w, kScanCap);
    if (sc.dots.empty()) throw SpaceError("dead end in " + base->name + ": " + show(w));
    auto key = [&](const Dot& d) { return base->index_of ? base->index_of(d) : std::nullopt; };
    return *std::min_element(sc.dots.begin(), sc.dots.end(), [&](const Dot& p, const Dot& q) {
      auto kp = key(p), kq = key(q);
      if (kp && kq && *kp != *kq) return *kp < *kq;
      if (kp.has_value() != kq.has_value()) return kp.has_value();
      return p < q;
    });
  }

  const std::vector<Dot>& level(std::uint64_t g) {
    std::lock_guard<std::mutex> lk(mu);
    if (levels.empty()) levels.push_back({base->max});
    while (levels.size() <= g) {
      const auto n = levels.size() - 1;
      auto st = idx.star({x.at(n + 1)}, m);
      std::set<Dot> lvl(st.begin(), st.end());
      for (const auto& w : levels[n]) {
        bool live = std::any_of(st.begin(), st.end(), [&](const Dot& d) {
          auto p = base->spraid->predecessors(d);
          return std::find(p.begin(), p.end(), w) != p.end();
        });
        if (!live) lvl.insert(filler(w));
      }
      levels.emplace_back(lvl.begin(), lvl.end());
    }
    return levels[g];
  }

  bool member(const Dot& d) {
    if (!base->contains(d)) return false;
    const auto& l = level(base->grade(d));
    return std::binary_search(l.begin(), l.end(), d);
  }
};

}  // namespace detail

// The fann around x: grade n+1 holds St_m(x_{n+1}) and, below each member with
// no successor there, its least-index successor. The first `depth` levels are
// built eagerly, the rest on demand.
inline SpacePtr subfan_Wx(const SpacePtr& base, const Point& x, std::uint64_t depth, std::size_t m = 1) {
  if (!base->spraid) throw SpaceError("subfan_Wx needs a spraid");
  auto st = std::make_shared<detail::WxState>(base, successor_normalize(x), m);
  st->level(depth);
  auto s = detail::new_space("W_x(" + base->name + ")");
  s->max = base->max;
  s->apart = base->apart;
  s->refines = base->refines;
  s->isolated = base->isolated;
  s->contains = [st](const Dot& d) { return st->member(d); };
  s->enumerate = [st](std::uint64_t k) -> Dot {
    for (std::uint64_t g = 0;; ++g) {
      const auto& l = st->level(g);
      if (k < l.size()) return l[k];
      k -= l.size();
    }
  };
  s->index_of = [st](const Dot& d) -> std::optional<std::uint64_t> {
    if (!st->member(d)) return std::nullopt;
    std::uint64_t k = 0, g = st->base->grade(d);
    for (std::uint64_t h = 0; h < g; ++h) k += st->level(h).size();
    const auto& l = st->level(g);
    return k + (std::lower_bound(l.begin(), l.end(), d) - l.begin());
  };
  SpraidInfo sp;
  sp.grade = base->spraid->grade;
  sp.tree = base->spraid->tree;
  sp.graded_enumeration = true;
  sp.successors = [st](const Dot& d, std::size_t limit) {
    Successors out;
    const auto& next = st->level(st->base->grade(d) + 1);
    for (const auto& c : next) {
      if (out.dots.size() >= limit) break;
      auto p = st->base->spraid->predecessors(c);
      if (std::find(p.begin(), p.end(), d) != p.end()) out.dots.push_back(c);
    }
    return out;
  };
  sp.predecessors = [st](const Dot& d) {
    std::vector<Dot> out;
    for (auto& p : st->base->spraid->predecessors(d))
      if (st->member(p)) out.push_back(std::move(p));
    return out;
  };
  sp.level = [st](std::uint64_t g, std::uint64_t r) -> std::optional<Dot> {
    const auto& l = st->level(g);
    if (r >= l.size()) return std::nullopt;
    return l[r];
  };
  sp.level_size = [st](std::uint64_t g) -> std::optional<std::uint64_t> { return st->level(g).size(); };
  s->spraid = sp;
  s->pairs = std::make_shared<ApartPairs>();
  return s;
}

// ---- splitting depth -----------------------------------------------------

struct SplitCertificate {
  std::uint64_t N = 0;
  // grade-N dots touching A_⊑ and B_⊑
  std::vector<Dot> touch_a, touch_b;
  // a touching pair (c, d) of grade N-1 with c ⌣ A_⊑ and d ⌣ B_⊑, when N-1 was tried
  std::optional<std::pair<Dot, Dot>> fails_below;
};

inline constexpr std::uint64_t kSplitSlack = 64;

// The grade-N dots touching some grade-N dot of A_⊑.
inline std::vector<Dot> touching_downset(TouchIndex& idx, const std::vector<Dot>& A, std::uint64_t N) {
  const Space& s = idx.space();
  std::vector<Dot> down;
  for (const auto& a : A) {
    auto d = detail::descendants(s, {a}, N - s.grade(a));
    down.insert(down.end(), d.begin(), d.end());
  }
  return idx.star(down, 1);
}

// Least N >= the largest grade in A ∪ B with every grade-N dot touching A_⊑
// apart from every grade-N dot touching B_⊑ (below that grade the question
// has no grade-N part of A_⊑ to ask about).
inline SplitCertificate splitting_certificate(TouchIndex& idx, const std::vector<Dot>& A, const std::vector<Dot>& B) {
  const Space& s = idx.space();
  for (const auto& a : A)
    for (const auto& b : B)
      if (!s.apart(a, b)) throw SpaceError("splitting_depth: " + show(a) + " and " + show(b) + " are not apart");
  std::uint64_t start = 0;
  for (const auto* X : {&A, &B})
    for (const auto& x : *X) start = std::max(start, s.grade(x));
  SplitCertificate cert;
  for (std::uint64_t N = start; N <= start + kSplitSlack; ++N) {
    auto ta = touching_downset(idx, A, N), tb = touching_downset(idx, B, N);
    std::optional<std::pair<Dot, Dot>> bad;
    for (const auto& c : ta) {
      for (const auto& d : idx.touchers(c))
        if (std::binary_search(tb.begin(), tb.end(), d)) {
          bad = {c, d};
          break;
        }
      if (bad) break;
    }
    if (!bad) {
      cert.N = N;
      cert.touch_a = std::move(ta);
      cert.touch_b = std::move(tb);
      return cert;
    }
    cert.fails_below = bad;
  }
  throw BudgetError("splitting_depth: no split within " + std::to_string(kSplitSlack) + " grades");
}

inline SplitCertificate splitting_certificate(const SpacePtr& s, const std::vector<Dot>& A, const std::vector<Dot>& B) {
  TouchIndex idx(s);
  return splitting_certificate(idx, A, B);
}

inline std::uint64_t splitting_depth(const SpacePtr& s, const std::vector<Dot>& A, const std::vector<Dot>& B) {
  return splitting_certificate(s, A, B).N;
}

// ---- Urysohn functions ---------------------------------------------------
//
// The construction runs on ⊲-chains c_1..c_g (c_k of grade k), so glued dots
// are split per chain. Zones are named by ternary strings; "<" and ">" stand
// for the a-cone and the b-cone, the neighbours of 0..0 and 2..2. Zone i is
// split at grade N(i) into i0 (touching the preceding zone), i2 (touching the
// following zone) and i1 (neither). Every test is local: a zone is known
// through its projection P(j, v) onto dots and its boundary Bd(j, t), the
// grade-t dots of P_j touching a dot outside P_j.

namespace detail {

inline std::string zone_prd(const std::string& i) {
  if (i.empty()) return "<";
  std::string r = i;
  for (std::size_t k = r.size(); k-- > 0;) {
    if (r[k] > '0') {
      --r[k];
      std::fill(r.begin() + static_cast<std::ptrdiff_t>(k) + 1, r.end(), '2');
      return r;
    }
  }
  return "<";
}

inline std::string zone_scc(const std::string& i) {
  if (i.empty()) return ">";
  std::string r = i;
  for (std::size_t k = r.size(); k-- > 0;) {
    if (r[k] < '2') {
      ++r[k];
      std::fill(r.begin() + static_cast<std::ptrdiff_t>(k) + 1, r.end(), '0');
      return r;
    }
  }
  return ">";
}

inline bool cone_zone(const std::string& j) { return j == "<" || j == ">"; }

inline constexpr std::uint64_t kZoneSlack = 48;

class UrysohnEngine {
 public:
  UrysohnEngine(SpacePtr s, Dot a, Dot b, std::uint64_t cap)
      : s_(s), idx_(std::move(s)), a_(std::move(a)), b_(std::move(b)), M_(s_->grade(a_)), cap_(cap) {}

  const Space& space() const { return *s_; }
  std::uint64_t cap() const { return cap_; }

  // Grade at which zone j is defined.
  std::uint64_t g(const std::string& j) {
    if (j.empty()) return 0;
    if (cone_zone(j)) return M_;
    return N(j.substr(0, j.size() - 1));
  }

  std::uint64_t t(const std::string& i) { return std::max({g(zone_prd(i)), g(i), g(zone_scc(i))}); }

  // Least N > t(i) at which nothing touching the preceding zone touches a dot
  // touching the following zone.
  std::uint64_t N(const std::string& i) {
    std::lock_guard<std::recursive_mutex> lk(mu_);
    if (auto it = N_.find(i); it != N_.end()) return it->second;
    const std::uint64_t tt = t(i);
    const std::string prd = zone_prd(i), scc = zone_scc(i);
    std::vector<Dot> X;
    for (const auto& x : idx_.star(Bd(prd, tt), 2))
      if (P(prd, x)) X.push_back(x);
    std::vector<Dot> layer = idx_.star(X, 1);
    for (std::uint64_t n = tt + 1; n <= tt + kZoneSlack; ++n) {
      if (n > cap_) throw BudgetError("zone " + show_zone(i) + " needs grade above " + std::to_string(cap_));
      layer = descendants(*s_, layer, 1);
      bool bad = false;
      for (const auto& c : layer) {
        if (!std::any_of(X.begin(), X.end(), [&](const Dot& x) { return s_->touch(c, x); })) continue;
        for (const auto& d : idx_.touchers(c))
          if (touches_zone(scc, d, tt)) {
            bad = true;
            break;
          }
        if (bad) break;
      }
      if (!bad) return N_.emplace(i, n).first->second;
    }
    throw BudgetError("zone " + show_zone(i) + " does not split within " + std::to_string(kZoneSlack) + " grades");
  }

  // v lies in the projection of zone j (grade(v) >= g(j)).
  bool P(const std::string& j, const Dot& v) {
    if (j.empty()) return true;
    if (j == "<") return s_->refines(v, a_);
    if (j == ">") return s_->refines(v, b_);
    std::lock_guard<std::recursive_mutex> lk(mu_);
    auto key = std::make_pair(j, v);
    if (auto it = P_.find(key); it != P_.end()) return it->second;
    const std::string i = j.substr(0, j.size() - 1);
    const int s = j.back() - '0';
    const std::uint64_t n = N(i);
    bool in = false;
    for (const auto& u : ancestors_at(*s_, v, n))
      if (P(i, u) && cls(i, u) == s) {
        in = true;
        break;
      }
    return P_.emplace(std::move(key), in).first->second;
  }

  // Class of u (grade N(i), in P_i) inside zone i.
  int cls(const std::string& i, const Dot& u) {
    std::lock_guard<std::recursive_mutex> lk(mu_);
    auto key = std::make_pair(i, u);
    if (auto it = cls_.find(key); it != cls_.end()) return it->second;
    const std::uint64_t tt = t(i);
    int c = touches_zone(zone_prd(i), u, tt) ? 0 : touches_zone(zone_scc(i), u, tt) ? 2 : 1;
    return cls_.emplace(std::move(key), c).first->second;
  }

  // Grade-tt dots of P_j touching a grade-tt dot outside P_j (tt >= g(j)).
  std::vector<Dot> Bd(const std::string& j, std::uint64_t tt) {
    std::lock_guard<std::recursive_mutex> lk(mu_);
    auto key = std::make_pair(j, tt);
    if (auto it = Bd_.find(key); it != Bd_.end()) return it->second;
    std::vector<Dot> cand;
    const std::uint64_t gj = g(j);
    if (tt < gj) throw SpaceError("zone " + show_zone(j) + " is not defined at grade " + std::to_string(tt));
    if (j.empty()) {
    } else if (tt > gj) {
      cand = descendants(*s_, Bd(j, tt - 1), 1);
    } else if (cone_zone(j)) {
      cand = {j == "<" ? a_ : b_};
    } else {
      const std::string i = j.substr(0, j.size() - 1);
      const std::uint64_t ti = t(i);
      std::vector<Dot> seeds;
      for (const auto& z : {zone_prd(i), i, zone_scc(i)}) {
        auto bz = Bd(z, ti);
        seeds.insert(seeds.end(), bz.begin(), bz.end());
      }
      std::set<Dot> all;
      for (auto& d : descendants(*s_, idx_.star(seeds, 2), tt - ti)) all.insert(std::move(d));
      for (auto& d : Bd(i, tt)) all.insert(std::move(d));
      cand.assign(all.begin(), all.end());
    }
    std::vector<Dot> out;
    for (const auto& u : cand) {
      if (!P(j, u)) continue;
      auto ts = idx_.touchers(u);
      if (std::any_of(ts.begin(), ts.end(), [&](const Dot& z) { return !P(j, z); })) out.push_back(u);
    }
    return Bd_.emplace(std::move(key), std::move(out)).first->second;
  }

  // Digits of the chain whose grade-k dot is at(k); stops after max_digits
  // digits, at grade `len`, or when the next split lies past the cap.
  template <class At>
  std::vector<std::uint64_t> code(const At& at, std::uint64_t len, std::size_t max_digits, bool& pending) {
    std::lock_guard<std::recursive_mutex> lk(mu_);
    std::string id;
    pending = false;
    while (id.size() < max_digits) {
      std::uint64_t n;
      try {
        n = N(id);
      } catch (const BudgetError&) {
        if (len <= cap_) break;
        pending = true;
        break;
      }
      if (n > len) break;
      id.push_back(static_cast<char>('0' + cls(id, at(n))));
    }
    std::vector<std::uint64_t> out;
    for (char c : id) out.push_back(static_cast<std::uint64_t>(c - '0'));
    return out;
  }

  static std::string show_zone(const std::string& j) { return j.empty() ? "(root)" : j; }

 private:
  // d touches a grade-tt dot of P_j.
  bool touches_zone(const std::string& j, const Dot& d, std::uint64_t tt) {
    for (const auto& anc : ancestors_at(*s_, d, tt))
      for (const auto& y : idx_.touchers(anc))
        if (P(j, y) && s_->touch(d, y)) return true;
    return false;
  }

  SpacePtr s_;
  TouchIndex idx_;
  Dot a_, b_;
  std::uint64_t M_, cap_;
  std::recursive_mutex mu_;
  std::map<std::string, std::uint64_t> N_;
  std::map<std::pair<std::string, Dot>, bool> P_;
  std::map<std::pair<std::string, Dot>, int> cls_;
  std::map<std::pair<std::string, std::uint64_t>, std::vector<Dot>> Bd_;
};

}  // namespace detail

// The ⊲-chain through the items of a strict trail, gaps filled by walking
// predecessors that stay below the previous item.
inline std::vector<Dot> chain_of_trail(const Space& s, const std::vector<Dot>& items) {
  std::vector<Dot> rev;
  for (std::size_t k = items.size(); k-- > 0;) {
    const Dot& prev = k > 0 ? items[k - 1] : s.max;
    const std::uint64_t stop = s.grade(prev);
    Dot cur = items[k];
    rev.push_back(cur);
    for (std::uint64_t g = s.grade(cur); g > stop + 1; --g) {
      auto preds = s.spraid->predecessors(cur);
      auto it = std::find_if(preds.begin(), preds.end(), [&](const Dot& p) { return s.refines(p, prev); });
      if (it == preds.end()) throw SpaceError("no ⊲-chain from " + show(prev) + " to " + show(items[k]));
      cur = *it;
      rev.push_back(cur);
    }
  }
  return {rev.rbegin(), rev.rend()};
}

struct Coded {
  std::vector<std::uint64_t> digits;
  bool pending = false;  // the next digit needs a grade past the budget
};

// f_{a,b}: ternary codes on ⊲-chains, 0 on the a-cone, 1 on the b-cone and in
// [1/3, 2/3] below every dot c with a # c # b of the same grade.
struct UrysohnFunction {
  SpacePtr space;
  Dot a, b;
  Morphism h_map;     // trail morphism space -> digits3_R
  Morphism realized;  // trail morphism space -> [0,1]_ter
  std::shared_ptr<detail::UrysohnEngine> engine;

  Coded code(const std::vector<Dot>& chain, std::size_t max_digits = std::numeric_limits<std::size_t>::max()) const {
    Coded c;
    c.digits = engine->code([&](std::uint64_t k) { return chain.at(k - 1); }, chain.size(), max_digits, c.pending);
    return c;
  }

  // The first `digits` digits along a successor-normalized point.
  std::vector<std::uint64_t> code_point(const Point& p, std::size_t digits) const {
    bool pending = false;
    auto out = engine->code([&](std::uint64_t k) { return p.at(k); }, std::numeric_limits<std::uint64_t>::max(),
                            digits, pending);
    if (out.size() < digits)
      throw BudgetError("Urysohn code for " + show(a) + ", " + show(b) + " stops after " +
                        std::to_string(out.size()) + " digits");
    return out;
  }

  Dot value(const std::vector<Dot>& chain) const { return digits_to_interval(3, code(chain).digits); }
};

namespace detail {

inline UrysohnFunction make_urysohn(const SpacePtr& s, const Dot& a, const Dot& b, std::uint64_t cap) {
  if (!s->spraid) throw SpaceError("Urysohn functions need a spraid");
  if (!s->contains(a) || !s->contains(b)) throw SpaceError("not dots of " + s->name + ": " + show(a) + ", " + show(b));
  if (!s->apart(a, b)) throw SpaceError("Urysohn function: " + show(a) + " and " + show(b) + " are not apart");
  if (s->grade(a) != s->grade(b)) throw SpaceError("Urysohn function: " + show(a) + " and " + show(b) + " differ in grade");
  UrysohnFunction f{s, a, b, {}, {}, std::make_shared<UrysohnEngine>(s, a, b, cap)};
  auto name = "f_{" + show(a) + "," + show(b) + "}";
  const UrysohnFunction g = f;
  auto digits = [g](const Dot& t) {
    return g.code(chain_of_trail(*g.space, trail_items(t))).digits;
  };
  auto live = [cap](const Dot&) -> std::size_t { return cap; };
  f.h_map = {MorphismKind::Trail, s, nary_digit_space(3), [digits](const Dot& t) -> Dot { return seq(digits(t)); },
             live, "h" + name.substr(1)};
  f.realized = {MorphismKind::Trail, s, nary_unit_space(3),
                [digits](const Dot& t) { return digits_to_interval(3, digits(t)); }, live, name};
  return f;
}

}  // namespace detail

inline UrysohnFunction urysohn_fan(const SpacePtr& fann, const Dot& a, const Dot& b,
                                   std::uint64_t grade_budget = kMetricGradeBudget) {
  if (!fann->spraid || !fann->spraid->finitely_branching) throw SpaceError("urysohn_fan needs a fann: " + fann->name);
  return detail::make_urysohn(fann, a, b, grade_budget);
}

// Spreads whose dots below the maximal one branch finitely (the σ_R family).
// Codes past depth_budget are returned partial and flagged pending.
inline UrysohnFunction urysohn_spread(const SpacePtr& spread, const Dot& a, const Dot& b, std::uint64_t depth_budget) {
  return detail::make_urysohn(spread, a, b, depth_budget);
}

// ---- the metric ----------------------------------------------------------

// d(x, y) = Σ_m 2^{-m} |f_{h(m)}(x) - f_{h(m)}(y)| over the same-grade apart
// pairs h(m) of V^+ = V with an isolated point added.
class MetricEvaluator {
 public:
  explicit MetricEvaluator(SpacePtr space, std::uint64_t grade_budget = kMetricGradeBudget)
      : base_(std::move(space)), ext_(extend_with_isolated_point(base_)), budget_(grade_budget) {}

  const SpacePtr& space() const { return base_; }
  const SpacePtr& extended() const { return ext_; }

  // m -> (grade g, r) by unpairing; within a grade, the pairs (•^g, c) come
  // first, then the apart pairs of the base level. Empty for a zero term.
  std::optional<std::pair<Dot, Dot>> pair(std::uint64_t m) {
    auto [x, r] = enumeration::unpair(m);
    const std::uint64_t g = x + 1;
    const auto& sp = *base_->spraid;
    auto size = sp.level_size(g);
    if (!size) {
      if (r % 2 == 0) {
        auto c = sp.level(g, r / 2);
        if (!c) return std::nullopt;
        return std::make_pair(Dot(Isolated{g}), *c);
      }
      auto [i, j] = enumeration::unpair((r - 1) / 2);
      if (i >= j) return std::nullopt;
      auto p = sp.level(g, i), q = sp.level(g, j);
      if (!p || !q || !base_->apart(*p, *q)) return std::nullopt;
      return std::make_pair(*p, *q);
    }
    if (r < *size) return std::make_pair(Dot(Isolated{g}), *sp.level(g, r));
    const auto& ap = apart_level(g, *size);
    if (r - *size >= ap.size()) return std::nullopt;
    return ap[r - *size];
  }

  // Cached f_{h(m)}; null for a zero term.
  std::shared_ptr<const UrysohnFunction> function(std::uint64_t m) {
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (auto it = fns_.find(m); it != fns_.end()) return it->second;
    }
    std::shared_ptr<const UrysohnFunction> f;
    if (auto pr = pair(m)) {
      f = std::make_shared<UrysohnFunction>(ext_->spraid->finitely_branching
                                                ? urysohn_fan(ext_, pr->first, pr->second, budget_)
                                                : urysohn_spread(ext_, pr->first, pr->second, budget_));
    }
    std::lock_guard<std::mutex> lk(mu_);
    return fns_.emplace(m, f).first->second;
  }

 private:
  const std::vector<std::pair<Dot, Dot>>& apart_level(std::uint64_t g, std::uint64_t size) {
    std::lock_guard<std::mutex> lk(mu_);
    auto& v = apart_[g];
    if (v.empty()) {
      std::vector<Dot> lvl;
      for (std::uint64_t r = 0; r < size; ++r) lvl.push_back(*base_->spraid->level(g, r));
      for (std::size_t j = 1; j < lvl.size(); ++j)
        for (std::size_t i = 0; i < j; ++i)
          if (base_->apart(lvl[i], lvl[j])) v.emplace_back(lvl[i], lvl[j]);
    }
    return v;
  }

  SpacePtr base_, ext_;
  std::uint64_t budget_;
  std::mutex mu_;
  std::map<std::uint64_t, std::shared_ptr<const UrysohnFunction>> fns_;
  std::map<std::uint64_t, std::vector<std::pair<Dot, Dot>>> apart_;
};

struct MetricTerm {
  std::uint64_t m = 0;
  std::optional<std::pair<Dot, Dot>> pair;
  Dot fx, fy;            // realized ternary intervals
  Rational lo, hi;       // bounds on 2^{-m} |f(x) - f(y)|
  Rational sum_lo, sum_hi;  // partial sums through this term
};

struct MetricBounds {
  Rational lo, hi;
  std::vector<MetricTerm> terms;
};

// Least n with 4 * 3^-n <= 3 * 2^-bits, i.e. 3^(n+1) >= 4 * 2^bits.
inline std::size_t ternary_digits_for(std::uint64_t bits) {
  Integer lhs = Integer(4) << static_cast<mp_bitcnt_t>(bits), rhs = 3;
  std::size_t n = 0;
  while (rhs < lhs) {
    rhs *= 3;
    ++n;
  }
  return n;
}

// M = bits + 1 terms, each at ternary precision 3^-n; hi - lo <= 2^{2-bits}.
inline MetricBounds evaluate_metric(MetricEvaluator& ev, const Point& x, const Point& y, std::uint64_t bits) {
  if (bits < 1) throw SpaceError("evaluate_metric: precision must be at least 1 bit");
  const Point px = successor_normalize(x), py = successor_normalize(y);
  const std::size_t n = ternary_digits_for(bits);
  const std::uint64_t M = bits + 1;
  MetricBounds out;
  for (std::uint64_t m = 0; m < M; ++m) {
    MetricTerm t;
    t.m = m;
    t.pair = ev.pair(m);
    t.fx = t.fy = digits_to_interval(3, {});
    if (t.pair) {
      auto f = ev.function(m);
      t.fx = digits_to_interval(3, f->code_point(px, n));
      t.fy = digits_to_interval(3, f->code_point(py, n));
      auto ix = *interval_of(t.fx), iy = *interval_of(t.fy);
      Rational w = pow2(-static_cast<std::int64_t>(m));
      t.lo = w * std::max({Rational(0), Rational(ix.lo - iy.hi), Rational(iy.lo - ix.hi)});
      t.hi = w * std::max(Rational(ix.hi - iy.lo), Rational(iy.hi - ix.lo));
    }
    out.lo += t.lo;
    out.hi += t.hi;
    t.sum_lo = out.lo;
    t.sum_hi = out.hi;
    out.terms.push_back(std::move(t));
  }
  out.hi += pow2(1 - static_cast<std::int64_t>(M));
  return out;
}

}  // namespace natspace
