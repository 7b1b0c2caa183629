#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "dot.hpp"
#include "enumeration.hpp"

namespace natspace {

struct SpaceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Successors {
  std::vector<Dot> dots;
  bool unbounded = false;  // dots is only a prefix of an infinite successor set
};

struct SpraidInfo {
  std::function<std::uint64_t(const Dot&)> grade;
  // successors(a, limit): at most `limit` successors, in a fixed order.
  std::function<Successors(const Dot&, std::size_t)> successors;
  std::function<std::vector<Dot>(const Dot&)> predecessors;
  bool finitely_branching = true;
  bool tree = false;
  // enumeration lists grade by grade without repeats and successors come in enumeration order
  bool graded_enumeration = false;
  // level(g, r): the r-th dot of grade g in a fixed order, nullopt past the end.
  std::function<std::optional<Dot>(std::uint64_t, std::uint64_t)> level;
  // number of grade-g dots, nullopt when infinite
  std::function<std::optional<std::uint64_t>(std::uint64_t)> level_size;
};

class ApartPairs;

struct Space {
  std::string name;
  std::function<bool(const Dot&, const Dot&)> apart;
  std::function<bool(const Dot&, const Dot&)> refines;  // refines(a, b): a ⊑ b
  Dot max;
  std::function<Dot(std::uint64_t)> enumerate;
  std::function<std::optional<std::uint64_t>(const Dot&)> index_of;
  std::function<bool(const Dot&)> contains;
  std::optional<SpraidInfo> spraid;
  std::function<bool(const Dot&)> isolated;  // empty: no isolated dots
  std::shared_ptr<ApartPairs> pairs;

  bool touch(const Dot& a, const Dot& b) const { return !apart(a, b); }
  bool strictly_refines(const Dot& a, const Dot& b) const { return a != b && refines(a, b); }
  std::uint64_t grade(const Dot& a) const {
    if (!spraid) throw SpaceError(name + " has no grade structure");
    return spraid->grade(a);
  }
  bool is_isolated(const Dot& a) const { return isolated && isolated(a); }
};

using SpacePtr = std::shared_ptr<const Space>;

// Memoized enumeration of apart dot pairs, diagonal over enumeration indices.
class ApartPairs {
 public:
  std::pair<Dot, Dot> at(const Space& s, std::size_t i) {
    std::lock_guard<std::mutex> lk(mu_);
    while (found_.size() <= i) {
      auto [x, y] = enumeration::unpair(cursor_++);
      if (x >= y) continue;
      Dot a = s.enumerate(x), b = s.enumerate(y);
      if (s.apart(a, b)) found_.emplace_back(std::move(a), std::move(b));
      if (cursor_ > scan_limit_) throw SpaceError(s.name + ": apart pair enumeration exhausted");
    }
    return found_[i];
  }

 private:
  std::mutex mu_;
  std::vector<std::pair<Dot, Dot>> found_;
  std::uint64_t cursor_ = 0;
  std::uint64_t scan_limit_ = 50'000'000;
};

inline std::pair<Dot, Dot> apart_pair(const Space& s, std::size_t i) {
  if (!s.pairs) throw SpaceError(s.name + " has no apart-pair enumeration");
  return s.pairs->at(s, i);
}

inline Successors successors(const Space& s, const Dot& a, std::size_t limit = 64) {
  if (!s.spraid) throw SpaceError(s.name + " is not a spraid");
  if (!s.contains(a)) throw SpaceError("not a dot of " + s.name + ": " + show(a));
  return s.spraid->successors(a, limit);
}

inline std::vector<Dot> predecessors(const Space& s, const Dot& a) {
  if (!s.spraid) throw SpaceError(s.name + " is not a spraid");
  if (!s.contains(a)) throw SpaceError("not a dot of " + s.name + ": " + show(a));
  return s.spraid->predecessors(a);
}

// Calls fn on every ⊲-trail from the maximal dot down to a (max excluded).
inline void for_each_successor_trail(const Space& s, const Dot& a, const std::function<void(const std::vector<Dot>&)>& fn) {
  std::vector<Dot> up = {a};  // a, then predecessors towards max
  std::vector<Dot> t;
  std::function<void()> rec = [&]() {
    if (up.back() == s.max) {
      t.assign(up.rbegin() + 1, up.rend());
      fn(t);
      return;
    }
    for (auto& p : predecessors(s, up.back())) {
      up.push_back(std::move(p));
      rec();
      up.pop_back();
    }
  };
  rec();
}

// All ⊲-trails from the maximal dot down to a (max excluded).
inline std::vector<std::vector<Dot>> successor_trails(const Space& s, const Dot& a) {
  std::vector<std::vector<Dot>> out;
  for_each_successor_trail(s, a, [&](const std::vector<Dot>& t) { out.push_back(t); });
  return out;
}

// Checks the pre-natural axioms on the first `depth` enumerated dots.
inline std::vector<std::string> validate_space(const Space& s, std::size_t depth) {
  std::vector<std::string> report;
  auto cite = [&](const std::string& what, std::initializer_list<const Dot*> ds) {
    std::string line = what + ":";
    for (auto d : ds) line += " " + show(*d);
    report.push_back(std::move(line));
  };
  std::vector<Dot> dots;
  for (std::size_t i = 0; i < depth; ++i) {
    Dot d = s.enumerate(i);
    if (!s.contains(d)) cite("enumerated non-member", {&d});
    if (std::find(dots.begin(), dots.end(), d) == dots.end()) dots.push_back(std::move(d));
  }
  const std::size_t n = dots.size();
  std::vector<std::vector<char>> ap(n, std::vector<char>(n)), le(n, std::vector<char>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      ap[i][j] = s.apart(dots[i], dots[j]);
      le[i][j] = s.refines(dots[i], dots[j]);
    }
  for (std::size_t i = 0; i < n; ++i) {
    if (ap[i][i]) cite("antireflexivity", {&dots[i]});
    if (!le[i][i]) cite("reflexivity", {&dots[i]});
    if (!s.refines(dots[i], s.max)) cite("not below max", {&dots[i]});
    for (std::size_t j = 0; j < n; ++j) {
      if (ap[i][j] != ap[j][i]) cite("symmetry", {&dots[i], &dots[j]});
      if (i != j && le[i][j] && le[j][i]) cite("antisymmetry", {&dots[i], &dots[j]});
      if (!le[i][j]) continue;
      for (std::size_t k = 0; k < n; ++k) {
        if (le[j][k] && !le[i][k]) cite("transitivity", {&dots[i], &dots[j], &dots[k]});
        if (ap[k][j] && !ap[k][i]) cite("monotonicity", {&dots[i], &dots[j], &dots[k]});
      }
    }
  }
  if (s.spraid) {
    const auto& sp = *s.spraid;
    if (sp.grade(s.max) != 0) cite("grade of max", {&s.max});
    for (std::size_t i = 0; i < n; ++i) {
      const Dot& a = dots[i];
      auto ga = sp.grade(a);
      if (a != s.max) {
        auto preds = sp.predecessors(a);
        if (preds.empty()) cite("no predecessor", {&a});
        if (sp.tree && preds.size() != 1) cite("tree with glue", {&a});
        for (const auto& p : preds)
          if (!(s.strictly_refines(a, p) && sp.grade(p) + 1 == ga)) cite("bad predecessor", {&a, &p});
        for (std::size_t j = 0; j < n; ++j)
          if (le[i][j] && i != j && sp.grade(dots[j]) + 1 == ga &&
              std::find(preds.begin(), preds.end(), dots[j]) == preds.end())
            cite("missing predecessor", {&a, &dots[j]});
      }
      for (std::size_t j = 0; j < n; ++j)
        if (le[i][j] && i != j && sp.grade(dots[j]) >= ga) cite("grade not increasing", {&a, &dots[j]});
      auto succ = sp.successors(a, 16);
      if (succ.dots.empty()) cite("dead end", {&a});
      for (const auto& b : succ.dots) {
        auto pb = sp.predecessors(b);
        if (sp.grade(b) != ga + 1 || std::find(pb.begin(), pb.end(), a) == pb.end())
          cite("bad successor", {&a, &b});
      }
    }
  }
  return report;
}

}  // namespace natspace
