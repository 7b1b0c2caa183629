// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <set>

#include "natspace.hpp"

using namespace natspace;

namespace {

// Collects failures for one criterion; only the first few are printed.
struct Check {
  std::vector<std::string> failures;
  std::size_t checked = 0;

  void expect(bool ok, const std::string& what) {
    ++checked;
    if (!ok) failures.push_back(what);
  }
};

SpacePtr unit() { return shared_space("sigma_[0,1]"); }
SpacePtr sigR() { return shared_space("sigma_R"); }
SpacePtr cantor() { return shared_space("cantor"); }
SpacePtr ter() { return shared_space("[0,1]_ter"); }

std::vector<Dot> full_level(const Space& s, std::uint64_t g) {
  std::vector<Dot> out;
  for (std::uint64_t r = 0;; ++r) {
    auto d = s.spraid->level(g, r);
    if (!d) break;
    out.push_back(*d);
  }
  return out;
}

std::vector<std::vector<std::uint64_t>> all_strings(std::uint64_t k, std::size_t len) {
  std::vector<std::vector<std::uint64_t>> out = {{}};
  for (std::size_t i = 0; i < len; ++i) {
    std::vector<std::vector<std::uint64_t>> next;
    for (const auto& s : out)
      for (std::uint64_t c = 0; c < k; ++c) {
        auto t = s;
        t.push_back(c);
        next.push_back(std::move(t));
      }
    out = std::move(next);
  }
  return out;
}

bool covers_interval(std::vector<Interval> ivs, const Rational& lo, const Rational& hi) {
  std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  Rational reach = lo;
  for (const auto& iv : ivs) {
    if (iv.lo > reach) return false;
    if (iv.hi > reach) reach = iv.hi;
    if (reach >= hi) return true;
  }
  return reach >= hi;
}

// Leaf at depth 0 or when the hash of the dot says so.
GeneticBar random_bar(const SpacePtr& s, const Dot& a, std::uint64_t depth, std::uint64_t seed) {
  std::uint64_t h = std::hash<std::string>{}(show(a)) ^ (seed * 0x9E3779B97F4A7C15ULL);
  h ^= h >> 29;
  if (depth == 0 || h % 3 == 0) return leaf_bar(s, a);
  return split_bar(s, a, [s, depth, seed](const Dot& b) { return random_bar(s, b, depth - 1, seed); });
}

std::vector<Dot> cone_level(const Space& s, const Dot& a, std::uint64_t k) {
  std::vector<Dot> layer = {a};
  for (std::uint64_t i = 0; i < k; ++i) {
    std::set<Dot> next;
    for (const auto& x : layer)
      for (auto& y : s.spraid->successors(x, 64).dots) next.insert(std::move(y));
    layer.assign(next.begin(), next.end());
  }
  return layer;
}

Point walk(const SpacePtr& s, std::uint64_t seed) { return successor_walk(s, s->max, seed); }

// ---- 1 ----------------------------------------------------------------------

void axiom_suites(Check& c) {
  auto t0 = std::chrono::steady_clock::now();
  for (const auto& name : std_space_names()) {
    auto rep = validate_space(*shared_space(name), 200);
    c.expect(rep.empty(), name + ": " + (rep.empty() ? "" : rep.front()));
  }
  auto rep = validate_space(*metric_to_spread(unit_interval_oracle()), 200);
  c.expect(rep.empty(), "metric_to_spread: " + (rep.empty() ? "" : rep.front()));
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(secs < 10.0, "took " + std::to_string(secs) + " s");
}

// ---- 2 ----------------------------------------------------------------------

struct Generated {
  std::string text;
  Rational value;
};

// Random grammar-valid expression with its exact value computed alongside.
Generated random_expr(std::mt19937_64& rng, int depth) {
  if (depth == 0 || rng() % 4 == 0) {
    long p = static_cast<long>(rng() % 121) - 60;
    unsigned long q = rng() % 40 + 1;
    std::string t = std::to_string(std::labs(p));
    if (q > 1 || rng() % 2) t += "/" + std::to_string(q);
    Rational v(std::labs(p), q);
    if (p < 0) return {"-" + t, -v};
    return {t, v};
  }
  auto a = random_expr(rng, depth - 1);
  switch (rng() % 8) {
    case 0: return {"-(" + a.text + ")", -a.value};
    case 1: return {"abs(" + a.text + ")", abs(a.value)};
    default: break;
  }
  auto b = random_expr(rng, depth - 1);
  switch (rng() % 5) {
    case 0: return {"(" + a.text + " + " + b.text + ")", a.value + b.value};
    case 1: return {"(" + a.text + " - " + b.text + ")", a.value - b.value};
    case 2: return {"(" + a.text + ")*(" + b.text + ")", a.value * b.value};
    case 3: return {"min(" + a.text + ", " + b.text + ")", a.value < b.value ? a.value : b.value};
    default: return {"max(" + a.text + "," + b.text + ")", a.value < b.value ? b.value : a.value};
  }
}

void exact_arithmetic(Check& c) {
  std::mt19937_64 rng(2024);
  const Rational bound = pow2(16), width = pow2(-29);
  int done = 0;
  while (done < 500) {
    auto g = random_expr(rng, 1 + static_cast<int>(rng() % 4));
    if (abs(g.value) > bound) continue;
    ++done;
    auto b = eval_expr(g.text, 30);
    c.expect(b.lo <= g.value && g.value <= b.hi, g.text + " not bracketed");
    c.expect(b.hi - b.lo <= width, g.text + " too wide");
  }
}

// ---- 3 ----------------------------------------------------------------------

// Classical Cantor function at a finite ternary expansion.
Rational cantor_oracle(const std::vector<std::uint64_t>& ternary) {
  Rational v = 0, w = Rational(1, 2);
  for (auto d : ternary) {
    if (d == 1) return v + w;
    if (d == 2) v += w;
    w /= 2;
  }
  return v;
}

void cantor_function_checks(Check& c) {
  auto real = cantor_function_real();
  // 1/3 as the ternary stream 0.0222...: every dot is [1/3 - 3^-k, 1/3]
  auto third = indexed_point(ter(), [](std::size_t k) {
    std::vector<std::uint64_t> d(k, 2);
    if (k) d[0] = 0;
    return digits_to_interval(3, d);
  });
  auto y = apply_point(real, third);
  auto [lo, hi] = point_to_rational_bounds(y, 21);
  c.expect(lo <= Rational(1, 2) && Rational(1, 2) <= hi && hi - lo <= pow2(-20), "value at 1/3");

  // Flat on [1/3, 2/3]: each middle dot maps to [1/2, 1/2 + 2^-m], and the
  // classical function is 1/2 at both of its endpoints.
  auto ternary = [](Rational x, std::uint64_t m) {
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < m && x != 0; ++i) {
      x *= 3;
      Integer d = floor_q(x);
      out.push_back(d.get_ui());
      x -= d;
    }
    return out;
  };
  for (std::uint64_t m = 1; m <= 6; ++m) {
    Integer from = pow_int(3, m - 1), to = 2 * pow_int(3, m - 1);
    for (Integer k = from; k < to; ++k) {
      Dot d = nary(3, k, m);
      auto iv = *interval_of(real(d));
      c.expect(iv.lo == Rational(1, 2) && iv.hi - iv.lo == pow2(-static_cast<std::int64_t>(m)), "not flat at " + show(d));
      Rational a(k, pow_int(3, m)), b(k + 1, pow_int(3, m));
      c.expect(cantor_oracle(ternary(a, m)) == Rational(1, 2) && cantor_oracle(ternary(b, m)) == Rational(1, 2),
               "oracle not flat at " + show(d));
    }
  }

  // Digit rules: on {0,2}* halve; at the first 1 emit 1 then zeros.
  std::function<std::vector<std::uint64_t>(const std::vector<std::uint64_t>&)> rule =
      [&](const std::vector<std::uint64_t>& a) -> std::vector<std::uint64_t> {
    auto it = std::find(a.begin(), a.end(), 1u);
    if (it == a.end()) {
      std::vector<std::uint64_t> b;
      for (auto d : a) b.push_back(d / 2);
      return b;
    }
    auto head = rule(std::vector<std::uint64_t>(a.begin(), it));
    head.push_back(1);
    head.resize(a.size(), 0);
    return head;
  };
  auto f = cantor_function();
  for (std::size_t len = 0; len <= 8; ++len)
    for (const auto& a : all_strings(3, len)) c.expect(f(Seq{a}) == Dot(Seq{rule(a)}), "digit rule at " + show(Seq{a}));
}

// ---- 4 ----------------------------------------------------------------------

Point stream_to(const Dot& last) {
  std::vector<Dot> chain = {last};
  while (chain.back() != sigR()->max) chain.push_back(predecessors(*sigR(), chain.back()).front());
  std::reverse(chain.begin(), chain.end());
  return point_from_dots(sigR(), chain);
}

void hawk_eye(Check& c) {
  c.expect(line_call(stream_to(dyadic(3, 9)), 8) == LineCall::In, "[3/512, 5/512]");
  c.expect(line_call(stream_to(dyadic(-1, 9)), 8) == LineCall::Let, "[-1/512, 1/512]");
  c.expect(line_call(stream_to(dyadic(-5, 9)), 8) == LineCall::Out, "[-5/512, -3/512]");
  std::mt19937_64 rng(8);
  for (int t = 0; t < 200; ++t) {
    Rational q(static_cast<long>(rng() % 4001) - 2000, 1UL << (rng() % 14));
    Point p = t % 2 ? rational_to_point(q, sigR())
                    : apply_binary(ArithOp::Add, rational_to_point(q / 2, sigR()), rational_to_point(q / 2, sigR()));
    auto v = line_call(p, 8);
    if (abs(q) > pow2(-8))
      c.expect(v == (q > 0 ? LineCall::In : LineCall::Out), "synthetic " + q.get_str());
  }
}

// ---- 5 ----------------------------------------------------------------------

void heine_borel(Check& c) {
  std::mt19937_64 rng(5);
  const Space& s = *unit();
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto w = random_bar(unit(), s.max, 1 + seed % 6, seed);
    std::vector<Dot> cover;
    for (const auto& d : flatten(w)) {
      auto g = s.grade(d);
      auto anc = ancestors_at(s, d, g - std::min<std::uint64_t>(g, rng() % 3));
      cover.push_back(anc[rng() % anc.size()]);
    }
    for (int k = 0; k < 5; ++k) cover.push_back(dyadic(static_cast<long>(rng() % 60), 6));
    std::shuffle(cover.begin(), cover.end(), rng);
    auto sub = finite_subcover(Cover{cover, {}, w});
    std::vector<Interval> ivs;
    for (const auto& d : sub) {
      c.expect(std::find(cover.begin(), cover.end(), d) != cover.end(), "selected a non-cover dot");
      ivs.push_back(*interval_of(d));
    }
    c.expect(covers_interval(ivs, 0, 1), "union misses part of [0,1], seed " + std::to_string(seed));
  }
}

// ---- 6 ----------------------------------------------------------------------

void fan_theorem(Check& c) {
  for (const std::string name : {"cantor", "sigma_[0,1]", "T3"}) {
    auto s = shared_space(name);
    std::size_t branching = 0;
    for (std::uint64_t g = 0; g < 5; ++g)
      for (const auto& d : cone_level(*s, s->max, g))
        branching = std::max(branching, s->spraid->successors(d, 64).dots.size());
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
      auto bar = random_bar(s, s->max, 5, seed);
      auto flat = flatten(bar);
      double bound = std::pow(static_cast<double>(branching), static_cast<double>(bar_depth(bar)));
      c.expect(static_cast<double>(flat.size()) <= bound, name + " flatten too large");
      if (s->spraid->tree)
        for (const auto& x : flat)
          for (const auto& y : flat) c.expect(!s->strictly_refines(x, y), name + " not thin");
    }
  }
}

// ---- 7 ----------------------------------------------------------------------

bool splits_at(const Space& s, const std::vector<Dot>& A, const std::vector<Dot>& B, std::uint64_t N) {
  auto lvl = full_level(s, N);
  auto near = [&](const std::vector<Dot>& X) {
    std::vector<Dot> down, out;
    for (const auto& d : lvl)
      for (const auto& x : X)
        if (s.refines(d, x)) down.push_back(d);
    for (const auto& e : lvl)
      for (const auto& d : down)
        if (s.touch(e, d)) {
          out.push_back(e);
          break;
        }
    return out;
  };
  auto ta = near(A), tb = near(B);
  for (const auto& x : ta)
    for (const auto& y : tb)
      if (s.touch(x, y)) return false;
  return true;
}

void splitting(Check& c) {
  c.expect(splitting_depth(unit(), {dyadic(0, 3)}, {dyadic(6, 3)}) == 3, "[0,1/4] vs [3/4,1]");
  std::mt19937_64 rng(77);
  for (auto s : {unit(), cantor()}) {
    int done = 0;
    while (done < 30) {
      std::uint64_t ga = 1 + rng() % 4, gb = 1 + rng() % 4;
      auto la = full_level(*s, ga), lb = full_level(*s, gb);
      std::vector<Dot> A, B;
      for (std::size_t k = 1 + rng() % 2; k-- > 0;) A.push_back(la[rng() % la.size()]);
      for (std::size_t k = 1 + rng() % 2; k-- > 0;) B.push_back(lb[rng() % lb.size()]);
      bool apart = true;
      for (const auto& a : A)
        for (const auto& b : B) apart = apart && s->apart(a, b);
      if (!apart) continue;
      ++done;
      auto cert = splitting_certificate(s, A, B);
      c.expect(splits_at(*s, A, B, cert.N), s->name + " does not split at N");
      if (cert.N > std::max(ga, gb)) c.expect(!splits_at(*s, A, B, cert.N - 1), s->name + " splits below N");
    }
  }
}

// ---- 8 ----------------------------------------------------------------------

std::vector<std::vector<Dot>> chains_to(const Space& s, std::uint64_t depth) {
  std::vector<std::vector<Dot>> out;
  std::vector<Dot> cur;
  std::function<void()> rec = [&]() {
    out.push_back(cur);
    if (cur.size() == depth) return;
    for (auto& d : s.spraid->successors(cur.empty() ? s.max : cur.back(), 64).dots) {
      cur.push_back(d);
      rec();
      cur.pop_back();
    }
  };
  rec();
  return out;
}

void urysohn_postconditions(Check& c, const SpacePtr& s, const Dot& a, const Dot& b, std::uint64_t depth) {
  auto f = urysohn_fan(s, a, b);
  const auto M = s->grade(a);
  const auto first = f.engine->N("");
  const std::string tag = show(a) + " vs " + show(b);
  std::map<std::size_t, std::vector<std::pair<Dot, Dot>>> by_len;
  std::map<std::vector<Dot>, Dot> val;
  for (const auto& ch : chains_to(*s, depth)) {
    Dot v = f.value(ch);
    val[ch] = v;
    if (ch.empty()) continue;
    auto iv = *interval_of(v);
    c.expect(ter()->refines(v, val.at(std::vector<Dot>(ch.begin(), ch.end() - 1))), tag + ": not refining");
    if (s->refines(ch.back(), a)) c.expect(iv.lo == 0, tag + ": a-cone not 0 at " + show(ch.back()));
    if (s->refines(ch.back(), b)) c.expect(iv.hi == 1, tag + ": b-cone not 1 at " + show(ch.back()));
    if (ch.size() >= M && ch.size() >= first && s->apart(ch[M - 1], a) && s->apart(ch[M - 1], b))
      c.expect(iv.lo >= Rational(1, 3) && iv.hi <= Rational(2, 3), tag + ": middle band at " + show(ch.back()));
    by_len[ch.size()].emplace_back(ch.back(), v);
  }
  for (const auto& [len, vs] : by_len)
    for (std::size_t i = 0; i < vs.size(); ++i)
      for (std::size_t j = i + 1; j < vs.size(); ++j)
        if (s->touch(vs[i].first, vs[j].first))
          c.expect(!ter()->apart(vs[i].second, vs[j].second), tag + ": touching dots get apart values");
}

void metrization(Check& c) {
  auto ext = extend_with_isolated_point(unit());
  for (std::uint64_t g = 1; g <= 2; ++g) {
    auto lvl = full_level(*ext, g);
    for (const auto& a : lvl)
      for (const auto& b : lvl)
        if (ext->apart(a, b)) urysohn_postconditions(c, ext, a, b, 5);
  }

  auto s = unit();
  MetricEvaluator ev(s);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto x = walk(s, seed);
    auto d = evaluate_metric(ev, x, x, 10);
    c.expect(d.lo == 0 && d.hi <= pow2(-8), "d(x,x) seed " + std::to_string(seed));
  }
  std::vector<Point> pts;
  for (std::uint64_t seed = 0; seed < 6; ++seed) pts.push_back(walk(s, seed * 7 + 1));
  std::map<std::pair<std::size_t, std::size_t>, MetricBounds> d;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) d[{i, j}] = evaluate_metric(ev, pts[i], pts[j], 10);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = 0; j < pts.size(); ++j) {
      c.expect(d[{i, j}].lo == d[{j, i}].lo && d[{i, j}].hi == d[{j, i}].hi, "symmetry");
      for (std::size_t k = 0; k < pts.size(); ++k) c.expect(d[{i, k}].lo <= d[{i, j}].hi + d[{j, k}].hi, "triangle");
    }
  int apart = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    auto x = walk(s, 2 * seed), y = walk(s, 2 * seed + 1);
    if (!is_apart(point_apart(x, y, 12))) continue;
    ++apart;
    bool positive = false;
    for (std::uint64_t bits : {4, 8, 12, 16})
      if (!positive && evaluate_metric(ev, x, y, bits).lo > 0) positive = true;
    c.expect(positive, "apart pair not positive, seed " + std::to_string(seed));
  }
  c.expect(apart > 50, "only " + std::to_string(apart) + " apart pairs sampled");
}

// ---- 9 ----------------------------------------------------------------------

void universality(Check& c) {
  for (std::string name : {"T3", "sigma_[0,1]"}) {
    SpacePtr v = shared_space(name);
    auto enc = baire_encode(v);
    Morphism there_back = compose(enc.forward, enc.inverse);
    for (std::uint64_t k = 0; k < 50; ++k) {
      Point x = walk(v, k);
      c.expect(!is_apart(point_apart(x, apply_point(there_back, x), 12)), name + " round trip seed " + std::to_string(k));
    }
  }
  for (std::string name : {"T3", "sigma_[0,1]", "cantor"}) {
    SpacePtr v = shared_space(name);
    Morphism f = cantor_surjection(v);
    for (std::uint64_t g = 0; g <= 8; ++g)
      for (const auto& a : full_level(*v, g)) c.expect(f(cantor_preimage(*v, a)) == a, name + " misses " + show(a));
  }
}

// ---- 10 ---------------------------------------------------------------------

Morphism add_first_symbol_code() {
  SpacePtr baire = shared_space("baire");
  return {MorphismKind::Refinement, baire, baire,
          [](const Dot& b) -> Dot {
            const auto& v = b.as<Seq>().syms;
            if (v.empty()) return Seq{};
            std::uint64_t d = v[0];
            auto g = [d](const Dot& a) -> Dot {
              auto w = a.as<Seq>().syms;
              for (auto& x : w) x += d;
              return Seq{w};
            };
            std::vector<std::uint64_t> code;
            for (std::size_t i = 0; i < v.size(); ++i) code.push_back(code_entry(g, i));
            return Seq{code};
          },
          [](const Dot&) -> std::size_t { return 1; }, "shift_by_first"};
}

void diagonalization(Check& c) {
  std::vector<Morphism> Fs = {
      constant_code_morphism([](const Dot& a) { return a; }, "code_id"),
      constant_code_morphism(
          [](const Dot& a) -> Dot { return Seq{std::vector<std::uint64_t>(a.as<Seq>().syms.size(), 0)}; },
          "code_const0"),
      add_first_symbol_code()};
  for (const auto& F : Fs) {
    auto f = diagonalize(F);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
      std::mt19937_64 rng(seed);
      std::vector<std::uint64_t> syms;
      for (int i = 0; i < 64; ++i) syms.push_back(rng() % 3);
      auto p = indexed_point(shared_space("baire"), [syms](std::size_t k) -> Dot {
        return Seq{std::vector<std::uint64_t>(syms.begin(), syms.begin() + static_cast<std::ptrdiff_t>(k))};
      });
      c.expect(diagonal_witness(f, p, 32).has_value(), F.name + " seed " + std::to_string(seed));
    }
  }
}

// ---- 11 ---------------------------------------------------------------------

Morphism lag() {
  return {MorphismKind::Trail, sigR(), sigR(),
          [](const Dot& t) -> Dot {
            const auto& v = trail_items(t);
            return v.size() < 2 ? Dot(MaxDot{}) : v[v.size() - 2];
          },
          [](const Dot&) -> std::size_t { return 2; }, "lag"};
}

void composition(Check& c) {
  std::vector<Morphism> ms = {arith(ArithOp::Neg), lag(), arith(ArithOp::Scalar, Rational(3, 2)),
                              arith(ArithOp::Abs), identity(sigR())};
  for (const auto& f : ms)
    for (const auto& g : ms)
      for (const auto& h : ms) {
        auto left = compose(compose(h, g), f), right = compose(h, compose(g, f));
        for (std::uint64_t seed = 0; seed < 3; ++seed) {
          auto x = walk(sigR(), seed);
          auto prefix = x.prefix(6);
          auto trails = trails_of_prefix(*sigR(), prefix);
          for (std::size_t k = 0; k < 6; ++k) {
            Dot a = left.kind == MorphismKind::Trail ? left(trails[k]) : left(prefix[k]);
            Dot b = right.kind == MorphismKind::Trail ? right(trails[k]) : right(prefix[k]);
            c.expect(!sigR()->apart(a, b), left.name + " refuted at depth " + std::to_string(k));
          }
        }
      }

  Morphism f = compose(arith(ArithOp::Neg), trail_last(sigR()));
  Morphism g = compress_sigmaR(f);
  std::mt19937_64 rng(11);
  for (int i = 0; i < 100; ++i) {
    Rational q(static_cast<long>(rng() % 4001) - 2000, static_cast<long>(rng() % 61) + 1);
    Point x = rational_to_point(q, sigR());
    Point y = apply_point(g, x);
    c.expect(!is_apart(point_apart(y, apply_point(f, x), 20)), "compressed apart at " + q.get_str());
    for (std::size_t k = 0; k < 20; ++k)
      if (auto iv = interval_of(y.at(k))) c.expect(iv->lo <= -q && -q <= iv->hi, "compressed misses " + q.get_str());
  }
}

// ---- 12 ---------------------------------------------------------------------

void bar_algebra(Check& c) {
  for (const std::string name : {"sigma_[0,1]", "cantor", "T3"}) {
    auto s = shared_space(name);
    const Space& sp = *s;
    auto below_some = [&](const Dot& d, const std::vector<Dot>& xs) {
      return std::any_of(xs.begin(), xs.end(), [&](const Dot& x) { return sp.refines(d, x); });
    };
    for (std::uint64_t i = 0; i < 10; ++i) {
      auto b0 = random_bar(s, s->max, 4, i);
      auto f0 = flatten(b0);
      for (std::uint64_t j = 0; j < 10; ++j) {
        auto b1 = random_bar(s, s->max, 4, 100 + j);
        auto m = min_bars(b0, b1);
        c.expect(descends(f0, m) && descends(flatten(b1), m), name + " min_bars");
      }
      // reduction stays in B^{↑c}
      std::set<Dot> flat(f0.begin(), f0.end());
      for (std::uint64_t g = 1; g <= 3; ++g)
        for (const auto& cd : cone_level(sp, sp.max, g)) {
          auto r = reduce_bar(b0, cd);
          c.expect(r->root == cd, name + " reduce root");
          for (const auto& d : flatten(r))
            c.expect(flat.count(d) || (d == cd && under_bar(b0, cd)), name + " reduce leaves B^{up c}");
        }
      // expansion then reduction lands in the original's up-closure
      for (const auto& cd : cone_level(sp, sp.max, 2)) {
        auto b = random_bar(s, cd, 2, i);
        auto fb = flatten(b);
        auto back = reduce_bar(expand_bar(b, sp.max), cd);
        for (const auto& d : flatten(back)) c.expect(below_some(d, fb), name + " expand/reduce");
        auto fe = flatten(expand_bar(b, sp.max));
        std::set<Dot> expanded(fe.begin(), fe.end());
        for (const auto& d : fb) c.expect(expanded.count(d) > 0, name + " expansion drops a B dot");
      }
      // formal derivations
      std::vector<Dot> cover;
      for (const auto& d : f0) cover.push_back(ancestors_at(sp, d, sp.grade(d) - std::min<std::uint64_t>(sp.grade(d), i % 2)).front());
      auto deriv = formal_from_genetic(sp.max, cover, b0);
      auto errs = verify_derivation(sp, deriv);
      c.expect(errs.empty(), name + " derivation: " + (errs.empty() ? "" : errs.front()));
    }
  }
  auto unit_s = unit(), cantor_s = cantor();
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    auto pb = product_bar(random_bar(unit_s, unit_s->max, 3, seed), random_bar(cantor_s, cantor_s->max, 3, seed + 50));
    const auto& w = *pb.cover.witness;
    for (const auto& t : flatten(w)) c.expect(pb.cover.contains(t), "product witness outside the cover");
    for (std::uint64_t k = 0; k < 12; ++k) {
      Point p = walk(pb.space, k + seed);
      bool hit = false;
      for (std::size_t i = 0; i <= 12 && !hit; ++i) hit = under_bar(w, p.at(i));
      c.expect(hit, "product point misses the bar");
    }
  }
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "axiom suites", axiom_suites},
      {2, "exact arithmetic", exact_arithmetic},
      {3, "Cantor function", cantor_function_checks},
      {4, "Hawk-Eye", hawk_eye},
      {5, "Heine-Borel", heine_borel},
      {6, "fan theorem", fan_theorem},
      {7, "splitting", splitting},
      {8, "Urysohn and metric", metrization},
      {9, "universality", universality},
      {10, "diagonalization", diagonalization},
      {11, "composition and compression", composition},
      {12, "bar algebra", bar_algebra},
  };
  int failed = 0;
  for (const auto& cr : criteria) {
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      cr.run(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = c.failures.empty();
    failed += !ok;
    std::printf("criterion %2d %s: %s (%zu checks, %.1f s)\n", cr.id, ok ? "PASS" : "FAIL", cr.name, c.checked, secs);
    for (std::size_t i = 0; i < std::min<std::size_t>(c.failures.size(), 5); ++i)
      std::printf("    %s\n", c.failures[i].c_str());
    std::fflush(stdout);
  }
  return failed ? 1 : 0;
}
