#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <thread>

#include "natspace/point.hpp"
#include "natspace/spaces.hpp"

using namespace natspace;

namespace {

SpacePtr sigR() {
  static SpacePtr s = std_space("sigma_R");
  return s;
}

Rational Q(const char* s) { return parse_rational(s); }

bool contains(const Dot& d, const Rational& q) {
  auto iv = interval_of(d);
  return iv && iv->lo <= q && q <= iv->hi;
}

}  // namespace

TEST(RationalPoint, FirstDotOfZero) {
  auto p = rational_to_point(0, sigR());
  EXPECT_EQ(p.at(0), dyadic(-1, 0));
}

TEST(RationalPoint, MarginAtOne) {
  auto p = rational_to_point(1, sigR());
  auto iv = *interval_of(p.at(1));
  EXPECT_GE(1 - iv.lo, Q("1/4"));
  EXPECT_GE(iv.hi - 1, Q("1/4"));
}

TEST(RationalPoint, MiddleHalfAndMonotone) {
  for (const char* qs : {"0", "1/3", "-7/5", "1000001/1024", "-1/1048576"}) {
    Rational q = Q(qs);
    auto p = rational_to_point(q, sigR());
    for (std::size_t k = 0; k < 70; ++k) {
      auto iv = *interval_of(p.at(k));
      Rational quarter = (iv.hi - iv.lo) / 4;
      EXPECT_LE(iv.lo + quarter, q);
      EXPECT_LE(q, iv.hi - quarter);
      if (k > 0) {
        EXPECT_TRUE(sigR()->strictly_refines(p.at(k), p.at(k - 1)));
      }
    }
  }
}

TEST(RationalPoint, Deterministic) {
  auto a = rational_to_point(Q("5/7"), sigR()), b = rational_to_point(Q("5/7"), sigR());
  EXPECT_EQ(a.prefix(40), b.prefix(40));
}

TEST(RationalPoint, ModulusSound) {
  for (const char* qs : {"0", "1/3", "-5/2", "17/8"}) {
    auto p = rational_to_point(Q(qs), sigR());
    for (std::size_t i = 0; i < 80; ++i) {
      auto [a, b] = apart_pair(*sigR(), i);
      Dot d = p.at(p.modulus(i));
      EXPECT_TRUE(sigR()->apart(d, a) || sigR()->apart(d, b)) << qs << " pair " << i;
    }
  }
}

TEST(Approximate, HalfAtGradeFour) {
  auto p = rational_to_point(Q("1/2"), sigR());
  Dot d = approximate(p, 4);
  EXPECT_EQ(sigR()->grade(d), 4u);
  auto iv = *interval_of(d);
  EXPECT_EQ(iv.hi - iv.lo, Q("1/4"));
  EXPECT_TRUE(contains(d, Q("1/2")));
}

TEST(Approximate, CanonicalT3) {
  auto t3 = std_space("T3");
  auto p = canonical_point(t3, seq({2}));
  EXPECT_EQ(approximate(p, 5), seq({2, 2, 2, 2, 2}));
}

TEST(Approximate, LaterRefinesEarlier) {
  auto p = rational_to_point(Q("-3/11"), sigR());
  Dot a = approximate(p, 3), b = approximate(p, 5);
  EXPECT_TRUE(sigR()->refines(b, a));
}

TEST(Approximate, StallReported) {
  auto p = indexed_point(sigR(), [](std::size_t) { return dyadic(0, 2); });
  try {
    approximate(p, 6);
    FAIL();
  } catch (const StallError& e) {
    EXPECT_NE(std::string(e.what()).find("[0,1/2] [0,1/2]"), std::string::npos) << e.what();
  }
}

TEST(PointApart, ZeroVsOne) {
  auto a = rational_to_point(0, sigR()), b = rational_to_point(1, sigR());
  auto v = point_apart(a, b, 8);
  ASSERT_TRUE(is_apart(v));
  EXPECT_LE(std::get<Apart>(v).witness, 3u);
}

TEST(PointApart, SelfUnknown) {
  auto a = rational_to_point(Q("2/3"), sigR());
  EXPECT_FALSE(is_apart(point_apart(a, a, 50)));
}

TEST(PointApart, CloseRationals) {
  auto a = rational_to_point(0, sigR()), b = rational_to_point(pow2(-20), sigR());
  EXPECT_FALSE(is_apart(point_apart(a, b, 4)));
  EXPECT_TRUE(is_apart(point_apart(a, b, 30)));
}

TEST(PointApart, BudgetMonotone) {
  auto a = rational_to_point(Q("1/3"), sigR()), b = rational_to_point(Q("1/3") + pow2(-9), sigR());
  std::optional<std::size_t> w;
  for (std::size_t B = 0; B < 20; ++B) {
    auto v = point_apart(a, b, B);
    if (w) {
      ASSERT_TRUE(is_apart(v));
      EXPECT_EQ(std::get<Apart>(v).witness, *w);
    } else if (is_apart(v)) {
      w = std::get<Apart>(v).witness;
    }
  }
  EXPECT_TRUE(w);
}

TEST(PointApart, OrderGap) {
  // q' - q >= 2^-j must be detected within budget j + 3.
  std::mt19937_64 rng(7);
  for (int t = 0; t < 100; ++t) {
    Rational q(static_cast<long>(rng() % 20001) - 10000, static_cast<unsigned long>(rng() % 97 + 1));
    unsigned j = rng() % 24;
    auto a = rational_to_point(q, sigR()), b = rational_to_point(q + pow2(-static_cast<int>(j)), sigR());
    EXPECT_TRUE(is_apart(point_apart(a, b, j + 3))) << q.get_str() << " j=" << j;
  }
}

TEST(PointInDot, Examples) {
  auto third = rational_to_point(Q("1/3"), sigR());
  EXPECT_TRUE(std::holds_alternative<Yes>(point_in_dot(third, dyadic(0, 1), 6)));
  auto zero = rational_to_point(0, sigR());
  EXPECT_TRUE(std::holds_alternative<Yes>(point_in_dot(zero, max_dot(), 1)));
  EXPECT_FALSE(std::holds_alternative<Yes>(point_in_dot(zero, dyadic(2, 1), 20)));
}

TEST(SuccessorNormalize, GradesExact) {
  auto p = successor_normalize(rational_to_point(Q("1/3"), sigR()));
  for (std::uint64_t k = 0; k < 40; ++k) EXPECT_EQ(sigR()->grade(p.at(k)), k);
}

TEST(SuccessorNormalize, DropsDuplicates) {
  auto base = rational_to_point(Q("-5/9"), sigR());
  auto doubled = indexed_point(sigR(), [base](std::size_t k) { return base.at(k / 2); });
  auto n = successor_normalize(doubled);
  for (std::uint64_t k = 1; k < 30; ++k) {
    EXPECT_EQ(sigR()->grade(n.at(k)), k);
    EXPECT_TRUE(sigR()->strictly_refines(n.at(k), n.at(k - 1)));
  }
  EXPECT_FALSE(is_apart(point_apart(n, base, 40)));
}

TEST(SuccessorNormalize, Idempotent) {
  auto n1 = successor_normalize(rational_to_point(Q("7/3"), sigR()));
  auto n2 = successor_normalize(n1);
  EXPECT_EQ(n1.prefix(30), n2.prefix(30));
}

TEST(SuccessorNormalize, GradeJumps) {
  // A stream that skips grades: only every third dot of rational_to_point.
  auto base = rational_to_point(Q("3/7"), sigR());
  auto sparse = indexed_point(sigR(), [base](std::size_t k) { return base.at(3 * k); });
  auto n = successor_normalize(sparse);
  for (std::uint64_t k = 0; k < 30; ++k) EXPECT_EQ(sigR()->grade(n.at(k)), k);
  EXPECT_FALSE(is_apart(point_apart(n, base, 60)));
}

TEST(Bounds, ThirdAtGradeEleven) {
  auto [lo, hi] = point_to_rational_bounds(rational_to_point(Q("1/3"), sigR()), 11);
  EXPECT_LE(lo, Q("1/3"));
  EXPECT_GE(hi, Q("1/3"));
  EXPECT_LE(hi - lo, pow2(-10));
}

TEST(Bounds, WidthFormula) {
  for (std::uint64_t g = 0; g <= 40; ++g) {
    auto [lo, hi] = point_to_rational_bounds(rational_to_point(Q("-22/7"), sigR()), g);
    EXPECT_LE(hi - lo, pow2(1 - static_cast<std::int64_t>(g)));
    EXPECT_LE(lo, Q("-22/7"));
    EXPECT_GE(hi, Q("-22/7"));
  }
}

TEST(Bounds, NaryPoint) {
  auto ter = std_space("[0,1]_ter");
  // 0.0202... in base 3 = 1/4
  auto p = indexed_point(ter, [](std::size_t k) {
    Integer n = 0;
    for (std::size_t i = 0; i < k; ++i) n = 3 * n + (i % 2 ? 2 : 0);
    return nary(3, n, k);
  });
  auto [lo, hi] = point_to_rational_bounds(p, 4);
  EXPECT_LE(lo, Q("1/4"));
  EXPECT_GE(hi, Q("1/4"));
  EXPECT_LE(hi - lo, Q("1/27"));
}

TEST(Bounds, RejectsSequenceSpace) {
  auto p = canonical_point(std_space("cantor"), seq({1}));
  EXPECT_THROW(point_to_rational_bounds(p, 3), SpaceError);
}

TEST(CanonicalPoint, StrictAndGradeGrowing) {
  for (const auto& name : {"sigma_R", "sigma_[0,1]", "cantor", "baire", "T2", "R_ter"}) {
    auto s = std_space(name);
    auto p = canonical_point(s, s->max);
    for (std::size_t k = 1; k < 12; ++k) {
      EXPECT_TRUE(s->strictly_refines(p.at(k), p.at(k - 1))) << name;
      EXPECT_GT(s->grade(p.at(k)), s->grade(p.at(k - 1))) << name;
    }
    for (std::size_t i = 0; i < 20; ++i) {
      auto [a, b] = apart_pair(*s, i);
      Dot d = p.at(p.modulus(i));
      EXPECT_TRUE(s->apart(d, a) || s->apart(d, b)) << name;
    }
  }
}

TEST(CanonicalPoint, SuccessorShortcutMatchesSearch) {
  for (const auto& name : {"sigma_[0,1]", "[0,1]_ter", "cantor", "sigma_3", "T3"}) {
    auto s = std_space(name);
    for (std::uint64_t start = 0; start < 6; ++start) {
      auto p = canonical_point(s, s->enumerate(start));
      Dot cur = p.at(0);
      for (std::size_t k = 1; k < 7; ++k) {
        std::uint64_t i = 0;
        while (!s->strictly_refines(s->enumerate(i), cur)) ++i;
        EXPECT_EQ(p.at(k), s->enumerate(i)) << name;
        cur = p.at(k);
      }
    }
  }
}

TEST(CanonicalPoint, CantorIsAllZeros) {
  auto p = canonical_point(std_space("cantor"), seq({}));
  EXPECT_EQ(p.at(4), seq({0, 0, 0, 0}));
}

TEST(StreamMonotone, Depth64) {
  auto s = std_space("sigma_[0,1]");
  std::vector<Point> pts = {rational_to_point(Q("-13/17"), sigR()), successor_normalize(rational_to_point(Q("9/2"), sigR())),
                            canonical_point(s, dyadic(2, 3))};
  for (const auto& p : pts)
    for (std::size_t k = 0; k < 64; ++k) EXPECT_TRUE(p.space()->refines(p.at(k + 1), p.at(k)));
}

TEST(PrefixText, RoundTrip) {
  auto p = rational_to_point(Q("-1/3"), sigR());
  std::stringstream ss;
  write_prefix(ss, p.prefix(12));
  auto back = read_prefix(ss);
  EXPECT_EQ(back, p.prefix(12));
  auto q = point_from_dots(sigR(), back);
  EXPECT_EQ(q.at(11), p.at(11));
  EXPECT_THROW(q.at(12), StreamExhausted);
}

TEST(PrefixText, RejectsNonRefiningFile) {
  EXPECT_THROW(point_from_dots(sigR(), {dyadic(0, 1), dyadic(4, 2)}), SpaceError);
}

TEST(Concurrency, SharedPrefix) {
  auto p = rational_to_point(Q("11/13"), sigR());
  std::vector<std::vector<Dot>> seen(4);
  std::vector<std::thread> ts;
  for (int t = 0; t < 4; ++t) ts.emplace_back([&, t] { seen[t] = p.prefix(200); });
  for (auto& t : ts) t.join();
  for (int t = 1; t < 4; ++t) EXPECT_EQ(seen[t], seen[0]);
}
