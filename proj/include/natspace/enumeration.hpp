#pragma once

#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "dot.hpp"

// Frozen enumeration orders. canonical_point and the Baire encoding depend on these.
namespace natspace::enumeration {

// Cantor pairing: diagonals x+y = d, ordered by y.
inline std::uint64_t pair(std::uint64_t x, std::uint64_t y) {
  std::uint64_t d = x + y;
  return d * (d + 1) / 2 + y;
}

inline std::pair<std::uint64_t, std::uint64_t> unpair(std::uint64_t k) {
  std::uint64_t d = 0;
  // largest d with d(d+1)/2 <= k
  std::uint64_t lo = 0, hi = 1ULL << 32;
  while (lo < hi) {
    std::uint64_t mid = (lo + hi + 1) / 2;
    if (mid * (mid + 1) / 2 <= k) lo = mid;
    else hi = mid - 1;
  }
  d = lo;
  std::uint64_t y = k - d * (d + 1) / 2;
  return {d - y, y};
}

// 0, -1, 1, -2, 2, ...
inline Integer zigzag(std::uint64_t k) {
  if (k % 2 == 0) return Integer(std::to_string(k / 2));
  return -Integer(std::to_string((k + 1) / 2));
}

inline std::optional<std::uint64_t> unzigzag(const Integer& n) {
  Integer k = n >= 0 ? Integer(2 * n) : Integer(-2 * n - 1);
  if (!k.fits_ulong_p()) return std::nullopt;
  return static_cast<std::uint64_t>(k.get_ui());
}

// Length-then-lexicographic order on sequences over {0..k-1}.
inline std::vector<std::uint64_t> unrank_lenlex(std::uint64_t idx, std::uint64_t k) {
  std::uint64_t len = 0, block = 1;
  while (idx >= block) {
    idx -= block;
    ++len;
    block *= k;
  }
  std::vector<std::uint64_t> s(len);
  for (std::size_t i = len; i-- > 0;) {
    s[i] = idx % k;
    idx /= k;
  }
  return s;
}

inline std::uint64_t rank_lenlex(const std::vector<std::uint64_t>& s, std::uint64_t k) {
  std::uint64_t before = 0, block = 1;
  for (std::size_t l = 0; l < s.size(); ++l) {
    before += block;
    block *= k;
  }
  std::uint64_t pos = 0;
  for (auto c : s) pos = pos * k + c;
  return before + pos;
}

// Weight-then-lexicographic order on N*, weight = length + sum of symbols.
// Finitely many sequences per weight, and rank(a) < rank(a*b) for nonempty b.
inline std::uint64_t count_weight(std::uint64_t w) { return w == 0 ? 1 : (1ULL << (w - 1)); }

inline std::uint64_t weight(const std::vector<std::uint64_t>& s) {
  std::uint64_t w = s.size();
  for (auto c : s) w += c;
  return w;
}

inline std::uint64_t rank_weightlex(const std::vector<std::uint64_t>& s) {
  std::uint64_t w = weight(s);
  if (w >= 63) throw std::overflow_error("sequence weight too large to rank");
  std::uint64_t r = 0;
  for (std::uint64_t v = 0; v < w; ++v) r += count_weight(v);
  std::uint64_t rem = w;
  for (auto c : s) {
    for (std::uint64_t d = 0; d < c; ++d) r += count_weight(rem - d - 1);
    rem -= c + 1;
  }
  return r;
}

inline std::vector<std::uint64_t> unrank_weightlex(std::uint64_t idx) {
  std::uint64_t w = 0;
  while (idx >= count_weight(w)) {
    idx -= count_weight(w);
    ++w;
  }
  std::vector<std::uint64_t> s;
  std::uint64_t rem = w;
  while (rem > 0) {
    std::uint64_t c = 0;
    while (idx >= count_weight(rem - c - 1)) {
      idx -= count_weight(rem - c - 1);
      ++c;
    }
    s.push_back(c);
    rem -= c + 1;
  }
  return s;
}

// Calkin-Wilf enumeration of nonnegative rationals (0 first), signed by zigzag.
inline Rational nonneg_rational(std::uint64_t k) {
  if (k == 0) return 0;
  // k-th positive rational (1-based) in Calkin-Wilf order via the binary path
  Integer a = 1, b = 1;
  int top = 63;
  while (top > 0 && !((k >> top) & 1)) --top;
  for (int bit = top - 1; bit >= 0; --bit) {
    if ((k >> bit) & 1) a = a + b;
    else b = a + b;
  }
  return make_rational(a, b);
}

inline std::optional<std::uint64_t> nonneg_rational_index(const Rational& q) {
  if (q == 0) return 0;
  Integer a = q.get_num(), b = q.get_den();
  std::vector<int> bits;
  while (!(a == 1 && b == 1)) {
    if (a > b) {
      bits.push_back(1);
      a -= b;
    } else {
      bits.push_back(0);
      b -= a;
    }
    if (bits.size() > 62) return std::nullopt;
  }
  std::uint64_t k = 1;
  for (auto it = bits.rbegin(); it != bits.rend(); ++it) k = (k << 1) | static_cast<std::uint64_t>(*it);
  return k;
}

inline Rational rational_at(std::uint64_t k) {
  Rational q = nonneg_rational(k / 2 + (k % 2));
  return k % 2 ? Rational(-q) : q;
}

inline std::optional<std::uint64_t> rational_index(const Rational& q) {
  auto k = nonneg_rational_index(q < 0 ? Rational(-q) : q);
  if (!k) return std::nullopt;
  if (q < 0) return 2 * *k - 1;
  return 2 * *k;
}

}  // namespace natspace::enumeration
