#pragma once

#include "morphism.hpp"

namespace natspace {

// ---- n-ary digit strings and intervals ----------------------------------

inline Dot digits_to_interval(std::uint32_t base, const std::vector<std::uint64_t>& digits) {
  Integer n = 0;
  for (auto d : digits) n = n * base + d;
  return NaryInterval{base, n, digits.size()};
}

inline std::vector<std::uint64_t> interval_to_digits(const NaryInterval& a) {
  std::vector<std::uint64_t> out(a.m);
  Integer n = a.n;
  for (std::size_t i = a.m; i-- > 0;) {
    Integer r = n % a.base;
    out[i] = r.get_ui();
    n /= a.base;
  }
  return out;
}

inline std::string unit_space_name(std::uint32_t base) {
  if (base == 2) return "[0,1]_bin";
  if (base == 3) return "[0,1]_ter";
  return "[0,1]_" + std::to_string(base);
}

inline SpacePtr nary_unit_space(std::uint32_t base) {
  if (base == 2 || base == 3) return shared_space(unit_space_name(base));
  return make_nary_unit(base, unit_space_name(base));
}

// Digit strings over {0..base-1} with apartness pulled back from the intervals they name.
inline SpacePtr nary_digit_space(std::uint32_t base) {
  auto tree = make_tree_space(base, "digits" + std::to_string(base));
  auto s = std::make_shared<Space>(*tree);
  s->name = "digits" + std::to_string(base) + "_R";
  s->pairs = std::make_shared<ApartPairs>();
  s->apart = [base](const Dot& a, const Dot& b) {
    return detail::dots_apart_iv(digits_to_interval(base, a.as<Seq>().syms),
                                 digits_to_interval(base, b.as<Seq>().syms));
  };
  return s;
}

struct NaryCodec {
  Morphism encode;  // digit strings -> [0,1]_b
  Morphism decode;  // [0,1]_b -> digit strings (decode_ter for base 3)
};

inline NaryCodec nary_codec(std::uint32_t base) {
  if (base < 2) throw SpaceError("nary_codec: base must be at least 2");
  SpacePtr digits = nary_digit_space(base), unit = nary_unit_space(base);
  NaryCodec c;
  c.encode = {MorphismKind::Refinement, digits, unit,
              [base](const Dot& a) { return digits_to_interval(base, a.as<Seq>().syms); },
              [](const Dot&) -> std::size_t { return 1; }, "f_evl_" + std::to_string(base)};
  c.decode = {MorphismKind::Refinement, unit, digits,
              [](const Dot& a) -> Dot { return Seq{interval_to_digits(a.as<NaryInterval>())}; },
              [](const Dot&) -> std::size_t { return 1; }, "f_evl_inv_" + std::to_string(base)};
  return c;
}

// ---- Cantor function on ternary strings ---------------------------------

inline std::vector<std::uint64_t> cantor_digits(const std::vector<std::uint64_t>& a) {
  std::vector<std::uint64_t> out;
  out.reserve(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 1) {
      out.push_back(1);
      out.resize(a.size(), 0);
      return out;
    }
    out.push_back(std::min<std::uint64_t>(a[i], 1));
  }
  return out;
}

// sigma_3 -> cantor, length preserving.
inline Morphism cantor_function() {
  return {MorphismKind::Refinement, shared_space("sigma_3"), shared_space("cantor"),
          [](const Dot& a) -> Dot { return Seq{cantor_digits(a.as<Seq>().syms)}; },
          [](const Dot&) -> std::size_t { return 1; }, "f_can"};
}

// The Cantor function as a map [0,1]_ter -> [0,1]_bin.
inline Morphism cantor_function_real() {
  return compose(nary_codec(2).encode, compose(cantor_function(), nary_codec(3).decode));
}

// cantor -> sigma_3, digit doubling.
inline Morphism doubling() {
  return {MorphismKind::Refinement, shared_space("cantor"), shared_space("sigma_3"),
          [](const Dot& a) -> Dot {
            auto v = a.as<Seq>().syms;
            for (auto& x : v) x *= 2;
            return Seq{std::move(v)};
          },
          [](const Dot&) -> std::size_t { return 1; }, "f_double"};
}

// ---- Hawk-Eye line call -------------------------------------------------

enum class LineCall { In, Out, Let };

inline const char* to_string(LineCall v) {
  switch (v) {
    case LineCall::In: return "IN";
    case LineCall::Out: return "OUT";
    case LineCall::Let: return "LET";
  }
  return "?";
}

inline LineCall line_call_interval(const Interval& x) {
  if (x.lo > 0) return LineCall::In;
  if (x.hi < 0) return LineCall::Out;
  return LineCall::Let;
}

// Reads the stream until its dot is at most 2^-threshold wide.
inline LineCall line_call(const Point& p, std::uint64_t threshold_exponent) {
  if (threshold_exponent < 1) throw SpaceError("line_call: threshold exponent must be at least 1");
  Rational limit = pow2(-static_cast<std::int64_t>(threshold_exponent));
  auto [k, d] = detail::scan(p, [&](const Dot& x) {
    auto iv = interval_of(x);
    return iv && iv->hi - iv->lo <= limit;
  });
  (void)k;
  return line_call_interval(*interval_of(d));
}

}  // namespace natspace
