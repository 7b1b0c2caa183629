#pragma once

#include "morphism.hpp"

namespace natspace {

// Coded Baire morphisms: entry n of a code sends the dot unrank(n) to the dot
// unrank(code[n]), with unrank the weight-lex order on N* (rank(a) <= rank(a*b)).

// Image of b under a finite code prefix: the image of b's longest prefix whose
// rank is covered. Throws when the covered images do not refine along b.
inline Dot decode_apply(const std::vector<std::uint64_t>& code, const std::vector<std::uint64_t>& b) {
  std::vector<std::uint64_t> img;
  std::vector<std::uint64_t> c;
  for (std::size_t len = 0; len <= b.size(); ++len) {
    if (len > 0) c.push_back(b[len - 1]);
    if (enumeration::weight(c) >= 60) break;
    std::uint64_t r = enumeration::rank_weightlex(c);
    if (r >= code.size()) break;
    if (code[r] > (1ULL << 59)) throw SpaceError("coded morphism: entry " + std::to_string(r) + " out of range");
    auto next = enumeration::unrank_weightlex(code[r]);
    if (!detail::is_prefix(img, next))
      throw SpaceError("coded morphism: image of " + show(Seq{c}) + " does not refine the image of its prefix");
    img = std::move(next);
  }
  return Seq{img};
}

inline Dot baire_prefix(const Dot& a, std::size_t n) {
  const auto& v = a.as<Seq>().syms;
  return Seq{std::vector<std::uint64_t>(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(std::min(n, v.size())))};
}

struct CodedBaireMorphism {
  Morphism tilde;                                  // the induced Baire morphism
  std::function<Dot(const Dot&)> z;                // b -> F(b)~(b)
  std::function<bool(const Dot&)> in_first_output_set;
  std::function<std::uint64_t(std::uint64_t)> code;  // code(n) = rank(tilde(unrank(n)))

  Point code_point() const {
    auto c = code;
    return indexed_point(shared_space("baire"), [c](std::size_t k) -> Dot {
      std::vector<std::uint64_t> v;
      for (std::size_t i = 0; i < k; ++i) v.push_back(c(i));
      return Seq{v};
    });
  }
};

// Veldman's diagonal: f with f~(p) apart from F(p)~(p) for every p.
inline CodedBaireMorphism diagonalize(const Morphism& F) {
  if (F.kind != MorphismKind::Refinement) throw SpaceError("diagonalize: F must be a refinement morphism");
  auto z = [F](const Dot& b) -> Dot {
    Dot code = F(b);
    auto c = code.get_if<Seq>();
    if (!c) throw SpaceError("diagonalize: F(" + show(b) + ") is not a Baire dot");
    return decode_apply(c->syms, b.as<Seq>().syms);
  };
  auto first_output = [z](const Dot& a) -> std::optional<std::size_t> {
    const std::size_t n = a.as<Seq>().syms.size();
    for (std::size_t len = 0; len <= n; ++len)
      if (!z(baire_prefix(a, len)).as<Seq>().syms.empty()) return len;
    return std::nullopt;
  };
  CodedBaireMorphism out;
  out.z = z;
  out.in_first_output_set = [first_output](const Dot& b) {
    auto len = first_output(b);
    return len && *len == b.as<Seq>().syms.size();
  };
  auto tilde_map = [z, first_output](const Dot& a) -> Dot {
    auto len = first_output(a);
    if (!len) return Seq{};
    const auto& v = a.as<Seq>().syms;
    std::vector<std::uint64_t> img = {z(baire_prefix(a, *len)).as<Seq>().syms[0] + 1};
    img.insert(img.end(), v.begin() + static_cast<std::ptrdiff_t>(*len), v.end());
    return Seq{img};
  };
  SpacePtr baire = shared_space("baire");
  out.tilde = {MorphismKind::Refinement, baire, baire, tilde_map, [](const Dot&) -> std::size_t { return 64; },
               "diag(" + F.name + ")"};
  out.code = [tilde_map](std::uint64_t n) {
    return enumeration::rank_weightlex(tilde_map(Seq{enumeration::unrank_weightlex(n)}).as<Seq>().syms);
  };
  return out;
}

// Index k <= budget with f~(p_k) apart from z(p_k), if found.
inline std::optional<std::size_t> diagonal_witness(const CodedBaireMorphism& f, const Point& p, std::size_t budget) {
  const Space& baire = *shared_space("baire");
  for (std::size_t k = 0; k <= budget; ++k) {
    Dot d = p.at(k);
    if (baire.apart(f.tilde(d), f.z(d))) return k;
  }
  return std::nullopt;
}

// ---- codes of simple morphisms, for tests and demos -----------------------

// Code of the Baire morphism given by a dot map g: code(n) = rank(g(unrank(n))).
inline std::uint64_t code_entry(const std::function<Dot(const Dot&)>& g, std::uint64_t n) {
  return enumeration::rank_weightlex(g(Seq{enumeration::unrank_weightlex(n)}).as<Seq>().syms);
}

// F sending every input dot b to the first |b| entries of the code of g.
inline Morphism constant_code_morphism(std::function<Dot(const Dot&)> g, std::string name) {
  SpacePtr baire = shared_space("baire");
  return {MorphismKind::Refinement, baire, baire,
          [g](const Dot& b) -> Dot {
            std::vector<std::uint64_t> v;
            for (std::size_t i = 0; i < b.as<Seq>().syms.size(); ++i) v.push_back(code_entry(g, i));
            return Seq{v};
          },
          [](const Dot&) -> std::size_t { return 1; }, std::move(name)};
}

}  // namespace natspace
