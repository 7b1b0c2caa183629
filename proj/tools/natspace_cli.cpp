// natspace: batch front end for the natspace library.
//
//   natspace eval "<expr>" --bits 30
//   natspace cantor 0212 --depth 4
//   natspace linecall [prefix-file] --threshold-exp 8
//   natspace linecall --generate -1/3 --depth 40 --seed 7 [--emit]
//   natspace subcover cover.json
//   natspace metric sigma_[0,1] x.txt y.txt --bits 8
//   natspace validate cantor --depth 50
//
// Exit status: 0 ok, 1 malformed input, 2 semantic error, 3 budget exhausted.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <random>

#include "natspace.hpp"

using namespace natspace;

namespace {

enum Exit { kOk = 0, kParse = 1, kSemantic = 2, kBudget = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json bounds_json(const Rational& lo, const Rational& hi) { return {{"lo", to_string(lo)}, {"hi", to_string(hi)}}; }

std::string bracket(const Rational& lo, const Rational& hi) { return "[" + to_string(lo) + ", " + to_string(hi) + "]"; }

std::string bracket(const Dot& d) {
  auto iv = *interval_of(d);
  return bracket(iv.lo, iv.hi);
}

std::vector<Dot> read_prefix_file(const std::string& path) {
  if (path.empty() || path == "-") return read_prefix(std::cin);
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return read_prefix(in);
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path);
  return json::parse(in);
}

SpacePtr named_space(const std::string& name) {
  const auto& names = std_space_names();
  if (name != "sigma_3" && std::find(names.begin(), names.end(), name) == names.end())
    throw SpaceError("unknown space " + name);
  return shared_space(name);
}

// Whether the closed intervals cover [target.lo, target.hi].
bool union_covers(std::vector<Interval> ivs, const Interval& target) {
  std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
  Rational reach = target.lo;
  for (const auto& iv : ivs) {
    if (iv.lo > reach) break;
    if (iv.hi > reach) reach = iv.hi;
    if (reach >= target.hi) return true;
  }
  return reach >= target.hi;
}

// Nested sigma_R dots around q; each step picks one of the valid dyadic
// positions at random, so the endpoints wander like measurement noise.
std::vector<Dot> noisy_stream(const Rational& q, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<Dot> out{MaxDot{}};
  std::optional<Integer> prev;
  for (std::uint64_t m = 0; out.size() < count; ++m) {
    Rational scaled = q * pow2(static_cast<std::int64_t>(m));
    Integer f = scaled.get_num() / scaled.get_den();
    if (scaled < 0 && f * scaled.get_den() != scaled.get_num()) f -= 1;
    std::vector<Integer> cand;
    for (int k = -2; k <= 0; ++k) {
      Integer n = f + k;
      if (Rational(n) > scaled || Rational(n + 2) < scaled) continue;
      if (prev && (n < 2 * *prev || n > 2 * *prev + 2)) continue;
      cand.push_back(n);
    }
    prev = cand[rng() % cand.size()];
    out.push_back(DyadicInterval{*prev, m});
  }
  return out;
}

std::vector<std::uint64_t> parse_ternary(const std::string& s) {
  std::vector<std::uint64_t> v;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] < '0' || s[i] > '2') throw ParseError("not a ternary digit '" + std::string(1, s[i]) + "'", i);
    v.push_back(static_cast<std::uint64_t>(s[i] - '0'));
  }
  return v;
}

struct Options {
  std::string format = "text";
  std::optional<std::size_t> budget;
  std::uint64_t bits = 30;
  std::optional<std::size_t> depth;
  std::uint64_t threshold_exp = 8;
  std::string expr, digits, input, cover, space, x_file, y_file, generate;
  std::uint64_t seed = 0;
  bool emit = false;
};

bool as_json(const Options& o) { return o.format == "json"; }

int run_eval(const Options& o) {
  auto e = parse_expr(o.expr);
  auto b = eval_expr(*e, o.bits, o.budget.value_or(kEvalBudget));
  if (as_json(o)) {
    json j = bounds_json(b.lo, b.hi);
    j["expr"] = to_string(*e);
    j["bits"] = o.bits;
    std::cout << j.dump() << '\n';
  } else {
    std::cout << "lo " << to_string(b.lo) << "\nhi " << to_string(b.hi) << '\n';
  }
  return kOk;
}

int run_cantor(const Options& o) {
  auto a = parse_ternary(o.digits);
  std::size_t depth = o.depth.value_or(a.size());
  if (depth > a.size())
    throw SpaceError("depth " + std::to_string(depth) + " exceeds the " + std::to_string(a.size()) + " digits given");
  a.resize(depth);
  auto c = cantor_digits(a);
  std::string s;
  for (auto d : c) s += static_cast<char>('0' + d);
  auto iv = *interval_of(digits_to_interval(2, c));
  if (as_json(o)) {
    json j = bounds_json(iv.lo, iv.hi);
    j["digits"] = s;
    std::cout << j.dump() << '\n';
  } else {
    std::cout << (s.empty() ? "-" : s) << '\n' << bracket(iv.lo, iv.hi) << '\n';
  }
  return kOk;
}

int run_linecall(const Options& o) {
  std::vector<Dot> dots;
  if (!o.generate.empty()) {
    Rational q;
    try {
      q = parse_rational(o.generate);
    } catch (const std::exception&) {
      throw ParseError("bad rational '" + o.generate + "'", 0);
    }
    dots = noisy_stream(q, o.depth.value_or(48), o.seed);
    if (o.emit) {
      write_prefix(std::cout, dots);
      return kOk;
    }
  } else {
    dots = read_prefix_file(o.input);
  }
  std::string name = "sigma_R";
  for (const auto& d : dots)
    if (d.get_if<RatInterval>()) name = "R_rat";
  auto verdict = line_call(point_from_dots(shared_space(name), dots), o.threshold_exp);
  if (as_json(o))
    std::cout << json{{"verdict", to_string(verdict)}, {"threshold_exp", o.threshold_exp}}.dump() << '\n';
  else
    std::cout << to_string(verdict) << '\n';
  return kOk;
}

// {"space": name, "cover": [dots], "witness": bar}
int run_subcover(const Options& o) {
  json file = read_json_file(o.cover);
  auto s = named_space(file.at("space").get<std::string>());
  Cover c;
  for (const auto& d : file.at("cover")) {
    Dot x = from_json(d);
    if (!s->contains(x)) throw SpaceError("cover lists a non-dot of " + s->name + ": " + show(x));
    c.dots.push_back(x);
  }
  if (!file.contains("witness") || file["witness"].is_null()) throw SpaceError("cover has no witness");
  c.witness = bar_from_json(s, file["witness"]);
  if (auto d = orphan(c.dots, *c.witness)) throw SpaceError("witness dot " + show(*d) + " is under no cover dot");
  auto sub = finite_subcover(c);

  std::optional<bool> covered;
  auto whole = interval_of((*c.witness)->root);
  if (whole) {
    std::vector<Interval> ivs;
    for (const auto& d : sub)
      if (auto iv = interval_of(d)) ivs.push_back(*iv);
    if (ivs.size() == sub.size()) covered = union_covers(ivs, *whole);
  }
  if (as_json(o)) {
    json dots = json::array();
    for (const auto& d : sub) dots.push_back(to_json(d));
    json j = {{"subcover", dots}, {"union_covers", covered ? json(*covered) : json(nullptr)}};
    std::cout << j.dump() << '\n';
  } else {
    for (const auto& d : sub) std::cout << to_string(d) << '\n';
    if (!covered)
      std::cout << "union: not an interval space\n";
    else
      std::cout << "union " << (*covered ? "covers " : "does not cover ") << bracket(whole->lo, whole->hi) << '\n';
  }
  return covered == false ? kSemantic : kOk;
}

int run_metric(const Options& o) {
  auto s = named_space(o.space);
  if (!s->spraid) throw SpaceError(s->name + " has no grade structure");
  Point x = point_from_dots(s, read_prefix_file(o.x_file));
  Point y = point_from_dots(s, read_prefix_file(o.y_file));
  MetricEvaluator ev(s, o.budget.value_or(kMetricGradeBudget));
  auto r = evaluate_metric(ev, x, y, o.bits);
  if (as_json(o)) {
    json terms = json::array();
    for (const auto& t : r.terms) {
      json row = {{"m", t.m}, {"term", bounds_json(t.lo, t.hi)}, {"partial", bounds_json(t.sum_lo, t.sum_hi)}};
      if (t.pair) {
        row["pair"] = {to_json(t.pair->first), to_json(t.pair->second)};
        row["fx"] = bounds_json(interval_of(t.fx)->lo, interval_of(t.fx)->hi);
        row["fy"] = bounds_json(interval_of(t.fy)->lo, interval_of(t.fy)->hi);
      } else {
        row["pair"] = nullptr;
      }
      terms.push_back(row);
    }
    json j = {{"space", s->name}, {"bits", o.bits}, {"d", bounds_json(r.lo, r.hi)}, {"terms", terms}};
    std::cout << j.dump() << '\n';
  } else {
    std::cout << "m\tpair\tf(x)\tf(y)\tterm\tpartial\n";
    for (const auto& t : r.terms) {
      std::cout << t.m << '\t';
      if (t.pair)
        std::cout << '(' << show(t.pair->first) << ", " << show(t.pair->second) << ")\t" << bracket(t.fx) << '\t'
                  << bracket(t.fy);
      else
        std::cout << "-\t-\t-";
      std::cout << '\t' << bracket(t.lo, t.hi) << '\t' << bracket(t.sum_lo, t.sum_hi) << '\n';
    }
    std::cout << "d " << bracket(r.lo, r.hi) << '\n';
  }
  return kOk;
}

int run_validate(const Options& o) {
  auto s = named_space(o.space);
  std::size_t depth = o.depth.value_or(50);
  auto report = validate_space(*s, depth);
  if (as_json(o)) {
    std::cout << json{{"space", s->name}, {"depth", depth}, {"defects", report}}.dump() << '\n';
  } else {
    for (const auto& line : report) std::cout << line << '\n';
    std::cout << s->name << ": " << report.size() << " defect" << (report.size() == 1 ? "" : "s") << " at depth "
              << depth << '\n';
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  Options o;
  CLI::App app{"Exact reals and natural spaces"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"text", "json"}));
  app.add_option("--budget", o.budget, "Dot budget for eval, grade budget for metric");

  auto* eval = app.add_subcommand("eval", "Bound an exact rational expression");
  eval->add_option("expr", o.expr)->required();
  eval->add_option("--bits", o.bits)->check(CLI::Range(1, 100000));

  auto* cantor = app.add_subcommand("cantor", "Cantor function on a ternary digit string");
  cantor->add_option("digits", o.digits)->required();
  cantor->add_option("--depth", o.depth);

  auto* linecall = app.add_subcommand("linecall", "IN/OUT/LET call for a sigma_R stream");
  linecall->add_option("input", o.input, "Prefix file, one JSON dot per line (default stdin)");
  linecall->add_option("--threshold-exp", o.threshold_exp)->check(CLI::Range(1, 100000));
  linecall->add_option("--generate", o.generate, "Synthesize a noisy stream converging to this rational");
  linecall->add_option("--depth", o.depth, "Dots to generate");
  linecall->add_option("--seed", o.seed);
  linecall->add_flag("--emit", o.emit, "Print the generated stream instead of calling");

  auto* subcover = app.add_subcommand("subcover", "Finite subcover selected by a genetic witness");
  subcover->add_option("cover", o.cover)->required();

  auto* metric = app.add_subcommand("metric", "Metric bounds between two point prefixes");
  metric->add_option("space", o.space)->required();
  metric->add_option("x", o.x_file)->required();
  metric->add_option("y", o.y_file)->required();
  metric->add_option("--bits", o.bits)->check(CLI::Range(1, 64));

  auto* validate = app.add_subcommand("validate", "Check the space axioms up to a depth");
  validate->add_option("space", o.space)->required();
  validate->add_option("--depth", o.depth);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParse;
  }

  try {
    if (*eval) return run_eval(o);
    if (*cantor) return run_cantor(o);
    if (*linecall) return run_linecall(o);
    if (*subcover) return run_subcover(o);
    if (*metric) return run_metric(o);
    return run_validate(o);
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  } catch (const json::exception& e) {
    std::cerr << "malformed JSON: " << e.what() << '\n';
    return kParse;
  } catch (const std::invalid_argument& e) {
    std::cerr << "malformed input: " << e.what() << '\n';
    return kParse;
  } catch (const BudgetError& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kBudget;
  } catch (const StreamExhausted& e) {
    std::cerr << "budget exhausted: " << e.what() << '\n';
    return kBudget;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSemantic;
  }
}
