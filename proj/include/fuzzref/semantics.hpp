#pragma once

// Fuzzy operator families (Goedel, Lukasiewicz, product), their additive
// generators and bottom-up evaluation of formulas.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "formula.hpp"

namespace fuzzref {

/// Truth degrees in [0, 1], indexed by proposition.
using TruthVec = std::vector<double>;

enum class Family { Godel, Lukasiewicz, Product };
enum class ImplicationKind { Residuum, SImplication };

struct Logic {
  Family family = Family::Godel;
  ImplicationKind implication = ImplicationKind::Residuum;

  /// The Lukasiewicz residuum coincides with its S-implication, so that
  /// family defaults to the S-implication route.
  static constexpr Logic of(Family f) {
    return {f, f == Family::Lukasiewicz ? ImplicationKind::SImplication : ImplicationKind::Residuum};
  }

  friend bool operator==(const Logic&, const Logic&) = default;
};

inline constexpr Family kAllFamilies[] = {Family::Godel, Family::Lukasiewicz, Family::Product};

inline std::string_view to_string(Family f) {
  switch (f) {
    case Family::Godel: return "godel";
    case Family::Lukasiewicz: return "luk";
    case Family::Product: return "product";
  }
  return "?";
}

inline Family family_from_string(std::string_view s) {
  if (s == "godel" || s == "g") return Family::Godel;
  if (s == "luk" || s == "lukasiewicz" || s == "l") return Family::Lukasiewicz;
  if (s == "product" || s == "p") return Family::Product;
  throw std::invalid_argument("unknown t-norm family '" + std::string(s) + "'");
}

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

inline void require_unit(double v, const char* what) {
  if (!(v >= 0.0 && v <= 1.0)) throw DomainError(std::string(what) + " must lie in [0, 1], got " + std::to_string(v));
}

inline void require_unit(std::span<const double> vs, const char* what) {
  for (double v : vs) require_unit(v, what);
}

// Product of values in [0, 1]. Any exact zero short-circuits; otherwise the
// product is accumulated in log space so long conjunctions do not underflow
// to zero prematurely.
inline double product(std::span<const double> vs) {
  double log_sum = 0.0;
  for (double v : vs) {
    if (v == 0.0) return 0.0;
    log_sum += std::log(v);
  }
  return std::exp(log_sum);
}

}  // namespace detail

inline double t_norm(Family f, std::span<const double> vs) {
  if (vs.empty()) throw DomainError("t-norm of an empty list");
  switch (f) {
    case Family::Godel:
      return *std::min_element(vs.begin(), vs.end());
    case Family::Product:
      return detail::product(vs);
    case Family::Lukasiewicz: {
      double sum = std::accumulate(vs.begin(), vs.end(), 0.0);
      return std::clamp(sum - static_cast<double>(vs.size() - 1), 0.0, 1.0);
    }
  }
  return 0.0;
}

inline double t_conorm(Family f, std::span<const double> vs) {
  if (vs.empty()) throw DomainError("t-conorm of an empty list");
  switch (f) {
    case Family::Godel:
      return *std::max_element(vs.begin(), vs.end());
    case Family::Product: {
      std::vector<double> comp(vs.size());
      std::transform(vs.begin(), vs.end(), comp.begin(), [](double v) { return 1.0 - v; });
      return 1.0 - detail::product(comp);
    }
    case Family::Lukasiewicz:
      return std::min(std::accumulate(vs.begin(), vs.end(), 0.0), 1.0);
  }
  return 0.0;
}

/// T over the concatenation of free values and constants; 1 when both are empty.
inline double t_norm(Family f, std::span<const double> t, std::span<const double> c) {
  if (t.empty() && c.empty()) return 1.0;
  std::vector<double> all(t.begin(), t.end());
  all.insert(all.end(), c.begin(), c.end());
  return t_norm(f, all);
}

/// S over the concatenation of free values and constants; 0 when both are empty.
inline double t_conorm(Family f, std::span<const double> t, std::span<const double> c) {
  if (t.empty() && c.empty()) return 0.0;
  std::vector<double> all(t.begin(), t.end());
  all.insert(all.end(), c.begin(), c.end());
  return t_conorm(f, all);
}

inline double residuum(Family f, double a, double c) {
  if (a <= c) return 1.0;
  switch (f) {
    case Family::Godel: return c;
    case Family::Product: return c / a;
    case Family::Lukasiewicz: return std::min(1.0 - a + c, 1.0);
  }
  return 1.0;
}

inline double implication(const Logic& logic, double a, double c) {
  if (logic.implication == ImplicationKind::Residuum) return residuum(logic.family, a, c);
  const double args[] = {1.0 - a, c};
  return t_conorm(logic.family, args);
}

/// Subformula values from one forward pass, indexed by NodeId.
struct EvalTrace {
  std::vector<double> values;

  double operator[](NodeId id) const { return values[id]; }
  double root() const { return values.back(); }
};

inline EvalTrace evaluate_trace(const Formula& f, std::span<const double> t, const Logic& logic) {
  if (f.num_props() > t.size())
    throw DomainError("truth vector has " + std::to_string(t.size()) + " entries, formula uses " +
                      std::to_string(f.num_props()));
  EvalTrace trace;
  trace.values.resize(f.size());
  std::vector<double> args;
  for (NodeId id = 0; id < f.size(); ++id) {
    const Node& n = f.node(id);
    double v = 0.0;
    switch (n.kind) {
      case NodeKind::Prop: v = t[n.prop]; break;
      case NodeKind::Const: v = n.value; break;
      case NodeKind::Not: v = 1.0 - trace.values[n.children[0]]; break;
      case NodeKind::Implies:
        v = implication(logic, trace.values[n.children[0]], trace.values[n.children[1]]);
        break;
      case NodeKind::And:
      case NodeKind::Or:
        args.clear();
        for (NodeId c : n.children) args.push_back(trace.values[c]);
        v = n.kind == NodeKind::And ? t_norm(logic.family, args) : t_conorm(logic.family, args);
        break;
    }
    trace.values[id] = v;
  }
  return trace;
}

inline double evaluate(const Formula& f, std::span<const double> t, const Logic& logic) {
  return evaluate_trace(f, t, logic).root();
}

/// Additive generator g of an Archimedean t-norm together with its inverse.
/// T(t) = g_inverse(min(g(0+), sum g(t_i))).
struct AdditiveGenerator {
  std::function<double(double)> g;
  std::function<double(double)> g_inverse;
  double g_zero = 0.0;  // g(0+), +inf for strict t-norms

  double operator()(double t) const { return g(t); }
  double inverse(double y) const { return g_inverse(y); }
};

inline AdditiveGenerator additive_generator(Family f) {
  switch (f) {
    case Family::Product:
      return {[](double t) { return t <= 0.0 ? std::numeric_limits<double>::infinity() : -std::log(t); },
              [](double y) { return std::isinf(y) && y > 0 ? 0.0 : std::exp(-y); },
              std::numeric_limits<double>::infinity()};
    case Family::Lukasiewicz:
      return {[](double t) { return 1.0 - t; }, [](double y) { return 1.0 - y; }, 1.0};
    case Family::Godel:
      break;
  }
  throw DomainError("the Goedel t-norm has no additive generator");
}

}  // namespace fuzzref
