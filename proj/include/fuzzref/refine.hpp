#pragma once

// Minimal refinement functions for single fuzzy operators: given the current
// arguments of an operator and a target value, return the closest (in L1)
// arguments for which the operator attains the target.
//
// Every function clamps the target into the range the operator can reach
// given its fixed arguments, and returns its input unchanged when the target
// already equals the current value.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "semantics.hpp"

namespace fuzzref {

class RefineError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Picks among tied extremal entries: lowest index, or uniformly at random
/// from a seeded generator.
class TieBreaker {
 public:
  TieBreaker() = default;
  explicit TieBreaker(std::uint64_t seed) : rng_(seed), random_(true) {}

  bool random() const noexcept { return random_; }

  std::size_t argmin(std::span<const double> v) { return pick(v, std::less<>{}); }
  std::size_t argmax(std::span<const double> v) { return pick(v, std::greater<>{}); }

 private:
  template <class Better>
  std::size_t pick(std::span<const double> v, Better better) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (better(v[i], v[best])) best = i;
    if (!random_) return best;
    std::vector<std::size_t> ties;
    for (std::size_t i = 0; i < v.size(); ++i)
      if (v[i] == v[best]) ties.push_back(i);
    if (ties.size() == 1) return best;
    std::uniform_int_distribution<std::size_t> dist(0, ties.size() - 1);
    return ties[dist(rng_)];
  }

  std::mt19937_64 rng_{0};
  bool random_ = false;
};

struct RefineOptions {
  /// Gap kept between antecedent and consequent when a Goedel residuum has
  /// to be made false to a degree.
  double epsilon = 1e-6;
  /// Null means lowest-index tie-breaking.
  TieBreaker* ties = nullptr;
};

namespace detail {

inline double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

inline double checked_target(double v) {
  if (!std::isfinite(v)) throw DomainError("refinement target must be finite");
  return clamp01(v);
}

inline void check_operands(std::span<const double> t, std::span<const double> c) {
  if (t.empty()) throw DomainError("refinement needs at least one free argument");
  require_unit(t, "truth value");
  require_unit(c, "constant");
}

inline std::size_t argmin(std::span<const double> v, const RefineOptions& o) {
  TieBreaker lowest;
  return (o.ties ? *o.ties : lowest).argmin(v);
}

inline std::size_t argmax(std::span<const double> v, const RefineOptions& o) {
  TieBreaker lowest;
  return (o.ties ? *o.ties : lowest).argmax(v);
}

/// Indices of v ordered by value; stable, so ties keep index order.
inline std::vector<std::size_t> order(std::span<const double> v, bool descending) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (descending)
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
  else
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  return idx;
}

inline std::vector<double> complement(std::span<const double> v) {
  std::vector<double> out(v.size());
  std::transform(v.begin(), v.end(), out.begin(), [](double x) { return 1.0 - x; });
  return out;
}

inline double sum(std::span<const double> v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Kept-count search shared by the threshold rules: finds K such that the K
// largest entries stay fixed and the remaining ones move to `level(K)`,
// which must lie in (sorted[K], sorted[K-1]] (sorted descending, with
// sorted[-1] = +inf). Returns {K, level}.
template <class Level>
std::pair<std::size_t, double> find_threshold(const std::vector<double>& sorted_desc, Level level) {
  const std::size_t n = sorted_desc.size();
  const double inf = std::numeric_limits<double>::infinity();
  for (double tol : {0.0, 1e-12}) {
    for (std::size_t k = 0; k < n; ++k) {
      double lam = level(k);
      if (std::isnan(lam)) continue;
      double upper = k == 0 ? inf : sorted_desc[k - 1];
      double lower = sorted_desc[k];
      if (lam <= upper + tol && lam > lower - tol) return {k, lam};
    }
  }
  throw RefineError("no kept-count satisfies the threshold condition");
}

}  // namespace detail

/// Largest value T(t', c) can reach by changing t: T(c), or 1 without constants.
inline double tnorm_max_reachable(Family f, std::span<const double> c) {
  return c.empty() ? 1.0 : t_norm(f, c);
}

/// Smallest value S(t', c) can reach by changing t: S(c), or 0 without constants.
inline double tconorm_min_reachable(Family f, std::span<const double> c) {
  return c.empty() ? 0.0 : t_conorm(f, c);
}

// ---------------------------------------------------------------------------
// Threshold rule through an additive generator.

/// Lifts every free value below a common level lambda up to lambda, where
/// lambda comes from the additive generator so that T(result, c) = target.
/// Handles targets at or above the current value; lower targets are clamped
/// up to T(t, c).
inline TruthVec refine_schur_additive(const AdditiveGenerator& gen, std::span<const double> t,
                                      std::span<const double> c, double target) {
  detail::check_operands(t, c);
  target = detail::checked_target(target);
  auto tnorm = [&](std::span<const double> free) {
    double s = 0.0;
    for (double v : free) s += gen(v);
    for (double v : c) s += gen(v);
    return gen.inverse(std::min(gen.g_zero, s));
  };
  double g_consts = 0.0;
  for (double v : c) g_consts += gen(v);
  const double cur = tnorm(t);
  const double vmax = c.empty() ? 1.0 : gen.inverse(std::min(gen.g_zero, g_consts));
  target = std::clamp(target, cur, vmax);
  if (target == cur) return TruthVec(t.begin(), t.end());

  const auto idx = detail::order(t, /*descending=*/true);
  std::vector<double> sorted(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) sorted[i] = t[idx[i]];
  std::vector<double> g_prefix(t.size() + 1, 0.0);
  for (std::size_t i = 0; i < t.size(); ++i) g_prefix[i + 1] = g_prefix[i] + gen(sorted[i]);

  const double g_target = gen(target);
  const std::size_t n = t.size();
  auto [kept, lambda] = detail::find_threshold(sorted, [&](std::size_t k) {
    double budget = (g_target - g_prefix[k] - g_consts) / static_cast<double>(n - k);
    return gen.inverse(budget);
  });
  TruthVec out(t.begin(), t.end());
  for (std::size_t i = kept; i < n; ++i) out[idx[i]] = detail::clamp01(lambda);
  return out;
}

// ---------------------------------------------------------------------------
// t-norms

namespace detail {

inline TruthVec godel_tnorm(std::span<const double> t, double cur, double target, const RefineOptions& o) {
  TruthVec out(t.begin(), t.end());
  if (target > cur) {
    for (double& v : out) v = std::max(v, target);
  } else {
    out[argmin(t, o)] = target;
  }
  return out;
}

inline TruthVec lukasiewicz_tnorm(std::span<const double> t, std::span<const double> c, double cur, double target) {
  const std::size_t n = t.size();
  const double m = static_cast<double>(c.size());
  const double sum_c = sum(c);
  TruthVec out(t.begin(), t.end());
  if (target < cur) {
    double excess = sum(t) + sum_c + 1.0 - static_cast<double>(n) - m - target;
    double delta = std::max(excess, 0.0) / static_cast<double>(n);
    for (double& v : out) v = std::max(v - delta, 0.0);
    return out;
  }
  // The K* smallest values share the increase equally; everything above
  // them saturates at 1.
  const auto idx = order(t, /*descending=*/false);
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + t[idx[i]];
  std::size_t k_star = 1;
  double lambda = 0.0;
  for (std::size_t k = n; k >= 1; --k) {
    const double kd = static_cast<double>(k);
    double lam = (target + m + kd - 1.0 - sum_c - prefix[k]) / kd;
    if (lam <= 1.0 - t[idx[k - 1]] + 1e-12) {
      k_star = k;
      lambda = lam;
      break;
    }
    if (k == 1) lambda = lam;
  }
  for (std::size_t i = 0; i < n; ++i)
    out[idx[i]] = i < k_star ? clamp01(t[idx[i]] + lambda) : 1.0;
  return out;
}

inline TruthVec product_tnorm(std::span<const double> t, std::span<const double> c, double cur, double target,
                              const RefineOptions& o) {
  const std::size_t n = t.size();
  TruthVec out(t.begin(), t.end());
  if (target < cur) {
    // Lowering only the smallest value costs least in L1.
    std::size_t i = argmin(t, o);
    std::vector<double> rest;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) rest.push_back(t[j]);
    rest.insert(rest.end(), c.begin(), c.end());
    double others = rest.empty() ? 1.0 : product(rest);
    out[i] = std::min(target / others, t[i]);
    return out;
  }
  // Every value below lambda_K is lifted to lambda_K, computed in log space.
  const auto idx = order(t, /*descending=*/true);
  std::vector<double> sorted(n);
  for (std::size_t i = 0; i < n; ++i) sorted[i] = t[idx[i]];
  double log_c = 0.0;
  for (double v : c) log_c += std::log(v);
  std::vector<double> log_prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) log_prefix[i + 1] = log_prefix[i] + std::log(sorted[i]);
  const double log_target = std::log(target);
  auto [kept, lambda] = find_threshold(sorted, [&](std::size_t k) {
    return std::exp((log_target - log_prefix[k] - log_c) / static_cast<double>(n - k));
  });
  for (std::size_t i = kept; i < n; ++i) out[idx[i]] = clamp01(lambda);
  return out;
}

}  // namespace detail

inline TruthVec refine_tnorm(Family f, std::span<const double> t, std::span<const double> c, double target,
                             const RefineOptions& opts = {}) {
  detail::check_operands(t, c);
  target = std::min(detail::checked_target(target), tnorm_max_reachable(f, c));
  const double cur = t_norm(f, t, c);
  if (target == cur) return TruthVec(t.begin(), t.end());
  switch (f) {
    case Family::Godel: return detail::godel_tnorm(t, cur, target, opts);
    case Family::Lukasiewicz: return detail::lukasiewicz_tnorm(t, c, cur, target);
    case Family::Product: return detail::product_tnorm(t, c, cur, target, opts);
  }
  return TruthVec(t.begin(), t.end());
}

// ---------------------------------------------------------------------------
// t-conorms

inline TruthVec refine_tconorm(Family f, std::span<const double> t, std::span<const double> c, double target,
                               const RefineOptions& opts = {}) {
  detail::check_operands(t, c);
  target = std::max(detail::checked_target(target), tconorm_min_reachable(f, c));
  const double cur = t_conorm(f, t, c);
  if (target == cur) return TruthVec(t.begin(), t.end());
  const bool increase = target > cur;
  const std::size_t n = t.size();
  TruthVec out(t.begin(), t.end());

  switch (f) {
    case Family::Godel:
      if (increase) {
        out[detail::argmax(t, opts)] = target;
      } else {
        for (double& v : out) v = std::min(v, target);
      }
      return out;

    case Family::Lukasiewicz: {
      const double sum_c = detail::sum(c);
      if (increase) {
        double delta = std::max(target - detail::sum(t) - sum_c, 0.0) / static_cast<double>(n);
        for (double& v : out) v = std::min(v + delta, 1.0);
        return out;
      }
      // The K* largest values drop by a common amount, the rest go to 0.
      const auto idx = detail::order(t, /*descending=*/true);
      std::vector<double> prefix(n + 1, 0.0);
      for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + t[idx[i]];
      std::size_t k_star = 1;
      double lambda = prefix[1] + sum_c - target;
      for (std::size_t k = n; k >= 1; --k) {
        double lam = (prefix[k] + sum_c - target) / static_cast<double>(k);
        if (lam <= t[idx[k - 1]] + 1e-12) {
          k_star = k;
          lambda = lam;
          break;
        }
      }
      for (std::size_t i = 0; i < n; ++i) out[idx[i]] = i < k_star ? detail::clamp01(t[idx[i]] - lambda) : 0.0;
      return out;
    }

    case Family::Product: {
      if (increase) {
        // Raise only the largest value.
        std::size_t i = detail::argmax(t, opts);
        std::vector<double> rest;
        for (std::size_t j = 0; j < n; ++j)
          if (j != i) rest.push_back(1.0 - t[j]);
        for (double v : c) rest.push_back(1.0 - v);
        double others = rest.empty() ? 1.0 : detail::product(rest);
        out[i] = std::max(1.0 - (1.0 - target) / others, t[i]);
        return out;
      }
      // Lower the largest values to a common level through the generator
      // of the dual t-norm.
      auto comp = detail::complement(t);
      auto comp_c = detail::complement(c);
      auto lifted = refine_schur_additive(additive_generator(Family::Product), comp, comp_c, 1.0 - target);
      return detail::complement(lifted);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transforms between refinement functions

using OperatorRefineFn = std::function<TruthVec(std::span<const double>, std::span<const double>, double)>;

/// Refinement function for the dual operator: 1 - rho(1 - t, 1 - c, 1 - target).
inline OperatorRefineFn dual_transform(OperatorRefineFn fn) {
  return [fn = std::move(fn)](std::span<const double> t, std::span<const double> c, double target) {
    auto r = fn(detail::complement(t), detail::complement(c), 1.0 - target);
    return detail::complement(r);
  };
}

/// Target for a negated subformula.
constexpr double negation_transform(double target) { return 1.0 - target; }

struct ImplicationRefinement {
  double antecedent = 0.0;
  double consequent = 0.0;
};

/// Refinement of S(1 - a, c) via a refinement function for S: flip the
/// antecedent, refine the disjunction, flip back.
inline ImplicationRefinement s_implication_transform(const OperatorRefineFn& tconorm_fn, double a, double c,
                                                     double target) {
  const double flipped[] = {1.0 - a, c};
  auto r = tconorm_fn(flipped, {}, target);
  return {1.0 - r[0], r[1]};
}

// ---------------------------------------------------------------------------
// Implications

inline ImplicationRefinement refine_implication(const Logic& logic, double a, double c, double target,
                                                const RefineOptions& opts = {}) {
  detail::require_unit(a, "antecedent");
  detail::require_unit(c, "consequent");
  target = detail::checked_target(target);
  if (implication(logic, a, c) == target) return {a, c};

  const bool s_route = logic.implication == ImplicationKind::SImplication || logic.family == Family::Lukasiewicz;
  if (s_route) {
    OperatorRefineFn conorm = [&](std::span<const double> t, std::span<const double> k, double v) {
      return refine_tconorm(logic.family, t, k, v, opts);
    };
    return s_implication_transform(conorm, a, c, target);
  }

  if (target >= 1.0) return {a, std::max(a, c)};
  if (logic.family == Family::Godel) {
    // The consequent carries the value; the antecedent must stay strictly above it.
    double ante = std::max(a, target + opts.epsilon);
    return {std::min(ante, 1.0), target};
  }
  // Product residuum c / a: move the consequent onto the line c = target * a.
  if (a > 0.0) return {a, target * a};
  return {opts.epsilon, target * opts.epsilon};
}

/// Refines only the consequent of a -> c, with the antecedent fixed.
inline double refine_implication_consequent(const Logic& logic, double a, double c, double target,
                                            const RefineOptions& opts = {}) {
  detail::require_unit(a, "antecedent");
  detail::require_unit(c, "consequent");
  target = detail::checked_target(target);
  if (implication(logic, a, c) == target) return c;
  const bool s_route = logic.implication == ImplicationKind::SImplication || logic.family == Family::Lukasiewicz;
  if (s_route) {
    const double free[] = {c};
    const double fixed[] = {1.0 - a};
    return refine_tconorm(logic.family, free, fixed, target, opts)[0];
  }
  if (a == 0.0) return c;  // implication is constantly 1
  if (target >= 1.0) return std::max(c, a);
  if (logic.family == Family::Product) return target * a;
  // Goedel: reachable values are [0, a) and 1.
  if (target < a) return target;
  if (1.0 - target <= target - a) return std::max(c, a);
  return std::max(a - opts.epsilon, 0.0);
}

/// Refines only the antecedent of a -> c, with the consequent fixed.
inline double refine_implication_antecedent(const Logic& logic, double a, double c, double target,
                                            const RefineOptions& opts = {}) {
  detail::require_unit(a, "antecedent");
  detail::require_unit(c, "consequent");
  target = detail::checked_target(target);
  if (implication(logic, a, c) == target) return a;
  const bool s_route = logic.implication == ImplicationKind::SImplication || logic.family == Family::Lukasiewicz;
  if (s_route) {
    const double free[] = {1.0 - a};
    const double fixed[] = {c};
    return 1.0 - refine_tconorm(logic.family, free, fixed, target, opts)[0];
  }
  if (target >= 1.0) return std::min(a, c);
  if (logic.family == Family::Product && c > 0.0) {
    // c / a over a in (c, 1] reaches [c, 1).
    return std::min(1.0, c / std::max(target, c));
  }
  // Reachable values are c (a > c) and 1 (a <= c).
  if (c >= 1.0) return a;
  if (std::abs(target - c) <= std::abs(1.0 - target)) return std::min(1.0, std::max(a, c + opts.epsilon));
  return std::min(a, c);
}

// ---------------------------------------------------------------------------
// Product t-norm under the L2 norm

/// Member of the L2 stationary family for the product t-norm, parameterised
/// by the multiplier lambda in [min_i 2 t_i - 2, 0]. lambda = 0 returns t;
/// smaller lambda raises the product monotonically up to 1.
inline TruthVec refine_product_l2(std::span<const double> t, double lambda) {
  detail::require_unit(t, "truth value");
  if (!std::isfinite(lambda) || lambda > 0.0) throw DomainError("lambda must be a finite nonpositive number");
  TruthVec out(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    const double ti = t[i];
    out[i] = lambda > 2.0 * ti - 2.0 ? std::min(0.5 * (ti + std::sqrt(ti * ti - 2.0 * lambda)), 1.0) : 1.0;
  }
  return out;
}

struct ProductL2Solution {
  double lambda = 0.0;
  TruthVec refined;
  bool clamped = false;  // target was outside [T_P(t), 1]
  int iterations = 0;
};

/// Finds lambda with T_P(refine_product_l2(t, lambda)) = target by bisection.
inline ProductL2Solution solve_product_l2_lambda(std::span<const double> t, double target, double tol = 1e-9,
                                                 int max_iterations = 200) {
  detail::require_unit(t, "truth value");
  if (t.empty()) throw DomainError("refinement needs at least one free argument");
  if (!std::isfinite(target)) throw DomainError("refinement target must be finite");
  ProductL2Solution sol;
  const double base = detail::product(t);
  double lo = 0.0;
  for (double v : t) lo = std::min(lo, 2.0 * v - 2.0);
  double hi = 0.0;
  if (target <= base) {
    sol.clamped = target < base;
    sol.lambda = 0.0;
    sol.refined.assign(t.begin(), t.end());
    return sol;
  }
  if (target >= 1.0) {
    sol.clamped = target > 1.0;
    sol.lambda = lo;
    sol.refined = refine_product_l2(t, lo);
    return sol;
  }
  // The product is decreasing in lambda: f(lo) = 1 > target > f(hi).
  double mid = 0.5 * (lo + hi);
  for (sol.iterations = 1; sol.iterations <= max_iterations; ++sol.iterations) {
    mid = 0.5 * (lo + hi);
    double value = detail::product(refine_product_l2(t, mid));
    if (std::abs(value - target) <= tol) break;
    if (value > target)
      lo = mid;
    else
      hi = mid;
  }
  sol.lambda = mid;
  sol.refined = refine_product_l2(t, mid);
  return sol;
}

}  // namespace fuzzref
