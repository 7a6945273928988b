#pragma once

// Brute-force reference solvers for small instances: grid search for
// minimal refinements and exhaustive enumeration for CNF satisfiability.

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "formula.hpp"
#include "semantics.hpp"

namespace fuzzref {

enum class Norm { L1, L2 };

struct OracleResult {
  TruthVec best_vector;  // empty when nothing was feasible
  double best_distance = std::numeric_limits<double>::infinity();
  std::size_t feasible_count = 0;
};

using TruthFunction = std::function<double(std::span<const double>)>;

/// Enumerates the grid {0, step, 2 step, ..., 1}^n and keeps the point
/// closest to `t` among those with |fn(point) - target| <= feas_tol.
/// Ties keep the first point in enumeration order.
inline OracleResult grid_min_refine(const TruthFunction& fn, std::span<const double> t, double target,
                                    double grid_step, Norm norm = Norm::L1, double feas_tol = 0.02) {
  const std::size_t n = t.size();
  if (n == 0 || n > 4) throw std::invalid_argument("grid oracle supports 1 to 4 dimensions");
  if (!(grid_step > 0.0 && grid_step <= 1.0)) throw std::invalid_argument("grid step must lie in (0, 1]");
  const auto cells = static_cast<std::size_t>(std::llround(1.0 / grid_step));
  if (std::abs(static_cast<double>(cells) * grid_step - 1.0) > 1e-9)
    throw std::invalid_argument("grid step must divide 1");

  OracleResult best;
  std::vector<std::size_t> digit(n, 0);
  TruthVec point(n, 0.0);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) point[i] = static_cast<double>(digit[i]) / static_cast<double>(cells);
    if (std::abs(fn(point) - target) <= feas_tol) {
      ++best.feasible_count;
      double d = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        double diff = point[i] - t[i];
        d += norm == Norm::L1 ? std::abs(diff) : diff * diff;
      }
      if (norm == Norm::L2) d = std::sqrt(d);
      if (d < best.best_distance) {
        best.best_distance = d;
        best.best_vector = point;
      }
    }
    std::size_t i = 0;
    while (i < n && digit[i] == cells) digit[i++] = 0;
    if (i == n) break;
    ++digit[i];
  }
  return best;
}

/// Grid oracle over the propositions of a formula.
inline OracleResult grid_min_refine(const Formula& f, const Logic& logic, std::span<const double> t, double target,
                                    double grid_step, Norm norm = Norm::L1, double feas_tol = 0.02) {
  return grid_min_refine([&](std::span<const double> p) { return evaluate(f, p, logic); }, t, target, grid_step, norm,
                         feas_tol);
}

struct SatCheck {
  bool satisfiable = false;
  std::vector<bool> witness;  // indexed by variable, present when satisfiable
};

/// Tries all 2^n assignments, stopping at the first satisfying one.
inline SatCheck exhaustive_sat_check(const CnfInstance& inst) {
  const std::size_t n = inst.num_vars();
  if (n > 24) throw std::invalid_argument("exhaustive check supports at most 24 variables");
  struct Masks {
    std::uint32_t pos = 0, neg = 0;
  };
  std::vector<Masks> clauses;
  for (const Clause& c : inst.clauses()) {
    Masks m;
    for (const Literal& l : c) (l.negated ? m.neg : m.pos) |= std::uint32_t{1} << l.var;
    clauses.push_back(m);
  }
  const std::uint64_t all = (std::uint64_t{1} << n) - 1;
  for (std::uint64_t x = 0; x <= all; ++x) {
    const auto a = static_cast<std::uint32_t>(x);
    bool ok = true;
    for (const Masks& m : clauses) {
      if ((a & m.pos) == 0 && (~a & m.neg) == 0) {
        ok = false;
        break;
      }
    }
    if (ok) {
      SatCheck r{true, std::vector<bool>(n)};
      for (std::size_t i = 0; i < n; ++i) r.witness[i] = (a >> i) & 1u;
      return r;
    }
  }
  return {};
}

}  // namespace fuzzref
