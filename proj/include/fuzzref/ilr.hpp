#pragma once

// Iterative local refinement: a forward pass caches every subformula value,
// a backward pass pushes the target down the tree through the minimal
// refinement function of each connective, and the per-proposition results
// are combined. Repeated until the target is reached or progress stalls.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "formula.hpp"
#include "refine.hpp"
#include "semantics.hpp"

namespace fuzzref {

/// How candidates for a proposition constrained by several branches are merged.
enum class CombineRule {
  LargestDelta,  // the candidate furthest from the current value
  LargestValue,  // the largest candidate (accumulator initialised at 0)
};

struct IlrConfig {
  double alpha = 1.0;  // scheduling factor in (0, 1]
  std::size_t max_iters = 100;
  std::size_t patience = 3;
  double tolerance = 1e-9;
  std::optional<std::uint64_t> tie_seed;  // empty: lowest-index tie-breaking
  double epsilon = 1e-6;
  CombineRule combine = CombineRule::LargestDelta;

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
    if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
    if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0, 1)");
  }
};

struct TracePoint {
  std::size_t iteration = 0;
  double satisfaction = 0.0;
  double l1_delta = 0.0;
  double wall_ms = 0.0;  // elapsed since the run started
};

struct IlrOutcome {
  TruthVec refined;
  TracePoint initial;              // the starting assignment, iteration 0
  std::vector<TracePoint> trace;   // one entry per iteration run
  bool converged = false;
  std::size_t iterations_run = 0;
  /// Last iteration that moved closer to the target; the iterations after
  /// it only confirmed the stall.
  std::size_t converged_at = 0;
};

/// First iteration after which the satisfaction trace stays within `band`
/// of its final value.
inline std::size_t settling_iteration(const IlrOutcome& o, double band) {
  const double final_value = o.trace.empty() ? o.initial.satisfaction : o.trace.back().satisfaction;
  std::size_t k = o.trace.size();
  while (k > 0) {
    const double before = k == 1 ? o.initial.satisfaction : o.trace[k - 2].satisfaction;
    if (std::abs(before - final_value) > band) break;
    --k;
  }
  return k;
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

namespace detail {

class Stopwatch {
 public:
  double elapsed_ms() const {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

class BackwardPass {
 public:
  BackwardPass(const Formula& f, std::span<const double> t, const EvalTrace& cache, const Logic& logic,
               const RefineOptions& opts, CombineRule rule)
      : f_(f), t_(t), cache_(cache), logic_(logic), opts_(opts), rule_(rule), candidate_(t.size()) {}

  void run(NodeId id, double target) {
    const Node& n = f_.node(id);
    switch (n.kind) {
      case NodeKind::Prop: offer(n.prop, clamp01(target)); return;
      case NodeKind::Const: return;
      case NodeKind::Not:
        // 1 - (1 - x) need not round-trip, so an unchanged target stays exact.
        run(n.children[0], target == cache_[id] ? cache_[n.children[0]] : negation_transform(target));
        return;
      case NodeKind::Implies: implies(n, target); return;
      case NodeKind::And:
      case NodeKind::Or: connective(n, target); return;
    }
  }

  TruthVec result() const {
    TruthVec out(t_.begin(), t_.end());
    for (std::size_t j = 0; j < out.size(); ++j)
      if (candidate_[j]) out[j] = *candidate_[j];
    return out;
  }

 private:
  void offer(std::size_t j, double value) {
    auto& slot = candidate_[j];
    if (!slot) {
      slot = value;
    } else if (rule_ == CombineRule::LargestDelta) {
      if (std::abs(value - t_[j]) > std::abs(*slot - t_[j])) slot = value;
    } else if (value > *slot) {
      slot = value;
    }
  }

  void connective(const Node& n, double target) {
    std::vector<NodeId> free_ids;
    std::vector<double> free, fixed;
    for (NodeId c : n.children) {
      if (f_.closed(c)) {
        fixed.push_back(cache_[c]);
      } else {
        free_ids.push_back(c);
        free.push_back(cache_[c]);
      }
    }
    if (free.empty()) return;
    TruthVec refined = n.kind == NodeKind::And ? refine_tnorm(logic_.family, free, fixed, target, opts_)
                                               : refine_tconorm(logic_.family, free, fixed, target, opts_);
    for (std::size_t k = 0; k < free_ids.size(); ++k) run(free_ids[k], refined[k]);
  }

  void implies(const Node& n, double target) {
    const NodeId ante = n.children[0], cons = n.children[1];
    const bool ante_fixed = f_.closed(ante), cons_fixed = f_.closed(cons);
    const double a = cache_[ante], c = cache_[cons];
    if (ante_fixed && cons_fixed) return;
    if (ante_fixed) {
      run(cons, refine_implication_consequent(logic_, a, c, target, opts_));
    } else if (cons_fixed) {
      run(ante, refine_implication_antecedent(logic_, a, c, target, opts_));
    } else {
      auto r = refine_implication(logic_, a, c, target, opts_);
      run(ante, r.antecedent);
      run(cons, r.consequent);
    }
  }

  const Formula& f_;
  std::span<const double> t_;
  const EvalTrace& cache_;
  const Logic& logic_;
  const RefineOptions& opts_;
  CombineRule rule_;
  std::vector<std::optional<double>> candidate_;
};

}  // namespace detail

/// Backward pass from `node` with the given target. Returns a full-length
/// vector: propositions below `node` take their combined refined values,
/// all others keep their value in `t`. `cache` must come from evaluating
/// the formula at `t`.
inline TruthVec backward(const Formula& f, NodeId node, double target, std::span<const double> t,
                         const EvalTrace& cache, const Logic& logic, const RefineOptions& opts = {},
                         CombineRule rule = CombineRule::LargestDelta) {
  detail::BackwardPass pass(f, t, cache, logic, opts, rule);
  pass.run(node, target);
  return pass.result();
}

inline IlrOutcome ilr_run(const Formula& f, std::span<const double> t0, double target, const Logic& logic,
                          const IlrConfig& config = {}) {
  config.validate();
  if (!(target >= 0.0 && target <= 1.0)) throw DomainError("target must lie in [0, 1]");
  detail::require_unit(t0, "initial truth value");

  TieBreaker ties = config.tie_seed ? TieBreaker(*config.tie_seed) : TieBreaker();
  RefineOptions opts{config.epsilon, &ties};

  detail::Stopwatch clock;
  IlrOutcome out;
  TruthVec t(t0.begin(), t0.end());
  EvalTrace cache = evaluate_trace(f, t, logic);
  out.initial = {0, cache.root(), 0.0};
  double best = std::abs(cache.root() - target);
  if (best <= config.tolerance) {
    out.refined = std::move(t);
    out.converged = true;
    return out;
  }

  std::size_t stalled = 0;
  for (std::size_t it = 1; it <= config.max_iters; ++it) {
    const double current = cache.root();
    const double scheduled = current + (target - current) * config.alpha;
    t = backward(f, f.root(), scheduled, t, cache, logic, opts, config.combine);
    cache = evaluate_trace(f, t, logic);
    out.trace.push_back({it, cache.root(), l1_distance(t, t0), clock.elapsed_ms()});
    out.iterations_run = it;

    const double dist = std::abs(cache.root() - target);
    if (dist <= config.tolerance) {
      out.converged = true;
      out.converged_at = it;
      break;
    }
    stalled = best - dist < config.tolerance ? stalled + 1 : 0;
    if (stalled == 0) out.converged_at = it;
    best = std::min(best, dist);
    if (stalled >= config.patience) {
      out.converged = true;
      break;
    }
  }
  out.refined = std::move(t);
  return out;
}

}  // namespace fuzzref
