#pragma once

// Gradient-descent baseline: a small reverse-mode tape for fuzzy formulas,
// evaluated on sigmoid-transformed logits and minimised with ADAM.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "formula.hpp"
#include "ilr.hpp"
#include "semantics.hpp"

namespace fuzzref {

/// Define-by-run tape of scalar operations. Nodes are appended in
/// evaluation order, so reverse index order is a valid reverse topological
/// order for the adjoint sweep.
class GradTape {
 public:
  using Index = std::uint32_t;

  enum class Op : std::uint8_t { Var, Const, Sigmoid, Affine, Sum, Product, Min, Max, Log, Div, Abs, Sqrt };

  Index var(double value) { return push(Op::Var, value); }
  Index constant(double value) { return push(Op::Const, value); }

  Index sigmoid(Index x) {
    double z = value(x);
    double s = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
    return push(Op::Sigmoid, s, x);
  }

  /// scale * x + shift
  Index affine(Index x, double scale, double shift) {
    Index id = push(Op::Affine, scale * value(x) + shift, x);
    nodes_[id].scale = scale;
    return id;
  }

  Index sum(std::span<const Index> xs) {
    double s = 0.0;
    for (Index x : xs) s += value(x);
    return push(Op::Sum, s, xs);
  }

  Index product(std::span<const Index> xs) {
    double p = 1.0;
    for (Index x : xs) p *= value(x);
    return push(Op::Product, p, xs);
  }

  Index min(std::span<const Index> xs) { return push(Op::Min, value(xs[extremal(xs, false)]), xs); }
  Index max(std::span<const Index> xs) { return push(Op::Max, value(xs[extremal(xs, true)]), xs); }

  Index log(Index x) { return push(Op::Log, std::log(value(x)), x); }

  Index div(Index num, Index den) {
    const Index xs[] = {num, den};
    return push(Op::Div, value(num) / value(den), xs);
  }

  Index abs(Index x) { return push(Op::Abs, std::abs(value(x)), x); }
  Index sqrt(Index x) { return push(Op::Sqrt, std::sqrt(value(x)), x); }

  double value(Index i) const { return nodes_[i].value; }
  std::size_t size() const noexcept { return nodes_.size(); }
  void clear() {
    nodes_.clear();
    args_.clear();
  }

  /// Adjoints d(output)/d(node) for every node on the tape.
  std::vector<double> gradient(Index output) const {
    std::vector<double> adj(nodes_.size(), 0.0);
    adj[output] = 1.0;
    for (std::size_t k = output + 1; k-- > 0;) {
      const double a = adj[k];
      if (a == 0.0) continue;
      const Node& n = nodes_[k];
      std::span<const Index> xs(args_.data() + n.first_arg, n.num_args);
      switch (n.op) {
        case Op::Var:
        case Op::Const: break;
        case Op::Sigmoid: adj[xs[0]] += a * n.value * (1.0 - n.value); break;
        case Op::Affine: adj[xs[0]] += a * n.scale; break;
        case Op::Sum:
          for (Index x : xs) adj[x] += a;
          break;
        case Op::Product: product_adjoint(xs, a, adj); break;
        case Op::Min: adj[xs[extremal(xs, false)]] += a; break;
        case Op::Max: adj[xs[extremal(xs, true)]] += a; break;
        case Op::Log: adj[xs[0]] += a / value(xs[0]); break;
        case Op::Div: {
          const double den = value(xs[1]);
          adj[xs[0]] += a / den;
          adj[xs[1]] -= a * value(xs[0]) / (den * den);
          break;
        }
        case Op::Abs: {
          const double x = value(xs[0]);
          adj[xs[0]] += x > 0 ? a : x < 0 ? -a : 0.0;
          break;
        }
        case Op::Sqrt:
          if (n.value > 0) adj[xs[0]] += a * 0.5 / n.value;
          break;
      }
    }
    return adj;
  }

 private:
  struct Node {
    Op op;
    double value;
    double scale = 0.0;
    std::uint32_t first_arg = 0;
    std::uint32_t num_args = 0;
  };

  Index push(Op op, double v, std::span<const Index> xs) {
    Node n{op, v};
    n.first_arg = static_cast<std::uint32_t>(args_.size());
    n.num_args = static_cast<std::uint32_t>(xs.size());
    args_.insert(args_.end(), xs.begin(), xs.end());
    nodes_.push_back(n);
    return static_cast<Index>(nodes_.size() - 1);
  }
  Index push(Op op, double v) { return push(op, v, std::span<const Index>{}); }
  Index push(Op op, double v, Index x) { return push(op, v, std::span<const Index>(&x, 1)); }

  // First index attaining the extremum; subgradients route there.
  std::size_t extremal(std::span<const Index> xs, bool largest) const {
    std::size_t best = 0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
      double v = value(xs[i]), b = value(xs[best]);
      if (largest ? v > b : v < b) best = i;
    }
    return best;
  }

  // Prefix/suffix products so zero factors get the right partials.
  void product_adjoint(std::span<const Index> xs, double a, std::vector<double>& adj) const {
    const std::size_t n = xs.size();
    std::vector<double> suffix(n + 1, 1.0);
    for (std::size_t i = n; i-- > 0;) suffix[i] = suffix[i + 1] * value(xs[i]);
    double prefix = 1.0;
    for (std::size_t i = 0; i < n; ++i) {
      adj[xs[i]] += a * prefix * suffix[i + 1];
      prefix *= value(xs[i]);
    }
  }

  std::vector<Node> nodes_;
  std::vector<Index> args_;
};

/// Variants of the formula graph used inside surrogate losses.
struct TapeEvalOptions {
  /// Lukasiewicz: skip the max(., 0) of the root conjunction.
  bool drop_root_lukasiewicz_clamp = false;
};

/// Records the evaluation of `f` on the tape with proposition values taken
/// from `props`. Returns the index of every subformula value.
inline std::vector<GradTape::Index> record_formula(GradTape& tape, const Formula& f,
                                                   std::span<const GradTape::Index> props, const Logic& logic,
                                                   const TapeEvalOptions& opts = {}) {
  using Index = GradTape::Index;
  if (f.num_props() > props.size()) throw DomainError("not enough proposition values for the formula");
  std::vector<Index> at(f.size());
  std::vector<Index> xs;
  const Family fam = logic.family;

  auto conorm = [&](std::span<const Index> args) -> Index {
    switch (fam) {
      case Family::Godel: return tape.max(args);
      case Family::Lukasiewicz: {
        const Index s[] = {tape.sum(args), tape.constant(1.0)};
        return tape.min(s);
      }
      case Family::Product: {
        std::vector<Index> comp;
        for (Index x : args) comp.push_back(tape.affine(x, -1.0, 1.0));
        return tape.affine(tape.product(comp), -1.0, 1.0);
      }
    }
    return args[0];
  };

  for (NodeId id = 0; id < f.size(); ++id) {
    const Node& n = f.node(id);
    switch (n.kind) {
      case NodeKind::Prop: at[id] = props[n.prop]; break;
      case NodeKind::Const: at[id] = tape.constant(n.value); break;
      case NodeKind::Not: at[id] = tape.affine(at[n.children[0]], -1.0, 1.0); break;
      case NodeKind::Or:
        xs.clear();
        for (NodeId c : n.children) xs.push_back(at[c]);
        at[id] = conorm(xs);
        break;
      case NodeKind::And:
        xs.clear();
        for (NodeId c : n.children) xs.push_back(at[c]);
        if (fam == Family::Godel) {
          at[id] = tape.min(xs);
        } else if (fam == Family::Product) {
          at[id] = tape.product(xs);
        } else {
          Index shifted = tape.affine(tape.sum(xs), 1.0, -static_cast<double>(xs.size() - 1));
          if (opts.drop_root_lukasiewicz_clamp && id == f.root()) {
            at[id] = shifted;
          } else {
            const Index s[] = {shifted, tape.constant(0.0)};
            at[id] = tape.max(s);
          }
        }
        break;
      case NodeKind::Implies: {
        const Index a = at[n.children[0]], c = at[n.children[1]];
        if (logic.implication == ImplicationKind::SImplication) {
          const Index s[] = {tape.affine(a, -1.0, 1.0), c};
          at[id] = conorm(s);
        } else if (tape.value(a) <= tape.value(c)) {
          at[id] = tape.constant(1.0);
        } else if (fam == Family::Godel) {
          at[id] = c;
        } else if (fam == Family::Product) {
          at[id] = tape.div(c, a);
        } else {
          const Index s[] = {tape.sum(std::vector<Index>{tape.affine(a, -1.0, 1.0), c}), tape.constant(1.0)};
          at[id] = tape.min(s);
        }
        break;
      }
    }
  }
  return at;
}

struct ValueAndGradient {
  double value = 0.0;
  std::vector<double> gradient;
};

inline double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

inline double logit(double t) { return std::log(t / (1.0 - t)); }

/// f(sigmoid(z)) and its gradient with respect to z.
inline ValueAndGradient eval_with_grad(const Formula& f, std::span<const double> z, const Logic& logic) {
  for (double v : z)
    if (!std::isfinite(v)) throw DomainError("logits must be finite");
  GradTape tape;
  std::vector<GradTape::Index> leaves, props;
  for (double v : z) {
    leaves.push_back(tape.var(v));
    props.push_back(tape.sigmoid(leaves.back()));
  }
  auto at = record_formula(tape, f, props, logic);
  auto adj = tape.gradient(at[f.root()]);
  ValueAndGradient out{tape.value(at[f.root()]), {}};
  for (auto l : leaves) out.gradient.push_back(adj[l]);
  return out;
}

struct AdamConfig {
  double learning_rate = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_hat = 1e-8;
  double alpha_reg = 0.01;
  int reg_norm_p = 1;  // 1 or 2
  std::size_t max_iters = 500;
  /// Square the satisfaction term instead of taking its absolute value.
  bool squared_satisfaction = false;
  /// Product family: measure satisfaction of a root conjunction as the sum
  /// of log clause values against log target.
  bool log_product = true;
  /// Lukasiewicz family: drop the max(., 0) of a root conjunction.
  bool relax_lukasiewicz = true;
  /// Distance to the target counted as reaching it, for `converged`.
  double target_tolerance = 1e-3;

  void validate() const {
    if (!(learning_rate > 0.0) || !(eps_hat > 0.0)) throw std::invalid_argument("ADAM rates must be positive");
    if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
      throw std::invalid_argument("ADAM betas must lie in (0, 1)");
    if (reg_norm_p != 1 && reg_norm_p != 2) throw std::invalid_argument("regulariser norm must be 1 or 2");
    if (!(alpha_reg >= 0.0)) throw std::invalid_argument("regularisation weight must be nonnegative");
    if (max_iters == 0) throw std::invalid_argument("max_iters must be positive");
  }
};

/// Bias-corrected ADAM state over a parameter vector.
class Adam {
 public:
  Adam(std::size_t n, const AdamConfig& cfg) : cfg_(cfg), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, std::span<const double> grad) {
    ++t_;
    const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = cfg_.beta1 * m_[i] + (1.0 - cfg_.beta1) * grad[i];
      v_[i] = cfg_.beta2 * v_[i] + (1.0 - cfg_.beta2) * grad[i] * grad[i];
      params[i] -= cfg_.learning_rate * (m_[i] / c1) / (std::sqrt(v_[i] / c2) + cfg_.eps_hat);
    }
  }

 private:
  AdamConfig cfg_;
  std::vector<double> m_, v_;
  std::size_t t_ = 0;
};

namespace detail {

// Surrogate loss on the tape; returns the loss node.
inline GradTape::Index record_loss(GradTape& tape, const Formula& f, std::span<const GradTape::Index> props,
                                   std::span<const double> t0, double target, const Logic& logic,
                                   const AdamConfig& cfg) {
  using Index = GradTape::Index;
  const Node& root = f.node(f.root());
  const bool root_and = root.kind == NodeKind::And;
  TapeEvalOptions eval_opts;
  eval_opts.drop_root_lukasiewicz_clamp = cfg.relax_lukasiewicz && root_and && logic.family == Family::Lukasiewicz;
  auto at = record_formula(tape, f, props, logic, eval_opts);

  Index residual;
  if (cfg.log_product && root_and && logic.family == Family::Product && target > 0.0) {
    std::vector<Index> logs;
    for (NodeId c : root.children) logs.push_back(tape.log(at[c]));
    residual = tape.affine(tape.sum(logs), 1.0, -std::log(target));
  } else {
    residual = tape.affine(at[f.root()], 1.0, -target);
  }
  Index sat = cfg.squared_satisfaction ? tape.product(std::vector<Index>{residual, residual}) : tape.abs(residual);
  if (cfg.alpha_reg == 0.0) return sat;

  std::vector<Index> diffs;
  for (std::size_t i = 0; i < t0.size(); ++i) {
    Index d = tape.affine(props[i], 1.0, -t0[i]);
    diffs.push_back(cfg.reg_norm_p == 1 ? tape.abs(d) : tape.product(std::vector<Index>{d, d}));
  }
  Index norm = tape.sum(diffs);
  if (cfg.reg_norm_p == 2) norm = tape.sqrt(norm);
  const Index terms[] = {sat, tape.affine(norm, cfg.alpha_reg, 0.0)};
  return tape.sum(terms);
}

}  // namespace detail

/// Minimises |f(sigmoid(z)) - target| + alpha_reg * ||sigmoid(z) - t0||_p
/// with ADAM from z0 = logit(t0). The trace reports true formula values.
inline IlrOutcome adam_run(const Formula& f, std::span<const double> t0, double target, const Logic& logic,
                           const AdamConfig& cfg = {}) {
  cfg.validate();
  if (!(target >= 0.0 && target <= 1.0)) throw DomainError("target must lie in [0, 1]");
  detail::require_unit(t0, "initial truth value");
  const std::size_t n = t0.size();

  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = logit(std::clamp(t0[i], 1e-6, 1.0 - 1e-6));

  detail::Stopwatch clock;
  IlrOutcome out;
  out.initial = {0, evaluate(f, t0, logic), 0.0};
  Adam adam(n, cfg);
  GradTape tape;
  std::vector<GradTape::Index> leaves(n), props(n);
  TruthVec t(n);
  for (std::size_t it = 1; it <= cfg.max_iters; ++it) {
    tape.clear();
    for (std::size_t i = 0; i < n; ++i) {
      leaves[i] = tape.var(z[i]);
      props[i] = tape.sigmoid(leaves[i]);
    }
    auto loss = detail::record_loss(tape, f, props, t0, target, logic, cfg);
    auto adj = tape.gradient(loss);
    std::vector<double> grad(n);
    for (std::size_t i = 0; i < n; ++i) grad[i] = adj[leaves[i]];
    adam.step(z, grad);

    for (std::size_t i = 0; i < n; ++i) t[i] = sigmoid(z[i]);
    out.trace.push_back({it, evaluate(f, t, logic), l1_distance(t, t0), clock.elapsed_ms()});
  }
  out.iterations_run = cfg.max_iters;
  out.converged_at = cfg.max_iters;
  out.refined = t;
  out.converged = std::abs(out.trace.back().satisfaction - target) <= cfg.target_tolerance;
  return out;
}

}  // namespace fuzzref
