// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
// criterion fails.

#include <fuzzref/fuzzref.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <string>

#include "checks.hpp"

using namespace fuzzref;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double draw(std::mt19937_64& rng) {
  const double r = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (r < 0.05) return 0.0;
  if (r < 0.10) return 1.0;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::vector<double> draw_vec(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = draw(rng);
  return v;
}

std::size_t draw_size(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

double l1(std::span<const double> a, std::span<const double> b) { return l1_distance(a, b); }

Verdict correctness() {
  const auto start = Clock::now();
  std::mt19937_64 rng(101);
  std::size_t bad_value = 0, bad_identity = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const Family fam = kAllFamilies[trial % 3];
    const bool conorm = (trial / 3) % 2;
    auto t = draw_vec(rng, draw_size(rng, 1, 5));
    auto c = draw_vec(rng, draw_size(rng, 0, 2));
    const double v = draw(rng);
    if (!conorm) {
      auto r = refine_tnorm(fam, t, c, v);
      const double err = std::abs(t_norm(fam, r, c) - std::min(v, tnorm_max_reachable(fam, c)));
      worst = std::max(worst, err);
      bad_value += err > 1e-9;
      bad_identity += refine_tnorm(fam, t, c, t_norm(fam, t, c)) != t;
    } else {
      auto r = refine_tconorm(fam, t, c, v);
      const double err = std::abs(t_conorm(fam, r, c) - std::max(v, tconorm_min_reachable(fam, c)));
      worst = std::max(worst, err);
      bad_value += err > 1e-9;
      bad_identity += refine_tconorm(fam, t, c, t_conorm(fam, t, c)) != t;
    }
  }
  const double secs = seconds_since(start);
  return {bad_value == 0 && bad_identity == 0 && secs < 5.0,
          fmt("value misses=%zu (worst %.2e), identity misses=%zu, %.2fs", bad_value, worst, bad_identity, secs)};
}

Verdict minimality() {
  const auto start = Clock::now();
  std::mt19937_64 rng(202);
  const double step = 0.02, feas = 0.02, slack = 0.12;
  std::size_t checked = 0, failures = 0;
  double worst_gap = -1.0;
  for (Family fam : kAllFamilies) {
    const Logic logic = Logic::of(fam);
    for (int op = 0; op < 3; ++op) {
      for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = op == 2 ? 2 : draw_size(rng, 1, 3);
        auto t = draw_vec(rng, n);
        const double v = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
        TruthVec refined;
        TruthFunction fn;
        if (op == 0) {
          refined = refine_tnorm(fam, t, {}, v);
          fn = [fam](std::span<const double> p) { return t_norm(fam, p); };
        } else if (op == 1) {
          refined = refine_tconorm(fam, t, {}, v);
          fn = [fam](std::span<const double> p) { return t_conorm(fam, p); };
        } else {
          auto r = refine_implication(logic, t[0], t[1], v);
          refined = {r.antecedent, r.consequent};
          fn = [logic](std::span<const double> p) { return implication(logic, p[0], p[1]); };
        }
        OracleResult o = grid_min_refine(fn, t, v, step, Norm::L1, feas);
        if (!o.feasible_count) continue;
        ++checked;
        const double gap = l1(refined, t) - o.best_distance;
        worst_gap = std::max(worst_gap, gap);
        failures += gap > slack;
      }
    }
  }
  const double secs = seconds_since(start);
  return {failures == 0 && checked > 0 && secs < 120.0,
          fmt("%zu/%zu within slack, worst excess %.4f, %.1fs", checked - failures, checked, worst_gap, secs)};
}

Verdict ordering() {
  std::mt19937_64 rng(303);
  std::size_t violations = 0;
  for (Family fam : kAllFamilies) {
    for (int trial = 0; trial < 500; ++trial) {
      auto t = draw_vec(rng, draw_size(rng, 2, 5));
      const double lo = t_norm(fam, t);
      const double v = lo + std::uniform_real_distribution<double>(0.0, 1.0)(rng) * (1.0 - lo);
      auto r = refine_tnorm(fam, t, {}, v);
      for (std::size_t i = 0; i < t.size(); ++i)
        for (std::size_t j = 0; j < t.size(); ++j)
          if (t[i] > t[j] && r[i] - t[i] > r[j] - t[j] + 1e-12) ++violations;
    }
  }
  return {violations == 0, fmt("%zu violations over 1500 refinements", violations)};
}

Verdict gradient_check() {
  std::mt19937_64 rng(404);
  std::normal_distribution<double> normal(0.0, 1.5);
  std::string detail;
  bool pass = true;
  for (Family fam : kAllFamilies) {
    const Logic logic = Logic::of(fam);
    std::size_t points = 0, attempts = 0;
    double worst = 0.0;
    while (points < 100 && attempts < 5000) {
      ++attempts;
      Formula f = checks::random_formula(rng, 4, 3);
      std::vector<double> z(f.num_props());
      for (double& x : z) x = normal(rng);
      auto res = checks::check_gradient(f, z, logic);
      if (!res) continue;
      ++points;
      worst = std::max(worst, res->relative_error);
    }
    pass = pass && points == 100 && worst < 1e-4;
    detail += fmt("%s worst %.1e over %zu points; ", std::string(to_string(fam)).c_str(), worst, points);
  }
  return {pass, detail};
}

ExperimentConfig experiment(Family fam, std::vector<Method> methods, std::optional<std::size_t> clauses) {
  ExperimentConfig cfg;
  cfg.instances = generate_instances(100, 1000);
  cfg.clause_limit = clauses;
  cfg.logic = Logic::of(fam);
  cfg.methods = std::move(methods);
  return cfg;
}

struct Stats {
  std::size_t runs = 0;
  std::size_t feasible = 0;
  std::size_t fast = 0;         // settled within 5 iterations
  std::size_t fast_strict = 0;  // converged_at within 5 iterations
  double mean_sat = 0.0;
  double mean_l1 = 0.0;
  double frac_feasible() const { return static_cast<double>(feasible) / static_cast<double>(runs); }
};

Stats stats(const ExperimentResult& res, Method m) {
  Stats s;
  for (const auto& r : res.runs) {
    if (r.method != m) continue;
    ++s.runs;
    s.feasible += r.final_satisfaction >= 0.999;
    s.fast += r.settled_at <= 5;
    s.fast_strict += r.converged_at <= 5;
    s.mean_sat += r.final_satisfaction;
    s.mean_l1 += r.final_l1;
  }
  s.mean_sat /= static_cast<double>(s.runs);
  s.mean_l1 /= static_cast<double>(s.runs);
  return s;
}

Verdict ilr_speed() {
  const auto start = Clock::now();
  bool pass = true;
  std::string detail;
  for (Family fam : kAllFamilies) {
    Stats s = stats(run_experiment(experiment(fam, {Method::Ilr}, std::nullopt)), Method::Ilr);
    const double frac = static_cast<double>(s.fast) / static_cast<double>(s.runs);
    pass = pass && frac >= 0.95;
    detail += fmt("%s settled<=5: %.2f (to 1e-9: %.2f); ", std::string(to_string(fam)).c_str(), frac,
                  static_cast<double>(s.fast_strict) / static_cast<double>(s.runs));
  }
  const double secs = seconds_since(start);
  return {pass && secs < 60.0, detail + fmt("%.1fs", secs)};
}

Verdict feasibility_20() {
  bool pass = true;
  std::string detail;
  for (Family fam : kAllFamilies) {
    const bool with_adam = fam == Family::Godel;
    auto methods = with_adam ? std::vector{Method::Ilr, Method::Adam} : std::vector{Method::Ilr};
    auto res = run_experiment(experiment(fam, methods, 20));
    Stats ilr = stats(res, Method::Ilr);
    pass = pass && ilr.frac_feasible() >= 0.95;
    detail += fmt("ILR %s %.2f; ", std::string(to_string(fam)).c_str(), ilr.frac_feasible());
    if (with_adam) {
      Stats adam = stats(res, Method::Adam);
      pass = pass && adam.frac_feasible() < 0.5;
      detail += fmt("ADAM godel %.2f; ", adam.frac_feasible());
    }
  }
  return {pass, detail};
}

Verdict lukasiewicz_91() {
  auto res = run_experiment(experiment(Family::Lukasiewicz, {Method::Ilr, Method::Adam}, std::nullopt));
  Stats ilr = stats(res, Method::Ilr), adam = stats(res, Method::Adam);
  return {ilr.frac_feasible() >= 0.9 && adam.frac_feasible() >= 0.9 && ilr.mean_l1 <= adam.mean_l1,
          fmt("feasible ILR %.2f ADAM %.2f; mean L1 ILR %.3f ADAM %.3f", ilr.frac_feasible(), adam.frac_feasible(),
              ilr.mean_l1, adam.mean_l1)};
}

Verdict godel_product_91() {
  auto g = run_experiment(experiment(Family::Godel, {Method::Ilr, Method::Adam}, std::nullopt));
  Stats gi = stats(g, Method::Ilr), ga = stats(g, Method::Adam);
  auto p = run_experiment(experiment(Family::Product, {Method::Ilr, Method::Adam}, std::nullopt));
  Stats pi = stats(p, Method::Ilr), pa = stats(p, Method::Adam);
  const bool pass = 1.0 - gi.frac_feasible() >= 0.9 && 1.0 - ga.frac_feasible() >= 0.9 && pa.mean_sat >= pi.mean_sat &&
                    pa.mean_sat >= 0.3 && pa.mean_sat <= 0.7;
  return {pass, fmt("godel infeasible ILR %.2f ADAM %.2f; product mean ILR %.3f ADAM %.3f", 1.0 - gi.frac_feasible(),
                    1.0 - ga.frac_feasible(), pi.mean_sat, pa.mean_sat)};
}

Verdict addition_demo() {
  std::vector<double> px(kDigits, 0.0), py(kDigits, 0.0);
  px[3] = 1.0;
  py[5] = 1.0;
  TruthVec sums = mnist_addition_demo(px, py);
  bool pass = true;
  for (std::size_t s = 0; s < kSums; ++s) pass = pass && sums[s] == (s == 8 ? 1.0 : 0.0);

  // Closed form on random beliefs: sum s = max over a + b = s of min(px[a], py[b]).
  std::mt19937_64 rng(909);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    for (double& v : px) v = unit(rng);
    for (double& v : py) v = unit(rng);
    sums = mnist_addition_demo(px, py);
    for (std::size_t s = 0; s < kSums; ++s) {
      double expect = 0.0;
      for (std::size_t a = 0; a < kDigits; ++a)
        if (s >= a && s - a < kDigits) expect = std::max(expect, std::min(px[a], py[s - a]));
      worst = std::max(worst, std::abs(sums[s] - expect));
    }
  }
  pass = pass && worst <= 1e-12;
  return {pass, fmt("one-hot 3+5 -> sum 8 only: %s; max-min closed form worst %.1e", pass ? "yes" : "no", worst)};
}

}  // namespace

int main() {
  const std::pair<const char*, std::function<Verdict()>> criteria[] = {
      {"refinement correctness", correctness},
      {"minimality vs grid oracle", minimality},
      {"ordering property", ordering},
      {"gradient check", gradient_check},
      {"ILR speed", ilr_speed},
      {"20-clause feasibility", feasibility_20},
      {"91-clause Lukasiewicz", lukasiewicz_91},
      {"91-clause Godel/Product", godel_product_91},
      {"digit-addition demo", addition_demo},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Verdict v;
    try {
      v = check();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failed, std::size(criteria));
  return failed ? 1 : 0;
}
