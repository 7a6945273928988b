#pragma once

// Experiment driver for the 3-SAT comparison between ILR and ADAM: instance
// loading and generation, seeded initial assignments, parallel runs, CSV
// output, and the digit-addition knowledge-base demo.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <vector>

#include "formula.hpp"
#include "graddesc.hpp"
#include "ilr.hpp"
#include "semantics.hpp"

namespace fuzzref {

enum class Method { Ilr, Adam };

inline std::string_view to_string(Method m) { return m == Method::Ilr ? "ilr" : "adam"; }

inline Method method_from_string(std::string_view s) {
  if (s == "ilr") return Method::Ilr;
  if (s == "adam") return Method::Adam;
  throw std::invalid_argument("unknown method '" + std::string(s) + "'");
}

/// One CSV row: the state of one run after `iteration` steps.
struct RunRecord {
  std::string instance;
  Method method = Method::Ilr;
  Family tnorm = Family::Godel;
  double alpha = 1.0;  // ILR scheduling factor, or ADAM regularisation weight
  double target = 1.0;
  std::size_t iteration = 0;
  double satisfaction = 0.0;
  double l1_delta = 0.0;
  bool converged = false;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

inline constexpr std::string_view kCsvHeader =
    "instance,method,tnorm,alpha,target,iteration,satisfaction,l1_delta,converged,wall_ms,seed";

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <class T>
T parse_number(std::string_view s, const char* what) {
  T v{};
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::invalid_argument(std::string("bad ") + what + " field '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) h = (h ^ ch) * 0x100000001b3ULL;
  return h;
}

// Portable draws, so seeded output does not depend on the standard library's
// distribution implementations.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x;
  do x = rng();
  while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

}  // namespace detail

inline std::string to_csv_row(const RunRecord& r) {
  if (r.instance.find_first_of(",\"\n\r") != std::string::npos)
    throw std::invalid_argument("instance id may not contain commas, quotes or newlines");
  std::string out = r.instance;
  for (const std::string& field :
       {std::string(to_string(r.method)), std::string(to_string(r.tnorm)), detail::format_double(r.alpha),
        detail::format_double(r.target), std::to_string(r.iteration), detail::format_double(r.satisfaction),
        detail::format_double(r.l1_delta), std::string(r.converged ? "1" : "0"), detail::format_double(r.wall_ms),
        std::to_string(r.seed)}) {
    out += ',';
    out += field;
  }
  return out;
}

inline RunRecord parse_csv_row(std::string_view line) {
  std::vector<std::string_view> f;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    f.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (f.size() != 11) throw std::invalid_argument("expected 11 CSV fields, got " + std::to_string(f.size()));
  RunRecord r;
  r.instance = std::string(f[0]);
  r.method = method_from_string(f[1]);
  r.tnorm = family_from_string(f[2]);
  r.alpha = detail::parse_number<double>(f[3], "alpha");
  r.target = detail::parse_number<double>(f[4], "target");
  r.iteration = detail::parse_number<std::size_t>(f[5], "iteration");
  r.satisfaction = detail::parse_number<double>(f[6], "satisfaction");
  r.l1_delta = detail::parse_number<double>(f[7], "l1_delta");
  if (f[8] != "0" && f[8] != "1") throw std::invalid_argument("bad converged field");
  r.converged = f[8] == "1";
  r.wall_ms = detail::parse_number<double>(f[9], "wall_ms");
  r.seed = detail::parse_number<std::uint64_t>(f[10], "seed");
  return r;
}

inline void write_records_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  os << kCsvHeader << '\n';
  for (const auto& r : records) os << to_csv_row(r) << '\n';
}

inline std::vector<RunRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw std::invalid_argument("missing or unexpected CSV header");
  std::vector<RunRecord> out;
  while (std::getline(is, line))
    if (!line.empty()) out.push_back(parse_csv_row(line));
  return out;
}

/// Mean satisfaction and L1 curves per (method, tnorm, alpha, target).
/// Runs that stopped early contribute their final value to later iterations.
inline void write_summary_csv(std::ostream& os, const std::vector<RunRecord>& records) {
  using Group = std::tuple<std::string, std::string, double, double>;
  using Run = std::tuple<std::string, std::uint64_t>;
  std::map<Group, std::map<Run, std::vector<const RunRecord*>>> groups;
  for (const auto& r : records)
    groups[{std::string(to_string(r.method)), std::string(to_string(r.tnorm)), r.alpha, r.target}]
          [{r.instance, r.seed}]
              .push_back(&r);

  os << "method,tnorm,alpha,target,iteration,mean_satisfaction,mean_l1_delta,runs\n";
  for (auto& [key, runs] : groups) {
    std::size_t last = 0;
    for (auto& [_, rows] : runs) {
      std::sort(rows.begin(), rows.end(), [](auto* a, auto* b) { return a->iteration < b->iteration; });
      last = std::max(last, rows.back()->iteration);
    }
    for (std::size_t it = 0; it <= last; ++it) {
      double sat = 0.0, l1 = 0.0;
      for (auto& [_, rows] : runs) {
        auto pos = std::upper_bound(rows.begin(), rows.end(), it,
                                    [](std::size_t i, const RunRecord* r) { return i < r->iteration; });
        const RunRecord* r = pos == rows.begin() ? rows.front() : *(pos - 1);
        sat += r->satisfaction;
        l1 += r->l1_delta;
      }
      const double n = static_cast<double>(runs.size());
      os << std::get<0>(key) << ',' << std::get<1>(key) << ',' << detail::format_double(std::get<2>(key)) << ','
         << detail::format_double(std::get<3>(key)) << ',' << it << ',' << detail::format_double(sat / n) << ','
         << detail::format_double(l1 / n) << ',' << runs.size() << '\n';
    }
  }
}

// ---------------------------------------------------------------------------
// Instances

struct NamedInstance {
  std::string id;
  CnfInstance cnf;
};

/// Random 3-SAT with distinct variables per clause. With `planted`, an
/// assignment is drawn first and clauses it violates are redrawn, so the
/// result is satisfiable.
inline CnfInstance generate_3sat(std::size_t num_vars, std::size_t num_clauses, std::uint64_t seed, bool planted) {
  if (num_vars < 3) throw std::invalid_argument("3-SAT needs at least 3 variables");
  if (num_clauses < 1) throw std::invalid_argument("need at least one clause");
  std::mt19937_64 rng(seed);
  std::vector<bool> hidden(num_vars);
  for (std::size_t i = 0; i < num_vars; ++i) hidden[i] = rng() & 1u;

  std::vector<Clause> clauses;
  clauses.reserve(num_clauses);
  while (clauses.size() < num_clauses) {
    Clause c;
    while (c.size() < 3) {
      std::size_t v = detail::uniform_index(rng, num_vars);
      if (std::any_of(c.begin(), c.end(), [&](const Literal& l) { return l.var == v; })) continue;
      c.push_back({v, static_cast<bool>(rng() & 1u)});
    }
    bool sat = std::any_of(c.begin(), c.end(), [&](const Literal& l) { return hidden[l.var] != l.negated; });
    if (planted && !sat) continue;
    clauses.push_back(std::move(c));
  }
  return CnfInstance(num_vars, std::move(clauses));
}

/// Planted uf20-91-style instances named gen-<seed>.
inline std::vector<NamedInstance> generate_instances(std::size_t count, std::uint64_t base_seed,
                                                     std::size_t num_vars = 20, std::size_t num_clauses = 91) {
  std::vector<NamedInstance> out;
  for (std::size_t i = 0; i < count; ++i) {
    std::uint64_t seed = base_seed + i;
    out.push_back({"gen-" + std::to_string(seed), generate_3sat(num_vars, num_clauses, seed, true)});
  }
  return out;
}

/// Every *.cnf file in `dir`, sorted by name. Files that fail to parse are
/// reported in `errors` and skipped.
inline std::vector<NamedInstance> load_instances(const std::filesystem::path& dir, std::vector<std::string>* errors) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".cnf") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<NamedInstance> out;
  for (const auto& path : files) {
    try {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw std::runtime_error("cannot open file");
      std::stringstream buf;
      buf << in.rdbuf();
      out.push_back({path.stem().string(), parse_dimacs(buf.str())});
    } catch (const std::exception& e) {
      if (errors) errors->push_back(path.filename().string() + ": " + e.what());
    }
  }
  return out;
}

/// Uniform initial assignment for one (instance, seed) pair.
inline TruthVec initial_assignment(std::string_view instance_id, std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(detail::splitmix64(seed ^ detail::fnv1a(instance_id)));
  TruthVec t(n);
  for (double& v : t) v = detail::uniform01(rng);
  return t;
}

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  std::vector<NamedInstance> instances;
  std::optional<std::size_t> clause_limit;  // empty: all clauses
  Logic logic = Logic::of(Family::Godel);
  std::vector<Method> methods{Method::Ilr};
  double target = 1.0;
  std::vector<std::uint64_t> seeds{0};
  IlrConfig ilr;  // ilr.alpha is the scheduling factor
  AdamConfig adam;
  /// Break ILR ties randomly, seeded from (instance, seed), instead of by
  /// lowest index. Overrides ilr.tie_seed.
  bool seeded_ties = true;
  /// Band for the settling iteration reported in each run summary.
  double settling_band = 1e-3;
  unsigned threads = 0;  // 0: hardware concurrency
};

/// Final state of one run.
struct RunSummary {
  std::string instance;
  Method method = Method::Ilr;
  std::uint64_t seed = 0;
  std::size_t iterations_run = 0;
  std::size_t converged_at = 0;
  std::size_t settled_at = 0;
  bool converged = false;
  double initial_satisfaction = 0.0;
  double final_satisfaction = 0.0;
  double final_l1 = 0.0;
};

struct ExperimentResult {
  std::vector<RunRecord> records;
  std::vector<RunSummary> runs;
};

inline ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  if (cfg.instances.empty()) throw std::invalid_argument("experiment needs at least one instance");
  if (cfg.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
  if (!(cfg.target >= 0.0 && cfg.target <= 1.0)) throw std::invalid_argument("target must lie in [0, 1]");
  cfg.ilr.validate();
  cfg.adam.validate();

  struct Job {
    const NamedInstance* inst;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& inst : cfg.instances)
    for (auto seed : cfg.seeds) jobs.push_back({&inst, seed});
  std::vector<ExperimentResult> partial(jobs.size());

  auto run_job = [&](std::size_t k) {
    const auto& [inst, seed] = jobs[k];
    Formula f = cnf_to_formula(inst->cnf, cfg.clause_limit);
    TruthVec t0 = initial_assignment(inst->id, seed, inst->cnf.num_vars());
    IlrConfig ilr = cfg.ilr;
    if (cfg.seeded_ties) ilr.tie_seed = detail::splitmix64(~seed ^ detail::fnv1a(inst->id));
    for (Method m : cfg.methods) {
      IlrOutcome o = m == Method::Ilr ? ilr_run(f, t0, cfg.target, cfg.logic, ilr)
                                      : adam_run(f, t0, cfg.target, cfg.logic, cfg.adam);
      const double alpha = m == Method::Ilr ? cfg.ilr.alpha : cfg.adam.alpha_reg;
      auto row = [&](const TracePoint& p) {
        partial[k].records.push_back({inst->id, m, cfg.logic.family, alpha, cfg.target, p.iteration, p.satisfaction,
                                      p.l1_delta, o.converged, p.wall_ms, seed});
      };
      row(o.initial);
      for (const auto& p : o.trace) row(p);
      const TracePoint& last = o.trace.empty() ? o.initial : o.trace.back();
      partial[k].runs.push_back({inst->id, m, seed, o.iterations_run, o.converged_at,
                                 settling_iteration(o, cfg.settling_band), o.converged, o.initial.satisfaction,
                                 last.satisfaction, last.l1_delta});
    }
  };

  unsigned threads = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, jobs.size()));
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> failures(threads);
  std::vector<std::thread> pool;
  for (unsigned w = 0; w < threads; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t k; (k = next.fetch_add(1)) < jobs.size();) run_job(k);
      } catch (...) {
        failures[w] = std::current_exception();
        next = jobs.size();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : failures)
    if (e) std::rethrow_exception(e);

  ExperimentResult out;
  for (auto& p : partial) {
    out.records.insert(out.records.end(), p.records.begin(), p.records.end());
    out.runs.insert(out.runs.end(), p.runs.begin(), p.runs.end());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Digit addition

inline constexpr std::size_t kDigits = 10;
inline constexpr std::size_t kSums = 2 * kDigits - 1;

/// Knowledge base of the 100 rules Is(x, a) & Is(y, b) -> Sum(a + b), with
/// the digit beliefs as constants and one proposition per possible sum.
inline Formula addition_knowledge_base(std::span<const double> px, std::span<const double> py) {
  if (px.size() != kDigits || py.size() != kDigits) throw std::invalid_argument("digit beliefs need 10 entries");
  FormulaBuilder b(kSums);
  std::vector<NodeId> rules;
  for (std::size_t a = 0; a < kDigits; ++a)
    for (std::size_t d = 0; d < kDigits; ++d)
      rules.push_back(b.implication(b.conjunction({b.constant(px[a]), b.constant(py[d])}), b.prop(a + d)));
  std::vector<std::string> names;
  for (std::size_t s = 0; s < kSums; ++s) names.push_back("sum" + std::to_string(s));
  return b.build(b.conjunction(std::move(rules)), std::move(names));
}

/// Sum beliefs after one ILR step towards a fully satisfied knowledge base,
/// starting from all sums at 0.
inline TruthVec mnist_addition_demo(std::span<const double> px, std::span<const double> py,
                                    const Logic& logic = Logic::of(Family::Godel)) {
  detail::require_unit(px, "digit belief");
  detail::require_unit(py, "digit belief");
  Formula kb = addition_knowledge_base(px, py);
  IlrConfig cfg;
  cfg.max_iters = 1;
  TruthVec zeros(kSums, 0.0);
  return ilr_run(kb, zeros, 1.0, logic, cfg).refined;
}

}  // namespace fuzzref
