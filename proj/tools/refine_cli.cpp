// Command-line front end: SAT experiments, single-formula refinement and the
// digit-addition demo.

#include <CLI11.hpp>

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <fuzzref/fuzzref.hpp>

namespace {

using namespace fuzzref;

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t comma = text.find(',', start);
    if (comma == std::string::npos) comma = text.size();
    std::string item = text.substr(start, comma - start);
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    double v = 0.0;
    auto res = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || res.ec != std::errc{} || res.ptr != item.data() + item.size())
      throw CLI::ValidationError("list", "cannot parse '" + item + "' as a number");
    out.push_back(v);
    start = comma + 1;
  }
  return out;
}

struct SatOptions {
  std::string instances;
  std::size_t generate = 0;
  std::uint64_t generate_seed = 1;
  std::string tnorm = "godel";
  std::string method = "ilr";
  double alpha = 1.0;
  double target = 1.0;
  std::string clauses = "all";
  std::size_t seeds = 1;
  std::string out;
  unsigned threads = 0;
  std::size_t patience = 3;
  std::size_t ilr_iters = 100;
  double adam_lr = AdamConfig{}.learning_rate;
  double adam_reg = AdamConfig{}.alpha_reg;
  std::size_t adam_iters = AdamConfig{}.max_iters;
};

int run_sat(const SatOptions& o) {
  ExperimentConfig cfg;
  if (!o.instances.empty()) {
    std::vector<std::string> errors;
    cfg.instances = load_instances(o.instances, &errors);
    for (const auto& e : errors) std::cerr << "skipped " << e << '\n';
  } else {
    cfg.instances = generate_instances(o.generate, o.generate_seed);
  }
  if (cfg.instances.empty()) {
    std::cerr << "no instances to run\n";
    return 1;
  }
  if (o.clauses != "all") {
    std::size_t limit = std::stoul(o.clauses);
    for (const auto& inst : cfg.instances)
      if (limit > inst.cnf.clauses().size())
        throw CLI::ValidationError("--clauses", "instance " + inst.id + " has fewer clauses");
    cfg.clause_limit = limit;
  }
  cfg.logic = Logic::of(family_from_string(o.tnorm));
  cfg.methods = o.method == "both" ? std::vector{Method::Ilr, Method::Adam} : std::vector{method_from_string(o.method)};
  cfg.target = o.target;
  cfg.seeds.clear();
  for (std::size_t s = 0; s < o.seeds; ++s) cfg.seeds.push_back(s);
  cfg.ilr.alpha = o.alpha;
  cfg.ilr.patience = o.patience;
  cfg.ilr.max_iters = o.ilr_iters;
  cfg.adam.learning_rate = o.adam_lr;
  cfg.adam.alpha_reg = o.adam_reg;
  cfg.adam.max_iters = o.adam_iters;
  cfg.threads = o.threads;

  ExperimentResult result = run_experiment(cfg);

  std::ofstream csv(o.out);
  if (!csv) throw std::runtime_error("cannot write " + o.out);
  write_records_csv(csv, result.records);
  std::filesystem::path summary_path(o.out);
  summary_path.replace_extension(".summary.csv");
  std::ofstream summary(summary_path);
  write_summary_csv(summary, result.records);

  for (Method m : cfg.methods) {
    std::size_t runs = 0, feasible = 0;
    double sat = 0.0, l1 = 0.0, settled = 0.0;
    for (const auto& r : result.runs) {
      if (r.method != m) continue;
      ++runs;
      feasible += r.final_satisfaction >= 0.999;
      sat += r.final_satisfaction;
      l1 += r.final_l1;
      settled += static_cast<double>(r.settled_at);
    }
    const double n = static_cast<double>(runs);
    std::printf("%s %s: runs=%zu feasible=%.3f mean_satisfaction=%.4f mean_l1=%.4f mean_settled=%.2f\n",
                std::string(to_string(m)).c_str(), std::string(to_string(cfg.logic.family)).c_str(), runs,
                static_cast<double>(feasible) / n, sat / n, l1 / n, settled / n);
  }
  std::printf("wrote %s and %s\n", o.out.c_str(), summary_path.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fuzzy-logic refinement: ILR, ADAM baseline and experiments"};
  app.require_subcommand(1);

  SatOptions sat;
  auto* sat_cmd = app.add_subcommand("sat", "Run ILR and/or ADAM on 3-SAT instances and write a CSV");
  auto* inst_opt = sat_cmd->add_option("--instances", sat.instances, "Directory of DIMACS .cnf files")
                       ->check(CLI::ExistingDirectory);
  auto* gen_opt = sat_cmd->add_option("--generate", sat.generate, "Generate N planted uf20-91-style instances")
                      ->check(CLI::PositiveNumber);
  inst_opt->excludes(gen_opt);
  sat_cmd->add_option("--generate-seed", sat.generate_seed, "First generator seed");
  sat_cmd->add_option("--tnorm", sat.tnorm)->check(CLI::IsMember({"godel", "luk", "product"}));
  sat_cmd->add_option("--method", sat.method)->check(CLI::IsMember({"ilr", "adam", "both"}));
  sat_cmd->add_option("--alpha", sat.alpha, "ILR scheduling factor")->check(CLI::Range(0.0, 1.0));
  sat_cmd->add_option("--target", sat.target)->check(CLI::Range(0.0, 1.0));
  sat_cmd->add_option("--clauses", sat.clauses, "'all' or a clause count");
  sat_cmd->add_option("--seeds", sat.seeds, "Initial assignments per instance")->check(CLI::PositiveNumber);
  sat_cmd->add_option("--out", sat.out)->required();
  sat_cmd->add_option("--threads", sat.threads, "0 uses every core");
  sat_cmd->add_option("--patience", sat.patience);
  sat_cmd->add_option("--ilr-iters", sat.ilr_iters)->check(CLI::PositiveNumber);
  sat_cmd->add_option("--adam-lr", sat.adam_lr)->check(CLI::PositiveNumber);
  sat_cmd->add_option("--adam-reg", sat.adam_reg)->check(CLI::NonNegativeNumber);
  sat_cmd->add_option("--adam-iters", sat.adam_iters)->check(CLI::PositiveNumber);
  sat_cmd->callback([&] {
    if (sat.instances.empty() && sat.generate == 0)
      throw CLI::RequiredError("one of --instances or --generate");
  });

  std::string dsl, t0_text, tnorm = "godel", method = "ilr";
  double target = 1.0, alpha = 1.0;
  auto* formula_cmd = app.add_subcommand("formula", "Refine a single formula written in the DSL");
  formula_cmd->add_option("--dsl", dsl, "e.g. '~A & (B | C)'")->required();
  formula_cmd->add_option("--t0", t0_text, "Initial truth values, in order of first appearance")->required();
  formula_cmd->add_option("--target", target)->check(CLI::Range(0.0, 1.0));
  formula_cmd->add_option("--tnorm", tnorm)->check(CLI::IsMember({"godel", "luk", "product"}));
  formula_cmd->add_option("--method", method)->check(CLI::IsMember({"ilr", "adam"}));
  formula_cmd->add_option("--alpha", alpha, "ILR scheduling factor")->check(CLI::Range(0.0, 1.0));

  std::string px_text, py_text;
  auto* demo_cmd = app.add_subcommand("demo-addition", "One ILR step on the digit-addition rules");
  demo_cmd->add_option("--px", px_text, "10 beliefs for the first digit")->required();
  demo_cmd->add_option("--py", py_text, "10 beliefs for the second digit")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sat_cmd) return run_sat(sat);

    if (*formula_cmd) {
      Formula f = parse_formula(dsl);
      TruthVec t0 = parse_list(t0_text);
      if (t0.size() != f.num_props())
        throw std::invalid_argument("formula has " + std::to_string(f.num_props()) + " propositions, --t0 has " +
                                    std::to_string(t0.size()));
      Logic logic = Logic::of(family_from_string(tnorm));
      IlrConfig cfg;
      cfg.alpha = alpha;
      IlrOutcome out = method == "ilr" ? ilr_run(f, t0, target, logic, cfg) : adam_run(f, t0, target, logic);
      std::printf("formula: %s\n", render(f).c_str());
      std::printf("iteration 0: value=%.6g\n", out.initial.satisfaction);
      for (const auto& p : out.trace)
        std::printf("iteration %zu: value=%.6g l1=%.6g\n", p.iteration, p.satisfaction, p.l1_delta);
      for (std::size_t i = 0; i < f.num_props(); ++i)
        std::printf("%s = %.6g -> %.6g\n", f.names()[i].c_str(), t0[i], out.refined[i]);
      std::printf("converged: %s\n", out.converged ? "yes" : "no");
      return 0;
    }

    if (*demo_cmd) {
      TruthVec sums = mnist_addition_demo(parse_list(px_text), parse_list(py_text));
      for (std::size_t s = 0; s < sums.size(); ++s) std::printf("sum %zu: %.6g\n", s, sums[s]);
      return 0;
    }
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
