// vipro: corpus generation, attack runs, ablations and report summaries.
//
//   vipro gen    [--config spec.json] [--seed S] --out DIR
//   vipro attack --config run.json [--seed S] [--threads N] --out DIR
//   vipro ablate --config run.json --axis AXIS [--seed S] [--threads N] --out DIR
//   vipro report RESULTS_DIR [--out DIR]
//
// Exit codes: 0 ok, 1 unexpected failure, 2 config error, 3 I/O error.

#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "vipro/commands.hpp"

namespace {

using namespace vipro;

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
};

ExperimentConfig load_experiment(const Common& c) {
  ExperimentConfig cfg = experiment_config_from_json(read_json_file(c.config));
  if (c.seed) cfg.seeds = {*c.seed};
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

void print_seed_line(const SeedReport& s) {
  std::printf("seed %llu  candidates %zu  R@1 %.4f -> %.4f  R@5 %.4f -> %.4f  success %.4f\n",
              static_cast<unsigned long long>(s.seed), s.candidates.size(), s.mean_pre_r1,
              s.mean_post_r1, s.mean_pre_r5, s.mean_post_r5, s.success_rate);
}

int run(int argc, char** argv) {
  CLI::App app{"video promotion attacks against a planted text-to-video retriever"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  Common gen_o, atk_o, abl_o;
  std::string axis;
  std::string results;
  std::string report_out;

  auto* gen = app.add_subcommand("gen", "generate a synthetic corpus");
  gen->add_option("--config", gen_o.config, "dataset spec JSON (optional preset key)");
  gen->add_option("--seed", gen_o.seed, "corpus seed");
  gen->add_option("--out", gen_o.out, "output directory")->required();
  gen->add_option("--threads", gen_o.threads, "unused, accepted for symmetry");

  auto* atk = app.add_subcommand("attack", "run an attack experiment");
  atk->add_option("--config", atk_o.config, "experiment JSON")->required();
  atk->add_option("--seed", atk_o.seed, "single seed replacing the config's list");
  atk->add_option("--out", atk_o.out, "output directory")->required();
  atk->add_option("--threads", atk_o.threads, "worker threads");

  auto* abl = app.add_subcommand("ablate", "sweep one attack parameter");
  abl->add_option("--config", abl_o.config, "experiment JSON")->required();
  abl->add_option("--axis", axis, "queries | eta | alpha | epsilon | clipping")->required();
  abl->add_option("--seed", abl_o.seed, "single seed replacing the config's list");
  abl->add_option("--out", abl_o.out, "output directory")->required();
  abl->add_option("--threads", abl_o.threads, "worker threads");

  auto* rep = app.add_subcommand("report", "summarize report.json files");
  rep->add_option("results", results, "directory searched for report.json")->required();
  rep->add_option("--out", report_out, "output directory (default: the results directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (gen->parsed()) {
    DatasetSpec spec;
    if (!gen_o.config.empty()) spec = dataset_spec_from_json(read_json_file(gen_o.config));
    if (gen_o.seed) spec.seed = *gen_o.seed;
    const GenSummary s = cmd_gen(spec, gen_o.out);
    std::printf("wrote %zu records to %s\n", s.records, gen_o.out.c_str());
    std::printf("amplitude %.6f  clamped %.4f%%  vanilla R@1 %.4f  R@5 %.4f\n", s.amplitude,
                100.0 * s.clamp_fraction, s.vanilla_r1, s.vanilla_r5);
  } else if (atk->parsed()) {
    const ExperimentReport r = cmd_attack(load_experiment(atk_o), atk_o.out);
    for (const auto& s : r.seeds) print_seed_line(s);
    std::printf("mean dR@1 %+.4f  dR@5 %+.4f  runtime %.1fs\n", r.mean_delta_r1, r.mean_delta_r5,
                r.runtime_seconds);
  } else if (abl->parsed()) {
    const AblationAxis a = parse_axis(axis);
    const auto rows = cmd_ablate(load_experiment(abl_o), a, abl_o.out);
    std::cout << ablation_csv(rows);
  } else if (rep->parsed()) {
    const Json summary = cmd_report(results, report_out.empty() ? results : report_out);
    std::printf("%zu runs  spearman(top-1 sim, success) %.4f\n", summary.at("runs").size(),
                summary.at("top1_vs_success_spearman").get<double>());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const vipro::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const vipro::IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
