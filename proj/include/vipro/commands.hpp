#pragma once

// The four CLI subcommands as library calls. Errors surface as ConfigError
// (exit 2) or IoError (exit 3).

#include <filesystem>
#include <string>

#include "vipro/io.hpp"

namespace vipro {

struct GenSummary {
  std::size_t records = 0;
  double amplitude = 0.0;
  double clamp_fraction = 0.0;
  double vanilla_r1 = 0.0;  // paired captions on the rho = 0 reference model
  double vanilla_r5 = 0.0;
};

/// Generates the corpus and writes it to `out`.
GenSummary cmd_gen(const DatasetSpec& spec, const std::filesystem::path& out);

/// Runs the experiment; writes report files when `out` is non-empty.
ExperimentReport cmd_attack(const ExperimentConfig& cfg, const std::filesystem::path& out);

/// Sweeps one axis; writes ablation.csv when `out` is non-empty.
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, AblationAxis axis,
                                    const std::filesystem::path& out);
std::string ablation_csv(const std::vector<AblationRow>& rows);

/// Collects every report.json under `results` and summarizes top-1 histograms,
/// recall deltas and the rank correlation between mean top-1 similarity and
/// success rate across runs. Writes summary.json and hist.csv to `out` when
/// non-empty. No reports found is an IoError.
Json cmd_report(const std::filesystem::path& results, const std::filesystem::path& out);

}  // namespace vipro
