#pragma once

// JSON and CSV serialization. Doubles are written with 17 significant digits so
// every value reads back bit-identical.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "vipro/harness.hpp"

namespace vipro {

using Json = nlohmann::json;

Json to_json(const Mat64& m);
Mat64 mat_from_json(const Json& j);

Json to_json(const DatasetSpec& spec);
/// Starts from `base` (or the named "preset" inside j) and applies overrides.
/// Unknown keys and wrong types throw ConfigError.
DatasetSpec dataset_spec_from_json(const Json& j, DatasetSpec base = {});

Json to_json(const AttackConfig& cfg);
AttackConfig attack_config_from_json(const Json& j, AttackConfig base = {});

Json to_json(const DefenseConfig& cfg);
DefenseConfig defense_config_from_json(const Json& j, DefenseConfig base = {});

Json to_json(const ExperimentConfig& cfg);
/// Parses, applies scenario defaults and validates.
ExperimentConfig experiment_config_from_json(const Json& j);

Json to_json(const EncoderParams& p);
EncoderParams encoder_from_json(const Json& j);

Json to_json(const AttackResult& r);
AttackResult attack_result_from_json(const Json& j);

Json to_json(const ClipPartition& p);
ClipPartition partition_from_json(const Json& j);

Json to_json(const Histogram& h);

Json to_json(const CandidateOutcome& c);
Json to_json(const SeedReport& s);
/// The hashed region: resolved config plus results, nothing time-dependent.
Json hash_region(const ExperimentReport& r);
/// Full report document with tool version, hash and runtime.
Json report_document(const ExperimentReport& r);

std::string scenario_name(Scenario s);
Scenario parse_scenario(const std::string& s);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t v);

/// Throws IoError when unreadable, ConfigError when not JSON.
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

/// corpus.jsonl (one record per pair) plus corpus.meta.json in `dir`.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

/// report.json, metrics.csv, hist.csv and loss_traces/ in `dir`.
void write_report(const ExperimentReport& report, const std::filesystem::path& dir);
std::string metrics_csv(const ExperimentReport& report);
std::string hist_csv(const ExperimentReport& report);

}  // namespace vipro
