#include "vipro/commands.hpp"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace vipro {

namespace fs = std::filesystem;

GenSummary cmd_gen(const DatasetSpec& spec, const fs::path& out) {
  spec.validate();
  const Corpus corpus = generate_corpus(spec);
  save_corpus(corpus, out);

  const EncoderParams ref = plant_model(corpus.generator_params(), 64, derive_seed(spec.seed, 1), 0.0);
  const RetrievalIndex index = RetrievalIndex::build(ref, corpus.videos, SimMode::white);
  std::vector<LabeledQuery> paired;
  for (std::size_t i = 0; i < corpus.size(); ++i)
    paired.push_back({encode_query(ref, corpus.captions[i]).pooled, i});

  GenSummary s;
  s.records = corpus.size();
  s.amplitude = corpus.amplitude;
  s.clamp_fraction = corpus.clamp_fraction;
  s.vanilla_r1 = recall_at_k(index, ref, paired, 1);
  s.vanilla_r5 = recall_at_k(index, ref, paired, 5);
  return s;
}

ExperimentReport cmd_attack(const ExperimentConfig& cfg, const fs::path& out) {
  ExperimentReport r = run_experiment(cfg);
  if (!out.empty()) write_report(r, out);
  return r;
}

std::string ablation_csv(const std::vector<AblationRow>& rows) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "axis,value,n_seeds,mean_pre_r1,mean_post_r1,delta_r1,delta_r5,mean_final_sum_sims\n";
  for (const auto& r : rows)
    os << r.axis << ',' << r.value << ',' << r.n_seeds << ',' << r.mean_pre_r1 << ','
       << r.mean_post_r1 << ',' << r.delta_r1 << ',' << r.delta_r5 << ',' << r.mean_final_sum_sims
       << '\n';
  return os.str();
}

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, AblationAxis axis, const fs::path& out) {
  auto rows = run_ablation(cfg, axis);
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
    write_text_file(out / "ablation.csv", ablation_csv(rows));
  }
  return rows;
}

Json cmd_report(const fs::path& results, const fs::path& out) {
  if (!fs::is_directory(results)) throw IoError("results directory not found: " + results.string());
  std::vector<fs::path> found;
  for (const auto& e : fs::recursive_directory_iterator(results))
    if (e.is_regular_file() && e.path().filename() == "report.json") found.push_back(e.path());
  if (found.empty()) throw IoError("no report.json under " + results.string());
  std::sort(found.begin(), found.end());

  Json runs = Json::array();
  std::vector<double> top1, success;
  std::ostringstream hist;
  hist << std::setprecision(17) << "run,seed,model_id,bin,mass\n";
  for (const auto& path : found) {
    const Json doc = read_json_file(path);
    const Json& region = doc.at("hash_region");
    const Json& res = region.at("results");
    const Json& cfg = region.at("config");
    const std::string run = fs::relative(path.parent_path(), results).generic_string();
    Json seeds = Json::array();
    for (const auto& s : res.at("seeds")) {
      const Json& h = s.at("top1_histogram");
      const auto mass = h.at("mass").get<std::vector<double>>();
      for (std::size_t b = 0; b < mass.size(); ++b)
        hist << run << ',' << s.at("seed").get<std::uint64_t>() << ','
             << s.at("victim_id").get<std::string>() << ',' << b << ',' << mass[b] << '\n';
      seeds.push_back({{"seed", s.at("seed")},
                       {"victim_id", s.at("victim_id")},
                       {"delta_r1", s.at("delta_r1")},
                       {"delta_r5", s.at("delta_r5")},
                       {"success_rate", s.at("success_rate")},
                       {"mean_top1_similarity", h.at("mean_raw")},
                       {"mean_top1_margin", s.at("mean_top1_margin")},
                       {"top1_histogram", h}});
    }
    top1.push_back(res.at("mean_top1_similarity").get<double>());
    success.push_back(res.at("mean_success_rate").get<double>());
    runs.push_back({{"run", run},
                    {"scenario", cfg.at("scenario")},
                    {"victim_rho", cfg.at("victim").at("rho")},
                    {"mean_delta_r1", res.at("mean_delta_r1")},
                    {"mean_delta_r5", res.at("mean_delta_r5")},
                    {"mean_success_rate", res.at("mean_success_rate")},
                    {"mean_top1_similarity", res.at("mean_top1_similarity")},
                    {"report_hash", doc.at("report_hash")},
                    {"seeds", seeds}});
  }
  Json summary = {{"tool", {{"name", "vipro"}, {"version", kToolVersion}}},
                  {"runs", runs},
                  {"top1_vs_success_spearman", spearman(top1, success)}};
  if (!out.empty()) {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
    write_text_file(out / "summary.json", summary.dump(2) + "\n");
    write_text_file(out / "hist.csv", hist.str());
  }
  return summary;
}

}  // namespace vipro
