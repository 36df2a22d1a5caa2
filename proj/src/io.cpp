#include "vipro/io.hpp"

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace vipro {

namespace {

namespace fs = std::filesystem;

[[noreturn]] void bad(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

// Strict object walk: every key must be known to `apply`.
template <typename F>
void each_key(const Json& j, const std::string& where, F&& apply) {
  if (!j.is_object()) bad(where, "expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!apply(it.key(), it.value())) bad(where, "unknown key '" + it.key() + "'");
}

double get_double(const Json& v, const std::string& key) {
  if (!v.is_number()) bad(key, "expected a number");
  return v.get<double>();
}

std::size_t get_size(const Json& v, const std::string& key) {
  if (!v.is_number_integer() || v.get<long long>() < 0) bad(key, "expected a non-negative integer");
  return v.get<std::size_t>();
}

std::uint64_t get_u64(const Json& v, const std::string& key) {
  if (!v.is_number_integer()) bad(key, "expected an unsigned integer");
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.get<long long>() < 0) bad(key, "expected an unsigned integer");
  return v.get<std::uint64_t>();
}

bool get_bool(const Json& v, const std::string& key) {
  if (!v.is_boolean()) bad(key, "expected true or false");
  return v.get<bool>();
}

std::string get_string(const Json& v, const std::string& key) {
  if (!v.is_string()) bad(key, "expected a string");
  return v.get<std::string>();
}

template <typename E>
E pick(const std::string& key, const std::string& value,
       std::initializer_list<std::pair<const char*, E>> options) {
  std::string names;
  for (const auto& [name, e] : options) {
    if (value == name) return e;
    names += names.empty() ? name : std::string(", ") + name;
  }
  bad(key, "'" + value + "' is not one of " + names);
}

const char* sim_name(SimMode m) { return m == SimMode::white ? "white" : "grey"; }
const char* loss_name(LossKind k) { return k == LossKind::neg ? "neg" : "exp"; }
const char* form_name(ExpForm f) { return f == ExpForm::per_query ? "per_query" : "summed"; }
const char* step_name(StepRule s) { return s == StepRule::sign ? "sign" : "raw"; }
const char* clipping_name(Clipping c) {
  switch (c) {
    case Clipping::none: return "none";
    case Clipping::random: return "random";
    case Clipping::temporal: break;
  }
  return "temporal";
}
const char* defense_name(DefenseKind k) {
  switch (k) {
    case DefenseKind::shuffle: return "shuffle";
    case DefenseKind::compress: return "compress";
    case DefenseKind::none: break;
  }
  return "none";
}

Json to_json(const ModelSpec& m) {
  return {{"rho", m.rho}, {"d_hid", m.d_hid}, {"seed_tag", m.seed_tag}};
}

ModelSpec model_spec_from_json(const Json& j, ModelSpec m, const std::string& where) {
  each_key(j, where, [&](const std::string& k, const Json& v) {
    if (k == "rho") m.rho = get_double(v, where + ".rho");
    else if (k == "d_hid") m.d_hid = get_size(v, where + ".d_hid");
    else if (k == "seed_tag") m.seed_tag = get_u64(v, where + ".seed_tag");
    else return false;
    return true;
  });
  return m;
}

Json ranges_json(const std::vector<std::pair<std::size_t, std::size_t>>& ranges) {
  Json out = Json::array();
  for (const auto& [a, b] : ranges) out.push_back({a, b});
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> ranges_from_json(const Json& j) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (const auto& r : j) out.emplace_back(r.at(0).get<std::size_t>(), r.at(1).get<std::size_t>());
  return out;
}

std::string fmt(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write " + path.string());
  return f;
}

}  // namespace

Json to_json(const Mat64& m) {
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", m.data()}};
}

Mat64 mat_from_json(const Json& j) {
  Mat64 m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
  const auto data = j.at("data").get<std::vector<double>>();
  if (data.size() != m.size()) throw DimensionError("matrix JSON: data length != rows * cols");
  std::copy(data.begin(), data.end(), m.data().begin());
  return m;
}

Json to_json(const DatasetSpec& s) {
  return {{"n_pairs", s.n_pairs},
          {"frames", s.frames},
          {"n_scenes", s.n_scenes},
          {"dim", s.dim},
          {"d_in", s.d_in},
          {"vocab", s.vocab},
          {"n_categories", s.n_categories},
          {"tokens_per_caption", s.tokens_per_caption},
          {"sigma_scene", s.sigma_scene},
          {"sigma_token", s.sigma_token},
          {"sigma_pixel", s.sigma_pixel},
          {"seed", s.seed}};
}

DatasetSpec dataset_spec_from_json(const Json& j, DatasetSpec s) {
  if (!j.is_object()) bad("corpus", "expected a JSON object");
  if (j.contains("preset")) {
    const std::uint64_t seed = s.seed;
    s = DatasetSpec::preset(get_string(j.at("preset"), "corpus.preset"));
    s.seed = seed;
  }
  each_key(j, "corpus", [&](const std::string& k, const Json& v) {
    const std::string w = "corpus." + k;
    if (k == "preset") return true;
    if (k == "n_pairs") s.n_pairs = get_size(v, w);
    else if (k == "frames") s.frames = get_size(v, w);
    else if (k == "n_scenes") s.n_scenes = get_size(v, w);
    else if (k == "dim") s.dim = get_size(v, w);
    else if (k == "d_in") s.d_in = get_size(v, w);
    else if (k == "vocab") s.vocab = get_size(v, w);
    else if (k == "n_categories") s.n_categories = get_size(v, w);
    else if (k == "tokens_per_caption") s.tokens_per_caption = get_size(v, w);
    else if (k == "sigma_scene") s.sigma_scene = get_double(v, w);
    else if (k == "sigma_token") s.sigma_token = get_double(v, w);
    else if (k == "sigma_pixel") s.sigma_pixel = get_double(v, w);
    else if (k == "seed") s.seed = get_u64(v, w);
    else return false;
    return true;
  });
  return s;
}

Json to_json(const AttackConfig& c) {
  return {{"epsilon", c.epsilon},
          {"alpha", c.alpha},
          {"eta", c.eta},
          {"loss", loss_name(c.loss)},
          {"exp_form", form_name(c.exp_form)},
          {"sim_mode", sim_name(c.sim_mode)},
          {"step_rule", step_name(c.step_rule)},
          {"more_enabled", c.more_enabled},
          {"clipping", clipping_name(c.clipping)},
          {"gamma", c.gamma},
          {"min_clip_len", c.min_clip_len},
          {"clip_seed", c.clip_seed},
          {"recompute_weights", c.recompute_weights},
          {"unbounded", c.unbounded}};
}

AttackConfig attack_config_from_json(const Json& j, AttackConfig c) {
  each_key(j, "attack", [&](const std::string& k, const Json& v) {
    const std::string w = "attack." + k;
    if (k == "epsilon") c.epsilon = get_double(v, w);
    else if (k == "alpha") c.alpha = get_double(v, w);
    else if (k == "eta") c.eta = get_size(v, w);
    else if (k == "loss")
      c.loss = pick<LossKind>(w, get_string(v, w), {{"neg", LossKind::neg}, {"exp", LossKind::exp}});
    else if (k == "exp_form")
      c.exp_form = pick<ExpForm>(w, get_string(v, w),
                                 {{"per_query", ExpForm::per_query}, {"summed", ExpForm::summed}});
    else if (k == "sim_mode")
      c.sim_mode = pick<SimMode>(w, get_string(v, w), {{"white", SimMode::white}, {"grey", SimMode::grey}});
    else if (k == "step_rule")
      c.step_rule = pick<StepRule>(w, get_string(v, w), {{"sign", StepRule::sign}, {"raw", StepRule::raw}});
    else if (k == "more_enabled") c.more_enabled = get_bool(v, w);
    else if (k == "clipping")
      c.clipping = pick<Clipping>(w, get_string(v, w),
                                  {{"none", Clipping::none},
                                   {"temporal", Clipping::temporal},
                                   {"random", Clipping::random}});
    else if (k == "gamma") c.gamma = get_double(v, w);
    else if (k == "min_clip_len") c.min_clip_len = get_size(v, w);
    else if (k == "clip_seed") c.clip_seed = get_u64(v, w);
    else if (k == "recompute_weights") c.recompute_weights = get_bool(v, w);
    else if (k == "unbounded") c.unbounded = get_bool(v, w);
    else return false;
    return true;
  });
  return c;
}

Json to_json(const DefenseConfig& d) {
  return {{"kind", defense_name(d.kind)}, {"window", d.window},     {"seed", d.seed},
          {"quality", d.quality},         {"channels", d.channels}, {"side", d.side}};
}

DefenseConfig defense_config_from_json(const Json& j, DefenseConfig d) {
  each_key(j, "defense", [&](const std::string& k, const Json& v) {
    const std::string w = "defense." + k;
    if (k == "kind")
      d.kind = pick<DefenseKind>(w, get_string(v, w),
                                 {{"none", DefenseKind::none},
                                  {"shuffle", DefenseKind::shuffle},
                                  {"compress", DefenseKind::compress}});
    else if (k == "window") d.window = get_size(v, w);
    else if (k == "seed") d.seed = get_u64(v, w);
    else if (k == "quality") {
      if (!v.is_number_integer()) bad(w, "expected an integer");
      d.quality = v.get<int>();
    } else if (k == "channels") d.channels = get_size(v, w);
    else if (k == "side") d.side = get_size(v, w);
    else return false;
    return true;
  });
  return d;
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::grey: return "grey";
    case Scenario::black: return "black";
    case Scenario::white: break;
  }
  return "white";
}

Scenario parse_scenario(const std::string& s) {
  return pick<Scenario>("scenario", s,
                        {{"white", Scenario::white}, {"grey", Scenario::grey}, {"black", Scenario::black}});
}

Json to_json(const ExperimentConfig& c) {
  Json j = {{"corpus", to_json(c.corpus)},
            {"corpus_path", c.corpus_path},
            {"victim", to_json(c.victim)},
            {"source", to_json(c.source)},
            {"attack", to_json(c.attack)},
            {"scenario", scenario_name(c.scenario)},
            {"defense", to_json(c.defense)},
            {"candidates", c.candidates},
            {"queries_k", c.queries_k},
            {"n_train", c.n_train},
            {"rank_limit", c.rank_limit},
            {"seeds", c.seeds},
            {"threads", c.threads},
            {"hist_bins", c.hist_bins}};
  return j;
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  ExperimentConfig c;
  bool more_explicit = false;
  bool sim_explicit = false;
  each_key(j, "config", [&](const std::string& k, const Json& v) {
    if (k == "corpus") c.corpus = dataset_spec_from_json(v, c.corpus);
    else if (k == "corpus_path") c.corpus_path = get_string(v, k);
    else if (k == "victim") c.victim = model_spec_from_json(v, c.victim, "victim");
    else if (k == "source") c.source = model_spec_from_json(v, c.source, "source");
    else if (k == "attack") {
      c.attack = attack_config_from_json(v, c.attack);
      more_explicit = v.contains("more_enabled");
      sim_explicit = v.contains("sim_mode");
    } else if (k == "scenario") c.scenario = parse_scenario(get_string(v, k));
    else if (k == "defense") c.defense = defense_config_from_json(v, c.defense);
    else if (k == "candidates") c.candidates = get_size(v, k);
    else if (k == "queries_k") c.queries_k = get_size(v, k);
    else if (k == "n_train") c.n_train = get_size(v, k);
    else if (k == "rank_limit") c.rank_limit = get_size(v, k);
    else if (k == "seeds") {
      if (!v.is_array()) bad(k, "expected an array of seeds");
      c.seeds.clear();
      for (const auto& s : v) c.seeds.push_back(get_u64(s, k));
    } else if (k == "seed") c.seeds = {get_u64(v, k)};
    else if (k == "threads") c.threads = get_size(v, k);
    else if (k == "hist_bins") c.hist_bins = get_size(v, k);
    else return false;
    return true;
  });
  c = resolve_scenario(std::move(c), more_explicit, sim_explicit);
  c.validate();
  return c;
}

Json to_json(const EncoderParams& p) {
  return {{"w1", to_json(p.w1)},
          {"w2", to_json(p.w2)},
          {"token_table", to_json(p.token_table)},
          {"interaction", to_json(p.interaction)},
          {"input_scale", p.input_scale},
          {"seed", p.seed},
          {"rho", p.rho},
          {"model_id", p.model_id}};
}

EncoderParams encoder_from_json(const Json& j) {
  EncoderParams p;
  p.w1 = mat_from_json(j.at("w1"));
  p.w2 = mat_from_json(j.at("w2"));
  p.token_table = mat_from_json(j.at("token_table"));
  p.interaction = mat_from_json(j.at("interaction"));
  p.input_scale = j.at("input_scale").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.rho = j.at("rho").get<double>();
  p.model_id = j.at("model_id").get<std::string>();
  p.validate();
  return p;
}

Json to_json(const AttackResult& r) {
  return {{"delta", to_json(r.delta)},
          {"adversarial", to_json(r.adversarial)},
          {"loss_trace", r.loss_trace},
          {"final_sims", r.final_sims},
          {"success_at1", r.success_at1},
          {"success_at5", r.success_at5},
          {"clips", ranges_json(r.clips)}};
}

AttackResult attack_result_from_json(const Json& j) {
  AttackResult r;
  r.delta = mat_from_json(j.at("delta"));
  r.adversarial = mat_from_json(j.at("adversarial"));
  r.loss_trace = j.at("loss_trace").get<std::vector<double>>();
  r.final_sims = j.at("final_sims").get<Vec64>();
  r.success_at1 = j.at("success_at1").get<std::vector<bool>>();
  r.success_at5 = j.at("success_at5").get<std::vector<bool>>();
  r.clips = ranges_from_json(j.at("clips"));
  return r;
}

Json to_json(const ClipPartition& p) { return {{"ranges", ranges_json(p.ranges)}}; }

ClipPartition partition_from_json(const Json& j) { return {ranges_from_json(j.at("ranges"))}; }

Json to_json(const Histogram& h) {
  return {{"mass", h.mass}, {"min_value", h.min_value}, {"max_value", h.max_value}, {"mean_raw", h.mean_raw}};
}

Json to_json(const CandidateOutcome& c) {
  return {{"id", c.id},
          {"category", c.category},
          {"harvested", c.harvested},
          {"n_train", c.n_train},
          {"n_test", c.n_test},
          {"pre_r1", c.pre_r1},
          {"post_r1", c.post_r1},
          {"pre_r5", c.pre_r5},
          {"post_r5", c.post_r5},
          {"pre_train_r1", c.pre_train_r1},
          {"post_train_r1", c.post_train_r1},
          {"initial_sum_sims", c.initial_sum_sims},
          {"final_sum_sims", c.final_sum_sims},
          {"promoted", c.promoted},
          {"promotable", c.promotable},
          {"linf", c.linf},
          {"in_range", c.in_range},
          {"clips", ranges_json(c.clip_ranges)},
          {"final_loss", c.loss_trace.empty() ? 0.0 : c.loss_trace.back()}};
}

Json to_json(const SeedReport& s) {
  Json cands = Json::array();
  for (const auto& c : s.candidates) cands.push_back(to_json(c));
  return {{"seed", s.seed},
          {"victim_id", s.victim_id},
          {"source_id", s.source_id},
          {"vanilla_r1", s.vanilla_r1},
          {"vanilla_r5", s.vanilla_r5},
          {"mean_pre_r1", s.mean_pre_r1},
          {"mean_post_r1", s.mean_post_r1},
          {"mean_pre_r5", s.mean_pre_r5},
          {"mean_post_r5", s.mean_post_r5},
          {"delta_r1", s.delta_r1},
          {"delta_r5", s.delta_r5},
          {"mean_final_sum_sims", s.mean_final_sum_sims},
          {"success_rate", s.success_rate},
          {"max_linf", s.max_linf},
          {"range_violations", s.range_violations},
          {"r_precision", s.r_precision},
          {"chosen_categories", s.chosen_categories},
          {"top1_histogram", to_json(s.top1)},
          {"mean_top1_margin", s.mean_top1_margin},
          {"candidates", cands}};
}

Json hash_region(const ExperimentReport& r) {
  Json seeds = Json::array();
  for (const auto& s : r.seeds) seeds.push_back(to_json(s));
  return {{"config", to_json(r.config)},
          {"results",
           {{"seeds", seeds},
            {"mean_delta_r1", r.mean_delta_r1},
            {"mean_delta_r5", r.mean_delta_r5},
            {"mean_final_sum_sims", r.mean_final_sum_sims},
            {"mean_success_rate", r.mean_success_rate},
            {"mean_top1_similarity", r.mean_top1_similarity}}}};
}

Json report_document(const ExperimentReport& r) {
  Json region = hash_region(r);
  const std::string canonical = region.dump();
  Json notes = Json::array();
  if (r.config.defense.kind == DefenseKind::shuffle)
    notes.push_back("temporal shuffle uses a windowed permutation surrogate");
  if (r.config.defense.kind == DefenseKind::compress)
    notes.push_back("compression is a block-DCT quantization surrogate without entropy coding");
  if (r.config.scenario == Scenario::black)
    notes.push_back("candidates come from the top half of categories by vanilla R-Precision");
  return {{"tool", {{"name", "vipro"}, {"version", kToolVersion}}},
          {"hash_region", std::move(region)},
          {"report_hash", hex64(fnv1a64(canonical))},
          {"runtime_seconds", r.runtime_seconds},
          {"notes", notes}};
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

Json read_json_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot read " + path.string());
  try {
    return Json::parse(f);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text_file(const fs::path& path, std::string_view text) {
  auto f = open_out(path);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

void save_corpus(const Corpus& c, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  {
    auto f = open_out(dir / "corpus.jsonl");
    for (std::size_t i = 0; i < c.size(); ++i) {
      Json rec = {{"id", i},
                  {"category", c.categories[i]},
                  {"caption", c.captions[i]},
                  {"latent", Vec64(c.latents.row(i).begin(), c.latents.row(i).end())},
                  {"frames", to_json(c.videos[i])}};
      f << rec.dump() << '\n';
    }
    if (!f) throw IoError("write failed: " + (dir / "corpus.jsonl").string());
  }
  Json meta = {{"spec", to_json(c.spec)},
               {"count", c.size()},
               {"amplitude", c.amplitude},
               {"clamp_fraction", c.clamp_fraction},
               {"generator", to_json(c.generator)},
               {"vocab", to_json(c.vocab)},
               {"centroids", to_json(c.centroids)}};
  write_text_file(dir / "corpus.meta.json", meta.dump());
}

Corpus load_corpus(const fs::path& dir) {
  const Json meta = read_json_file(dir / "corpus.meta.json");
  Corpus c;
  c.spec = dataset_spec_from_json(meta.at("spec"));
  c.amplitude = meta.at("amplitude").get<double>();
  c.clamp_fraction = meta.at("clamp_fraction").get<double>();
  c.generator = mat_from_json(meta.at("generator"));
  c.vocab = mat_from_json(meta.at("vocab"));
  c.centroids = mat_from_json(meta.at("centroids"));
  const std::size_t n = meta.at("count").get<std::size_t>();

  std::ifstream f(dir / "corpus.jsonl", std::ios::binary);
  if (!f) throw IoError("cannot read " + (dir / "corpus.jsonl").string());
  c.latents = Mat64(n, c.spec.dim);
  std::string line;
  std::size_t i = 0;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (i >= n) throw IoError("corpus.jsonl has more records than corpus.meta.json declares");
    Json rec;
    try {
      rec = Json::parse(line);
    } catch (const Json::parse_error& e) {
      throw IoError("corpus.jsonl line " + std::to_string(i + 1) + ": " + e.what());
    }
    if (rec.at("id").get<std::size_t>() != i) throw IoError("corpus.jsonl records out of order");
    c.categories.push_back(rec.at("category").get<std::size_t>());
    c.captions.push_back(rec.at("caption").get<QueryTokens>());
    const auto lat = rec.at("latent").get<Vec64>();
    if (lat.size() != c.spec.dim) throw IoError("corpus.jsonl: latent width mismatch");
    std::copy(lat.begin(), lat.end(), c.latents.row(i).begin());
    c.videos.push_back(mat_from_json(rec.at("frames")));
    ++i;
  }
  if (i != n) throw IoError("corpus.jsonl has " + std::to_string(i) + " records, expected " + std::to_string(n));
  return c;
}

std::string metrics_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "seed,candidate,category,n_train,n_test,pre_r1,post_r1,pre_r5,post_r5,delta_r1,delta_r5,"
        "initial_sum_sims,final_sum_sims,linf,in_range,clips,promoted,promotable\n";
  for (const auto& s : r.seeds)
    for (const auto& c : s.candidates)
      os << s.seed << ',' << c.id << ',' << c.category << ',' << c.n_train << ',' << c.n_test << ','
         << fmt(c.pre_r1) << ',' << fmt(c.post_r1) << ',' << fmt(c.pre_r5) << ',' << fmt(c.post_r5)
         << ',' << fmt(c.post_r1 - c.pre_r1) << ',' << fmt(c.post_r5 - c.pre_r5) << ','
         << fmt(c.initial_sum_sims) << ',' << fmt(c.final_sum_sims) << ',' << fmt(c.linf) << ','
         << (c.in_range ? 1 : 0) << ',' << c.clip_ranges.size() << ',' << c.promoted << ','
         << c.promotable << '\n';
  return os.str();
}

std::string hist_csv(const ExperimentReport& r) {
  std::ostringstream os;
  os << "seed,model_id,bin,lower,upper,raw_lower,raw_upper,mass\n";
  for (const auto& s : r.seeds) {
    const Histogram& h = s.top1;
    const double bins = static_cast<double>(h.mass.size());
    for (std::size_t b = 0; b < h.mass.size(); ++b) {
      const double lo = static_cast<double>(b) / bins;
      const double hi = static_cast<double>(b + 1) / bins;
      const double span = h.max_value - h.min_value;
      os << s.seed << ',' << s.victim_id << ',' << b << ',' << fmt(lo) << ',' << fmt(hi) << ','
         << fmt(h.min_value + lo * span) << ',' << fmt(h.min_value + hi * span) << ','
         << fmt(h.mass[b]) << '\n';
    }
  }
  return os.str();
}

void write_report(const ExperimentReport& r, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "loss_traces", ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
  write_text_file(dir / "report.json", report_document(r).dump(2) + "\n");
  write_text_file(dir / "metrics.csv", metrics_csv(r));
  write_text_file(dir / "hist.csv", hist_csv(r));
  for (const auto& s : r.seeds)
    for (const auto& c : s.candidates) {
      std::ostringstream os;
      os << "step,loss\n";
      for (std::size_t k = 0; k < c.loss_trace.size(); ++k) os << k << ',' << fmt(c.loss_trace[k]) << '\n';
      write_text_file(dir / "loss_traces" /
                          ("seed" + std::to_string(s.seed) + "_cand" + std::to_string(c.id) + ".csv"),
                      os.str());
    }
}

}  // namespace vipro
