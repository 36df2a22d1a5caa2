#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>

#include "vipro/commands.hpp"
#include "vipro/defenses.hpp"
#include "vipro/more.hpp"

namespace py = pybind11;
using namespace vipro;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Mat64 to_mat(const Array& a) {
  if (a.ndim() != 2) throw DimensionError("expected a 2-D array, got " + std::to_string(a.ndim()) + "-D");
  Mat64 m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data().begin());
  return m;
}

Array to_array(const Mat64& m) {
  Array a({m.rows(), m.cols()});
  std::copy(m.data().begin(), m.data().end(), a.mutable_data());
  return a;
}

Array to_array(const Vec64& v) {
  Array a(v.size());
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

Json parse(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(e.what());
  }
}

std::vector<QueryEmbedding> encode_queries(const EncoderParams& model,
                                           const std::vector<QueryTokens>& queries) {
  std::vector<QueryEmbedding> out;
  out.reserve(queries.size());
  for (const auto& q : queries) out.push_back(encode_query(model, q));
  return out;
}

py::dict result_dict(const AttackResult& r) {
  py::dict d;
  d["delta"] = to_array(r.delta);
  d["adversarial"] = to_array(r.adversarial);
  d["loss_trace"] = r.loss_trace;
  d["final_sims"] = to_array(r.final_sims);
  d["clips"] = r.clips;
  return d;
}

py::list partition_list(const ClipPartition& p) { return py::cast(p.ranges); }

SimMode sim_mode(const std::string& name) {
  if (name == "white") return SimMode::white;
  if (name == "grey") return SimMode::grey;
  throw ConfigError("unknown similarity mode '" + name + "' (white, grey)");
}

}  // namespace

PYBIND11_MODULE(_vipro, m) {
  m.doc() = "Video promotion attacks against a planted text-to-video retrieval model.";
  m.attr("__version__") = kToolVersion;

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);
  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<AttackError>(m, "AttackError", PyExc_RuntimeError);

  py::class_<Corpus>(m, "Corpus")
      .def_property_readonly("size", &Corpus::size)
      .def_property_readonly("amplitude", [](const Corpus& c) { return c.amplitude; })
      .def_property_readonly("clamp_fraction", [](const Corpus& c) { return c.clamp_fraction; })
      .def_property_readonly("categories", [](const Corpus& c) { return c.categories; })
      .def_property_readonly("captions", [](const Corpus& c) { return c.captions; })
      .def_property_readonly("spec", [](const Corpus& c) { return to_json(c.spec).dump(); })
      .def("video", [](const Corpus& c, std::size_t i) { return to_array(c.videos.at(i)); }, py::arg("index"))
      .def("category_query", [](const Corpus& c, std::size_t k) { return category_query(c, k); },
           py::arg("category"));

  py::class_<EncoderParams>(m, "Encoder")
      .def_property_readonly("model_id", [](const EncoderParams& p) { return p.model_id; })
      .def_property_readonly("rho", [](const EncoderParams& p) { return p.rho; })
      .def_property_readonly("dim", &EncoderParams::dim)
      .def_property_readonly("d_in", &EncoderParams::d_in)
      .def("encode_video", [](const EncoderParams& p, const Array& v) {
             return to_array(encode_video(p, to_mat(v)).pooled);
           }, py::arg("video"))
      .def("frame_embeddings", [](const EncoderParams& p, const Array& v) {
             return to_array(encode_video(p, to_mat(v)).per_frame);
           }, py::arg("video"))
      .def("encode_query", [](const EncoderParams& p, const QueryTokens& q) {
             return to_array(encode_query(p, q).pooled);
           }, py::arg("tokens"))
      .def("similarity", [](const EncoderParams& p, const QueryTokens& q, const Array& v, const std::string& mode) {
             return similarity(p, encode_query(p, q).pooled, encode_video(p, to_mat(v)).pooled, sim_mode(mode));
           }, py::arg("tokens"), py::arg("video"), py::arg("mode") = "white");

  m.def("generate_corpus", [](const std::string& spec_json) {
    return generate_corpus(dataset_spec_from_json(parse(spec_json)));
  }, py::arg("spec_json") = "{}");

  m.def("plant_model", [](const Corpus& c, std::size_t d_hid, std::uint64_t seed, double rho) {
    return plant_model(c.generator_params(), d_hid, seed, rho);
  }, py::arg("corpus"), py::arg("d_hid") = 64, py::arg("seed") = 0, py::arg("rho") = 0.0);

  m.def("attack", [](const EncoderParams& model, const Array& video, const std::vector<QueryTokens>& queries,
                     const std::string& cfg_json) {
    const AttackConfig cfg = attack_config_from_json(parse(cfg_json));
    const auto q = encode_queries(model, queries);
    const Mat64 v = to_mat(video);
    AttackResult r;
    {
      py::gil_scoped_release release;
      r = cfg.more_enabled ? vipro_more_attack(model, v, q, cfg) : vipro_attack(model, v, q, cfg);
    }
    return result_dict(r);
  }, py::arg("model"), py::arg("video"), py::arg("queries"), py::arg("config_json") = "{}");

  m.def("temporal_clip", [](const Array& frames, double gamma, std::size_t min_len) {
    return partition_list(temporal_clip(to_mat(frames), gamma, min_len));
  }, py::arg("frame_embeddings"), py::arg("gamma"), py::arg("min_len"));

  m.def("random_clip", [](std::size_t frames, std::size_t n_cuts, std::uint64_t seed, std::size_t min_len) {
    return partition_list(random_clip(frames, n_cuts, seed, min_len));
  }, py::arg("frames"), py::arg("n_cuts"), py::arg("seed"), py::arg("min_len") = 1);

  m.def("temporal_shuffle", [](const Array& v, std::size_t window, std::uint64_t seed) {
    return to_array(temporal_shuffle(to_mat(v), window, seed));
  }, py::arg("video"), py::arg("window"), py::arg("seed"));

  m.def("compress", [](const Array& v, int quality) { return to_array(compress(to_mat(v), quality)); },
        py::arg("video"), py::arg("quality"));

  m.def("check_budget", [](const Array& clean, const Array& adv) {
    const BudgetCheck b = check_budget(to_mat(clean), to_mat(adv));
    return py::make_tuple(b.linf, b.in_range);
  }, py::arg("clean"), py::arg("adversarial"));

  m.def("cmd_gen", [](const std::string& spec_json, const std::filesystem::path& out) {
    const GenSummary s = cmd_gen(dataset_spec_from_json(parse(spec_json)), out);
    py::dict d;
    d["records"] = s.records;
    d["amplitude"] = s.amplitude;
    d["clamp_fraction"] = s.clamp_fraction;
    d["vanilla_r1"] = s.vanilla_r1;
    d["vanilla_r5"] = s.vanilla_r5;
    return d;
  }, py::arg("spec_json"), py::arg("out"));

  m.def("cmd_attack", [](const std::string& cfg_json, const std::filesystem::path& out) {
    const ExperimentConfig cfg = experiment_config_from_json(parse(cfg_json));
    py::gil_scoped_release release;
    return report_document(cmd_attack(cfg, out)).dump();
  }, py::arg("config_json"), py::arg("out") = std::filesystem::path{});

  m.def("cmd_ablate", [](const std::string& cfg_json, const std::string& axis, const std::filesystem::path& out) {
    const ExperimentConfig cfg = experiment_config_from_json(parse(cfg_json));
    const AblationAxis a = parse_axis(axis);
    py::gil_scoped_release release;
    return ablation_csv(cmd_ablate(cfg, a, out));
  }, py::arg("config_json"), py::arg("axis"), py::arg("out") = std::filesystem::path{});

  m.def("cmd_report", [](const std::filesystem::path& results, const std::filesystem::path& out) {
    return cmd_report(results, out).dump();
  }, py::arg("results"), py::arg("out") = std::filesystem::path{});

  m.def("report_hash", [](const std::string& report_json) {
    return hex64(fnv1a64(parse(report_json).at("hash_region").dump()));
  }, py::arg("report_json"));
}
