#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "stylefx/backend.hpp"
#include "stylefx/corpus.hpp"
#include "stylefx/error.hpp"
#include "stylefx/feature_catalog.hpp"
#include "stylefx/genharness.hpp"
#include "stylefx/judge.hpp"
#include "stylefx/mitigate.hpp"
#include "stylefx/refmodel.hpp"
#include "stylefx/report.hpp"
#include "stylefx/simulator.hpp"
#include "stylefx/stats.hpp"
#include "stylefx/steering.hpp"

namespace py = pybind11;
using namespace stylefx;

namespace {

py::dict cell_dict(const MatrixCell& c) {
  py::dict d;
  d["main"] = c.main;
  d["side"] = c.side;
  d["wins"] = c.wins;
  d["judged"] = c.judged;
  d["rate"] = c.rate ? py::object(py::float_(*c.rate)) : py::none();
  d["p_value"] = c.p_value;
  d["significant"] = c.significant;
  return d;
}

py::dict matrix_dict(const WinRateMatrix& m) {
  py::dict d;
  d["mains"] = m.mains;
  d["sides"] = m.sides;
  py::list cells;
  for (const auto& c : m.cells) cells.append(cell_dict(c));
  d["cells"] = cells;
  d["alpha"] = m.alpha;
  return d;
}

WinRateMatrix matrix_from_count_file(const std::filesystem::path& path, double alpha) {
  const auto rows = load_count_rows(path);
  std::vector<std::string> mains;
  for (const auto& r : rows)
    if (r.main == r.side) mains.push_back(r.main);
  return matrix_from_counts(rows, mains, alpha);
}

PromptSpec make_spec(const std::string& mode, std::optional<std::string> main, std::optional<std::string> side,
                     const std::string& joiner, const std::string& prefix) {
  PromptSpec s;
  s.mode = parse_prompt_mode(mode);
  s.main_feature = std::move(main);
  s.side_feature = std::move(side);
  s.joiner = parse_joiner(joiner);
  s.prefix_style = parse_prefix_style(prefix);
  validate_spec(s);
  return s;
}

}  // namespace

PYBIND11_MODULE(_stylefx, m) {
  m.doc() = "Style side-effect audit and mitigation toolkit";

  PYBIND11_CONSTINIT static py::gil_safe_call_once_and_store<py::object> storage;
  storage.call_once_and_store_result([&]() { return py::exception<Error>(m, "StylefxError"); });
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      const py::object& type = storage.get_stored();
      py::object inst = type(e.what());
      inst.attr("kind") = py::str(std::string(to_string(e.kind())));
      PyErr_SetObject(type.ptr(), inst.ptr());
    }
  });

  // stats
  m.def("binom_two_sided_p", &binom_two_sided_p, py::arg("k"), py::arg("n"), py::arg("p0") = 0.5,
        "Exact two-sided binomial test p-value.");
  m.def(
      "matrix_from_counts",
      [](const std::filesystem::path& path, double alpha) { return matrix_dict(matrix_from_count_file(path, alpha)); },
      py::arg("path"), py::arg("alpha") = 0.05, "Win-rate matrix from a main,side,wins,judged CSV.");
  m.def(
      "screen_side_effects",
      [](const std::filesystem::path& path, double alpha, double min_gap, bool include_enhancement) {
        py::list out;
        for (const auto& p : screen_side_effects(matrix_from_count_file(path, alpha), alpha, min_gap,
                                                 include_enhancement)) {
          py::dict d;
          d["main"] = p.main;
          d["side"] = p.side;
          d["polarity"] = std::string(to_string(p.polarity));
          d["rate"] = p.rate;
          d["p_value"] = p.p_value;
          out.append(d);
        }
        return out;
      },
      py::arg("path"), py::arg("alpha") = 0.05, py::arg("min_gap") = 0.0, py::arg("include_enhancement") = false);

  // report
  m.def(
      "heatmap_svg",
      [](const std::filesystem::path& path, double alpha, const std::string& title) {
        return heatmap_svg(matrix_from_count_file(path, alpha), title);
      },
      py::arg("path"), py::arg("alpha") = 0.05, py::arg("title") = "");
  m.def(
      "matrix_csv", [](const std::filesystem::path& path, double alpha) { return matrix_csv(matrix_from_count_file(path, alpha)); },
      py::arg("path"), py::arg("alpha") = 0.05);
  m.def(
      "diverging_color",
      [](double rate) {
        const auto c = diverging_color(rate);
        return py::make_tuple(c.r, c.g, c.b);
      },
      py::arg("rate"));

  // mitigate
  m.def(
      "mitigation_table",
      [](const std::filesystem::path& path, double alpha) { return report_table_csv(load_mitigation_counts(path, alpha)); },
      py::arg("path"), py::arg("alpha") = 0.05, "Methods-as-columns table from a raw-count CSV.");

  // feature catalog
  m.def(
      "extract_features",
      [](const std::filesystem::path& mentions, const std::filesystem::path& table,
         const std::filesystem::path& embeddings, std::size_t min_frequency, double threshold) {
        const auto cands = filter_by_frequency(
            normalize_mentions(load_mentions(mentions), load_adjectivization_table(table)), min_frequency);
        const auto emb = load_embedding_fixture(embeddings);
        const auto catalog = canonicalize_catalog(cluster_features(cands, emb, threshold), emb);
        py::list out;
        for (const auto& f : catalog.features()) {
          py::dict d;
          d["canonical"] = f;
          d["aliases"] = catalog.aliases_of(f);
          d["frequency"] = catalog.frequency(f);
          out.append(d);
        }
        return out;
      },
      py::arg("mentions"), py::arg("adjectivization"), py::arg("embeddings"), py::arg("min_frequency") = 5,
      py::arg("threshold") = 0.5);
  m.def(
      "cluster",
      [](const std::vector<std::string>& lemmas, const EmbeddingMap& embeddings, double threshold) {
        std::vector<CandidateFeature> cands;
        for (const auto& l : lemmas) cands.push_back({l, 1, {}});
        std::vector<std::vector<std::string>> out;
        for (const auto& c : cluster_features(cands, embeddings, threshold)) {
          std::vector<std::string> members;
          for (const auto& x : c.members) members.push_back(x.lemma);
          out.push_back(std::move(members));
        }
        return out;
      },
      py::arg("lemmas"), py::arg("embeddings"), py::arg("threshold") = 0.5);

  // corpus
  m.def(
      "split_dataset",
      [](const std::filesystem::path& seeds, std::array<unsigned, 3> ratio, std::uint64_t rng_seed) {
        const auto s = split_dataset(load_seeds(seeds), ratio, rng_seed);
        py::dict d;
        d["train"] = s.train;
        d["validation"] = s.validation;
        d["test"] = s.test;
        d["hash"] = split_hash(s);
        return d;
      },
      py::arg("seeds"), py::arg("ratio") = std::array<unsigned, 3>{3, 1, 1}, py::arg("rng_seed") = 0);

  // prompts and verdicts
  m.def(
      "build_system_prompt",
      [](const std::string& topic, const std::string& mode, std::optional<std::string> main,
         std::optional<std::string> side, const std::string& joiner, const std::string& prefix) {
        return build_system_prompt(topic, make_spec(mode, std::move(main), std::move(side), joiner, prefix));
      },
      py::arg("topic"), py::arg("mode") = "neutral", py::arg("main") = py::none(), py::arg("side") = py::none(),
      py::arg("joiner") = "but", py::arg("prefix") = "conversation");
  m.def(
      "build_judge_prompt",
      [](const std::string& feature, const std::string& a, const std::string& b) {
        const auto p = build_judge_prompt(feature, a, b);
        return py::make_tuple(p.system, p.user);
      },
      py::arg("feature"), py::arg("response_a"), py::arg("response_b"));
  m.def(
      "parse_verdict",
      [](const std::string& raw, bool strict) -> py::object {
        switch (parse_verdict(raw, strict)) {
          case Letter::A: return py::str("A");
          case Letter::B: return py::str("B");
          default: return py::none();
        }
      },
      py::arg("raw"), py::arg("strict") = false);

  // simulator pipeline
  m.def(
      "simulate_matrix",
      [](const std::filesystem::path& sim_world, const std::filesystem::path& seeds_path, std::size_t samples,
         std::uint64_t rng_seed, std::size_t max_concurrency) {
        py::gil_scoped_release release;
        const auto model = load_sim_model(sim_world);
        const auto seeds = load_seeds(seeds_path);
        SimChatBackend sim(model);
        MarkerJudgeBackend judge(model);
        std::vector<std::string> features;
        for (const auto& [f, v] : model.marker_vocab) features.push_back(f);
        GenerationOptions gen;
        gen.rng_seed = rng_seed;
        gen.max_concurrency = max_concurrency;
        std::map<std::string, StyledResponse> refs;
        for (const auto& s : seeds) refs.emplace(s.seed_id, generate_neutral_reference(sim, s, gen));
        std::vector<ComparisonRecord> records;
        for (const auto& f : features) {
          const auto batch = generate_batch(sim, seeds, PromptSpec::single(f), samples, gen);
          const auto r = judge_against_references(judge, batch.records, refs, features, true, rng_seed, max_concurrency);
          records.insert(records.end(), r.begin(), r.end());
        }
        const auto matrix = build_win_matrix(records, StyleCatalog::from_names(features));
        py::gil_scoped_acquire acquire;
        return matrix_dict(matrix);
      },
      py::arg("sim_world"), py::arg("seeds"), py::arg("samples") = 5, py::arg("rng_seed") = 0,
      py::arg("max_concurrency") = 1, "Generate, judge and aggregate the full matrix on the simulator.");

  // reference model and steering
  py::class_<Checkpoint>(m, "Checkpoint")
      .def_property_readonly("n_layers", [](const Checkpoint& c) { return c.config.n_layers; })
      .def_property_readonly("d_model", [](const Checkpoint& c) { return c.config.d_model; })
      .def_property_readonly("bias_enabled", [](const Checkpoint& c) { return c.bias_enabled; })
      .def("hash", &checkpoint_hash)
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(c, p); })
      .def("__eq__", [](const Checkpoint& a, const Checkpoint& b) { return a == b; });
  m.def(
      "init_model",
      [](std::size_t n_layers, std::size_t d_model, std::size_t n_heads, std::size_t d_ff, std::size_t max_seq,
         std::uint64_t init_seed) {
        ModelConfig c;
        c.n_layers = n_layers;
        c.d_model = d_model;
        c.n_heads = n_heads;
        c.d_ff = d_ff;
        c.max_seq = max_seq;
        c.init_seed = init_seed;
        return init_model(c);
      },
      py::arg("n_layers") = 4, py::arg("d_model") = 64, py::arg("n_heads") = 4, py::arg("d_ff") = 256,
      py::arg("max_seq") = 512, py::arg("init_seed") = 0);
  m.def("load_checkpoint", [](const std::filesystem::path& p) { return load_checkpoint(p); });
  m.def("bake_bias", [](const Checkpoint& c, std::size_t layer, const std::vector<float>& offset) {
    return bake_bias(c, layer, offset);
  });
  m.def(
      "logits",
      [](const Checkpoint& c, const std::string& text, std::optional<std::size_t> layer,
         std::optional<std::vector<float>> offset) {
        std::vector<Intervention> iv;
        if (layer && offset) iv.push_back(apply_layer_offset(c, *layer, *offset));
        py::gil_scoped_release release;
        return forward_with_capture(c, encode_bytes(text), -1, {}, iv).logits;
      },
      py::arg("checkpoint"), py::arg("text"), py::arg("layer") = py::none(), py::arg("offset") = py::none(),
      "Final-position logits, optionally with an offset added at one layer.");
  m.def(
      "generate",
      [](const Checkpoint& c, const std::string& system, const std::string& user, std::size_t max_tokens,
         double temperature, std::uint64_t rng_seed) {
        py::gil_scoped_release release;
        return decode_text(sample_text(c, encode_chat(system, user), max_tokens, temperature, rng_seed));
      },
      py::arg("checkpoint"), py::arg("system"), py::arg("user"), py::arg("max_tokens") = 64,
      py::arg("temperature") = 0.7, py::arg("rng_seed") = 0);
  m.def(
      "extract_steering_vectors",
      [](const Checkpoint& c, const std::vector<std::tuple<std::string, std::string, std::string, std::string>>& examples,
         const std::string& feature, const std::vector<std::size_t>& layers, std::size_t max_concurrency) {
        std::vector<TrainExample> ex;
        std::size_t i = 0;
        for (const auto& [topic, user, styled, neutral] : examples)
          ex.push_back({"ex" + std::to_string(i++), topic, user, styled, neutral});
        const auto pairs = build_contrastive_pairs(ex, feature).pairs;
        py::gil_scoped_release release;
        std::map<std::size_t, std::vector<float>> out;
        for (auto& v : extract_steering_vectors(c, pairs, feature, layers, -2, max_concurrency))
          out[v.layer] = std::move(v.vector);
        return out;
      },
      py::arg("checkpoint"), py::arg("examples"), py::arg("feature"), py::arg("layers"),
      py::arg("max_concurrency") = 1,
      "examples: (topic, user_message, styled_text, neutral_text) tuples. Returns layer -> vector.");
  m.def("map_candidate_layers", &map_candidate_layers, py::arg("paper_layers"), py::arg("n_layers"),
        py::arg("reference_depth") = 32);
  m.def("default_layer", &default_layer, py::arg("n_layers"), py::arg("reference_depth") = 32);
}
