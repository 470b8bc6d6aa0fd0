// Copyright 2026 The rqsid Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rqsid/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <map>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "rqsid/datagen.hpp"
#include "rqsid/diagnostics.hpp"
#include "rqsid/error.hpp"
#include "rqsid/grsim.hpp"
#include "rqsid/io.hpp"
#include "rqsid/mitigation.hpp"
#include "rqsid/output.hpp"
#include "rqsid/parallel.hpp"
#include "rqsid/quantizer.hpp"

#ifndef RQSID_VERSION
#define RQSID_VERSION "0.0.0"
#endif

namespace rqsid {

namespace {

namespace fs = std::filesystem;
using io::Json;

// Child streams of the root seed, one per pipeline stage.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kInteractionStream = 3;

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string out = "rqsid-out";
  unsigned threads = 0;
};

struct DataOptions {
  std::string regime = "zipf";
  std::size_t n = 10000;
  std::size_t dim = 32;
  ClusterSpec spec;
};

struct HeadOptions {
  std::uint32_t k = 0;
  double mass = 0.5;

  HeadSelector selector() const {
    if (k > 0) return TopK{k};
    return Mass{mass};
  }
};

struct GenOptions {
  DataOptions data;
  std::string format = "csv";
};

struct TrainOptions {
  std::string embeddings;
  std::uint32_t layers = 3;
  std::uint32_t codebook_size = 256;
  std::uint32_t kmeans_iters = 25;
  double tol = 1e-4;
  bool inline_weights = false;
};

struct EncodeOptions {
  std::string codebook;
  std::string embeddings;
  bool full_length = false;
};

struct AnalyzeOptions {
  std::string codebook;
  std::string sids;
  HeadOptions head;
  bool degrees = false;
};

struct MitigateOptions {
  std::string codebook;
  std::string sids;
  std::string method = "varlen";
  HeadOptions head;
  std::uint32_t layer = 2;
  std::vector<std::uint32_t> exchange = {1, 2};
};

struct SimulateOptions {
  std::string codebook;
  std::string sids;
  std::string interactions;
  std::string mitigation = "auto";
  HeadOptions head;
  InteractionGenConfig gen;
  std::string popularity = "density";
  std::uint32_t order = 3;
  double alpha = 0.1;
  std::uint32_t beam = 50;
  std::vector<std::uint32_t> k_list = {1, 5, 10, 50};
  std::string trie = "both";
  bool given_first_token = false;
};

struct SweepOptions {
  DataOptions data;
  std::vector<std::uint32_t> layers = {3, 4};
  std::vector<std::uint32_t> sizes = {64, 256};
  std::vector<std::string> regimes = {"uniform", "zipf"};
  std::uint32_t kmeans_iters = 25;
  double tol = 1e-4;
  HeadOptions head;
};

// ---------------------------------------------------------------------------
// Helpers

Json run_record(const std::string& command, const CommonOptions& common, const CLI::App& sub,
                const StageTimer& timer) {
  return Json{{"command", command},
              {"tool", "rqsid"},
              {"tool_version", RQSID_VERSION},
              {"seed", common.seed},
              {"rng_algorithm", std::string(RandomSource::kAlgorithmId)},
              {"threads", resolve_threads(common.threads)},
              {"config", sub.config_to_str(true, false)},
              {"timings", timer.to_json()}};
}

struct GeneratedData {
  EmbeddingCollection data;
  std::vector<std::size_t> cluster_sizes;
  std::vector<std::string> warnings;
};

GeneratedData generate(const DataOptions& opt, const std::string& regime, const RandomSource& rng) {
  if (regime == "uniform") return {gen_uniform(opt.n, opt.dim, rng), {}, {}};
  ClusterSpec spec = opt.spec;
  spec.size_law = regime == "zipf" ? SizeLaw::kZipf : SizeLaw::kUniform;
  auto out = gen_clustered(opt.n, opt.dim, spec, rng);
  return {std::move(out.data), std::move(out.cluster_sizes), std::move(out.warnings)};
}

std::vector<Token> sorted(std::vector<Token> v) {
  std::sort(v.begin(), v.end());
  return v;
}

std::string csv_cell(std::string text) {
  for (char& c : text) {
    if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
  }
  return text;
}

// ---------------------------------------------------------------------------
// Commands

void cmd_gen(const GenOptions& opt, const CommonOptions& common, const CLI::App& sub,
             std::ostream& out, std::ostream& err) {
  StageTimer timer;
  timer.start("generate");
  const RandomSource root(common.seed);
  auto gen = generate(opt.data, opt.data.regime, root.split(kDataStream));
  for (const auto& w : gen.warnings) err << "warning: " << w << '\n';
  timer.start("serialize");
  OutputSet outputs;
  if (opt.format == "bin") {
    outputs.add("embeddings.bin", io::embeddings_to_binary(gen.data));
  } else {
    outputs.add("embeddings.csv", io::embeddings_to_csv(gen.data));
  }
  Json report{{"schema_version", io::kReportSchemaVersion},
              {"kind", "generation"},
              {"regime", opt.data.regime},
              {"n", gen.data.size()},
              {"dim", gen.data.dim()},
              {"seed", common.seed},
              {"cluster_sizes", gen.cluster_sizes},
              {"warnings", gen.warnings}};
  outputs.add("gen_report.json", io::dump(report));
  timer.stop();
  outputs.commit(common.out, run_record("gen", common, sub, timer));
  out << "generated " << gen.data.size() << " x " << gen.data.dim() << " (" << opt.data.regime
      << ") into " << common.out << '\n';
}

void cmd_train(const TrainOptions& opt, const CommonOptions& common, const CLI::App& sub,
               std::ostream& out) {
  StageTimer timer;
  timer.start("load");
  const auto data = io::load_embeddings(opt.embeddings);
  QuantizerConfig config;
  config.num_layers = opt.layers;
  config.codebook_size = opt.codebook_size;
  config.dim = static_cast<std::uint32_t>(data.dim());
  config.kmeans_iters = opt.kmeans_iters;
  config.convergence_tol = opt.tol;
  config.seed = common.seed;
  config.validate();

  timer.start("train");
  const unsigned threads = resolve_threads(common.threads);
  TrainingReport training;
  const Codebook codebook =
      train_rq(data, config, RandomSource(common.seed).split(kTrainStream), threads, &training);
  timer.start("reconstruction");
  const auto mse = reconstruction_report(data, codebook, threads);

  timer.start("serialize");
  OutputSet outputs;
  auto files = io::codebook_to_files(codebook, "codebook.bin", opt.inline_weights);
  outputs.add("codebook.json", std::move(files.json));
  if (files.weights) outputs.add("codebook.bin", std::move(*files.weights));
  outputs.add("train_report.json", io::dump(io::to_json(training, mse)));
  timer.stop();
  outputs.commit(common.out, run_record("train", common, sub, timer));
  out << "trained RQ " << config.num_layers << "x" << config.codebook_size << " on "
      << data.size() << " items; reconstruction mse per layer:";
  for (double m : mse) out << ' ' << m;
  out << '\n';
}

void cmd_encode(const EncodeOptions& opt, const CommonOptions& common, const CLI::App& sub,
                std::ostream& out) {
  StageTimer timer;
  timer.start("load");
  const Codebook codebook = io::load_codebook(opt.codebook);
  const auto data = io::load_embeddings(opt.embeddings);
  timer.start("encode");
  const auto sids = encode_all(data, codebook, resolve_threads(common.threads));
  OutputSet outputs;
  std::size_t elided = 0;
  if (codebook.head_set() && !opt.full_length) {
    std::vector<VarLenSemanticId> varlen;
    varlen.reserve(sids.size());
    for (const auto& s : sids) {
      varlen.push_back(apply_head_set(s, *codebook.head_set(), codebook.config()));
      if (varlen.back().entries.size() < codebook.num_layers()) ++elided;
    }
    outputs.add("sids.csv", io::sids_to_csv(data.ids(), varlen));
  } else {
    outputs.add("sids.csv", io::sids_to_csv(data.ids(), sids));
  }
  timer.stop();
  outputs.commit(common.out, run_record("encode", common, sub, timer));
  out << "encoded " << sids.size() << " items";
  if (elided > 0) out << " (" << elided << " with layer 2 elided)";
  out << '\n';
}

void cmd_analyze(const AnalyzeOptions& opt, const CommonOptions& common, const CLI::App& sub,
                 std::ostream& out) {
  StageTimer timer;
  timer.start("load");
  const QuantizerConfig config = io::load_codebook(opt.codebook).config();
  const auto table = io::load_sids(opt.sids, config);
  const auto sids = table.full_length(config);
  timer.start("analyze");
  const auto report = hourglass_report(sids, config, opt.head.selector());
  Json doc = io::to_json(report, config);
  if (opt.degrees) doc["degree_profiles"] = io::degree_profiles_to_json(sids, config);
  OutputSet outputs;
  outputs.add("report.json", io::dump(doc));
  timer.stop();
  outputs.commit(common.out, run_record("analyze", common, sub, timer));
  out << "hourglass_flag=" << (report.hourglass_flag ? "true" : "false")
      << " pinch_layer=" << report.pinch_layer << " path_sparsity=" << report.path_sparsity
      << '\n';
  for (std::size_t l = 0; l < report.per_layer.size(); ++l) {
    const auto& s = report.per_layer[l];
    out << "layer " << l + 1 << ": entropy=" << s.entropy_bits << " gini=" << s.gini
        << " stddev=" << s.stddev << " distinct=" << s.distinct_tokens << '\n';
  }
}

void cmd_mitigate(const MitigateOptions& opt, const CommonOptions& common, const CLI::App& sub,
                  std::ostream& out) {
  StageTimer timer;
  timer.start("load");
  const Codebook codebook = io::load_codebook(opt.codebook);
  const QuantizerConfig& config = codebook.config();
  const auto table = io::load_sids(opt.sids, config);
  const auto sids = table.full_length(config);
  timer.start("mitigate");
  OutputSet outputs;
  if (opt.method == "exchange") {
    if (opt.exchange.size() != 2) throw ConfigError("--exchange takes two layers");
    const auto swapped = exchange_layers(sids, opt.exchange[0], opt.exchange[1], config);
    const auto report = hourglass_report(swapped, config, opt.head.selector());
    Json doc{{"schema_version", io::kReportSchemaVersion},
             {"kind", "exchange"},
             {"layers", opt.exchange},
             {"report", io::to_json(report, config)}};
    outputs.add("mitigated_sids.csv", io::sids_to_csv(table.item_ids, swapped));
    outputs.add("mitigation_report.json", io::dump(doc));
    out << "exchanged layers " << opt.exchange[0] << " and " << opt.exchange[1] << '\n';
  } else {
    MitigationOutcome outcome;
    if (opt.method == "varlen") {
      const auto hist = token_histogram(sids, 2, config.codebook_size);
      outcome = varlen_topk(table.item_ids, sids, hist, opt.head.selector(), config);
    } else {
      outcome = remove_layer(table.item_ids, sids, config, opt.layer);
    }
    const auto post = post_mitigation_report(outcome, config, opt.head.selector());
    Json doc = io::to_json(outcome, post, config);
    doc["method"] = opt.method;
    outputs.add("mitigated_sids.csv", io::sids_to_csv(outcome.item_ids, outcome.transformed_sids));
    outputs.add("mitigation_report.json", io::dump(doc));
    if (opt.method == "varlen") {
      auto files = io::codebook_to_files(codebook.with_head_set(outcome.head_set),
                                         "mitigated_codebook.bin", false);
      outputs.add("mitigated_codebook.json", std::move(files.json));
      outputs.add("mitigated_codebook.bin", std::move(*files.weights));
    }
    out << opt.method << ": K=" << outcome.head_set.size() << " elided " << post.elided_items
        << "/" << post.total_items << " items; capacity formula "
        << outcome.capacity_formula << ", distinct " << outcome.capacity_empirical_distinct
        << '\n';
  }
  timer.stop();
  outputs.commit(common.out, run_record("mitigate", common, sub, timer));
}

void cmd_simulate(const SimulateOptions& opt, const CommonOptions& common, const CLI::App& sub,
                  std::ostream& out) {
  StageTimer timer;
  timer.start("load");
  const Codebook codebook = io::load_codebook(opt.codebook);
  const QuantizerConfig& config = codebook.config();
  const auto table = io::load_sids(opt.sids, config);
  const auto sids = table.full_length(config);

  std::string mitigation = opt.mitigation;
  if (mitigation == "auto") mitigation = codebook.head_set() ? "varlen" : "none";
  std::vector<Token> head_set;
  if (codebook.head_set()) {
    head_set = sorted(*codebook.head_set());
  } else {
    const auto hist = token_histogram(sids, std::min<std::uint32_t>(2, config.num_layers),
                                      config.codebook_size);
    head_set = sorted(head_tail_split(hist, opt.head.selector()).head);
  }

  timer.start("catalog");
  std::optional<GrCatalog> catalog;
  if (mitigation == "none") {
    catalog.emplace(GrCatalog::from_sids(config, table.item_ids, sids));
  } else if (mitigation == "varlen") {
    catalog.emplace(GrCatalog::from_sids(config, table.item_ids, sids, head_set));
  } else {
    auto outcome = remove_layer(table.item_ids, sids, config);
    std::vector<Token> layer2;
    for (const auto& s : sids) layer2.push_back(s.tokens[1]);
    catalog.emplace(config, table.item_ids, std::move(outcome.transformed_sids), std::move(layer2));
  }
  const CatalogTrie trie = build_trie(*catalog);

  timer.start("interactions");
  OutputSet outputs;
  InteractionDataset dataset;
  if (!opt.interactions.empty()) {
    dataset = io::interactions_from_csv(io::read_file(opt.interactions));
  } else {
    std::vector<double> affinity;
    if (opt.popularity == "density") affinity = layer1_density(sids, config);
    dataset = gen_interactions(table.item_ids, opt.gen,
                               RandomSource(common.seed).split(kInteractionStream), affinity);
    outputs.add("interactions.csv", io::interactions_to_csv(dataset));
  }
  const auto train = dataset.select(Split::kTrain);
  const auto test = dataset.select(Split::kTest);
  if (test.empty()) throw DataError("interaction data has no test records");

  timer.start("model");
  const auto model = train_seq_model(train, *catalog, opt.order, opt.alpha);

  timer.start("evaluate");
  EvalOptions eval;
  eval.beam_width = opt.beam;
  eval.k_list = opt.k_list;
  eval.given_first_token = opt.given_first_token;
  eval.threads = resolve_threads(common.threads);
  Json runs = Json::array();
  for (bool trie_mode : {false, true}) {
    if ((opt.trie == "off" && trie_mode) || (opt.trie == "on" && !trie_mode)) continue;
    eval.trie_mode = trie_mode;
    const auto report = evaluate(model, test, *catalog, trie, head_set, eval);
    runs.push_back(io::to_json(report));
    out << "trie " << (trie_mode ? "on " : "off") << ":";
    for (std::size_t i = 0; i < eval.k_list.size(); ++i)
      out << " R@" << eval.k_list[i] << "=" << report.overall.recall[i];
    out << " | head R@" << eval.k_list[std::min<std::size_t>(1, eval.k_list.size() - 1)] << "="
        << report.head.recall[std::min<std::size_t>(1, eval.k_list.size() - 1)] << " tail="
        << report.tail.recall[std::min<std::size_t>(1, eval.k_list.size() - 1)]
        << " | invalid@" << eval.k_list.back() << "=" << report.overall.invalid_ratio.back()
        << '\n';
  }
  Json doc{{"schema_version", io::kReportSchemaVersion},
           {"kind", "simulation"},
           {"L", config.num_layers},
           {"M", config.codebook_size},
           {"mitigation", mitigation},
           {"order", opt.order},
           {"alpha", opt.alpha},
           {"train_records", train.size()},
           {"test_records", test.size()},
           {"catalog_items", catalog->size()},
           {"catalog_sequences", trie.num_sequences()},
           {"runs", std::move(runs)}};
  outputs.add("eval_report.json", io::dump(doc));
  timer.stop();
  outputs.commit(common.out, run_record("simulate", common, sub, timer));
}

void cmd_sweep(const SweepOptions& opt, const CommonOptions& common, const CLI::App& sub,
               std::ostream& err) {
  if (opt.layers.empty() || opt.sizes.empty() || opt.regimes.empty())
    throw ConfigError("sweep grid is empty");
  StageTimer timer;
  const RandomSource root(common.seed);
  const unsigned threads = resolve_threads(common.threads);
  const std::uint32_t max_layers = *std::max_element(opt.layers.begin(), opt.layers.end());

  std::ostringstream csv;
  csv << "regime,L,M,N,D,status,hourglass_flag,pinch_layer,path_sparsity,distinct_sids";
  for (std::uint32_t l = 1; l <= max_layers; ++l)
    csv << ",entropy_l" << l << ",gini_l" << l << ",std_l" << l;
  csv << ",warning,error\n";

  for (const auto& regime : opt.regimes) {
    timer.start("generate:" + regime);
    std::optional<GeneratedData> gen;
    std::string gen_error;
    try {
      gen = generate(opt.data, regime, root.split(kDataStream));
    } catch (const std::exception& e) {
      gen_error = e.what();
    }
    for (std::uint32_t L : opt.layers) {
      for (std::uint32_t M : opt.sizes) {
        timer.start(regime + ":L" + std::to_string(L) + ":M" + std::to_string(M));
        err << "sweep cell " << regime << " L=" << L << " M=" << M << '\n';
        std::string warning;
        std::string error = gen_error;
        std::optional<HourglassReport> report;
        if (boost::multiprecision::pow(BigInt(M), L) > BigInt(100) * opt.data.n)
          warning = "path space M^L vastly exceeds N";
        if (M > opt.data.n) warning += std::string(warning.empty() ? "" : "; ") + "M exceeds N";
        if (gen) {
          try {
            QuantizerConfig config;
            config.num_layers = L;
            config.codebook_size = M;
            config.dim = static_cast<std::uint32_t>(gen->data.dim());
            config.kmeans_iters = opt.kmeans_iters;
            config.convergence_tol = opt.tol;
            config.seed = common.seed;
            const auto codebook = train_rq(gen->data, config, root.split(kTrainStream), threads);
            const auto sids = encode_all(gen->data, codebook, threads);
            report = hourglass_report(sids, config, opt.head.selector());
          } catch (const std::exception& e) {
            error = e.what();
          }
        }
        csv << regime << ',' << L << ',' << M << ',' << opt.data.n << ',' << opt.data.dim << ','
            << (report ? "ok" : "error") << ',';
        if (report) {
          csv << (report->hourglass_flag ? "true" : "false") << ',' << report->pinch_layer << ','
              << io::format_double(report->path_sparsity) << ',' << report->distinct_sids;
        } else {
          csv << ",,,";
        }
        for (std::uint32_t l = 1; l <= max_layers; ++l) {
          if (report && l <= L) {
            const auto& s = report->per_layer[l - 1];
            csv << ',' << io::format_double(s.entropy_bits) << ',' << io::format_double(s.gini)
                << ',' << io::format_double(s.stddev);
          } else {
            csv << ",,,";
          }
        }
        csv << ',' << csv_cell(warning) << ',' << csv_cell(error) << '\n';
      }
    }
  }
  timer.stop();
  OutputSet outputs;
  outputs.add("sweep.csv", csv.str());
  outputs.commit(common.out, run_record("sweep", common, sub, timer));
}

// ---------------------------------------------------------------------------
// Option wiring

void add_data_options(CLI::App* sub, DataOptions& d, bool with_regime) {
  if (with_regime)
    sub->add_option("--regime", d.regime, "Data regime")
        ->check(CLI::IsMember({"uniform", "zipf", "balanced"}))
        ->capture_default_str();
  sub->add_option("--n", d.n, "Number of items")->capture_default_str();
  sub->add_option("--dim", d.dim, "Embedding dimension")->capture_default_str();
  sub->add_option("--clusters", d.spec.num_clusters, "Number of clusters")->capture_default_str();
  sub->add_option("--radius", d.spec.radius, "Within-cluster standard deviation")
      ->capture_default_str();
  sub->add_option("--center-scale", d.spec.center_scale, "Half-width of the center cube")
      ->capture_default_str();
  sub->add_option("--zipf-exponent", d.spec.zipf_exponent, "Zipf exponent of cluster sizes")
      ->capture_default_str();
  sub->add_option("--outlier-fraction", d.spec.outlier_fraction,
                  "Share of each cluster placed around satellites")
      ->capture_default_str();
  sub->add_option("--satellites", d.spec.satellites_per_cluster, "Satellites per cluster")
      ->capture_default_str();
  sub->add_option("--satellite-offset", d.spec.satellite_offset,
                  "Satellite offset per coordinate, relative to center-scale")
      ->capture_default_str();
}

void add_head_options(CLI::App* sub, HeadOptions& h) {
  auto* k = sub->add_option("--head-k", h.k, "Head set = the K most frequent layer-2 tokens");
  auto* mass = sub->add_option("--head-mass", h.mass,
                               "Head set = smallest prefix holding this share of items")
                   ->capture_default_str();
  k->excludes(mass);
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual-quantization semantic IDs: training, hourglass diagnostics, "
               "mitigations and generative-retrieval simulation",
               "rqsid"};
  app.set_version_flag("--version", RQSID_VERSION);
  app.set_config("--config", "", "TOML configuration file; command-line flags take precedence");
  app.require_subcommand(1, 1);
  app.fallthrough();

  CommonOptions common;
  app.add_option("--seed", common.seed, "Root random seed")->capture_default_str();
  app.add_option("--out", common.out, "Output directory")->capture_default_str();
  app.add_option("--threads", common.threads, "Worker threads (0 = all cores)")
      ->capture_default_str();

  GenOptions gen;
  auto* gen_cmd = app.add_subcommand("gen", "Generate a synthetic embedding collection");
  add_data_options(gen_cmd, gen.data, true);
  gen_cmd->add_option("--format", gen.format, "Output format")
      ->check(CLI::IsMember({"csv", "bin"}))
      ->capture_default_str();

  TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "Train a residual-quantization codebook");
  train_cmd->add_option("--embeddings", train.embeddings, "Embedding file (CSV or binary)")
      ->required();
  train_cmd->add_option("--layers", train.layers, "Number of layers L")->capture_default_str();
  train_cmd->add_option("--codebook-size", train.codebook_size, "Codewords per layer M")
      ->capture_default_str();
  train_cmd->add_option("--kmeans-iters", train.kmeans_iters, "Lloyd iterations per layer")
      ->capture_default_str();
  train_cmd->add_option("--tol", train.tol, "Relative SSE improvement stopping threshold")
      ->capture_default_str();
  train_cmd->add_flag("--inline-weights", train.inline_weights,
                      "Store weights inside the JSON header");

  EncodeOptions encode;
  auto* encode_cmd = app.add_subcommand("encode", "Assign semantic IDs with a trained codebook");
  encode_cmd->add_option("--codebook", encode.codebook, "Codebook JSON header")->required();
  encode_cmd->add_option("--embeddings", encode.embeddings, "Embedding file")->required();
  encode_cmd->add_flag("--full-length", encode.full_length,
                       "Ignore the codebook head set and emit full-length SIDs");

  AnalyzeOptions analyze;
  auto* analyze_cmd = app.add_subcommand("analyze", "Hourglass diagnostics of a SID file");
  analyze_cmd->add_option("--codebook", analyze.codebook, "Codebook JSON header")->required();
  analyze_cmd->add_option("--sids", analyze.sids, "SID file")->required();
  add_head_options(analyze_cmd, analyze.head);
  analyze_cmd->add_flag("--degrees", analyze.degrees, "Include per-token fan-in/fan-out");

  MitigateOptions mitigate;
  auto* mitigate_cmd = app.add_subcommand("mitigate", "Apply a layer-2 mitigation");
  mitigate_cmd->add_option("--codebook", mitigate.codebook, "Codebook JSON header")->required();
  mitigate_cmd->add_option("--sids", mitigate.sids, "Full-length SID file")->required();
  mitigate_cmd->add_option("--method", mitigate.method, "Mitigation")
      ->check(CLI::IsMember({"varlen", "remove-layer", "exchange"}))
      ->capture_default_str();
  add_head_options(mitigate_cmd, mitigate.head);
  mitigate_cmd->add_option("--layer", mitigate.layer, "Layer dropped by remove-layer")
      ->capture_default_str();
  mitigate_cmd->add_option("--exchange", mitigate.exchange, "Two layers swapped by exchange")
      ->delimiter(',')
      ->expected(2);

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generative-retrieval simulation");
  sim_cmd->add_option("--codebook", sim.codebook, "Codebook JSON header")->required();
  sim_cmd->add_option("--sids", sim.sids, "Full-length SID file")->required();
  sim_cmd->add_option("--interactions", sim.interactions,
                      "Interaction CSV (generated when omitted)");
  sim_cmd->add_option("--mitigation", sim.mitigation,
                      "Catalog representation (auto = varlen when the codebook has a head set)")
      ->check(CLI::IsMember({"auto", "none", "varlen", "remove-layer"}))
      ->capture_default_str();
  add_head_options(sim_cmd, sim.head);
  sim_cmd->add_option("--num-train", sim.gen.num_train, "Generated training records")
      ->capture_default_str();
  sim_cmd->add_option("--num-test", sim.gen.num_test, "Generated test records")
      ->capture_default_str();
  sim_cmd->add_option("--history", sim.gen.history_length, "Items per history")
      ->capture_default_str();
  sim_cmd->add_option("--successors", sim.gen.successors_per_item, "Successors per item")
      ->capture_default_str();
  sim_cmd->add_option("--follow-prob", sim.gen.follow_prob, "Probability of following a successor")
      ->capture_default_str();
  sim_cmd->add_option("--popularity-exponent", sim.gen.popularity_exponent,
                      "Zipf exponent of item popularity")
      ->capture_default_str();
  sim_cmd->add_option("--popularity", sim.popularity,
                      "Popularity ranking: by catalog density or a seeded permutation")
      ->check(CLI::IsMember({"density", "random"}))
      ->capture_default_str();
  sim_cmd->add_option("--order", sim.order, "Sequence model context length")
      ->capture_default_str();
  sim_cmd->add_option("--alpha", sim.alpha, "Additive smoothing")->capture_default_str();
  sim_cmd->add_option("--beam", sim.beam, "Beam width")->capture_default_str();
  sim_cmd->add_option("--k-list", sim.k_list, "Cutoffs for recall and invalid ratio")
      ->delimiter(',')
      ->capture_default_str();
  sim_cmd->add_option("--trie", sim.trie, "Trie-constrained decoding")
      ->check(CLI::IsMember({"off", "on", "both"}))
      ->capture_default_str();
  sim_cmd->add_flag("--given-first-token", sim.given_first_token,
                    "Condition decoding on the gold first token");

  SweepOptions sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "Hourglass statistics over an (L, M, regime) grid");
  add_data_options(sweep_cmd, sweep.data, false);
  sweep_cmd->add_option("--layers", sweep.layers, "Values of L")->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--sizes", sweep.sizes, "Values of M")->delimiter(',')
      ->capture_default_str();
  sweep_cmd->add_option("--regimes", sweep.regimes, "Data regimes")
      ->delimiter(',')
      ->check(CLI::IsMember({"uniform", "zipf", "balanced"}))
      ->capture_default_str();
  sweep_cmd->add_option("--kmeans-iters", sweep.kmeans_iters, "Lloyd iterations per layer")
      ->capture_default_str();
  sweep_cmd->add_option("--tol", sweep.tol, "Relative SSE improvement stopping threshold")
      ->capture_default_str();
  add_head_options(sweep_cmd, sweep.head);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*gen_cmd) cmd_gen(gen, common, *gen_cmd, out, err);
    if (*train_cmd) cmd_train(train, common, *train_cmd, out);
    if (*encode_cmd) cmd_encode(encode, common, *encode_cmd, out);
    if (*analyze_cmd) cmd_analyze(analyze, common, *analyze_cmd, out);
    if (*mitigate_cmd) cmd_mitigate(mitigate, common, *mitigate_cmd, out);
    if (*sim_cmd) cmd_simulate(sim, common, *sim_cmd, out);
    if (*sweep_cmd) cmd_sweep(sweep, common, *sweep_cmd, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace rqsid
