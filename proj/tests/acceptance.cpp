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

// Acceptance suite. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "rqsid/cli.hpp"
#include "rqsid/datagen.hpp"
#include "rqsid/diagnostics.hpp"
#include "rqsid/grsim.hpp"
#include "rqsid/io.hpp"
#include "rqsid/mitigation.hpp"
#include "rqsid/quantizer.hpp"

using namespace rqsid;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kTrainStream = 2;
constexpr std::uint64_t kInteractionStream = 3;
constexpr int kSeeds = 10;

int failures = 0;

void verdict(const char* id, bool pass, const std::string& detail) {
  std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

// Monotone residual decay, checked on every benchmark codebook (criterion 2).
struct DecayLog {
  int runs = 0;
  int violations = 0;
  std::string first_violation;

  void check(const std::string& label, const EmbeddingCollection& data, const Codebook& cb) {
    std::vector<double> curve{0.0};
    for (double v : data.values()) curve[0] += v * v;
    curve[0] /= static_cast<double>(data.size());
    const auto mse = reconstruction_report(data, cb);
    curve.insert(curve.end(), mse.begin(), mse.end());
    ++runs;
    for (std::size_t l = 1; l < curve.size(); ++l) {
      if (curve[l] > curve[l - 1]) {
        if (violations++ == 0) first_violation = label;
        break;
      }
    }
  }
} decay;

// ---------------------------------------------------------------------------

Token scan_nearest(const std::vector<double>& r, std::span<const float> layer, std::uint32_t m) {
  const std::size_t d = r.size();
  Token best = 0;
  double best_dist = std::numeric_limits<double>::infinity();
  for (Token k = 0; k < m; ++k) {
    double dist = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = r[j] - static_cast<double>(layer[k * d + j]);
      dist += diff * diff;
    }
    if (dist < best_dist) {
      best_dist = dist;
      best = k;
    }
  }
  return best;
}

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  RandomSource rng(0xC1);
  int mismatches = 0, identity_failures = 0, items = 0;
  double worst = 0.0;
  for (int inst = 0; inst < 200; ++inst) {
    QuantizerConfig c;
    c.dim = 1 + static_cast<std::uint32_t>(rng.below(4));
    c.codebook_size = 1 + static_cast<std::uint32_t>(rng.below(4));
    c.num_layers = 1 + static_cast<std::uint32_t>(rng.below(3));
    c.kmeans_iters = 10;
    c.seed = static_cast<std::uint64_t>(inst);
    const std::size_t n = 1 + rng.below(32);
    EmbeddingCollection data(c.dim);
    std::vector<double> v(c.dim);
    for (std::size_t i = 0; i < n; ++i) {
      for (double& x : v) x = rng.below(5) == 0 ? static_cast<double>(rng.below(3)) : rng.normal();
      data.add(item_name(i), v);
    }
    const Codebook cb = train_rq(data, c, rng.split(static_cast<std::uint64_t>(inst)));
    for (std::size_t i = 0; i < n; ++i) {
      ++items;
      const auto x = data.vector(i);
      const Encoding enc = encode(x, cb);
      std::vector<double> r(x.begin(), x.end());
      for (std::uint32_t l = 1; l <= c.num_layers; ++l) {
        const Token want = scan_nearest(r, cb.layer(l), c.codebook_size);
        if (enc.sid.tokens[l - 1] != want) ++mismatches;
        const auto cw = cb.codeword(l, want);
        for (std::size_t j = 0; j < r.size(); ++j) r[j] -= static_cast<double>(cw[j]);
      }
      const auto recon = decode(enc.sid, cb);
      double lhs = 0.0, rhs = 0.0;
      for (std::size_t j = 0; j < r.size(); ++j) {
        lhs += (x[j] - recon[j]) * (x[j] - recon[j]);
        rhs += enc.trace.residuals.back()[j] * enc.trace.residuals.back()[j];
      }
      worst = std::max(worst, std::abs(lhs - rhs));
      if (std::abs(lhs - rhs) > 1e-10) ++identity_failures;
    }
  }
  const double secs = seconds_since(t0);
  verdict("C1 quantizer oracle equivalence", mismatches == 0 && identity_failures == 0 && secs < 10.0,
          fmt("200 instances, %d items, %d choice mismatches, %d identity failures, max |diff| "
              "%.3g, %.2f s",
              items, mismatches, identity_failures, worst, secs));
}

void criterion3() {
  auto h = [](std::vector<std::uint64_t> c) { return LayerHistogram{1, std::move(c)}; };
  const double e = entropy_bits(h({5, 5, 5, 5}));
  const double g = gini(h({10, 0, 0, 0}));
  const double s = stddev(h({10, 0, 0, 0}));
  const bool identities = std::abs(e - 2.0) <= 1e-12 && std::abs(g - 0.75) <= 1e-12 &&
                          std::abs(s - std::sqrt(18.75)) <= 1e-12;
  RandomSource rng(0xC3);
  int broken = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::uint64_t> c(1 + rng.below(64));
    for (auto& x : c) x = rng.below(3) == 0 ? 0 : rng.below(10000);
    c[0] += 1;
    const double e0 = entropy_bits(h(c)), g0 = gini(h(c)), s0 = stddev(h(c));
    for (std::size_t i = c.size(); i > 1; --i) std::swap(c[i - 1], c[rng.below(i)]);
    if (std::abs(entropy_bits(h(c)) - e0) > 1e-12 || std::abs(gini(h(c)) - g0) > 1e-12 ||
        std::abs(stddev(h(c)) - s0) > 1e-9 * std::max(1.0, s0))
      ++broken;
  }
  verdict("C3 statistic identities", identities && broken == 0,
          fmt("entropy=%.15g gini=%.15g stddev=%.15g; %d of 1000 permuted histograms changed", e,
              g, s, broken));
}

// ---------------------------------------------------------------------------
// Hourglass benchmark (criteria 4, 5, 6).

QuantizerConfig benchmark_config(std::uint32_t m, std::uint64_t seed) {
  QuantizerConfig c;
  c.num_layers = 3;
  c.codebook_size = m;
  c.dim = 32;
  c.seed = seed;
  return c;
}

struct HourglassRun {
  std::vector<SemanticId> sids;
  std::vector<std::string> ids;
  HourglassReport report;
  double seconds = 0.0;
};

HourglassRun hourglass_run(bool zipf, std::uint64_t seed) {
  const auto t0 = std::chrono::steady_clock::now();
  const RandomSource root(seed);
  EmbeddingCollection data;
  if (zipf) {
    ClusterSpec spec;
    spec.size_law = SizeLaw::kZipf;
    spec.zipf_exponent = 1.2;
    data = gen_clustered(100000, 32, spec, root.split(kDataStream)).data;
  } else {
    data = gen_uniform(100000, 32, root.split(kDataStream));
  }
  const auto config = benchmark_config(256, seed);
  const Codebook cb = train_rq(data, config, root.split(kTrainStream));
  decay.check(fmt("%s seed %llu", zipf ? "zipf" : "uniform", static_cast<unsigned long long>(seed)),
              data, cb);
  HourglassRun run;
  run.sids = encode_all(data, cb);
  run.ids = data.ids();
  run.report = hourglass_report(run.sids, config, Mass{0.5});
  run.seconds = seconds_since(t0);
  return run;
}

void hourglass_criteria() {
  int flagged = 0, ordered = 0, gini_down = 0, util_up = 0;
  double slowest = 0.0;
  std::ostringstream c4, c5, c6;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const HourglassRun z = hourglass_run(true, static_cast<std::uint64_t>(seed));
    slowest = std::max(slowest, z.seconds);
    const auto& pl = z.report.per_layer;
    flagged += z.report.hourglass_flag;
    c4 << fmt(" s%d:%s(H=%.2f/%.2f/%.2f G=%.3f/%.3f/%.3f)", seed, z.report.hourglass_flag ? "Y" : "n",
              pl[0].entropy_bits, pl[1].entropy_bits, pl[2].entropy_bits, pl[0].gini, pl[1].gini,
              pl[2].gini);

    const HourglassRun u = hourglass_run(false, static_cast<std::uint64_t>(seed));
    const double gu = u.report.per_layer[1].gini;
    ordered += pl[1].gini > gu;
    c5 << fmt(" s%d:%.3f>%.3f", seed, pl[1].gini, gu);

    const auto config = benchmark_config(256, static_cast<std::uint64_t>(seed));
    const auto outcome =
        varlen_topk(z.ids, z.sids, z.report.histograms[1], Mass{0.5}, config);
    const auto post = post_mitigation_report(outcome, config, Mass{0.5});
    const double before_util =
        static_cast<double>(z.report.distinct_sids) / std::pow(256.0, 3);
    const double gini_after = post.tail_stats ? post.tail_stats->gini : 1.0;
    const bool g_ok = gini_after < pl[1].gini;
    const bool u_ok = post.full_length_path_utilization > before_util;
    gini_down += g_ok;
    util_up += u_ok;
    c6 << fmt(" s%d:K=%zu gini %.3f->%.3f util %.3g->%.3g", seed, outcome.head_set.size(),
              pl[1].gini, gini_after, before_util, post.full_length_path_utilization);
  }
  verdict("C4 hourglass reproduction", flagged >= 9 && slowest < 300.0,
          fmt("%d/10 seeds flagged, slowest run %.1f s;", flagged, slowest) + c4.str());
  verdict("C5 severity ordering", ordered >= 9,
          fmt("layer-2 gini zipf > uniform in %d/10 seeds;", ordered) + c5.str());
  verdict("C6 mitigation effect", gini_down == kSeeds && util_up == kSeeds,
          fmt("remaining layer-2 gini decreased in %d/10, full-length path utilization "
              "increased in %d/10;",
              gini_down, util_up) +
              c6.str());
}

void criterion7() {
  bool ok = remove_layer_capacity(4096, 3) == BigInt(4096) * 4096 &&
            varlen_capacity_formula(4096, 3, 400) == BigInt("62010228736");
  for (std::uint32_t m = 2; m <= 16 && ok; ++m) {
    for (std::uint32_t l = 1; l <= 6; ++l)
      ok = ok && remove_layer_capacity(m, l) == boost::multiprecision::pow(BigInt(m), l - 1);
  }
  // Brute force: every subset of the full catalog of an (M, 3) space is too
  // many, so enumerate the full catalog plus random sub-catalogs per K.
  int instances = 0, mismatches = 0;
  RandomSource rng(0xC7);
  for (std::uint32_t m = 1; m <= 4; ++m) {
    QuantizerConfig c;
    c.num_layers = 3;
    c.codebook_size = m;
    c.dim = 1;
    std::vector<SemanticId> all;
    for (Token a = 0; a < m; ++a)
      for (Token b = 0; b < m; ++b)
        for (Token d = 0; d < m; ++d) all.push_back(SemanticId{{a, b, d}});
    for (int sample = 0; sample < 20; ++sample) {
      std::vector<SemanticId> sids;
      for (const auto& s : all) {
        if (sample == 0 || rng.below(2) == 0) sids.push_back(s);
      }
      if (sids.empty()) continue;
      std::vector<std::string> ids;
      for (std::size_t i = 0; i < sids.size(); ++i) ids.push_back("i" + std::to_string(i));
      const auto hist = token_histogram(sids, 2, m);
      for (std::uint32_t k = 0; k <= m; ++k) {
        const auto out = varlen_topk(ids, sids, hist, TopK{k}, c);
        std::vector<bool> head(m, false);
        for (Token t : out.head_set) head[t] = true;
        // Distinct representations: the pair (layer-1, layer-3) for elided
        // items, the full triple otherwise.
        std::vector<std::vector<Token>> reps;
        for (const auto& s : sids) {
          if (head[s.tokens[1]]) {
            reps.push_back({s.tokens[0], m, s.tokens[2]});
          } else {
            reps.push_back(s.tokens);
          }
        }
        std::sort(reps.begin(), reps.end());
        const auto distinct = static_cast<std::size_t>(std::unique(reps.begin(), reps.end()) - reps.begin());
        ++instances;
        if (out.capacity_empirical_distinct != BigInt(distinct)) ++mismatches;
        const auto removed = remove_layer(ids, sids, c);
        std::vector<std::pair<Token, Token>> pairs;
        for (const auto& s : sids) pairs.push_back({s.tokens[0], s.tokens[2]});
        std::sort(pairs.begin(), pairs.end());
        const auto npairs = static_cast<std::size_t>(std::unique(pairs.begin(), pairs.end()) - pairs.begin());
        if (removed.capacity_empirical_distinct != BigInt(npairs) ||
            removed.capacity_formula != BigInt(m * m))
          ++mismatches;
      }
    }
  }
  verdict("C7 capacity accounting", ok && mismatches == 0,
          fmt("formula values exact=%s; %d brute-force instances, %d mismatches; varlen(4096,3,400)=",
              ok ? "yes" : "no", instances, mismatches) +
              varlen_capacity_formula(4096, 3, 400).str());
}

// ---------------------------------------------------------------------------
// Beam-search oracle (criterion 9).

void criterion9() {
  RandomSource rng(0xC9);
  int models = 0, mismatched = 0;
  while (models < 100) {
    QuantizerConfig c;
    c.num_layers = 1 + static_cast<std::uint32_t>(rng.below(3));
    c.codebook_size = 1 + static_cast<std::uint32_t>(rng.below(4));
    c.dim = 1;
    const std::uint32_t v = c.vocab_size();
    if (v > 4) continue;
    ++models;
    SequenceModel model(1 + static_cast<std::uint32_t>(rng.below(3)), 0.05 + rng.uniform01(), v);
    for (int s = 0, streams = 1 + static_cast<int>(rng.below(6)); s < streams; ++s) {
      std::vector<FlatToken> stream(2 + rng.below(10));
      for (auto& t : stream) t = static_cast<FlatToken>(rng.below(v));
      model.observe(stream);
    }
    const std::uint32_t max_len = 1 + static_cast<std::uint32_t>(rng.below(3));
    std::uint32_t width = 1;
    for (std::uint32_t i = 0; i < max_len; ++i) width *= v;
    std::vector<FlatToken> context(rng.below(4));
    for (auto& t : context) t = static_cast<FlatToken>(rng.below(v));

    // Enumerate every emitted sequence with its product of probabilities.
    std::vector<Hypothesis> all;
    std::function<void(std::vector<FlatToken>&, double)> grow = [&](std::vector<FlatToken>& seq,
                                                                     double lp) {
      for (FlatToken t = 0; t < v; ++t) {
        std::vector<FlatToken> ctx = context;
        ctx.insert(ctx.end(), seq.begin(), seq.end());
        const double next_lp = lp + std::log(model.probability(ctx, t));
        seq.push_back(t);
        if (is_last_layer_token(t, c) || seq.size() == max_len) {
          all.push_back({seq, next_lp});
        } else {
          grow(seq, next_lp);
        }
        seq.pop_back();
      }
    };
    std::vector<FlatToken> seq;
    grow(seq, 0.0);
    std::sort(all.begin(), all.end(), [](const Hypothesis& a, const Hypothesis& b) {
      return a.log_prob != b.log_prob ? a.log_prob > b.log_prob : a.tokens < b.tokens;
    });
    if (all.size() > width) all.resize(width);

    BeamOptions opt;
    opt.beam_width = width;
    opt.max_len = max_len;
    const auto got = beam_search(model, context, opt, c);
    bool same = got.size() == all.size();
    for (std::size_t i = 0; same && i < got.size(); ++i)
      same = got[i].tokens == all[i].tokens && got[i].log_prob == all[i].log_prob;
    mismatched += !same;
  }
  verdict("C9 beam-search oracle", mismatched == 0,
          fmt("%d random models, %d mismatches against exhaustive enumeration", models, mismatched));
}

// ---------------------------------------------------------------------------
// Generative-retrieval benchmark (criteria 8 and 10).

void gr_criteria() {
  int trie_clean = 0, directional = 0, biased = 0, runs = 0;
  std::ostringstream c8, c10;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    const RandomSource root(static_cast<std::uint64_t>(seed));
    ClusterSpec spec;
    spec.num_clusters = 32;
    spec.size_law = SizeLaw::kZipf;
    spec.zipf_exponent = 1.2;
    const auto gen = gen_clustered(5000, 32, spec, root.split(kDataStream));
    const auto config = benchmark_config(32, static_cast<std::uint64_t>(seed));
    const Codebook cb = train_rq(gen.data, config, root.split(kTrainStream));
    decay.check(fmt("gr seed %d", seed), gen.data, cb);
    const auto sids = encode_all(gen.data, cb);
    const auto report = hourglass_report(sids, config, Mass{0.5});
    const auto catalog = GrCatalog::from_sids(config, gen.data.ids(), sids);
    const auto trie = build_trie(catalog);
    InteractionGenConfig ic;
    const auto dataset = gen_interactions(gen.data.ids(), ic, root.split(kInteractionStream),
                                          layer1_density(sids, config));
    const auto model = train_seq_model(dataset.select(Split::kTrain), catalog, 3, 0.1);
    const auto test = dataset.select(Split::kTest);

    EvalOptions opt;
    opt.beam_width = 50;
    opt.k_list = {1, 5, 10, 50};
    opt.trie_mode = true;
    const auto on = evaluate(model, test, catalog, trie, report.head_set, opt);
    opt.trie_mode = false;
    const auto off = evaluate(model, test, catalog, trie, report.head_set, opt);
    ++runs;
    bool clean = true;
    for (const auto* part : {&on.overall, &on.head, &on.tail})
      for (double r : part->invalid_ratio) clean = clean && r == 0.0;
    trie_clean += clean;
    directional += off.overall.invalid_ratio[3] >= off.overall.invalid_ratio[2];
    c8 << fmt(" s%d:%.3f>=%.3f", seed, off.overall.invalid_ratio[3], off.overall.invalid_ratio[2]);
    biased += on.head.recall[1] > on.tail.recall[1];
    c10 << fmt(" s%d:%.3f>%.3f", seed, on.head.recall[1], on.tail.recall[1]);
  }
  verdict("C8 constrained decoding", trie_clean == runs && directional >= 8,
          fmt("trie on: zero invalid in %d/%d runs; trie off invalid@50 >= invalid@10 in %d/10;",
              trie_clean, runs, directional) +
              c8.str());
  verdict("C10 head/tail bias", biased >= 8,
          fmt("head recall@5 > tail recall@5 (trie on) in %d/10;", biased) + c10.str());
}

// ---------------------------------------------------------------------------
// Determinism through the command-line tool (criterion 11).

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "rqsid");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

void criterion11() {
  const fs::path root = fs::temp_directory_path() / ("rqsid_accept_" + std::to_string(::getpid()));
  fs::remove_all(root);
  auto script = [&](const std::string& name, const std::string& threads) {
    const std::string d = (root / name).string();
    const std::vector<std::string> common{"--seed", "17", "--threads", threads, "--out", d};
    auto with = [&](std::vector<std::string> rest) {
      std::vector<std::string> a = common;
      a.insert(a.end(), rest.begin(), rest.end());
      return cli(a);
    };
    int rc = 0;
    rc |= with({"gen", "--regime", "zipf", "--n", "4000", "--dim", "16", "--clusters", "32"});
    rc |= with({"train", "--embeddings", d + "/embeddings.csv", "--codebook-size", "32"});
    rc |= with({"encode", "--codebook", d + "/codebook.json", "--embeddings", d + "/embeddings.csv"});
    rc |= with({"analyze", "--codebook", d + "/codebook.json", "--sids", d + "/sids.csv", "--degrees"});
    rc |= with({"mitigate", "--codebook", d + "/codebook.json", "--sids", d + "/sids.csv"});
    rc |= with({"simulate", "--codebook", d + "/codebook.json", "--sids", d + "/sids.csv",
                "--num-train", "2000", "--num-test", "200", "--beam", "20", "--k-list", "1,5,20",
                "--trie", "both"});
    rc |= with({"sweep", "--n", "1500", "--dim", "8", "--clusters", "16", "--layers", "2,3",
                "--sizes", "8,16", "--regimes", "uniform,zipf", "--kmeans-iters", "8"});
    return rc;
  };
  const int rc = script("r1", "1") | script("r2", "1") | script("r3", "4");
  const char* files[] = {"embeddings.csv",       "codebook.json",         "codebook.bin",
                         "train_report.json",    "sids.csv",              "report.json",
                         "mitigated_sids.csv",   "mitigation_report.json", "mitigated_codebook.json",
                         "mitigated_codebook.bin", "interactions.csv",    "eval_report.json",
                         "sweep.csv"};
  int compared = 0, differing = 0;
  std::string first_diff;
  for (const char* f : files) {
    try {
      const auto a = io::sha256_hex(io::read_file(root / "r1" / f));
      for (const char* other : {"r2", "r3"}) {
        ++compared;
        if (io::sha256_hex(io::read_file(root / other / f)) != a) {
          if (differing++ == 0) first_diff = std::string(other) + "/" + f;
        }
      }
    } catch (const std::exception& e) {
      ++differing;
      if (first_diff.empty()) first_diff = e.what();
    }
  }
  fs::remove_all(root);
  verdict("C11 determinism", rc == 0 && differing == 0,
          fmt("%d digest comparisons over 13 artifacts (same seed rerun and 1 vs 4 threads), %d "
              "differ, command failures=%s",
              compared, differing, rc == 0 ? "none" : "yes") +
              (first_diff.empty() ? "" : "; first difference " + first_diff));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  criterion1();
  criterion3();
  criterion7();
  criterion9();
  criterion11();
  gr_criteria();
  hourglass_criteria();
  verdict("C2 residual decay", decay.runs > 0 && decay.violations == 0,
          fmt("%d trained benchmark codebooks, %d with a non-monotone reconstruction curve", decay.runs,
              decay.violations) +
              (decay.first_violation.empty() ? "" : "; first: " + decay.first_violation));
  std::printf("acceptance finished in %.1f s, %d criteria failed\n", seconds_since(t0), failures);
  return failures == 0 ? 0 : 1;
}
