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

#include "rqsid/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "rqsid/error.hpp"

namespace rqsid::io {

static_assert(std::endian::native == std::endian::little,
              "binary formats are written in host order and assume little-endian");

namespace {

constexpr std::string_view kEmbeddingMagic = "RQSIDEMB";
constexpr std::string_view kSidComment =
    "# rqsid-sids format_version=1; layer is 1-based; token is the 0-based codeword index";

// Identifiers travel through CSV cells and pipe-joined lists unquoted.
void check_item_id(std::string_view id) {
  if (id.empty()) throw DataError("empty item id");
  for (char c : id) {
    if (c == ',' || c == '|' || c == '"' || c == '\n' || c == '\r')
      throw DataError("item id '" + std::string(id) + "' contains a reserved character");
  }
}

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = text.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(text.substr(start));
      return out;
    }
    out.push_back(text.substr(start, pos - start));
    start = pos + 1;
  }
}

// Lines without their terminators; a trailing empty line is dropped.
std::vector<std::string_view> lines(std::string_view text) {
  std::vector<std::string_view> out = split(text, '\n');
  if (!out.empty() && out.back().empty()) out.pop_back();
  for (auto& l : out) {
    if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
  }
  return out;
}

double parse_double(std::string_view cell, std::size_t line_no) {
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || cell.empty())
    throw DataError("line " + std::to_string(line_no) + ": invalid number '" + std::string(cell) +
                    "'");
  return v;
}

std::uint64_t parse_uint(std::string_view cell, std::size_t line_no) {
  std::uint64_t v = 0;
  const char* end = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(cell.data(), end, v);
  if (ec != std::errc() || ptr != end || cell.empty())
    throw DataError("line " + std::to_string(line_no) + ": invalid integer '" +
                    std::string(cell) + "'");
  return v;
}

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}
  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string_view take(std::size_t n) {
    need(n);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw DataError("binary file is truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

template <typename T>
T json_get(const Json& doc, const char* key) {
  if (!doc.contains(key)) throw DataError(std::string("codebook header lacks '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const Json::exception&) {
    throw DataError(std::string("codebook header field '") + key + "' has the wrong type");
  }
}

Json stats_array(std::span<const double> values) {
  Json out = Json::array();
  for (double v : values) out.push_back(v);
  return out;
}

}  // namespace

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw DataError("error reading '" + path.string() + "'");
  return content;
}

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xF]);
  }
  return out;
}

std::string format_double(double value) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw Error("number formatting failed");
  return std::string(buf, ptr);
}

// ---------------------------------------------------------------------------
// Embeddings

std::string embeddings_to_csv(const EmbeddingCollection& data) {
  std::string out = "item_id";
  for (std::size_t j = 0; j < data.dim(); ++j) out += ",v" + std::to_string(j);
  out += '\n';
  for (std::size_t i = 0; i < data.size(); ++i) {
    check_item_id(data.id(i));
    out += data.id(i);
    for (double v : data.vector(i)) {
      out += ',';
      out += format_double(v);
    }
    out += '\n';
  }
  return out;
}

EmbeddingCollection embeddings_from_csv(std::string_view text) {
  const auto rows = lines(text);
  if (rows.empty()) throw DataError("embedding file is empty");
  const auto header = split(rows[0], ',');
  if (header.size() < 2 || header[0] != "item_id")
    throw DataError("embedding header must be 'item_id,v0,...'");
  const std::size_t dim = header.size() - 1;
  for (std::size_t j = 0; j < dim; ++j) {
    if (header[j + 1] != "v" + std::to_string(j))
      throw DataError("embedding header column " + std::to_string(j + 1) + " must be 'v" +
                      std::to_string(j) + "'");
  }
  EmbeddingCollection data(dim);
  data.reserve(rows.size() - 1);
  std::vector<double> v(dim);
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = split(rows[r], ',');
    if (cells.size() != dim + 1)
      throw DataError("line " + std::to_string(r + 1) + ": expected " + std::to_string(dim + 1) +
                      " columns, found " + std::to_string(cells.size()));
    check_item_id(cells[0]);
    for (std::size_t j = 0; j < dim; ++j) v[j] = parse_double(cells[j + 1], r + 1);
    data.add(std::string(cells[0]), v);
  }
  if (data.empty()) throw DataError("embedding file has no items");
  return data;
}

std::string embeddings_to_binary(const EmbeddingCollection& data) {
  std::string out(kEmbeddingMagic);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(kFormatVersion));
  put<std::uint32_t>(out, static_cast<std::uint32_t>(data.dim()));
  put<std::uint64_t>(out, data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(data.id(i).size()));
    out += data.id(i);
    for (double v : data.vector(i)) put<double>(out, v);
  }
  return out;
}

EmbeddingCollection embeddings_from_binary(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(kEmbeddingMagic.size()) != kEmbeddingMagic)
    throw DataError("not an rqsid binary embedding file");
  if (in.get<std::uint32_t>() != static_cast<std::uint32_t>(kFormatVersion))
    throw DataError("unsupported binary embedding version");
  const std::uint32_t dim = in.get<std::uint32_t>();
  const std::uint64_t n = in.get<std::uint64_t>();
  if (dim == 0) throw DataError("binary embedding dimension is 0");
  if (n == 0) throw DataError("embedding file has no items");
  EmbeddingCollection data(dim);
  std::vector<double> v(dim);
  for (std::uint64_t i = 0; i < n; ++i) {
    const std::uint32_t len = in.get<std::uint32_t>();
    std::string id(in.take(len));
    check_item_id(id);
    for (auto& x : v) x = in.get<double>();
    data.add(std::move(id), v);
  }
  if (!in.done()) throw DataError("trailing bytes after the last embedding");
  return data;
}

EmbeddingCollection load_embeddings(const std::filesystem::path& path) {
  const std::string content = read_file(path);
  if (std::string_view(content).starts_with(kEmbeddingMagic)) return embeddings_from_binary(content);
  return embeddings_from_csv(content);
}

// ---------------------------------------------------------------------------
// Codebook

CodebookFiles codebook_to_files(const Codebook& codebook, const std::string& weights_name,
                                bool inline_weights) {
  const QuantizerConfig& c = codebook.config();
  Json doc;
  doc["format"] = "rqsid-codebook";
  doc["format_version"] = kFormatVersion;
  doc["L"] = c.num_layers;
  doc["M"] = c.codebook_size;
  doc["D"] = c.dim;
  doc["seed"] = c.seed;
  doc["kmeans_iters"] = c.kmeans_iters;
  doc["convergence_tol"] = c.convergence_tol;
  doc["training_sse_per_layer"] = stats_array(codebook.training_sse_per_layer());
  if (codebook.head_set()) doc["head_set"] = *codebook.head_set();

  CodebookFiles files;
  Json weights;
  weights["dtype"] = "float32le";
  weights["shape"] = {c.num_layers, c.codebook_size, c.dim};
  if (inline_weights) {
    Json values = Json::array();
    for (float w : codebook.weights()) values.push_back(static_cast<double>(w));
    weights["values"] = std::move(values);
  } else {
    std::string bin;
    bin.reserve(codebook.weights().size() * sizeof(float));
    for (float w : codebook.weights()) put<float>(bin, w);
    weights["path"] = weights_name;
    weights["sha256"] = sha256_hex(bin);
    files.weights = std::move(bin);
  }
  doc["weights"] = std::move(weights);
  files.json = dump(doc);
  return files;
}

namespace {

Json parse_codebook_header(std::string_view json_text) {
  Json doc;
  try {
    doc = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw DataError(std::string("codebook header is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || doc.value("format", "") != "rqsid-codebook")
    throw DataError("not an rqsid codebook header");
  if (json_get<int>(doc, "format_version") != kFormatVersion)
    throw DataError("unsupported codebook format_version");
  return doc;
}

}  // namespace

Codebook codebook_from_files(std::string_view json_text,
                             const std::optional<std::string>& weights_file) {
  const Json doc = parse_codebook_header(json_text);
  QuantizerConfig c;
  c.num_layers = json_get<std::uint32_t>(doc, "L");
  c.codebook_size = json_get<std::uint32_t>(doc, "M");
  c.dim = json_get<std::uint32_t>(doc, "D");
  c.seed = json_get<std::uint64_t>(doc, "seed");
  c.kmeans_iters = json_get<std::uint32_t>(doc, "kmeans_iters");
  c.convergence_tol = json_get<double>(doc, "convergence_tol");
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("codebook header: ") + e.what());
  }
  const auto sse = json_get<std::vector<double>>(doc, "training_sse_per_layer");
  std::optional<std::vector<Token>> head_set;
  if (doc.contains("head_set")) head_set = json_get<std::vector<Token>>(doc, "head_set");

  const Json& w = doc.at("weights");
  if (!w.is_object() || w.value("dtype", "") != "float32le")
    throw DataError("codebook weights must be float32le");
  const std::size_t expected = std::size_t{c.num_layers} * c.codebook_size * c.dim;
  std::vector<float> weights;
  weights.reserve(expected);
  if (w.contains("values")) {
    for (const auto& v : w.at("values")) {
      if (!v.is_number()) throw DataError("inline codebook weight is not a number");
      weights.push_back(static_cast<float>(v.get<double>()));
    }
  } else {
    if (!weights_file) throw DataError("codebook weights file is missing");
    if (sha256_hex(*weights_file) != json_get<std::string>(w, "sha256"))
      throw DataError("codebook weights digest mismatch");
    if (weights_file->size() != expected * sizeof(float))
      throw DataError("codebook weights file has the wrong size");
    Reader in(*weights_file);
    for (std::size_t i = 0; i < expected; ++i) weights.push_back(in.get<float>());
  }
  if (weights.size() != expected) throw DataError("codebook weights have the wrong size");
  try {
    return Codebook(c, std::move(weights), sse, std::move(head_set));
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid codebook: ") + e.what());
  }
}

Codebook load_codebook(const std::filesystem::path& json_path) {
  const std::string text = read_file(json_path);
  const Json doc = parse_codebook_header(text);
  std::optional<std::string> weights;
  const Json& w = doc.contains("weights") ? doc.at("weights") : Json();
  if (w.is_object() && w.contains("path")) {
    const std::filesystem::path rel = w.at("path").get<std::string>();
    if (rel.is_absolute() || rel.filename() != rel)
      throw DataError("codebook weights path must be a sibling file name");
    weights = read_file(json_path.parent_path() / rel);
  }
  return codebook_from_files(text, weights);
}

// ---------------------------------------------------------------------------
// SIDs

bool SidTable::all_full_length(const QuantizerConfig& config) const {
  for (const auto& s : sids) {
    if (s.entries.size() != config.num_layers) return false;
  }
  return true;
}

std::vector<SemanticId> SidTable::full_length(const QuantizerConfig& config) const {
  std::vector<SemanticId> out;
  out.reserve(sids.size());
  for (std::size_t i = 0; i < sids.size(); ++i) {
    auto fixed = to_fixed(sids[i], config);
    if (!fixed)
      throw DataError("item '" + item_ids[i] + "' has a variable-length SID; full-length SIDs "
                      "are required here");
    out.push_back(std::move(*fixed));
  }
  return out;
}

std::string sids_to_csv(std::span<const std::string> item_ids,
                        std::span<const VarLenSemanticId> sids) {
  if (item_ids.size() != sids.size()) throw ConsistencyError("SID columns differ in length");
  std::string out(kSidComment);
  out += "\nitem_id,layer,token\n";
  for (std::size_t i = 0; i < sids.size(); ++i) {
    check_item_id(item_ids[i]);
    for (const auto& e : sids[i].entries) {
      out += item_ids[i];
      out += ',' + std::to_string(e.layer) + ',' + std::to_string(e.token) + '\n';
    }
  }
  return out;
}

std::string sids_to_csv(std::span<const std::string> item_ids, std::span<const SemanticId> sids) {
  std::vector<VarLenSemanticId> v;
  v.reserve(sids.size());
  for (const auto& s : sids) v.push_back(to_varlen(s));
  return sids_to_csv(item_ids, v);
}

SidTable sids_from_csv(std::string_view text, const QuantizerConfig& config) {
  const auto rows = lines(text);
  std::size_t r = 0;
  while (r < rows.size() && rows[r].starts_with('#')) ++r;
  if (r == rows.size() || rows[r] != "item_id,layer,token")
    throw DataError("SID file header must be 'item_id,layer,token'");
  ++r;
  SidTable table;
  std::unordered_map<std::string, std::size_t> seen;
  for (; r < rows.size(); ++r) {
    const auto cells = split(rows[r], ',');
    if (cells.size() != 3)
      throw DataError("line " + std::to_string(r + 1) + ": expected 3 columns");
    check_item_id(cells[0]);
    const std::uint64_t layer = parse_uint(cells[1], r + 1);
    const std::uint64_t token = parse_uint(cells[2], r + 1);
    if (layer == 0 || layer > config.num_layers)
      throw RangeError("line " + std::to_string(r + 1) + ": layer out of range");
    if (token >= config.codebook_size)
      throw RangeError("line " + std::to_string(r + 1) + ": token out of range");
    if (table.item_ids.empty() || table.item_ids.back() != cells[0]) {
      std::string id(cells[0]);
      if (!seen.emplace(id, table.item_ids.size()).second)
        throw DataError("item '" + id + "' appears in non-contiguous rows");
      table.item_ids.push_back(std::move(id));
      table.sids.emplace_back();
    }
    table.sids.back().entries.push_back(
        {static_cast<std::uint32_t>(layer), static_cast<Token>(token)});
  }
  if (table.sids.empty()) throw DataError("SID file has no items");
  for (std::size_t i = 0; i < table.sids.size(); ++i) {
    try {
      validate(table.sids[i], config);
    } catch (const Error& e) {
      throw DataError("item '" + table.item_ids[i] + "': " + e.what());
    }
  }
  return table;
}

SidTable load_sids(const std::filesystem::path& path, const QuantizerConfig& config) {
  return sids_from_csv(read_file(path), config);
}

// ---------------------------------------------------------------------------
// Interactions

std::string interactions_to_csv(const InteractionDataset& data) {
  std::string out = "user_context,target,split\n";
  for (const auto& rec : data.records) {
    if (rec.history.empty()) throw DataError("interaction with an empty history");
    for (std::size_t i = 0; i < rec.history.size(); ++i) {
      check_item_id(rec.history[i]);
      if (i > 0) out += '|';
      out += rec.history[i];
    }
    check_item_id(rec.target);
    out += ',' + rec.target + ',' + (rec.split == Split::kTrain ? "train" : "test") + '\n';
  }
  return out;
}

InteractionDataset interactions_from_csv(std::string_view text) {
  const auto rows = lines(text);
  if (rows.empty() || rows[0] != "user_context,target,split")
    throw DataError("interaction header must be 'user_context,target,split'");
  InteractionDataset data;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto cells = split(rows[r], ',');
    if (cells.size() != 3)
      throw DataError("line " + std::to_string(r + 1) + ": expected 3 columns");
    Interaction rec;
    for (auto id : split(cells[0], '|')) {
      check_item_id(id);
      rec.history.emplace_back(id);
    }
    check_item_id(cells[1]);
    rec.target = std::string(cells[1]);
    if (cells[2] == "train") {
      rec.split = Split::kTrain;
    } else if (cells[2] == "test") {
      rec.split = Split::kTest;
    } else {
      throw DataError("line " + std::to_string(r + 1) + ": split must be 'train' or 'test'");
    }
    data.records.push_back(std::move(rec));
  }
  return data;
}

// ---------------------------------------------------------------------------
// Reports

Json to_json(const LayerStats& s) {
  return Json{{"entropy_bits", s.entropy_bits}, {"gini", s.gini},
              {"stddev", s.stddev},             {"distinct_tokens", s.distinct_tokens},
              {"utilization", s.utilization}};
}

Json to_json(const HourglassReport& report, const QuantizerConfig& config) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < report.per_layer.size(); ++l) {
    Json entry = to_json(report.per_layer[l]);
    entry["layer"] = l + 1;
    entry["counts"] = report.histograms[l].counts;
    layers.push_back(std::move(entry));
  }
  return Json{{"schema_version", kReportSchemaVersion},
              {"kind", "hourglass"},
              {"L", config.num_layers},
              {"M", config.codebook_size},
              {"num_items", report.num_items},
              {"distinct_sids", report.distinct_sids},
              {"path_sparsity", report.path_sparsity},
              {"edge_density", report.edge_density},
              {"hourglass_flag", report.hourglass_flag},
              {"pinch_layer", report.pinch_layer},
              {"head_set", report.head_set},
              {"layers", std::move(layers)}};
}

Json to_json(const TrainingReport& report, std::span<const double> reconstruction_mse) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < report.layers.size(); ++l) {
    const auto& s = report.layers[l];
    Json entry{{"layer", l + 1},
               {"iterations", s.iterations},
               {"kmeans_sse", s.kmeans_sse},
               {"residual_sse", s.residual_sse},
               {"duplicated_centroids", s.duplicated_centroids}};
    if (l < reconstruction_mse.size()) entry["reconstruction_mse"] = reconstruction_mse[l];
    layers.push_back(std::move(entry));
  }
  return Json{{"schema_version", kReportSchemaVersion}, {"kind", "training"}, {"layers", layers}};
}

Json to_json(const MitigationOutcome& outcome, const PostMitigationReport& post,
             const QuantizerConfig& config) {
  Json collisions = Json::array();
  std::size_t colliding_items = 0;
  for (const auto& [sid, ids] : outcome.collisions) {
    collisions.push_back(Json{{"sid", to_string(sid)}, {"items", ids}});
    colliding_items += ids.size();
  }
  Json post_doc{{"total_items", post.total_items},
                {"elided_items", post.elided_items},
                {"elision_rate", post.elision_rate},
                {"full_length_path_utilization", post.full_length_path_utilization}};
  if (post.remaining) post_doc["remaining"] = to_json(*post.remaining, config);
  if (post.tail_histogram) post_doc["tail_counts"] = post.tail_histogram->counts;
  if (post.tail_stats) post_doc["tail_stats"] = to_json(*post.tail_stats);
  return Json{{"schema_version", kReportSchemaVersion},
              {"kind", "mitigation"},
              {"L", config.num_layers},
              {"M", config.codebook_size},
              {"elided_layer", outcome.elided_layer},
              {"head_set", outcome.head_set},
              {"capacity_formula", outcome.capacity_formula.str()},
              {"capacity_empirical_distinct", outcome.capacity_empirical_distinct.str()},
              {"colliding_items", colliding_items},
              {"collisions", std::move(collisions)},
              {"post", std::move(post_doc)}};
}

namespace {

Json partition_json(const PartitionMetrics& m, std::span<const std::uint32_t> k_list) {
  Json recall = Json::object();
  Json invalid = Json::object();
  for (std::size_t i = 0; i < k_list.size(); ++i) {
    recall[std::to_string(k_list[i])] = m.recall[i];
    invalid[std::to_string(k_list[i])] = m.invalid_ratio[i];
  }
  return Json{{"records", m.records}, {"recall", recall}, {"invalid_ratio", invalid}};
}

}  // namespace

Json to_json(const EvalReport& r) {
  return Json{{"k_list", r.k_list},
              {"beam_width", r.beam_width},
              {"trie_mode", r.trie_mode ? "on" : "off"},
              {"given_first_token", r.given_first_token},
              {"head_set", r.head_set},
              {"overall", partition_json(r.overall, r.k_list)},
              {"head", partition_json(r.head, r.k_list)},
              {"tail", partition_json(r.tail, r.k_list)}};
}

Json degree_profiles_to_json(std::span<const SemanticId> sids, const QuantizerConfig& config) {
  Json out = Json::array();
  for (std::uint32_t l = 1; l <= config.num_layers; ++l) {
    const auto profile = degree_profile(sids, l, config);
    Json fan_in = Json::array();
    Json fan_out = Json::array();
    for (const auto& d : profile) {
      fan_in.push_back(d.fan_in);
      fan_out.push_back(d.fan_out);
    }
    out.push_back(Json{{"layer", l}, {"fan_in", fan_in}, {"fan_out", fan_out}});
  }
  return out;
}

std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace rqsid::io
