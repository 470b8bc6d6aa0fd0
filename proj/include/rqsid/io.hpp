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

#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "rqsid/core.hpp"
#include "rqsid/diagnostics.hpp"
#include "rqsid/grsim.hpp"
#include "rqsid/mitigation.hpp"
#include "rqsid/quantizer.hpp"

// Persistence formats shared by the command-line tool. Every reader throws
// DataError on malformed input and every writer is deterministic.
namespace rqsid::io {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

// Whole-file helpers. read_file throws DataError when the file is missing or
// unreadable.
std::string read_file(const std::filesystem::path& path);
std::string sha256_hex(std::string_view bytes);

// Shortest decimal text that parses back to the same double.
std::string format_double(double value);

// ---------------------------------------------------------------------------
// Embeddings: CSV `item_id,v0,...,v{D-1}` or a little-endian binary file.
// Binary layout: magic "RQSIDEMB", u32 version, u32 dim, u64 count, then per
// item u32 id length, id bytes and dim float64 values.

std::string embeddings_to_csv(const EmbeddingCollection& data);
EmbeddingCollection embeddings_from_csv(std::string_view text);
std::string embeddings_to_binary(const EmbeddingCollection& data);
EmbeddingCollection embeddings_from_binary(std::string_view bytes);
// Picks the format from the magic bytes.
EmbeddingCollection load_embeddings(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Codebook: a JSON header plus float32 little-endian weights, either in a
// sibling binary file referenced by relative path and SHA-256, or inline.

struct CodebookFiles {
  std::string json;
  std::optional<std::string> weights;  // contents of the sibling file
};

CodebookFiles codebook_to_files(const Codebook& codebook, const std::string& weights_name,
                                bool inline_weights);
// `weights` must hold the sibling file when the header references one.
Codebook codebook_from_files(std::string_view json_text,
                             const std::optional<std::string>& weights);
Codebook load_codebook(const std::filesystem::path& json_path);

// ---------------------------------------------------------------------------
// SIDs: long-form CSV `item_id,layer,token` with 1-based layers and 0-based
// tokens, preceded by one comment line. Rows of an item are contiguous.

struct SidTable {
  std::vector<std::string> item_ids;
  std::vector<VarLenSemanticId> sids;

  bool all_full_length(const QuantizerConfig& config) const;
  // Throws DataError naming the first variable-length item.
  std::vector<SemanticId> full_length(const QuantizerConfig& config) const;
};

std::string sids_to_csv(std::span<const std::string> item_ids,
                        std::span<const VarLenSemanticId> sids);
std::string sids_to_csv(std::span<const std::string> item_ids, std::span<const SemanticId> sids);
// Each SID is validated against config.
SidTable sids_from_csv(std::string_view text, const QuantizerConfig& config);
SidTable load_sids(const std::filesystem::path& path, const QuantizerConfig& config);

// ---------------------------------------------------------------------------
// Interactions: CSV `user_context,target,split` with pipe-separated history.

std::string interactions_to_csv(const InteractionDataset& data);
InteractionDataset interactions_from_csv(std::string_view text);

// ---------------------------------------------------------------------------
// Report documents.

Json to_json(const LayerStats& stats);
Json to_json(const HourglassReport& report, const QuantizerConfig& config);
Json to_json(const TrainingReport& report, std::span<const double> reconstruction_mse);
Json to_json(const MitigationOutcome& outcome, const PostMitigationReport& post,
             const QuantizerConfig& config);
Json to_json(const EvalReport& report);
Json degree_profiles_to_json(std::span<const SemanticId> sids, const QuantizerConfig& config);

// Canonical text form: two-space indent and a trailing newline.
std::string dump(const Json& doc);

}  // namespace rqsid::io
