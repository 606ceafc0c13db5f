/*
 * Copyright 2026 The copg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef COPG_FEATURES_HPP_
#define COPG_FEATURES_HPP_

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "copg/ingest.hpp"
#include "copg/mat.hpp"

namespace copg::features {

// Marks which split a set of rows came from. Fitting functions require
// kTrain so statistics can never leak across splits.
enum class SplitRole { kTrain, kVal, kTest, kAll };

struct FeatureSpec {
  int title_dim = 384;
  std::vector<std::string> group_vocab = default_group_vocab();
  std::vector<std::string> numeric_fields = default_numeric_fields();
  int path_dim = 200;
  std::optional<int> pca_target;  // reduces the title block when set

  static std::vector<std::string> default_group_vocab();
  static std::vector<std::string> default_numeric_fields();

  int title_out_dim() const { return pca_target ? *pca_target : title_dim; }
  int total_dim() const {
    return title_out_dim() + static_cast<int>(group_vocab.size()) +
           static_cast<int>(numeric_fields.size()) + path_dim;
  }
};

// Per-field population mean/stddev fit on train rows only.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> stddev;

  // (x - mu) / sigma; zero-variance fields map to 0.
  double apply(std::size_t field, double x) const;
};

Standardizer fit_standardizer(const ingest::MergedTable& merged,
                              const std::vector<uint32_t>& rows, SplitRole role,
                              const std::vector<std::string>& fields);

// Path string -> dense id (lexicographic order) with a frozen embedding
// table initialized N(0, 1/path_dim).
struct PathVocabulary {
  std::vector<std::string> paths;  // sorted; index is the id
  std::unordered_map<std::string, uint32_t> ids;
  Matf table;  // |vocab| x path_dim
  uint64_t seed = 0;

  std::size_t size() const { return paths.size(); }
};

PathVocabulary build_path_vocab(const ingest::MergedTable& merged,
                                const std::vector<uint32_t>& rows, SplitRole role, int path_dim,
                                uint64_t seed);

// Mean of the known paths' embedding rows; zero vector when none are known.
std::vector<float> pool_paths(const std::vector<std::vector<std::string>>& item_paths,
                              const PathVocabulary& vocab);

// Group vocabulary fit on train rows: distinct labels by descending
// frequency (ties by name), truncated to max_size.
std::vector<std::string> fit_group_vocab(const ingest::MergedTable& merged,
                                         const std::vector<uint32_t>& rows, SplitRole role,
                                         std::size_t max_size);

// Index of `group` in the vocabulary, or npos for unseen labels (the
// encoding is then the all-zero vector).
std::size_t encode_group(const std::string& group, const std::vector<std::string>& vocab);

struct EmbeddingFile {
  uint32_t dim = 0;
  std::unordered_map<std::string, std::vector<float>> vectors;
};

// EMB1 binary or TSV "asin\tv1,...,vd" (detected by magic). Throws
// DimensionMismatch when the file dimension differs from spec.title_dim.
EmbeddingFile load_title_embeddings(const std::string& path, const FeatureSpec& spec);
void save_title_embeddings(const std::string& path, const EmbeddingFile& emb);

struct PcaResult {
  Matf projected;                  // N x target
  Matd components;                 // d x target, orthonormal columns
  std::vector<double> eigenvalues; // descending
  std::vector<double> col_means;
};

// Projection onto the top-`target` eigenvectors of the column-centered
// covariance. Components ordered by descending eigenvalue; each component's
// largest-magnitude entry is made positive.
PcaResult pca_fit(const Matf& block, int target);
Matf pca_reduce(const Matf& block, int target);

struct FeatureMatrix {
  Matf data;
  // Column boundaries: 0, title end, group end, numeric end, total.
  std::array<std::size_t, 5> bounds{};
};

struct AssembleStats {
  std::size_t missing_title_vectors = 0;
  std::size_t unseen_groups = 0;
  std::size_t unseen_paths = 0;
};

// Rows ordered by merged-table row index (the graph's node ids). Blocks are
// title || group || numeric || category.
FeatureMatrix assemble_features(const ingest::MergedTable& merged, const EmbeddingFile& emb,
                                const PathVocabulary& vocab, const Standardizer& standardizer,
                                const FeatureSpec& spec, AssembleStats* stats = nullptr);

// FTM1 binary: magic + u64 N + u32 D + row-major f32.
void save_ftm(const std::string& path, const FeatureMatrix& fm);
FeatureMatrix load_ftm(const std::string& path);

}  // namespace copg::features

#endif  // COPG_FEATURES_HPP_
