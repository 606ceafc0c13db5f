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

#include "copg/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "copg/binio.hpp"
#include "copg/csv.hpp"
#include "copg/errors.hpp"
#include "copg/kernels.hpp"
#include "copg/rng.hpp"
#include "copg/version.hpp"

namespace copg::features {

std::vector<std::string> FeatureSpec::default_group_vocab() {
  // The ten catalog domains observed in the co-purchase dump.
  return {"Baby Product", "Book", "CE",       "DVD",  "Music",
          "Software",     "Sports", "Toy",    "Video", "Video Games"};
}

std::vector<std::string> FeatureSpec::default_numeric_fields() {
  return {"salesrank_log",       "category_count",       "reviews_total_log",
          "reviews_downloaded_log", "reviews_avg_ratings", "reviews_avg_votes",
          "reviews_avg_helpful"};
}

namespace {

void require_train(SplitRole role, const char* what) {
  if (role != SplitRole::kTrain) {
    throw ContractError(std::string(what) + " must be fit on train rows only");
  }
}

}  // namespace

double Standardizer::apply(std::size_t field, double x) const {
  const double s = stddev[field];
  if (s <= 0.0) return 0.0;
  return (x - mean[field]) / s;
}

Standardizer fit_standardizer(const ingest::MergedTable& merged,
                              const std::vector<uint32_t>& rows, SplitRole role,
                              const std::vector<std::string>& fields) {
  require_train(role, "standardizer");
  Standardizer out;
  out.mean.assign(fields.size(), 0.0);
  out.stddev.assign(fields.size(), 0.0);
  if (rows.empty()) return out;
  const auto n = static_cast<double>(rows.size());
  for (std::size_t f = 0; f < fields.size(); ++f) {
    double sum = 0.0;
    for (uint32_t r : rows) sum += merged.rows[r].numeric_field(fields[f]);
    const double mu = sum / n;
    double sq = 0.0;
    for (uint32_t r : rows) {
      const double d = merged.rows[r].numeric_field(fields[f]) - mu;
      sq += d * d;
    }
    out.mean[f] = mu;
    out.stddev[f] = std::sqrt(sq / n);  // population sigma
  }
  return out;
}

PathVocabulary build_path_vocab(const ingest::MergedTable& merged,
                                const std::vector<uint32_t>& rows, SplitRole role, int path_dim,
                                uint64_t seed) {
  require_train(role, "path vocabulary");
  PathVocabulary out;
  out.seed = seed;
  std::map<std::string, bool> distinct;
  for (uint32_t r : rows) {
    if (!merged.rows[r].path.empty()) distinct[csv::join_list(merged.rows[r].path)] = true;
  }
  out.paths.reserve(distinct.size());
  for (const auto& [p, _] : distinct) out.paths.push_back(p);
  for (uint32_t i = 0; i < out.paths.size(); ++i) out.ids.emplace(out.paths[i], i);

  out.table = Matf(out.paths.size(), static_cast<std::size_t>(path_dim));
  const double stddev = 1.0 / std::sqrt(static_cast<double>(path_dim));
  rng::Rng gen(rng::derive(seed, 0x70617468));
  for (std::size_t i = 0; i < out.table.size(); ++i) {
    out.table[i] = static_cast<float>(gen.normal() * stddev);
  }
  return out;
}

std::vector<float> pool_paths(const std::vector<std::vector<std::string>>& item_paths,
                              const PathVocabulary& vocab) {
  const std::size_t d = vocab.table.cols();
  std::vector<float> out(d, 0.0f);
  std::size_t known = 0;
  std::vector<double> acc(d, 0.0);
  for (const auto& p : item_paths) {
    auto it = vocab.ids.find(csv::join_list(p));
    if (it == vocab.ids.end()) continue;
    const float* row = vocab.table.row(it->second);
    for (std::size_t c = 0; c < d; ++c) acc[c] += row[c];
    ++known;
  }
  if (known == 0) return out;
  for (std::size_t c = 0; c < d; ++c) {
    out[c] = static_cast<float>(acc[c] / static_cast<double>(known));
  }
  return out;
}

std::vector<std::string> fit_group_vocab(const ingest::MergedTable& merged,
                                         const std::vector<uint32_t>& rows, SplitRole role,
                                         std::size_t max_size) {
  require_train(role, "group vocabulary");
  std::map<std::string, uint64_t> freq;
  for (uint32_t r : rows) {
    if (!merged.rows[r].group.empty()) ++freq[merged.rows[r].group];
  }
  std::vector<std::pair<std::string, uint64_t>> order(freq.begin(), freq.end());
  std::sort(order.begin(), order.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> out;
  for (const auto& [g, _] : order) {
    if (out.size() >= max_size) break;
    out.push_back(g);
  }
  return out;
}

std::size_t encode_group(const std::string& group, const std::vector<std::string>& vocab) {
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    if (vocab[i] == group) return i;
  }
  return static_cast<std::size_t>(-1);
}

EmbeddingFile load_title_embeddings(const std::string& path, const FeatureSpec& spec) {
  auto is = binio::open_in(path);
  char head[4] = {0, 0, 0, 0};
  is.read(head, 4);
  is.seekg(0);
  EmbeddingFile out;
  if (std::string(head, 4) == kEmbeddingMagic) {
    binio::expect_magic(is, kEmbeddingMagic, path.c_str());
    out.dim = binio::read_le<uint32_t>(is, "embedding dim");
    const auto count = binio::read_le<uint64_t>(is, "embedding count");
    if (out.dim != static_cast<uint32_t>(spec.title_dim)) {
      throw DimensionMismatch("embedding file dim " + std::to_string(out.dim) +
                              " != spec title_dim " + std::to_string(spec.title_dim));
    }
    for (uint64_t i = 0; i < count; ++i) {
      std::string asin = binio::read_string(is, "embedding asin");
      std::vector<float> v(out.dim);
      for (auto& x : v) x = binio::read_le<float>(is, "embedding value");
      out.vectors.emplace(std::move(asin), std::move(v));
    }
    return out;
  }

  // TSV fallback: asin\tv1,...,vd
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw CorruptFile("embedding TSV line " + std::to_string(lineno) + " has no tab");
    }
    std::vector<float> v;
    std::istringstream ss(line.substr(tab + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) v.push_back(std::stof(tok));
    if (out.dim == 0) out.dim = static_cast<uint32_t>(v.size());
    if (v.size() != out.dim) {
      throw CorruptFile("embedding TSV line " + std::to_string(lineno) + " has " +
                        std::to_string(v.size()) + " values, expected " + std::to_string(out.dim));
    }
    out.vectors.emplace(line.substr(0, tab), std::move(v));
  }
  if (out.dim != static_cast<uint32_t>(spec.title_dim)) {
    throw DimensionMismatch("embedding file dim " + std::to_string(out.dim) +
                            " != spec title_dim " + std::to_string(spec.title_dim));
  }
  return out;
}

void save_title_embeddings(const std::string& path, const EmbeddingFile& emb) {
  auto os = binio::open_out(path);
  binio::write_magic(os, kEmbeddingMagic);
  binio::write_le<uint32_t>(os, emb.dim);
  binio::write_le<uint64_t>(os, emb.vectors.size());
  std::map<std::string, const std::vector<float>*> ordered;
  for (const auto& [asin, v] : emb.vectors) ordered[asin] = &v;
  for (const auto& [asin, v] : ordered) {
    binio::write_string(os, asin);
    for (float x : *v) binio::write_le<float>(os, x);
  }
}

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix. a is destroyed;
// eigenvectors come back as columns of v.
void jacobi_eigen(Matd& a, std::vector<double>& evals, Matd& v) {
  const std::size_t d = a.rows();
  v = Matd(d, d);
  for (std::size_t i = 0; i < d; ++i) v(i, i) = 1.0;

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) off += a(p, q) * a(p, q);
    }
    if (off < 1e-24) break;
    for (std::size_t p = 0; p < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < d; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < d; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  evals.resize(d);
  for (std::size_t i = 0; i < d; ++i) evals[i] = a(i, i);
}

}  // namespace

PcaResult pca_fit(const Matf& block, int target) {
  const std::size_t n = block.rows(), d = block.cols();
  if (n < 2) throw ContractError("pca needs >= 2 rows");
  if (target < 1 || static_cast<std::size_t>(target) > d) {
    throw ContractError("pca target must be in [1, input dim]");
  }

  PcaResult out;
  out.col_means.assign(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) out.col_means[c] += block(r, c);
  }
  for (auto& m : out.col_means) m /= static_cast<double>(n);

  Matd centered(n, d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < d; ++c) {
      centered(r, c) = static_cast<double>(block(r, c)) - out.col_means[c];
    }
  }
  Matd cov(d, d);
  kernels::matmul_tn(centered.data(), centered.data(), cov.data(), n, d, d);
  double frob = 0.0;
  for (std::size_t i = 0; i < cov.size(); ++i) {
    cov[i] /= static_cast<double>(n);
    frob += cov[i] * cov[i];
  }
  if (frob == 0.0) throw DegenerateInput("pca: all rows identical");

  std::vector<double> evals;
  Matd evecs;
  jacobi_eigen(cov, evals, evecs);

  std::vector<std::size_t> order(d);
  for (std::size_t i = 0; i < d; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return evals[a] > evals[b]; });

  out.components = Matd(d, static_cast<std::size_t>(target));
  out.eigenvalues.resize(static_cast<std::size_t>(target));
  for (int t = 0; t < target; ++t) {
    const std::size_t src = order[static_cast<std::size_t>(t)];
    out.eigenvalues[static_cast<std::size_t>(t)] = evals[src];
    // Sign convention: the largest-magnitude entry of each component is
    // positive.
    std::size_t arg = 0;
    double best = 0.0;
    for (std::size_t r = 0; r < d; ++r) {
      if (std::abs(evecs(r, src)) > best) {
        best = std::abs(evecs(r, src));
        arg = r;
      }
    }
    const double sign = evecs(arg, src) >= 0.0 ? 1.0 : -1.0;
    for (std::size_t r = 0; r < d; ++r) {
      out.components(r, static_cast<std::size_t>(t)) = sign * evecs(r, src);
    }
  }

  Matd proj(n, static_cast<std::size_t>(target));
  kernels::matmul(centered.data(), out.components.data(), proj.data(), n, d,
                  static_cast<std::size_t>(target));
  out.projected = Matf(n, static_cast<std::size_t>(target));
  for (std::size_t i = 0; i < proj.size(); ++i) {
    out.projected[i] = static_cast<float>(proj[i]);
  }
  return out;
}

Matf pca_reduce(const Matf& block, int target) { return pca_fit(block, target).projected; }

FeatureMatrix assemble_features(const ingest::MergedTable& merged, const EmbeddingFile& emb,
                                const PathVocabulary& vocab, const Standardizer& standardizer,
                                const FeatureSpec& spec, AssembleStats* stats) {
  const std::size_t n = merged.size();
  const auto title_dim = static_cast<std::size_t>(spec.title_dim);
  const auto group_dim = spec.group_vocab.size();
  const auto numeric_dim = spec.numeric_fields.size();
  const auto path_dim = static_cast<std::size_t>(spec.path_dim);
  if (standardizer.mean.size() != numeric_dim) {
    throw DimensionMismatch("standardizer fields != spec numeric fields");
  }
  if (vocab.table.cols() != path_dim) {
    throw DimensionMismatch("path vocabulary dim != spec path_dim");
  }

  // Title block first (possibly PCA-reduced as one block).
  Matf title(n, title_dim);
  AssembleStats local;
  for (std::size_t r = 0; r < n; ++r) {
    auto it = emb.vectors.find(merged.asins[r]);
    if (it == emb.vectors.end()) {
      ++local.missing_title_vectors;  // zero row keeps the cold node usable
      continue;
    }
    for (std::size_t c = 0; c < title_dim; ++c) title(r, c) = it->second[c];
  }
  if (spec.pca_target) title = pca_reduce(title, *spec.pca_target);
  const std::size_t title_out = title.cols();

  FeatureMatrix out;
  const std::size_t total = title_out + group_dim + numeric_dim + path_dim;
  out.data = Matf(n, total);
  out.bounds = {0, title_out, title_out + group_dim, title_out + group_dim + numeric_dim, total};

  std::vector<std::size_t> unseen_groups(n, 0), unseen_paths(n, 0);
  kernels::parallel_for(n, total, [&](std::size_t r) {
    float* row = out.data.row(r);
    const auto& m = merged.rows[r];
    for (std::size_t c = 0; c < title_out; ++c) row[c] = title(r, c);

    const std::size_t g = encode_group(m.group, spec.group_vocab);
    if (g != static_cast<std::size_t>(-1)) {
      row[title_out + g] = 1.0f;
    } else {
      unseen_groups[r] = 1;
    }

    for (std::size_t f = 0; f < numeric_dim; ++f) {
      row[title_out + group_dim + f] = static_cast<float>(
          standardizer.apply(f, m.numeric_field(spec.numeric_fields[f])));
    }

    std::vector<std::vector<std::string>> paths;
    if (!m.path.empty()) paths.push_back(m.path);
    const auto pooled = pool_paths(paths, vocab);
    bool known = false;
    if (!m.path.empty() && vocab.ids.count(csv::join_list(m.path))) known = true;
    if (!known) unseen_paths[r] = 1;
    for (std::size_t c = 0; c < path_dim; ++c) {
      row[title_out + group_dim + numeric_dim + c] = pooled[c];
    }
  });
  for (std::size_t r = 0; r < n; ++r) {
    local.unseen_groups += unseen_groups[r];
    local.unseen_paths += unseen_paths[r];
  }

  if (!out.data.all_finite()) throw NumericError("assembled features contain NaN/Inf");
  if (stats) *stats = local;
  return out;
}

void save_ftm(const std::string& path, const FeatureMatrix& fm) {
  auto os = binio::open_out(path);
  binio::write_magic(os, kFeatureMagic);
  binio::write_le<uint64_t>(os, fm.data.rows());
  binio::write_le<uint32_t>(os, static_cast<uint32_t>(fm.data.cols()));
  for (std::size_t i = 0; i < fm.data.size(); ++i) binio::write_le<float>(os, fm.data[i]);
  if (!os) throw ContractError("write failed: " + path);
}

FeatureMatrix load_ftm(const std::string& path) {
  auto is = binio::open_in(path);
  binio::expect_magic(is, kFeatureMagic, path.c_str());
  const auto n = binio::read_le<uint64_t>(is, "row count");
  const auto d = binio::read_le<uint32_t>(is, "col count");
  FeatureMatrix out;
  out.data = Matf(n, d);
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = binio::read_le<float>(is, "feature value");
  }
  out.bounds = {0, 0, 0, 0, d};
  return out;
}

}  // namespace copg::features
