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

#ifndef COPG_INGEST_HPP_
#define COPG_INGEST_HPP_

#include <cstdint>
#include <iosfwd>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace copg::ingest {

// One review line: "2002-5-13 cutomer: A2IGOA66Y6O8TQ rating: 5 votes: 3
// helpful: 2". The upstream dump misspells "customer"; both spellings parse.
struct ReviewLine {
  std::string date;      // ISO-ish yyyy-m-d as found in the file
  std::string customer;
  int rating = 0;        // 1..5
  int votes = 0;
  int helpful = 0;
};

struct PathSegment {
  std::string name;
  int64_t code = -1;
};

struct RawRecord {
  int64_t id = -1;
  std::string asin;
  std::string title;
  std::string group;
  int64_t salesrank = -1;  // -1 when absent
  std::vector<std::string> similar;
  std::vector<std::vector<PathSegment>> category_paths;
  int64_t reviews_total = 0;
  int64_t reviews_downloaded = 0;
  std::vector<ReviewLine> reviews;
  bool discontinued = false;
};

struct RawRecordSet {
  std::vector<RawRecord> records;
  std::vector<std::string> warnings;  // unknown/irregular lines, non-fatal
};

struct CleanConfig {
  bool keep_discontinued = false;
  // Columns with strong right skew that get the log(1+x) transform.
  std::set<std::string> log_fields = {"salesrank", "reviews_total", "reviews_downloaded"};
};

struct ItemRow {
  std::string title;
  std::string group;
  double salesrank_log = 0.0;
  int64_t category_count = 0;
  std::vector<std::string> similar;
};

struct ItemTable {
  std::map<std::string, ItemRow> rows;  // keyed by asin; ordered for determinism
};

struct CategoryTable {
  std::map<std::string, std::vector<std::string>> path;  // asin -> <=depth segment names
};

struct ReviewRow {
  double total_log = 0.0;
  double downloaded_log = 0.0;
  double avg_ratings = 0.0;
  double avg_votes = 0.0;
  double avg_helpful = 0.0;
};

struct ReviewTable {
  std::map<std::string, ReviewRow> rows;
};

struct MergedRow {
  std::string title;
  std::string group;
  double salesrank_log = 0.0;
  double category_count = 0.0;
  std::vector<std::string> path;
  double reviews_total_log = 0.0;
  double reviews_downloaded_log = 0.0;
  double reviews_avg_ratings = 0.0;
  double reviews_avg_votes = 0.0;
  double reviews_avg_helpful = 0.0;
  std::vector<std::string> similar;  // pruned to surviving asins

  // The seven numeric feature fields, by canonical name.
  double numeric_field(const std::string& name) const;
};

struct MergedTable {
  std::vector<std::string> asins;  // sorted; defines row order
  std::vector<MergedRow> rows;     // parallel to asins

  std::size_t size() const { return asins.size(); }
  const MergedRow* find(const std::string& asin) const;
};

RawRecordSet parse_meta(std::istream& in);

ItemTable clean_items(const RawRecordSet& records, const CleanConfig& cfg = {});
CategoryTable reduce_categories(const RawRecordSet& records, int depth = 4);
ReviewTable aggregate_reviews(const RawRecordSet& records, const CleanConfig& cfg = {});
MergedTable merge_tables(const ItemTable& items, const CategoryTable& cats,
                         const ReviewTable& revs);

// Column-typed CSV emission; list columns are '|'-joined.
void save_item_csv(const std::string& path, const ItemTable& t);
void save_category_csv(const std::string& path, const CategoryTable& t);
void save_review_csv(const std::string& path, const ReviewTable& t);
void save_merged_csv(const std::string& path, const MergedTable& t);
MergedTable load_merged_csv(const std::string& path);

}  // namespace copg::ingest

#endif  // COPG_INGEST_HPP_
