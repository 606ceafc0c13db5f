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

#include "copg/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "copg/csv.hpp"
#include "copg/errors.hpp"

namespace copg::ingest {

namespace {

std::string strip(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool consume_prefix(const std::string& s, const char* prefix, std::string& rest) {
  const std::size_t n = std::char_traits<char>::length(prefix);
  if (s.compare(0, n, prefix) != 0) return false;
  rest = strip(s.substr(n));
  return true;
}

std::optional<int64_t> parse_int(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t pos = 0;
    int64_t v = std::stoll(s, &pos);
    if (pos != s.size()) return std::nullopt;
    return v;
  } catch (...) {
    return std::nullopt;
  }
}

// "|Books[283155]|Subjects[1000]|..." -> segments
std::vector<PathSegment> parse_category_path(const std::string& line) {
  std::vector<PathSegment> out;
  std::size_t i = 0;
  if (i < line.size() && line[i] == '|') ++i;
  while (i < line.size()) {
    std::size_t bar = line.find('|', i);
    std::string seg = line.substr(i, bar == std::string::npos ? std::string::npos : bar - i);
    PathSegment ps;
    std::size_t lb = seg.rfind('[');
    if (lb != std::string::npos && seg.back() == ']') {
      ps.name = seg.substr(0, lb);
      auto code = parse_int(seg.substr(lb + 1, seg.size() - lb - 2));
      ps.code = code.value_or(-1);
    } else {
      ps.name = seg;
    }
    out.push_back(std::move(ps));
    if (bar == std::string::npos) break;
    i = bar + 1;
  }
  return out;
}

// "2002-5-13  cutomer: A2IGOA66Y6O8TQ  rating: 5  votes: 3  helpful: 2"
std::optional<ReviewLine> parse_review_line(const std::string& line) {
  std::istringstream ss(line);
  ReviewLine r;
  std::string tok;
  if (!(ss >> r.date)) return std::nullopt;
  while (ss >> tok) {
    if (tok == "cutomer:" || tok == "customer:") {
      if (!(ss >> r.customer)) return std::nullopt;
    } else if (tok == "rating:") {
      if (!(ss >> r.rating)) return std::nullopt;
    } else if (tok == "votes:") {
      if (!(ss >> r.votes)) return std::nullopt;
    } else if (tok == "helpful:") {
      if (!(ss >> r.helpful)) return std::nullopt;
    } else {
      return std::nullopt;
    }
  }
  return r;
}

double maybe_log1p(double v, bool log_it) { return log_it ? std::log1p(v) : v; }

}  // namespace

RawRecordSet parse_meta(std::istream& in) {
  RawRecordSet out;
  std::string line;
  std::size_t lineno = 0;

  std::optional<RawRecord> cur;
  std::size_t cur_start = 0;
  bool has_id = false, has_asin = false;
  int64_t pending_categories = 0;
  int64_t pending_reviews = 0;

  auto warn = [&](const std::string& msg) {
    out.warnings.push_back("line " + std::to_string(lineno) + ": " + msg);
  };

  auto finish = [&]() {
    if (!cur) return;
    if (!has_id || !has_asin) {
      throw MalformedRecord(has_id ? "missing ASIN" : "missing Id", cur_start);
    }
    if (pending_categories > 0 || pending_reviews > 0) {
      warn("record ended with " + std::to_string(pending_categories) + " category and " +
           std::to_string(pending_reviews) + " review lines outstanding");
    }
    out.records.push_back(std::move(*cur));
    cur.reset();
    has_id = has_asin = false;
    pending_categories = pending_reviews = 0;
  };

  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string body = strip(line);

    if (body.empty()) {
      finish();
      continue;
    }
    if (body[0] == '#') continue;  // file-level comment

    std::string rest;
    if (consume_prefix(body, "Id:", rest)) {
      finish();  // a new Id starts a record even without a blank separator
      cur.emplace();
      cur_start = lineno;
      auto id = parse_int(rest);
      if (!id) throw MalformedRecord("unparseable Id '" + rest + "'", lineno);
      cur->id = *id;
      has_id = true;
      continue;
    }
    if (!cur) {
      warn("content outside any record: " + body);
      continue;
    }

    if (pending_reviews > 0) {
      auto r = parse_review_line(body);
      if (r) {
        if (r->helpful > r->votes) warn("review with helpful > votes");
        cur->reviews.push_back(std::move(*r));
        --pending_reviews;
        continue;
      }
      warn("expected review line, got: " + body);
      pending_reviews = 0;
      // fall through and retry as a field line
    }
    if (pending_categories > 0) {
      if (body[0] == '|') {
        cur->category_paths.push_back(parse_category_path(body));
        --pending_categories;
        continue;
      }
      warn("expected category path line, got: " + body);
      pending_categories = 0;
    }

    if (consume_prefix(body, "ASIN:", rest)) {
      cur->asin = rest;
      has_asin = !rest.empty();
      if (rest.empty()) throw MalformedRecord("empty ASIN", lineno);
    } else if (body == "discontinued product") {
      cur->discontinued = true;
    } else if (consume_prefix(body, "title:", rest)) {
      cur->title = rest;
    } else if (consume_prefix(body, "group:", rest)) {
      cur->group = rest;
    } else if (consume_prefix(body, "salesrank:", rest)) {
      cur->salesrank = parse_int(rest).value_or(-1);
    } else if (consume_prefix(body, "similar:", rest)) {
      std::istringstream ss(rest);
      int64_t count = 0;
      ss >> count;
      std::string asin;
      while (ss >> asin) cur->similar.push_back(asin);
      if (count != static_cast<int64_t>(cur->similar.size())) {
        warn("similar count " + std::to_string(count) + " != listed " +
             std::to_string(cur->similar.size()));
      }
    } else if (consume_prefix(body, "categories:", rest)) {
      pending_categories = parse_int(rest).value_or(0);
    } else if (consume_prefix(body, "reviews:", rest)) {
      // "total: T  downloaded: D  avg rating: R"
      std::istringstream ss(rest);
      std::string tok;
      while (ss >> tok) {
        if (tok == "total:") {
          ss >> cur->reviews_total;
        } else if (tok == "downloaded:") {
          ss >> cur->reviews_downloaded;
        } else if (tok == "avg") {
          ss >> tok;  // "rating:"
          double avg;
          ss >> avg;
        }
      }
      pending_reviews = cur->reviews_downloaded;
    } else {
      warn("unrecognized line: " + body);
    }
  }

  if (cur && (pending_categories > 0 || pending_reviews > 0)) {
    throw TruncatedStream("EOF while record starting at line " + std::to_string(cur_start) +
                          " still expects " + std::to_string(pending_categories) +
                          " category and " + std::to_string(pending_reviews) + " review lines");
  }
  finish();
  return out;
}

ItemTable clean_items(const RawRecordSet& records, const CleanConfig& cfg) {
  ItemTable out;
  const bool log_rank = cfg.log_fields.count("salesrank") > 0;
  for (const auto& r : records.records) {
    if (r.discontinued && !cfg.keep_discontinued) continue;
    ItemRow row;
    row.title = r.title;
    row.group = r.group;
    // Missing salesrank (-1 in the raw file) is treated as 0 before log1p.
    const double rank = static_cast<double>(std::max<int64_t>(r.salesrank, 0));
    row.salesrank_log = maybe_log1p(rank, log_rank);
    row.category_count = static_cast<int64_t>(r.category_paths.size());
    row.similar = r.similar;
    out.rows[r.asin] = std::move(row);
  }
  return out;
}

CategoryTable reduce_categories(const RawRecordSet& records, int depth) {
  if (depth < 1) throw ContractError("category depth must be >= 1");

  auto truncate_join = [&](const std::vector<PathSegment>& path) {
    std::vector<std::string> names;
    const std::size_t keep = std::min<std::size_t>(path.size(), static_cast<std::size_t>(depth));
    names.reserve(keep);
    for (std::size_t i = 0; i < keep; ++i) names.push_back(path[i].name);
    return names;
  };

  // Corpus-wide frequency of truncated paths (every occurrence counts).
  std::unordered_map<std::string, uint64_t> freq;
  for (const auto& r : records.records) {
    for (const auto& p : r.category_paths) {
      freq[csv::join_list(truncate_join(p))]++;
    }
  }

  CategoryTable out;
  for (const auto& r : records.records) {
    if (r.category_paths.empty()) continue;
    std::string best_key;
    uint64_t best_count = 0;
    std::vector<std::string> best_path;
    for (const auto& p : r.category_paths) {
      auto names = truncate_join(p);
      const std::string key = csv::join_list(names);
      const uint64_t c = freq[key];
      // Highest frequency wins; ties break by lexicographic path order.
      if (best_key.empty() || c > best_count || (c == best_count && key < best_key)) {
        best_key = key;
        best_count = c;
        best_path = std::move(names);
      }
    }
    out.path[r.asin] = std::move(best_path);
  }
  return out;
}

ReviewTable aggregate_reviews(const RawRecordSet& records, const CleanConfig& cfg) {
  ReviewTable out;
  const bool log_total = cfg.log_fields.count("reviews_total") > 0;
  const bool log_down = cfg.log_fields.count("reviews_downloaded") > 0;
  for (const auto& r : records.records) {
    if (r.reviews.empty()) continue;
    ReviewRow row;
    double sr = 0, sv = 0, sh = 0;
    for (const auto& rv : r.reviews) {
      sr += rv.rating;
      sv += rv.votes;
      sh += rv.helpful;
    }
    const auto n = static_cast<double>(r.reviews.size());
    row.avg_ratings = sr / n;
    row.avg_votes = sv / n;
    row.avg_helpful = sh / n;
    row.total_log = maybe_log1p(static_cast<double>(r.reviews_total), log_total);
    row.downloaded_log = maybe_log1p(static_cast<double>(r.reviews_downloaded), log_down);
    out.rows[r.asin] = row;
  }
  return out;
}

MergedTable merge_tables(const ItemTable& items, const CategoryTable& cats,
                         const ReviewTable& revs) {
  MergedTable out;
  for (const auto& [asin, item] : items.rows) {
    auto cit = cats.path.find(asin);
    auto rit = revs.rows.find(asin);
    if (cit == cats.path.end() || rit == revs.rows.end()) continue;
    MergedRow row;
    row.title = item.title;
    row.group = item.group;
    row.salesrank_log = item.salesrank_log;
    row.category_count = static_cast<double>(item.category_count);
    row.path = cit->second;
    row.reviews_total_log = rit->second.total_log;
    row.reviews_downloaded_log = rit->second.downloaded_log;
    row.reviews_avg_ratings = rit->second.avg_ratings;
    row.reviews_avg_votes = rit->second.avg_votes;
    row.reviews_avg_helpful = rit->second.avg_helpful;
    row.similar = item.similar;  // pruned below once the key set is known
    out.asins.push_back(asin);
    out.rows.push_back(std::move(row));
  }
  // Prune similar lists to asins that survived the join.
  std::unordered_map<std::string, bool> alive;
  for (const auto& a : out.asins) alive[a] = true;
  for (auto& row : out.rows) {
    std::vector<std::string> kept;
    for (auto& s : row.similar) {
      if (alive.count(s)) kept.push_back(s);
    }
    row.similar = std::move(kept);
  }
  return out;
}

double MergedRow::numeric_field(const std::string& name) const {
  if (name == "salesrank_log") return salesrank_log;
  if (name == "category_count") return category_count;
  if (name == "reviews_total_log") return reviews_total_log;
  if (name == "reviews_downloaded_log") return reviews_downloaded_log;
  if (name == "reviews_avg_ratings") return reviews_avg_ratings;
  if (name == "reviews_avg_votes") return reviews_avg_votes;
  if (name == "reviews_avg_helpful") return reviews_avg_helpful;
  throw ContractError("unknown numeric field: " + name);
}

const MergedRow* MergedTable::find(const std::string& asin) const {
  auto it = std::lower_bound(asins.begin(), asins.end(), asin);
  if (it == asins.end() || *it != asin) return nullptr;
  return &rows[static_cast<std::size_t>(it - asins.begin())];
}

namespace {

std::ofstream open_text(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw ContractError("cannot open for writing: " + path);
  return os;
}

}  // namespace

void save_item_csv(const std::string& path, const ItemTable& t) {
  auto os = open_text(path);
  csv::write_row(os, {"asin", "title", "group", "salesrank_log", "category_count", "similar"});
  for (const auto& [asin, row] : t.rows) {
    csv::write_row(os, {asin, row.title, row.group, csv::format_double(row.salesrank_log),
                        std::to_string(row.category_count), csv::join_list(row.similar)});
  }
}

void save_category_csv(const std::string& path, const CategoryTable& t) {
  auto os = open_text(path);
  csv::write_row(os, {"asin", "path"});
  for (const auto& [asin, path_names] : t.path) {
    csv::write_row(os, {asin, csv::join_list(path_names)});
  }
}

void save_review_csv(const std::string& path, const ReviewTable& t) {
  auto os = open_text(path);
  csv::write_row(os, {"asin", "reviews_total_log", "reviews_downloaded_log",
                      "reviews_avg_ratings", "reviews_avg_votes", "reviews_avg_helpful"});
  for (const auto& [asin, r] : t.rows) {
    csv::write_row(os, {asin, csv::format_double(r.total_log), csv::format_double(r.downloaded_log),
                        csv::format_double(r.avg_ratings), csv::format_double(r.avg_votes),
                        csv::format_double(r.avg_helpful)});
  }
}

namespace {
const std::vector<std::string> kMergedHeader = {
    "asin", "title", "group", "salesrank_log", "category_count", "path",
    "reviews_total_log", "reviews_downloaded_log", "reviews_avg_ratings",
    "reviews_avg_votes", "reviews_avg_helpful", "similar"};
}  // namespace

void save_merged_csv(const std::string& path, const MergedTable& t) {
  auto os = open_text(path);
  csv::write_row(os, kMergedHeader);
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto& r = t.rows[i];
    csv::write_row(
        os, {t.asins[i], r.title, r.group, csv::format_double(r.salesrank_log),
             csv::format_double(r.category_count), csv::join_list(r.path),
             csv::format_double(r.reviews_total_log), csv::format_double(r.reviews_downloaded_log),
             csv::format_double(r.reviews_avg_ratings), csv::format_double(r.reviews_avg_votes),
             csv::format_double(r.reviews_avg_helpful), csv::join_list(r.similar)});
  }
}

MergedTable load_merged_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ContractError("cannot open for reading: " + path);
  std::vector<std::string> row;
  if (!csv::read_row(is, row) || row != kMergedHeader) {
    throw CorruptFile("bad merged.csv header in " + path);
  }
  MergedTable out;
  while (csv::read_row(is, row)) {
    if (row.size() != kMergedHeader.size()) {
      throw CorruptFile("bad merged.csv row width in " + path);
    }
    MergedRow r;
    r.title = row[1];
    r.group = row[2];
    r.salesrank_log = std::stod(row[3]);
    r.category_count = std::stod(row[4]);
    r.path = csv::split_list(row[5]);
    r.reviews_total_log = std::stod(row[6]);
    r.reviews_downloaded_log = std::stod(row[7]);
    r.reviews_avg_ratings = std::stod(row[8]);
    r.reviews_avg_votes = std::stod(row[9]);
    r.reviews_avg_helpful = std::stod(row[10]);
    r.similar = csv::split_list(row[11]);
    out.asins.push_back(row[0]);
    out.rows.push_back(std::move(r));
  }
  return out;
}

}  // namespace copg::ingest
