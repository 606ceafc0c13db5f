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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "copg/errors.hpp"
#include "copg/ingest.hpp"

using namespace copg;

namespace {

ingest::RawRecordSet parse_fixture() {
  std::ifstream is(std::string(COPG_TEST_DATA_DIR) + "/fixture_meta.txt");
  REQUIRE(is.good());
  return ingest::parse_meta(is);
}

}  // namespace

TEST_CASE("fixture parses to hand-counted records") {
  auto set = parse_fixture();
  REQUIRE(set.records.size() == 5);

  std::size_t discontinued = 0;
  for (const auto& r : set.records) discontinued += r.discontinued ? 1 : 0;
  CHECK(discontinued == 1);

  const auto& r1 = set.records[0];
  CHECK(r1.id == 1);
  CHECK(r1.asin == "A0000001");
  CHECK(r1.title == "Alpha Book");
  CHECK(r1.group == "Book");
  CHECK(r1.salesrank == 0);
  CHECK(r1.similar == std::vector<std::string>{"A0000002", "A0000004", "A0000005"});
  REQUIRE(r1.category_paths.size() == 2);
  CHECK(r1.category_paths[0].size() == 5);
  CHECK(r1.category_paths[0][0].name == "Books");
  CHECK(r1.category_paths[0][0].code == 100);
  CHECK(r1.category_paths[0][4].name == "United States");
  REQUIRE(r1.reviews.size() == 2);
  CHECK(r1.reviews[0].customer == "C1");
  CHECK(r1.reviews[0].rating == 4);
  CHECK(r1.reviews[0].votes == 3);
  CHECK(r1.reviews[0].helpful == 2);
  CHECK(r1.reviews[1].customer == "C2");  // the corrected spelling parses too
  CHECK(r1.reviews_total == 2);
  CHECK(r1.reviews_downloaded == 2);

  CHECK(set.records[2].reviews.size() == 1);
  CHECK(set.records[3].reviews.empty());
  CHECK(set.records[4].discontinued);
  CHECK(set.records[4].title.empty());

  // The stray "oddity:" line lands in warnings rather than failing.
  bool warned = false;
  for (const auto& w : set.warnings) warned |= w.find("oddity") != std::string::npos;
  CHECK(warned);
}

TEST_CASE("empty stream yields an empty record set") {
  std::istringstream empty("");
  auto set = ingest::parse_meta(empty);
  CHECK(set.records.empty());
  CHECK(set.warnings.empty());
}

TEST_CASE("record missing ASIN is malformed with its line number") {
  std::istringstream bad("Id:   9\n  title: No Asin Here\n\n");
  try {
    ingest::parse_meta(bad);
    FAIL("expected MalformedRecord");
  } catch (const MalformedRecord& e) {
    CHECK(e.line() == 1);
  }
}

TEST_CASE("content before any Id is warned, not fatal") {
  std::istringstream stray("ASIN: A1\n\nId: 1\nASIN: A2\n");
  auto set = ingest::parse_meta(stray);
  CHECK(set.records.size() == 1);
  CHECK(!set.warnings.empty());
}

TEST_CASE("EOF mid-record is a truncated stream") {
  SUBCASE("categories promised but missing") {
    std::istringstream t("Id: 1\nASIN: A1\n  categories: 2\n   |A[1]|B[2]\n");
    CHECK_THROWS_AS(ingest::parse_meta(t), TruncatedStream);
  }
  SUBCASE("reviews promised but missing") {
    std::istringstream t("Id: 1\nASIN: A1\n  reviews: total: 3  downloaded: 2  avg rating: 4\n");
    CHECK_THROWS_AS(ingest::parse_meta(t), TruncatedStream);
  }
}

TEST_CASE("clean_items drops discontinued and log-transforms salesrank") {
  auto set = parse_fixture();
  auto items = ingest::clean_items(set);
  CHECK(items.rows.size() == 4);
  CHECK(items.rows.count("A0000005") == 0);
  CHECK(items.rows.at("A0000001").salesrank_log == 0.0);  // log1p(0)
  CHECK(items.rows.at("A0000002").salesrank_log == doctest::Approx(std::log1p(42.0)));
  CHECK(items.rows.at("A0000001").category_count == 2);

  SUBCASE("keep_discontinued retains the row with zeroed numerics") {
    ingest::CleanConfig cfg;
    cfg.keep_discontinued = true;
    auto kept = ingest::clean_items(set, cfg);
    CHECK(kept.rows.size() == 5);
    CHECK(kept.rows.at("A0000005").salesrank_log == 0.0);
  }

  SUBCASE("cleaning already-clean records is a no-op fixed point") {
    ingest::RawRecordSet clean_only;
    for (const auto& r : set.records) {
      if (!r.discontinued) clean_only.records.push_back(r);
    }
    auto again = ingest::clean_items(clean_only);
    REQUIRE(again.rows.size() == items.rows.size());
    for (const auto& [asin, row] : items.rows) {
      CHECK(again.rows.at(asin).salesrank_log == row.salesrank_log);
      CHECK(again.rows.at(asin).similar == row.similar);
    }
  }

  SUBCASE("log transform honors the configured column list") {
    ingest::CleanConfig cfg;
    cfg.log_fields.erase("salesrank");
    auto raw = ingest::clean_items(set, cfg);
    CHECK(raw.rows.at("A0000002").salesrank_log == 42.0);
  }
}

TEST_CASE("reduce_categories keeps four levels and one row per asin") {
  auto set = parse_fixture();
  auto cats = ingest::reduce_categories(set);
  CHECK(cats.path.size() == 4);  // the discontinued record has no categories
  // Both length-5 paths of record 1 collapse to the same 4-level prefix.
  CHECK(cats.path.at("A0000001") ==
        std::vector<std::string>{"Books", "Subjects", "Fiction", "Drama"});
  CHECK(cats.path.at("A0000002") == std::vector<std::string>{"Music", "Styles", "Jazz"});

  SUBCASE("paths shorter than the cap stay unchanged") {
    ingest::RawRecordSet rs;
    ingest::RawRecord r;
    r.id = 1;
    r.asin = "X";
    r.category_paths = {{{"Top", 1}, {"Sub", 2}}};
    rs.records.push_back(r);
    auto t = ingest::reduce_categories(rs);
    CHECK(t.path.at("X") == std::vector<std::string>{"Top", "Sub"});
  }

  SUBCASE("frequency picks the corpus-dominant path, ties lexicographic") {
    ingest::RawRecordSet rs;
    auto mk = [](const char* asin, std::vector<std::vector<ingest::PathSegment>> paths) {
      ingest::RawRecord r;
      r.asin = asin;
      r.id = 0;
      r.category_paths = std::move(paths);
      return r;
    };
    // "B|C" appears twice corpus-wide, "A|Z" once; item X lists both.
    rs.records.push_back(mk("X", {{{"A", 1}, {"Z", 2}}, {{"B", 1}, {"C", 2}}}));
    rs.records.push_back(mk("Y", {{{"B", 1}, {"C", 2}}}));
    auto t = ingest::reduce_categories(rs);
    CHECK(t.path.at("X") == std::vector<std::string>{"B", "C"});

    // Pure tie: both paths appear once; lexicographically smaller wins.
    ingest::RawRecordSet tie;
    tie.records.push_back(mk("T", {{{"Beta", 1}}, {{"Alpha", 1}}}));
    auto tt = ingest::reduce_categories(tie);
    CHECK(tt.path.at("T") == std::vector<std::string>{"Alpha"});
  }
}

TEST_CASE("aggregate_reviews averages per asin and log-transforms counts") {
  auto set = parse_fixture();
  auto revs = ingest::aggregate_reviews(set);
  CHECK(revs.rows.size() == 3);  // A4 has no downloaded reviews
  const auto& r1 = revs.rows.at("A0000001");
  CHECK(r1.avg_ratings == doctest::Approx(4.5));
  CHECK(r1.avg_votes == doctest::Approx(2.5));
  CHECK(r1.avg_helpful == doctest::Approx(1.5));
  CHECK(r1.total_log == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(r1.downloaded_log == doctest::Approx(std::log(3.0)).epsilon(1e-12));
  CHECK(revs.rows.at("A0000003").total_log == doctest::Approx(std::log1p(3.0)));
}

TEST_CASE("merge_tables inner-joins and prunes similar lists") {
  auto set = parse_fixture();
  auto merged = ingest::merge_tables(ingest::clean_items(set), ingest::reduce_categories(set),
                                     ingest::aggregate_reviews(set));
  REQUIRE(merged.size() == 3);  // A4 lacks reviews, A5 discontinued
  CHECK(merged.asins == std::vector<std::string>{"A0000001", "A0000002", "A0000003"});

  // Prunedness: every similar entry is a key of the merged table.
  for (const auto& row : merged.rows) {
    for (const auto& s : row.similar) CHECK(merged.find(s) != nullptr);
  }
  CHECK(merged.rows[0].similar == std::vector<std::string>{"A0000002"});
  CHECK(merged.rows[1].similar == std::vector<std::string>{"A0000001", "A0000003"});
  CHECK(merged.rows[2].similar.empty());

  SUBCASE("disjoint key sets merge to an empty table") {
    ingest::ItemTable items;
    items.rows["A"] = {};
    ingest::CategoryTable cats;
    cats.path["B"] = {"X"};
    ingest::ReviewTable revs;
    revs.rows["C"] = {};
    CHECK(ingest::merge_tables(items, cats, revs).size() == 0);
  }

  SUBCASE("identical key sets preserve the row count") {
    ingest::ItemTable items;
    ingest::CategoryTable cats;
    ingest::ReviewTable revs;
    for (const char* a : {"A", "B", "C"}) {
      items.rows[a] = {};
      cats.path[a] = {"X"};
      revs.rows[a] = {};
    }
    CHECK(ingest::merge_tables(items, cats, revs).size() == 3);
  }
}

TEST_CASE("merged csv round-trips") {
  auto set = parse_fixture();
  auto merged = ingest::merge_tables(ingest::clean_items(set), ingest::reduce_categories(set),
                                     ingest::aggregate_reviews(set));
  const std::string path = "merged_roundtrip.csv";
  ingest::save_merged_csv(path, merged);
  auto back = ingest::load_merged_csv(path);
  std::remove(path.c_str());

  REQUIRE(back.size() == merged.size());
  CHECK(back.asins == merged.asins);
  for (std::size_t i = 0; i < merged.size(); ++i) {
    CHECK(back.rows[i].title == merged.rows[i].title);
    CHECK(back.rows[i].group == merged.rows[i].group);
    CHECK(back.rows[i].path == merged.rows[i].path);
    CHECK(back.rows[i].similar == merged.rows[i].similar);
    for (const char* f :
         {"salesrank_log", "category_count", "reviews_total_log", "reviews_downloaded_log",
          "reviews_avg_ratings", "reviews_avg_votes", "reviews_avg_helpful"}) {
      CHECK(back.rows[i].numeric_field(f) == merged.rows[i].numeric_field(f));
    }
  }
}

TEST_CASE("csv quoting survives commas and quotes in titles") {
  ingest::MergedTable t;
  t.asins = {"A1"};
  ingest::MergedRow r;
  r.title = "He said \"hi, there\"\nnew line";
  r.group = "Book";
  t.rows.push_back(r);
  const std::string path = "quoting_roundtrip.csv";
  ingest::save_merged_csv(path, t);
  auto back = ingest::load_merged_csv(path);
  std::remove(path.c_str());
  REQUIRE(back.size() == 1);
  CHECK(back.rows[0].title == r.title);
}
