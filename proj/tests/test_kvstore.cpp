#include "doctest.h"

#include "pscluster/errors.hpp"
#include "pscluster/kvstore.hpp"

#include <cstdio>
#include <filesystem>
#include <string>
#include <thread>
#include <vector>

using namespace psc;

namespace {

SparseRow row_of(std::vector<RowEntry> entries) {
  SparseRow r;
  r.entries = std::move(entries);
  return r;
}

std::string temp_path(const char* stem) {
  return (std::filesystem::temp_directory_path() / stem).string();
}

}  // namespace

TEST_SUITE_BEGIN("kvstore");

TEST_CASE("absent rows read as null, absent columns as zero") {
  KvStore store;
  CHECK(store.get_row({"S", 3}) == nullptr);
  store.put_row({"S", 3}, row_of({{1, 0.5}, {4, 2.0}}));
  RowPtr r = store.get_row({"S", 3});
  REQUIRE(r != nullptr);
  CHECK(r->value_at(1) == 0.5);
  CHECK(r->value_at(4) == 2.0);
  CHECK(r->value_at(2) == 0.0);
  CHECK(store.get_row({"other", 3}) == nullptr);
}

TEST_CASE("put_row replaces the whole row") {
  KvStore store;
  store.put_row({"S", 0}, row_of({{0, 1.0}, {1, 2.0}}));
  store.put_row({"S", 0}, row_of({{2, 3.0}}));
  RowPtr r = store.get_row({"S", 0});
  REQUIRE(r != nullptr);
  CHECK(r->value_at(0) == 0.0);
  CHECK(r->value_at(1) == 0.0);
  CHECK(r->value_at(2) == 3.0);
}

TEST_CASE("rows handed out are immutable snapshots") {
  KvStore store;
  store.put_row({"S", 0}, row_of({{0, 1.0}}));
  RowPtr before = store.get_row({"S", 0});
  store.put_row({"S", 0}, row_of({{0, 9.0}}));
  CHECK(before->value_at(0) == 1.0);
  CHECK(store.get_row({"S", 0})->value_at(0) == 9.0);
}

TEST_CASE("put_cells overlays per column, last write wins, zero clears") {
  KvStore store;
  store.put_row({"S", 1}, row_of({{0, 1.0}, {2, 2.0}}));
  store.put_cells({"S", 1}, {{2, 5.0}, {3, 7.0}});
  store.put_cells({"S", 1}, {{3, 8.0}, {0, 0.0}});
  RowPtr r = store.get_row({"S", 1});
  REQUIRE(r != nullptr);
  CHECK(r->value_at(0) == 0.0);  // cleared by the zero overlay
  CHECK(r->value_at(2) == 5.0);
  CHECK(r->value_at(3) == 8.0);  // second overlay beat the first
  // The settled row holds no explicit zero entry.
  for (const RowEntry& e : r->entries) CHECK(e.value != 0.0);
  CHECK(r->entries.size() == 2);
}

TEST_CASE("put_cells on a fresh key creates the row") {
  KvStore store;
  store.put_cells({"S", 9}, {{4, 1.5}});
  RowPtr r = store.get_row({"S", 9});
  REQUIRE(r != nullptr);
  CHECK(r->value_at(4) == 1.5);
  CHECK(store.row_count("S") == 1);
}

TEST_CASE("malformed rows are rejected") {
  KvStore store;
  // Columns must be strictly increasing.
  CHECK_THROWS_AS(store.put_row({"S", 0}, row_of({{2, 1.0}, {1, 1.0}})), DomainError);
  CHECK_THROWS_AS(store.put_row({"S", 0}, row_of({{1, 1.0}, {1, 2.0}})), DomainError);
  // No explicit zeros, no non-finite values, no negative keys.
  CHECK_THROWS_AS(store.put_row({"S", 0}, row_of({{1, 0.0}})), DomainError);
  CHECK_THROWS_AS(store.put_row({"S", 0}, row_of({{1, 1.0 / 0.0}})), DomainError);
  CHECK_THROWS_AS(store.put_row({"S", -1}, row_of({{1, 1.0}})), DomainError);
  CHECK_THROWS_AS(store.put_row({"S", 0}, row_of({{-1, 1.0}})), DomainError);
}

TEST_CASE("scan returns the half-open row range in ascending order") {
  KvStore store;
  for (std::int64_t i : {5, 1, 3, 8}) store.put_row({"T", i}, row_of({{0, double(i)}}));
  auto rows = store.scan("T", 1, 8);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].first == 1);
  CHECK(rows[1].first == 3);
  CHECK(rows[2].first == 5);
  CHECK(rows[2].second->value_at(0) == 5.0);
  CHECK(store.scan("T", 0, 0).empty());
  CHECK(store.scan("missing", 0, 100).empty());
  CHECK_THROWS_AS(store.scan("T", 5, 1), DomainError);
}

TEST_CASE("scan settles pending cell overlays") {
  KvStore store;
  store.put_cells({"T", 2}, {{0, 4.0}});
  auto rows = store.scan("T", 0, 10);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].second->value_at(0) == 4.0);
}

TEST_CASE("drop_table forgets rows; row_count tracks live rows") {
  KvStore store;
  store.put_row({"T", 0}, row_of({{0, 1.0}}));
  store.put_row({"T", 7}, row_of({{0, 1.0}}));
  CHECK(store.row_count("T") == 2);
  store.drop_table("T");
  CHECK(store.row_count("T") == 0);
  CHECK(store.get_row({"T", 0}) == nullptr);
}

TEST_CASE("empty row differs from absent row") {
  KvStore store;
  store.put_row({"T", 0}, SparseRow{});
  RowPtr r = store.get_row({"T", 0});
  REQUIRE(r != nullptr);
  CHECK(r->entries.empty());
  CHECK(store.row_count("T") == 1);
}

TEST_CASE("snapshot round-trips a table byte-exactly") {
  KvStore store;
  store.put_row({"S", 0}, row_of({{0, 1.0}, {3, 0.25}}));
  store.put_row({"S", 5}, row_of({{1, -2.5}}));
  store.put_cells({"S", 2}, {{2, 9.0}});
  const std::string path = temp_path("pscluster_kv_test.snap");
  store.save_table("S", path);

  KvStore other;
  CHECK(other.load_table(path) == "S");
  CHECK(other.row_count("S") == 3);
  CHECK(other.get_row({"S", 0})->value_at(3) == 0.25);
  CHECK(other.get_row({"S", 2})->value_at(2) == 9.0);
  CHECK(other.get_row({"S", 5})->value_at(1) == -2.5);

  // Loading replaces an existing table of that name outright.
  other.put_row({"S", 99}, row_of({{0, 1.0}}));
  CHECK(other.load_table(path) == "S");
  CHECK(other.get_row({"S", 99}) == nullptr);
  std::remove(path.c_str());
}

TEST_CASE("snapshot layout is little-endian length-prefixed") {
  KvStore store;
  store.put_row({"AB", 1}, row_of({{2, 1.0}}));
  const std::string path = temp_path("pscluster_kv_layout.snap");
  store.save_table("AB", path);

  std::FILE* f = std::fopen(path.c_str(), "rb");
  REQUIRE(f != nullptr);
  unsigned char buf[64] = {};
  std::size_t got = std::fread(buf, 1, sizeof buf, f);
  std::fclose(f);
  std::remove(path.c_str());

  // name length 2, "AB", row count 1, row id 1, entry count 1, column 2,
  // then the 8 bytes of 1.0 (LE: 0 .. 0x3f f0 reversed).
  REQUIRE(got == 8 + 2 + 8 + 8 + 8 + 8 + 8);
  CHECK(buf[0] == 2);
  CHECK(buf[8] == 'A');
  CHECK(buf[9] == 'B');
  CHECK(buf[10] == 1);   // row count
  CHECK(buf[18] == 1);   // row id
  CHECK(buf[26] == 1);   // entry count
  CHECK(buf[34] == 2);   // column
  CHECK(buf[48] == 0xf0);
  CHECK(buf[49] == 0x3f);
}

TEST_CASE("truncated snapshots raise IoError") {
  KvStore store;
  store.put_row({"S", 0}, row_of({{0, 1.0}}));
  const std::string path = temp_path("pscluster_kv_trunc.snap");
  store.save_table("S", path);
  std::error_code ec;
  std::filesystem::resize_file(path, 20, ec);
  REQUIRE(!ec);
  KvStore other;
  CHECK_THROWS_AS(other.load_table(path), IoError);
  std::remove(path.c_str());
}

TEST_CASE("concurrent cell writes to one row all land") {
  KvStore store;
  std::vector<std::thread> writers;
  for (int t = 0; t < 8; ++t) {
    writers.emplace_back([&store, t] {
      for (std::int64_t c = 0; c < 64; ++c)
        store.put_cells({"W", 0}, {{t * 64 + c, 1.0}});
    });
  }
  for (auto& th : writers) th.join();
  RowPtr r = store.get_row({"W", 0});
  REQUIRE(r != nullptr);
  CHECK(r->entries.size() == 8 * 64);
  for (std::int64_t c = 0; c < 8 * 64; ++c) CHECK(r->value_at(c) == 1.0);
}

TEST_SUITE_END();
