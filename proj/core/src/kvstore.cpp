#include "pscluster/kvstore.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include "pscluster/errors.hpp"

namespace psc {
namespace {

void check_key(const RowKey& key) {
  if (key.table.empty()) throw DomainError("table name must be nonempty");
  if (key.row < 0) throw DomainError("row index must be nonnegative");
}

void check_row(const SparseRow& row) {
  std::int64_t prev = -1;
  for (const auto& e : row.entries) {
    if (e.column <= prev) throw DomainError("row columns must be strictly increasing");
    if (!std::isfinite(e.value)) throw DomainError("row values must be finite");
    if (e.value == 0.0) throw DomainError("rows must not store explicit zeros");
    prev = e.column;
  }
}

}  // namespace

double SparseRow::value_at(std::int64_t column) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), column,
                             [](const RowEntry& e, std::int64_t c) { return e.column < c; });
  return (it != entries.end() && it->column == column) ? it->value : 0.0;
}

std::shared_ptr<KvStore::Table> KvStore::table_for(const std::string& name, bool create) const {
  std::lock_guard<std::mutex> lock(tables_mu_);
  auto it = tables_.find(name);
  if (it != tables_.end()) return it->second;
  if (!create) return nullptr;
  auto table = std::make_shared<Table>();
  tables_.emplace(name, table);
  return table;
}

// Folds buffered cell overlays into the committed row.  Caller holds the
// shard lock.
RowPtr KvStore::settle(RowState& state) {
  if (state.pending.empty()) return state.committed;
  std::map<std::int64_t, double> merged;
  if (state.committed)
    for (const auto& e : state.committed->entries) merged[e.column] = e.value;
  for (const auto& e : state.pending) merged[e.column] = e.value;
  auto row = std::make_shared<SparseRow>();
  row->entries.reserve(merged.size());
  for (const auto& [col, val] : merged)
    if (val != 0.0) row->entries.push_back({col, val});
  state.committed = std::move(row);
  state.pending.clear();
  return state.committed;
}

void KvStore::put_row(const RowKey& key, SparseRow row) {
  check_key(key);
  check_row(row);
  auto table = table_for(key.table, true);
  Shard& shard = table->shards[static_cast<std::size_t>(key.row) % kShards];
  auto committed = std::make_shared<const SparseRow>(std::move(row));
  std::lock_guard<std::mutex> lock(shard.mu);
  RowState& state = shard.rows[key.row];
  state.committed = std::move(committed);
  state.pending.clear();
}

void KvStore::put_cells(const RowKey& key, std::vector<RowEntry> cells) {
  check_key(key);
  for (const auto& e : cells) {
    if (e.column < 0) throw DomainError("cell columns must be nonnegative");
    if (!std::isfinite(e.value)) throw DomainError("cell values must be finite");
  }
  auto table = table_for(key.table, true);
  Shard& shard = table->shards[static_cast<std::size_t>(key.row) % kShards];
  std::lock_guard<std::mutex> lock(shard.mu);
  RowState& state = shard.rows[key.row];
  if (!state.committed && state.pending.empty()) state.committed = std::make_shared<SparseRow>();
  state.pending.insert(state.pending.end(), cells.begin(), cells.end());
}

RowPtr KvStore::get_row(const RowKey& key) const {
  check_key(key);
  auto table = table_for(key.table, false);
  if (!table) return nullptr;
  Shard& shard = table->shards[static_cast<std::size_t>(key.row) % kShards];
  std::lock_guard<std::mutex> lock(shard.mu);
  auto it = shard.rows.find(key.row);
  if (it == shard.rows.end()) return nullptr;
  return settle(it->second);
}

std::vector<std::pair<std::int64_t, RowPtr>> KvStore::scan(const std::string& table,
                                                           std::int64_t lo, std::int64_t hi) const {
  if (table.empty()) throw DomainError("table name must be nonempty");
  if (lo > hi) throw DomainError("scan range must have lo <= hi");
  std::vector<std::pair<std::int64_t, RowPtr>> out;
  auto t = table_for(table, false);
  if (!t) return out;
  for (auto& shard : t->shards) {
    std::lock_guard<std::mutex> lock(shard.mu);
    for (auto& [row, state] : shard.rows)
      if (row >= lo && row < hi) out.emplace_back(row, settle(state));
  }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  return out;
}

void KvStore::drop_table(const std::string& table) {
  std::lock_guard<std::mutex> lock(tables_mu_);
  tables_.erase(table);
}

std::int64_t KvStore::row_count(const std::string& table) const {
  auto t = table_for(table, false);
  if (!t) return 0;
  std::int64_t n = 0;
  for (auto& shard : t->shards) {
    std::lock_guard<std::mutex> lock(shard.mu);
    n += static_cast<std::int64_t>(shard.rows.size());
  }
  return n;
}

namespace {

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& buf, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, sizeof bits);
  put_u64(buf, bits);
}

std::uint64_t take_u64(std::istream& in) {
  unsigned char bytes[8];
  in.read(reinterpret_cast<char*>(bytes), 8);
  if (!in) throw IoError("truncated table snapshot");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
  return v;
}

double take_f64(std::istream& in) {
  std::uint64_t bits = take_u64(in);
  double v;
  std::memcpy(&v, &bits, sizeof v);
  return v;
}

}  // namespace

void KvStore::save_table(const std::string& table, const std::string& path) const {
  auto rows = scan(table, 0, std::numeric_limits<std::int64_t>::max());
  std::string buf;
  put_u64(buf, table.size());
  buf += table;
  put_u64(buf, rows.size());
  for (const auto& [row, ptr] : rows) {
    put_u64(buf, static_cast<std::uint64_t>(row));
    put_u64(buf, ptr->entries.size());
    for (const auto& e : ptr->entries) {
      put_u64(buf, static_cast<std::uint64_t>(e.column));
      put_f64(buf, e.value);
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open snapshot file " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("failed writing snapshot file " + path);
}

std::string KvStore::load_table(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open snapshot file " + path);
  std::uint64_t name_len = take_u64(in);
  if (name_len == 0 || name_len > (1u << 20)) throw IoError("corrupt snapshot table name");
  std::string name(name_len, '\0');
  in.read(name.data(), static_cast<std::streamsize>(name_len));
  if (!in) throw IoError("truncated table snapshot");

  drop_table(name);
  std::uint64_t row_total = take_u64(in);
  for (std::uint64_t r = 0; r < row_total; ++r) {
    std::int64_t row = static_cast<std::int64_t>(take_u64(in));
    std::uint64_t entry_total = take_u64(in);
    SparseRow sparse;
    sparse.entries.reserve(entry_total);
    for (std::uint64_t e = 0; e < entry_total; ++e) {
      std::int64_t column = static_cast<std::int64_t>(take_u64(in));
      double value = take_f64(in);
      sparse.entries.push_back({column, value});
    }
    put_row({name, row}, std::move(sparse));
  }
  return name;
}

}  // namespace psc
