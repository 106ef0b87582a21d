#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace psc {

struct RowEntry {
  std::int64_t column = 0;
  double value = 0.0;
};

// Sparse matrix row: strictly increasing columns, finite nonzero values.
// Absent columns read as zero.
struct SparseRow {
  std::vector<RowEntry> entries;

  double value_at(std::int64_t column) const;
};

using RowPtr = std::shared_ptr<const SparseRow>;  // nullptr means absent key

struct RowKey {
  std::string table;
  std::int64_t row = 0;
};

// In-memory row-keyed table store shared by all workers.  Tables are created
// implicitly on first write and sharded internally so writes to distinct rows
// don't contend.  Rows are immutable once handed out: a put installs a fresh
// row, readers holding the old one are unaffected.
class KvStore {
 public:
  KvStore() = default;
  KvStore(const KvStore&) = delete;
  KvStore& operator=(const KvStore&) = delete;

  // Replaces the whole row (no merge with what was there).
  void put_row(const RowKey& key, SparseRow row);

  // Overlays individual cells onto the row; last write per column wins and a
  // zero value clears the cell.  Cheap: cells are buffered and folded into
  // the row on next read.
  void put_cells(const RowKey& key, std::vector<RowEntry> cells);

  RowPtr get_row(const RowKey& key) const;

  // Rows with lo <= row < hi, ascending.
  std::vector<std::pair<std::int64_t, RowPtr>> scan(const std::string& table, std::int64_t lo,
                                                    std::int64_t hi) const;

  void drop_table(const std::string& table);
  std::int64_t row_count(const std::string& table) const;

  // Single-file binary snapshot, row-ordered; load replaces any existing
  // table of the same name and returns that name.
  void save_table(const std::string& table, const std::string& path) const;
  std::string load_table(const std::string& path);

 private:
  static constexpr std::size_t kShards = 64;

  struct RowState {
    RowPtr committed;
    std::vector<RowEntry> pending;  // cell overlays newer than `committed`
  };
  struct Shard {
    mutable std::mutex mu;
    std::unordered_map<std::int64_t, RowState> rows;
  };
  struct Table {
    std::array<Shard, kShards> shards;
  };

  std::shared_ptr<Table> table_for(const std::string& name, bool create) const;
  static RowPtr settle(RowState& state);

  mutable std::mutex tables_mu_;
  mutable std::unordered_map<std::string, std::shared_ptr<Table>> tables_;
};

}  // namespace psc
