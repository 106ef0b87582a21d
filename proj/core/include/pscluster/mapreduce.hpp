#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "pscluster/errors.hpp"

namespace psc::mr {

// Named nonnegative-deltas-allowed counters, merged across tasks at job end.
class Counters {
 public:
  void add(const std::string& name, std::int64_t delta);
  std::int64_t get(const std::string& name) const;
  void merge(const Counters& other);
  const std::map<std::string, std::int64_t>& values() const { return values_; }

 private:
  std::map<std::string, std::int64_t> values_;
};

// Per-stage instrumentation: wall clock, merged op counters, and the per-map-
// task counter breakdown (task order) for load-balance checks.
struct TimingReport {
  std::string stage;
  int workers = 0;
  double wall_seconds = 0.0;
  Counters op_counters;
  std::vector<Counters> task_counters;

  // Header plus one `stage,m,wall_seconds,counter_name,counter_value` row per
  // merged counter.
  std::string to_csv() const;
};

// Fixed pool of m long-lived worker threads fed from a shared task queue.
class Engine {
 public:
  explicit Engine(int workers);
  ~Engine();
  Engine(const Engine&) = delete;
  Engine& operator=(const Engine&) = delete;

  int workers() const { return workers_; }

  // Runs fn(task_index) for every index in [0, count), spread over the pool;
  // returns after all complete.  The first failing task's exception (lowest
  // index) is rethrown.
  void run_tasks(std::size_t count, const std::function<void(std::size_t)>& fn);

  // Splits keys into exactly 2m contiguous runs whose sizes differ by at
  // most 1 (each machine gets two map tasks).
  static std::vector<std::vector<std::int64_t>> partition(const std::vector<std::int64_t>& keys,
                                                          int m);
  static std::vector<std::vector<std::int64_t>> partition_into(
      const std::vector<std::int64_t>& keys, std::size_t task_count);

 private:
  struct Pool;
  const int workers_;
  Pool* pool_;
};

// Collects one map task's emissions in order; also hosts its op counters.
template <typename V>
class Emitter {
 public:
  void emit(std::int64_t key, V value) { buffer_.emplace_back(key, std::move(value)); }
  Counters& counters() { return counters_; }
  const Counters& counters() const { return counters_; }

  const std::vector<std::pair<std::int64_t, V>>& emissions() const { return buffer_; }
  std::vector<std::pair<std::int64_t, V>>& emissions() { return buffer_; }

 private:
  std::vector<std::pair<std::int64_t, V>> buffer_;
  Counters counters_;
};

template <typename V>
struct Job {
  std::string stage;
  std::vector<std::int64_t> input_keys;
  std::function<void(std::int64_t, Emitter<V>&)> map_fn;
  std::function<V(std::int64_t, const std::vector<V>&)> reduce_fn;
  int tasks_per_worker = 2;                // 2 map tasks per machine by default
  std::vector<std::string> counter_names;  // pre-registered so they report as 0 when unused
};

template <typename V>
struct JobOutput {
  std::map<std::int64_t, V> reduced;
  TimingReport report;
};

namespace detail {
double seconds_since_epoch_start();  // steady clock, for stage wall timing
}

// Runs map over partitioned input keys, groups emissions by intermediate key
// (values ordered by source key then emission order), reduces per key.  The
// result is identical to a sequential evaluation for any worker count.
template <typename V>
JobOutput<V> run_job(Engine& engine, const Job<V>& job) {
  if (!job.map_fn || !job.reduce_fn) throw DomainError("job needs both map_fn and reduce_fn");
  if (job.tasks_per_worker < 1) throw DomainError("tasks_per_worker must be positive");
  const double t0 = detail::seconds_since_epoch_start();

  const std::size_t task_count =
      static_cast<std::size_t>(engine.workers()) * static_cast<std::size_t>(job.tasks_per_worker);
  auto tasks = Engine::partition_into(job.input_keys, task_count);

  std::vector<Emitter<V>> emitters(task_count);
  for (auto& em : emitters)
    for (const auto& name : job.counter_names) em.counters().add(name, 0);

  struct Failure {
    std::int64_t key;
    std::string what;
  };
  std::vector<std::optional<Failure>> map_failures(task_count);
  engine.run_tasks(task_count, [&](std::size_t t) {
    for (std::int64_t key : tasks[t]) {
      try {
        job.map_fn(key, emitters[t]);
      } catch (const std::exception& e) {
        map_failures[t] = Failure{key, e.what()};
        return;
      }
    }
  });
  for (const auto& failure : map_failures)
    if (failure)
      throw JobError("map failed on key " + std::to_string(failure->key) + ": " + failure->what,
                     failure->key);

  // Shuffle: concatenating task buffers in task order recovers the global
  // source-key order, so grouped values are deterministic.
  std::map<std::int64_t, std::vector<V>> groups;
  for (auto& em : emitters)
    for (auto& [key, value] : em.emissions()) groups[key].push_back(std::move(value));

  std::vector<std::int64_t> reduce_keys;
  reduce_keys.reserve(groups.size());
  for (const auto& [key, values] : groups) reduce_keys.push_back(key);
  auto reduce_tasks = Engine::partition_into(reduce_keys, task_count);

  std::vector<std::optional<V>> results(reduce_keys.size());
  std::vector<std::size_t> task_offset(task_count + 1, 0);
  for (std::size_t t = 0; t < task_count; ++t)
    task_offset[t + 1] = task_offset[t] + reduce_tasks[t].size();

  std::vector<std::optional<Failure>> reduce_failures(task_count);
  engine.run_tasks(task_count, [&](std::size_t t) {
    std::size_t slot = task_offset[t];
    for (std::int64_t key : reduce_tasks[t]) {
      try {
        results[slot] = job.reduce_fn(key, groups.at(key));
      } catch (const std::exception& e) {
        reduce_failures[t] = Failure{key, e.what()};
        return;
      }
      ++slot;
    }
  });
  for (const auto& failure : reduce_failures)
    if (failure)
      throw JobError("reduce failed on key " + std::to_string(failure->key) + ": " + failure->what,
                     failure->key);

  JobOutput<V> out;
  for (std::size_t i = 0; i < reduce_keys.size(); ++i)
    out.reduced.emplace(reduce_keys[i], std::move(*results[i]));

  out.report.stage = job.stage;
  out.report.workers = engine.workers();
  for (const auto& em : emitters) {
    out.report.task_counters.push_back(em.counters());
    out.report.op_counters.merge(em.counters());
  }
  out.report.wall_seconds = detail::seconds_since_epoch_start() - t0;
  return out;
}

}  // namespace psc::mr
