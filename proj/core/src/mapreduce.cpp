#include "pscluster/mapreduce.hpp"

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <thread>

#include "pscluster/textio.hpp"

namespace psc::mr {

void Counters::add(const std::string& name, std::int64_t delta) { values_[name] += delta; }

std::int64_t Counters::get(const std::string& name) const {
  auto it = values_.find(name);
  return it == values_.end() ? 0 : it->second;
}

void Counters::merge(const Counters& other) {
  for (const auto& [name, value] : other.values_) values_[name] += value;
}

std::string TimingReport::to_csv() const {
  std::string out = "stage,m,wall_seconds,counter_name,counter_value\n";
  if (op_counters.values().empty()) {
    out += stage + ',' + std::to_string(workers) + ',' + format_double(wall_seconds) + ",,0\n";
    return out;
  }
  for (const auto& [name, value] : op_counters.values()) {
    out += stage + ',' + std::to_string(workers) + ',' + format_double(wall_seconds) + ',' + name +
           ',' + std::to_string(value) + '\n';
  }
  return out;
}

namespace detail {
double seconds_since_epoch_start() {
  return std::chrono::duration<double>(std::chrono::steady_clock::now().time_since_epoch()).count();
}
}  // namespace detail

// Long-lived threads pull task indices off a shared cursor; a generation
// counter separates successive run_tasks batches.
struct Engine::Pool {
  std::mutex mu;
  std::condition_variable work_cv;
  std::condition_variable done_cv;
  const std::function<void(std::size_t)>* fn = nullptr;
  std::size_t next = 0;
  std::size_t total = 0;
  std::size_t unfinished = 0;
  std::uint64_t generation = 0;
  bool stopping = false;
  std::vector<std::exception_ptr> errors;
  std::vector<std::thread> threads;

  void worker_loop() {
    std::uint64_t seen_generation = 0;
    std::unique_lock<std::mutex> lock(mu);
    while (true) {
      work_cv.wait(lock, [&] { return stopping || (generation != seen_generation && next < total); });
      if (stopping) return;
      if (next >= total) {
        seen_generation = generation;
        continue;
      }
      while (next < total) {
        std::size_t index = next++;
        lock.unlock();
        std::exception_ptr error;
        try {
          (*fn)(index);
        } catch (...) {
          error = std::current_exception();
        }
        lock.lock();
        if (error) errors[index] = error;
        if (--unfinished == 0) done_cv.notify_all();
      }
      seen_generation = generation;
    }
  }
};

Engine::Engine(int workers) : workers_(workers), pool_(nullptr) {
  if (workers < 1) throw DomainError("worker count must be positive");
  pool_ = new Pool;
  pool_->threads.reserve(static_cast<std::size_t>(workers));
  for (int i = 0; i < workers; ++i)
    pool_->threads.emplace_back([pool = pool_] { pool->worker_loop(); });
}

Engine::~Engine() {
  {
    std::lock_guard<std::mutex> lock(pool_->mu);
    pool_->stopping = true;
  }
  pool_->work_cv.notify_all();
  for (auto& t : pool_->threads) t.join();
  delete pool_;
}

void Engine::run_tasks(std::size_t count, const std::function<void(std::size_t)>& fn) {
  if (count == 0) return;
  std::unique_lock<std::mutex> lock(pool_->mu);
  pool_->fn = &fn;
  pool_->next = 0;
  pool_->total = count;
  pool_->unfinished = count;
  pool_->errors.assign(count, nullptr);
  ++pool_->generation;
  pool_->work_cv.notify_all();
  pool_->done_cv.wait(lock, [&] { return pool_->unfinished == 0; });
  pool_->fn = nullptr;
  pool_->total = 0;
  for (auto& error : pool_->errors)
    if (error) std::rethrow_exception(error);
}

std::vector<std::vector<std::int64_t>> Engine::partition_into(
    const std::vector<std::int64_t>& keys, std::size_t task_count) {
  if (task_count == 0) throw DomainError("task count must be positive");
  std::vector<std::vector<std::int64_t>> tasks(task_count);
  const std::size_t n = keys.size();
  const std::size_t base = n / task_count;
  const std::size_t extra = n % task_count;  // first `extra` tasks take one more
  std::size_t offset = 0;
  for (std::size_t t = 0; t < task_count; ++t) {
    std::size_t size = base + (t < extra ? 1 : 0);
    tasks[t].assign(keys.begin() + static_cast<std::ptrdiff_t>(offset),
                    keys.begin() + static_cast<std::ptrdiff_t>(offset + size));
    offset += size;
  }
  return tasks;
}

std::vector<std::vector<std::int64_t>> Engine::partition(const std::vector<std::int64_t>& keys,
                                                         int m) {
  if (m < 1) throw DomainError("worker count must be positive");
  return partition_into(keys, 2 * static_cast<std::size_t>(m));
}

}  // namespace psc::mr
