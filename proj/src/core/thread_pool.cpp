// Copyright (c) the RKIQT Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rkiqt/core/thread_pool.hpp"

#include <algorithm>
#include <cstdlib>
#include <memory>

namespace rkiqt {

ThreadPool::ThreadPool(int threads) {
  const int extra = std::max(0, threads - 1);
  workers_.reserve(std::size_t(extra));
  for (int i = 0; i < extra; ++i) {
    workers_.emplace_back([this, i] { worker_loop(i); });
  }
}

ThreadPool::~ThreadPool() {
  {
    std::lock_guard<std::mutex> lk(mu_);
    stop_ = true;
  }
  cv_work_.notify_all();
  for (auto& w : workers_) w.join();
}

void ThreadPool::worker_loop(int idx) {
  std::uint64_t seen = 0;
  for (;;) {
    Task task;
    {
      std::unique_lock<std::mutex> lk(mu_);
      cv_work_.wait(lk, [&] { return stop_ || epoch_ != seen; });
      if (stop_) return;
      seen = epoch_;
      task = tasks_[std::size_t(idx)];
    }
    if (task.fn && task.begin < task.end) (*task.fn)(task.begin, task.end);
    {
      std::lock_guard<std::mutex> lk(mu_);
      if (--pending_ == 0) cv_done_.notify_one();
    }
  }
}

void ThreadPool::parallel_for(
    std::int64_t begin, std::int64_t end, std::int64_t grain,
    const std::function<void(std::int64_t, std::int64_t)>& fn) {
  const std::int64_t n = end - begin;
  if (n <= 0) return;
  const int nw = size();
  if (nw == 1 || n <= grain) {
    fn(begin, end);
    return;
  }
  const std::int64_t chunks = std::min<std::int64_t>(nw, (n + grain - 1) / grain);
  const std::int64_t step = (n + chunks - 1) / chunks;
  {
    std::lock_guard<std::mutex> lk(mu_);
    tasks_.assign(workers_.size(), Task{});
    std::int64_t cursor = begin + step;  // slice 0 runs on this thread
    for (std::size_t i = 0; i < workers_.size() && cursor < end; ++i) {
      tasks_[i] = Task{&fn, cursor, std::min(end, cursor + step)};
      cursor += step;
    }
    pending_ = int(workers_.size());
    ++epoch_;
  }
  cv_work_.notify_all();
  fn(begin, std::min(end, begin + step));
  std::unique_lock<std::mutex> lk(mu_);
  cv_done_.wait(lk, [&] { return pending_ == 0; });
}

namespace {
std::unique_ptr<ThreadPool> g_pool;
int g_threads = 0;

int default_threads() {
  if (const char* env = std::getenv("RKIQT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(std::min(hw, 8u));
}
}  // namespace

ThreadPool& global_pool() {
  if (!g_pool) {
    g_threads = g_threads > 0 ? g_threads : default_threads();
    g_pool = std::make_unique<ThreadPool>(g_threads);
  }
  return *g_pool;
}

void set_global_threads(int threads) {
  if (threads < 1) threads = 1;
  if (g_pool && g_threads == threads) return;
  g_pool.reset();
  g_threads = threads;
  g_pool = std::make_unique<ThreadPool>(threads);
}

int global_threads() {
  global_pool();
  return g_threads;
}

}  // namespace rkiqt
