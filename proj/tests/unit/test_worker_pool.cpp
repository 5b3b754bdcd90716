#include <gtest/gtest.h>

#include <cstdlib>
#include <stdexcept>
#include <vector>

#include "drsr/worker_pool.hpp"

namespace drsr {
namespace {

TEST(WorkerPool, VisitsEveryIndexOnce) {
  for (int workers : {1, 2, 4, 7}) {
    WorkerPool pool(workers);
    std::vector<int> hits(1000, 0);
    pool.parallel_for(hits.size(), [&](std::size_t i) { ++hits[i]; });
    for (int h : hits) EXPECT_EQ(h, 1);
    pool.parallel_for(0, [&](std::size_t) { FAIL(); });
  }
}

TEST(WorkerPool, ReusableAcrossCalls) {
  WorkerPool pool(3);
  long total = 0;
  for (int round = 0; round < 200; ++round) {
    std::vector<long> slots(17);
    pool.parallel_for(slots.size(), [&](std::size_t i) { slots[i] = static_cast<long>(i) * round; });
    for (long v : slots) total += v;
  }
  EXPECT_EQ(total, 136L * 199 * 200 / 2);
}

TEST(WorkerPool, RethrowsLowestIndexError) {
  WorkerPool pool(4);
  try {
    pool.parallel_for(50, [](std::size_t i) {
      if (i % 7 == 3) throw std::runtime_error("index " + std::to_string(i));
    });
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_STREQ(e.what(), "index 3");
  }
  // Still usable after an error.
  int count = 0;
  pool.parallel_for(1, [&](std::size_t) { ++count; });
  EXPECT_EQ(count, 1);
}

TEST(WorkerCount, ReadsEnvironment) {
  ::setenv("RSR_THREADS", "3", 1);
  EXPECT_EQ(configured_worker_count(), 3);
  ::setenv("RSR_THREADS", "0", 1);
  EXPECT_GE(configured_worker_count(), 1);
  ::unsetenv("RSR_THREADS");
  EXPECT_GE(configured_worker_count(), 1);
}

}  // namespace
}  // namespace drsr
