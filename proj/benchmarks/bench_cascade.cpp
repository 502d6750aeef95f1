#include <benchmark/benchmark.h>

#include "cascade/binary_search.hpp"
#include "cascade/harness.hpp"
#include "cascade/parity_tree.hpp"
#include "cascade/rng.hpp"

namespace cascade {
namespace {

void BM_BinarySearch(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  SeededRng rng(1);
  const BitFrame alice = BitFrame::random(n, rng);
  BitFrame bob = alice;
  bob.flip(n / 3);
  auto par = [](const BitFrame& f, const Interval& iv) { return parity(f.bits().subspan(iv.lo, iv.size())); };
  for (auto _ : state) {
    auto s = BinarySearch::start({0, n}, par(bob, {0, n}), par(alice, {0, n}));
    while (s.running()) s = s.step(par(bob, s.query_interval()), par(alice, s.query_interval()));
    benchmark::DoNotOptimize(s.position());
  }
}
BENCHMARK(BM_BinarySearch)->Arg(64)->Arg(1024)->Arg(16384);

ColoredTree populated_tree(std::size_t n, std::uint64_t seed) {
  SeededRng rng(seed);
  ColoredTree t = build_tree({0, n}, 0);
  for (int i = 0; i < 16; ++i) {
    const std::size_t p = rng.uniform(n);
    t = rng.next_bit() ? mark_error_leaf(t, p) : set_syndrome(t, {p, p + 1}, static_cast<Bit>(p & 1), 0);
  }
  return t;
}

void BM_MergeTrees(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const ColoredTree a = populated_tree(n, 1);
  const ColoredTree b = populated_tree(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(merge_trees(a, b).root_ptr());
}
BENCHMARK(BM_MergeTrees)->Arg(64)->Arg(4096);

void BM_Trial(benchmark::State& state) {
  SessionConfig cfg = default_session_template();
  cfg.frame_length = 4096;
  cfg.aggregation = state.range(0) != 0;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(run_trial(cfg, BscNoise{0.03}, ++seed).messages_sent);
}
BENCHMARK(BM_Trial)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cascade

BENCHMARK_MAIN();
