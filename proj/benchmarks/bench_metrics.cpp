#include <benchmark/benchmark.h>

#include <string>

#include "rswarm/cfg.hpp"
#include "rswarm/metrics.hpp"
#include "rswarm/parser.hpp"

namespace {

// A module with a spread of branching constructs, repeated to size.
std::string synthetic_module(int functions) {
  std::string src = "module Bench where\n\n";
  for (int i = 0; i < functions; ++i) {
    std::string n = std::to_string(i);
    src += "classify" + n + " x\n";
    src += "  | x < 0 = negate x\n";
    src += "  | x == 0 = 0\n";
    src += "  | otherwise = go x\n";
    src += "  where\n";
    src += "    go y = case y of\n";
    src += "      1 -> 10\n";
    src += "      2 -> if y > 1 && y < 3 then 20 else 0\n";
    src += "      _ -> sum [z * z | z <- [1..y], odd z]\n";
  }
  return src;
}

void bench_tokenize(benchmark::State& state) {
  std::string src = synthetic_module(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rswarm::tokenize(src));
  }
  state.SetBytesProcessed(static_cast<int64_t>(state.iterations()) *
                          static_cast<int64_t>(src.size()));
}

void bench_parse(benchmark::State& state) {
  std::string src = synthetic_module(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rswarm::parse_module(src));
  }
}

void bench_total_complexity(benchmark::State& state) {
  rswarm::HsModule m = rswarm::parse_module(synthetic_module(static_cast<int>(state.range(0))));
  for (auto _ : state) {
    benchmark::DoNotOptimize(rswarm::total_complexity(m));
  }
}

void bench_build_cfg(benchmark::State& state) {
  rswarm::HsModule m = rswarm::parse_module(synthetic_module(1));
  auto fns = rswarm::extract_functions(m);
  for (auto _ : state) {
    for (const auto& fn : fns) {
      benchmark::DoNotOptimize(rswarm::build_cfg(fn));
    }
  }
}

}  // namespace

BENCHMARK(bench_tokenize)->Arg(10)->Arg(100);
BENCHMARK(bench_parse)->Arg(10)->Arg(100);
BENCHMARK(bench_total_complexity)->Arg(10)->Arg(100);
BENCHMARK(bench_build_cfg);

BENCHMARK_MAIN();
