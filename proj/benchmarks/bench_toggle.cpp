#include <benchmark/benchmark.h>

#include "toggle/equilibria.hpp"
#include "toggle/simulate.hpp"
#include "toggle/ssa.hpp"

using namespace toggle;

namespace {

const ModelParams kP;

void BM_SsaPeriod(benchmark::State& state) {
  const double omega = static_cast<double>(state.range(0));
  const ReactionNetwork net = build_network(kP, omega);
  const auto kin = InducerKinetics::from(kP, DiffusionMode::dynamic);
  const auto sched = pwm_period_schedule(0.0, {35.0, 0.35, 240.0, 0.4});
  std::uint64_t events = 0;
  for (auto _ : state) {
    SsaCell cell{0, state_to_counts(FullState{5, 1, 660, 63, 0, 0}, omega), {}, cell_rng(1, 0)};
    events += ssa_run(net, cell, sched, kin, SsaOptions{}, nullptr).events;
  }
  state.counters["events/s"] = benchmark::Counter(static_cast<double>(events), benchmark::Counter::kIsRate);
}
BENCHMARK(BM_SsaPeriod)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void BM_FullModelPeriod(benchmark::State& state) {
  const auto sched = pwm_period_schedule(0.0, {35.0, 0.35, 240.0, 0.4});
  for (auto _ : state) {
    Trajectory<FullState> tr;
    benchmark::DoNotOptimize(
        simulate_full(FullState{5, 1, 660, 63, 0, 0}, sched, kP, DiffusionMode::dynamic, IntegratorOptions{}, tr));
  }
}
BENCHMARK(BM_FullModelPeriod)->Unit(benchmark::kMicrosecond);

void BM_BuildCurve(benchmark::State& state) {
  const ReducedParams rp = reduce_params(kP);
  for (auto _ : state) benchmark::DoNotOptimize(build_curve(0, {35.0, 0.35}, kP, rp));
}
BENCHMARK(BM_BuildCurve)->Unit(benchmark::kMillisecond);

void BM_NearestPoint(benchmark::State& state) {
  static const CurveDatabase db = build_database(kP);
  const ReducedState target = to_reduced(750.0, 300.0, kP);
  for (auto _ : state) benchmark::DoNotOptimize(nearest_point(db, target));
}
BENCHMARK(BM_NearestPoint)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
