#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "evdetect/features.hpp"
#include "evdetect/synth.hpp"
#include "evdetect/tree_model.hpp"

using namespace evdetect;

namespace {

std::vector<double> household_load(std::size_t days) {
  return std::vector<double>(
      generate_household(HouseholdProfileParams{}, days, 1).load().values().begin(),
      generate_household(HouseholdProfileParams{}, days, 1).load().values().end());
}

void BM_StreamingPush(benchmark::State& state) {
  const auto x = household_load(7);
  const FeatureConfig cfg = FeatureConfig::online(static_cast<std::size_t>(state.range(0)),
                                                  static_cast<std::size_t>(state.range(0) / 4));
  StreamingOnlineExtractor ex(cfg);
  std::vector<double> row(13);
  std::size_t i = 0;
  for (auto _ : state) {
    ex.push(x[i], row);
    benchmark::DoNotOptimize(row.data());
    i = i + 1 == x.size() ? 0 : i + 1;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_StreamingPush)->Arg(30)->Arg(360)->Arg(1440);

void BM_Featurize(benchmark::State& state) {
  const LoadSeries load(default_synth_start(), kMinuteInterval, household_load(7));
  const FeatureConfig cfg =
      state.range(0) == 0 ? FeatureConfig::offline() : FeatureConfig::online();
  for (auto _ : state) {
    benchmark::DoNotOptimize(featurize_series(load, cfg));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(load.size()));
  state.SetLabel(state.range(0) == 0 ? "offline" : "online");
}
BENCHMARK(BM_Featurize)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Train(benchmark::State& state) {
  const auto h = generate_household(HouseholdProfileParams{}, 7, 2);
  const FeatureMatrix X = featurize_series(h.load(), FeatureConfig::online()).every_nth_row(5);
  std::vector<std::uint8_t> y;
  for (std::size_t t = 0; t < h.labels().size(); t += 5) y.push_back(h.labels()[t]);
  const ChargingLabelSeries labels(y);
  TrainParams p;
  p.forest.n_trees = 20;
  p.boosting.n_rounds = 20;
  const auto kind = state.range(0) == 0 ? ModelKind::GradientBoosted : ModelKind::RandomForest;
  for (auto _ : state) {
    benchmark::DoNotOptimize(train_model(kind, X, labels, p));
  }
  state.SetLabel(std::string(to_string(kind)) + ", " + std::to_string(X.rows()) + " rows");
}
BENCHMARK(BM_Train)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
