#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "evdetect/series.hpp"

namespace evdetect {

/// Knobs for one synthetic household. Magnitudes in kW, durations in minutes.
struct HouseholdProfileParams {
  double base_load_mean = 0.6;
  double base_load_daily_amplitude = 0.3;
  double noise_std = 0.05;
  double appliance_spike_rate = 6.0;  ///< events per day
  std::array<double, 2> appliance_spike_kw_range{1.0, 4.5};
  std::array<int, 2> appliance_spike_minutes_range{5, 60};
  /// Thermostatic loads (water heater, AC compressor): episodes in which a
  /// fixed-power element alternates on and off.
  double cycling_load_rate = 0.0;  ///< episodes per day
  std::array<double, 2> cycling_load_kw_range{2.0, 4.5};
  std::array<int, 2> cycling_episode_minutes_range{60, 240};
  std::array<int, 2> cycling_on_minutes_range{10, 25};
  std::array<int, 2> cycling_off_minutes_range{10, 30};
  bool ev_present = true;
  std::array<double, 2> ev_power_range{3.3, 7.2};
  double ev_sessions_per_day_mean = 0.5;
  std::array<int, 2> ev_duration_minutes_range{240, 720};
  /// Relative weight of each start hour (0..23); evening-peaked by default.
  std::array<double, 24> ev_start_hour_weights{
      0.5, 0.3, 0.2, 0.2, 0.2, 0.2, 0.3, 0.5, 0.6, 0.6, 0.6, 0.6,
      0.6, 0.6, 0.7, 0.8, 1.2, 2.0, 3.0, 3.5, 3.0, 2.2, 1.5, 0.8};

  /// Throws InvalidParams.
  void validate() const;
};

/// One EV charging session before overlap merging.
struct ChargingSession {
  std::size_t start;  ///< sample index
  std::size_t duration_minutes;
  double power_kw;
};

struct GeneratedHousehold {
  HouseholdRecordSet records;
  std::vector<ChargingSession> sessions;
};

inline constexpr std::size_t kSamplesPerDay = 1440;

/// Default series origin: 2018-01-01T00:00:00Z.
Timestamp default_synth_start();

/// Minute-resolution household: daily sinusoid + clipped Gaussian noise +
/// Poisson appliance spikes, plus constant-power EV sessions. Overlapping
/// sessions merge (the higher power wins where they overlap). Deterministic
/// in (params, days, seed, start).
GeneratedHousehold generate_household_detailed(const HouseholdProfileParams& params,
                                               std::size_t days, std::uint64_t seed,
                                               std::string household_id = "household",
                                               Timestamp start = default_synth_start());

HouseholdRecordSet generate_household(const HouseholdProfileParams& params, std::size_t days,
                                      std::uint64_t seed, std::string household_id = "household",
                                      Timestamp start = default_synth_start());

/// Pointwise sum of loads and OR of labels. Throws LengthMismatch /
/// TimestampMismatch, and InvalidParams for an empty list.
FeederRecordSet aggregate_feeder(const std::vector<HouseholdRecordSet>& households,
                                 std::string feeder_id);

struct FeederSynthConfig {
  std::size_t households_per_feeder = 3;
  std::size_t num_feeders = 22;
  std::size_t days = 30;
  std::uint64_t rng_seed = 7;
  HouseholdProfileParams shared_params{};
  /// Optional per-household overrides, indexed by household position within
  /// a feeder; positions beyond the list use shared_params.
  std::vector<HouseholdProfileParams> per_household_params;

  /// Throws InvalidParams.
  void validate() const;
  const HouseholdProfileParams& params_for(std::size_t household_index) const;
};

/// Seed of household `h` in feeder `f`: mix_seed(rng_seed, f, h).
std::uint64_t household_seed(std::uint64_t rng_seed, std::size_t feeder_index,
                             std::size_t household_index);

struct SynthBenchmark {
  FeederSynthConfig config;
  std::vector<FeederRecordSet> feeders;
  std::vector<std::vector<HouseholdRecordSet>> households;  ///< per feeder
  std::vector<std::vector<std::uint64_t>> seeds;            ///< per feeder, per household
};

std::string feeder_id_for(std::size_t feeder_index);

SynthBenchmark generate_benchmark(const FeederSynthConfig& config);

/// Manifest describing a generated benchmark (JSON text).
std::string benchmark_manifest_json(const SynthBenchmark& benchmark);

/// Writes feeders/<id>.csv, households/<id>.csv and manifest.json under `dir`.
void write_benchmark(const SynthBenchmark& benchmark, const std::filesystem::path& dir);

/// Reads the feeder CSVs listed in `dir`/manifest.json, in manifest order.
std::vector<FeederRecordSet> read_benchmark_feeders(const std::filesystem::path& dir);

}  // namespace evdetect
