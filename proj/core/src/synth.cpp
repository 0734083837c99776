#include "evdetect/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <json.hpp>

#include "evdetect/csv_io.hpp"
#include "evdetect/random.hpp"

namespace evdetect {

namespace {

using ordered_json = nlohmann::ordered_json;

// Independent RNG streams per component of a household.
enum Stream : std::uint64_t { kNoiseStream = 1, kSpikeStream = 2, kEvStream = 3, kCyclingStream = 4 };

template <typename T>
bool ordered_non_negative(const std::array<T, 2>& range) {
  return range[0] >= 0 && range[0] <= range[1];
}

std::size_t sample_hour(Rng& rng, const std::array<double, 24>& weights, double total) {
  double u = rng.uniform() * total;
  for (std::size_t h = 0; h < 24; ++h) {
    u -= weights[h];
    if (u < 0.0) {
      return h;
    }
  }
  return 23;
}

ordered_json params_json(const HouseholdProfileParams& p) {
  return ordered_json{
      {"base_load_mean", p.base_load_mean},
      {"base_load_daily_amplitude", p.base_load_daily_amplitude},
      {"noise_std", p.noise_std},
      {"appliance_spike_rate", p.appliance_spike_rate},
      {"appliance_spike_kw_range", p.appliance_spike_kw_range},
      {"appliance_spike_minutes_range", p.appliance_spike_minutes_range},
      {"cycling_load_rate", p.cycling_load_rate},
      {"cycling_load_kw_range", p.cycling_load_kw_range},
      {"cycling_episode_minutes_range", p.cycling_episode_minutes_range},
      {"cycling_on_minutes_range", p.cycling_on_minutes_range},
      {"cycling_off_minutes_range", p.cycling_off_minutes_range},
      {"ev_present", p.ev_present},
      {"ev_power_range", p.ev_power_range},
      {"ev_sessions_per_day_mean", p.ev_sessions_per_day_mean},
      {"ev_duration_minutes_range", p.ev_duration_minutes_range},
      {"ev_start_hour_weights", p.ev_start_hour_weights},
  };
}

}  // namespace

void HouseholdProfileParams::validate() const {
  const bool ok =
      base_load_mean >= 0 && base_load_daily_amplitude >= 0 && noise_std >= 0 &&
      appliance_spike_rate >= 0 && ordered_non_negative(appliance_spike_kw_range) &&
      ordered_non_negative(appliance_spike_minutes_range) && appliance_spike_minutes_range[0] >= 1 &&
      cycling_load_rate >= 0 && ordered_non_negative(cycling_load_kw_range) &&
      ordered_non_negative(cycling_episode_minutes_range) &&
      ordered_non_negative(cycling_on_minutes_range) && cycling_on_minutes_range[0] >= 1 &&
      ordered_non_negative(cycling_off_minutes_range) &&
      ordered_non_negative(ev_power_range) && ev_power_range[0] > 0 &&
      ev_sessions_per_day_mean >= 0 && ordered_non_negative(ev_duration_minutes_range) &&
      ev_duration_minutes_range[0] >= 1 &&
      std::all_of(ev_start_hour_weights.begin(), ev_start_hour_weights.end(),
                  [](double w) { return w >= 0 && std::isfinite(w); }) &&
      std::accumulate(ev_start_hour_weights.begin(), ev_start_hour_weights.end(), 0.0) > 0;
  if (!ok) {
    throw Error(ErrorCode::InvalidParams, "household profile parameters out of range");
  }
}

Timestamp default_synth_start() {
  return std::chrono::sys_days{std::chrono::year{2018} / 1 / 1};
}

GeneratedHousehold generate_household_detailed(const HouseholdProfileParams& params,
                                               std::size_t days, std::uint64_t seed,
                                               std::string household_id, Timestamp start) {
  params.validate();
  if (days < 1) {
    throw Error(ErrorCode::InvalidParams, "days must be >= 1");
  }
  const std::size_t n = days * kSamplesPerDay;
  std::vector<double> base(n);

  Rng noise_rng(mix_seed(seed, kNoiseStream));
  for (std::size_t t = 0; t < n; ++t) {
    const double phase =
        static_cast<double>(t % kSamplesPerDay) / kSamplesPerDay - 19.0 / 24.0;
    const double shape = params.base_load_mean +
                         params.base_load_daily_amplitude * std::cos(2.0 * std::numbers::pi * phase);
    base[t] = std::max(0.0, shape + params.noise_std * noise_rng.normal());
  }

  // Rectangular appliance spikes starting uniformly over each day.
  Rng spike_rng(mix_seed(seed, kSpikeStream));
  for (std::size_t d = 0; d < days; ++d) {
    const std::uint32_t events = spike_rng.poisson(params.appliance_spike_rate);
    for (std::uint32_t e = 0; e < events; ++e) {
      const std::size_t begin =
          d * kSamplesPerDay + static_cast<std::size_t>(spike_rng.below(kSamplesPerDay));
      const auto len = static_cast<std::size_t>(spike_rng.between(
          params.appliance_spike_minutes_range[0], params.appliance_spike_minutes_range[1]));
      const double kw = spike_rng.uniform(params.appliance_spike_kw_range[0],
                                          params.appliance_spike_kw_range[1]);
      for (std::size_t t = begin; t < std::min(n, begin + len); ++t) {
        base[t] += kw;
      }
    }
  }

  // Cycling episodes: on/off blocks of one element until the episode ends.
  Rng cycle_rng(mix_seed(seed, kCyclingStream));
  for (std::size_t d = 0; d < days; ++d) {
    const std::uint32_t episodes = cycle_rng.poisson(params.cycling_load_rate);
    for (std::uint32_t e = 0; e < episodes; ++e) {
      std::size_t t =
          d * kSamplesPerDay + static_cast<std::size_t>(cycle_rng.below(kSamplesPerDay));
      const std::size_t end =
          std::min(n, t + static_cast<std::size_t>(cycle_rng.between(
                              params.cycling_episode_minutes_range[0],
                              params.cycling_episode_minutes_range[1])));
      const double kw =
          cycle_rng.uniform(params.cycling_load_kw_range[0], params.cycling_load_kw_range[1]);
      while (t < end) {
        const auto on = static_cast<std::size_t>(cycle_rng.between(
            params.cycling_on_minutes_range[0], params.cycling_on_minutes_range[1]));
        for (const std::size_t stop = std::min(end, t + on); t < stop; ++t) {
          base[t] += kw;
        }
        t += static_cast<std::size_t>(cycle_rng.between(params.cycling_off_minutes_range[0],
                                                         params.cycling_off_minutes_range[1]));
      }
    }
  }

  std::vector<double> ev(n, 0.0);
  std::vector<ChargingSession> sessions;
  if (params.ev_present) {
    Rng ev_rng(mix_seed(seed, kEvStream));
    const double weight_total = std::accumulate(params.ev_start_hour_weights.begin(),
                                                params.ev_start_hour_weights.end(), 0.0);
    for (std::size_t d = 0; d < days; ++d) {
      const std::uint32_t count = ev_rng.poisson(params.ev_sessions_per_day_mean);
      for (std::uint32_t s = 0; s < count; ++s) {
        const std::size_t hour = sample_hour(ev_rng, params.ev_start_hour_weights, weight_total);
        const std::size_t start_index =
            d * kSamplesPerDay + hour * 60 + static_cast<std::size_t>(ev_rng.below(60));
        const auto duration = static_cast<std::size_t>(ev_rng.between(
            params.ev_duration_minutes_range[0], params.ev_duration_minutes_range[1]));
        const double kw = ev_rng.uniform(params.ev_power_range[0], params.ev_power_range[1]);
        sessions.push_back({start_index, duration, kw});
        for (std::size_t t = start_index; t < std::min(n, start_index + duration); ++t) {
          ev[t] = std::max(ev[t], kw);
        }
      }
    }
  }

  std::vector<double> load(n);
  for (std::size_t t = 0; t < n; ++t) {
    load[t] = base[t] + ev[t];
  }
  return {HouseholdRecordSet(std::move(household_id), LoadSeries(start, kMinuteInterval, std::move(load)),
                             LoadSeries(start, kMinuteInterval, std::move(ev))),
          std::move(sessions)};
}

HouseholdRecordSet generate_household(const HouseholdProfileParams& params, std::size_t days,
                                      std::uint64_t seed, std::string household_id,
                                      Timestamp start) {
  return generate_household_detailed(params, days, seed, std::move(household_id), start).records;
}

FeederRecordSet aggregate_feeder(const std::vector<HouseholdRecordSet>& households,
                                 std::string feeder_id) {
  if (households.empty()) {
    throw Error(ErrorCode::InvalidParams, "a feeder needs at least one household");
  }
  const LoadSeries& first = households.front().load();
  std::vector<double> load(first.size(), 0.0);
  std::vector<std::uint8_t> labels(first.size(), 0);
  std::vector<std::string> ids;
  for (const auto& h : households) {
    if (h.load().size() != first.size()) {
      throw Error(ErrorCode::LengthMismatch, "household " + h.household_id() + " length differs");
    }
    if (h.load().start() != first.start() || h.load().interval() != first.interval()) {
      throw Error(ErrorCode::TimestampMismatch,
                  "household " + h.household_id() + " is not time-aligned");
    }
    for (std::size_t t = 0; t < load.size(); ++t) {
      load[t] += h.load()[t];
      labels[t] |= h.labels()[t];
    }
    ids.push_back(h.household_id());
  }
  return FeederRecordSet(std::move(feeder_id), std::move(ids),
                         LoadSeries(first.start(), first.interval(), std::move(load)),
                         ChargingLabelSeries(std::move(labels)));
}

void FeederSynthConfig::validate() const {
  if (households_per_feeder < 1 || days < 1 || num_feeders < 1) {
    throw Error(ErrorCode::InvalidParams,
                "feeders, households per feeder and days must all be >= 1");
  }
  shared_params.validate();
  for (const auto& p : per_household_params) {
    p.validate();
  }
}

const HouseholdProfileParams& FeederSynthConfig::params_for(std::size_t household_index) const {
  return household_index < per_household_params.size() ? per_household_params[household_index]
                                                       : shared_params;
}

std::uint64_t household_seed(std::uint64_t rng_seed, std::size_t feeder_index,
                             std::size_t household_index) {
  return mix_seed(rng_seed, feeder_index, household_index);
}

std::string feeder_id_for(std::size_t feeder_index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "feeder_%02zu", feeder_index);
  return buf;
}

SynthBenchmark generate_benchmark(const FeederSynthConfig& config) {
  config.validate();
  SynthBenchmark out;
  out.config = config;
  for (std::size_t f = 0; f < config.num_feeders; ++f) {
    const std::string feeder_id = feeder_id_for(f);
    std::vector<HouseholdRecordSet> households;
    std::vector<std::uint64_t> seeds;
    for (std::size_t h = 0; h < config.households_per_feeder; ++h) {
      const std::uint64_t seed = household_seed(config.rng_seed, f, h);
      seeds.push_back(seed);
      households.push_back(generate_household(config.params_for(h), config.days, seed,
                                              feeder_id + "_h" + std::to_string(h)));
    }
    out.feeders.push_back(aggregate_feeder(households, feeder_id));
    out.households.push_back(std::move(households));
    out.seeds.push_back(std::move(seeds));
  }
  return out;
}

std::string benchmark_manifest_json(const SynthBenchmark& benchmark) {
  const auto& c = benchmark.config;
  ordered_json manifest;
  manifest["format"] = "evdetect-synth-manifest";
  manifest["format_version"] = 1;
  manifest["start"] = format_timestamp(default_synth_start());
  manifest["interval_seconds"] = kMinuteInterval.count();
  manifest["num_feeders"] = c.num_feeders;
  manifest["households_per_feeder"] = c.households_per_feeder;
  manifest["days"] = c.days;
  manifest["rng_seed"] = c.rng_seed;
  manifest["seed_derivation"] =
      "splitmix64(splitmix64(splitmix64(rng_seed) ^ feeder_index) ^ household_index)";
  manifest["shared_params"] = params_json(c.shared_params);
  ordered_json overrides = ordered_json::array();
  for (const auto& p : c.per_household_params) {
    overrides.push_back(params_json(p));
  }
  manifest["per_household_params"] = overrides;

  ordered_json feeders = ordered_json::array();
  for (std::size_t f = 0; f < benchmark.feeders.size(); ++f) {
    const auto& feeder = benchmark.feeders[f];
    ordered_json households = ordered_json::array();
    for (std::size_t h = 0; h < benchmark.households[f].size(); ++h) {
      const auto& household = benchmark.households[f][h];
      households.push_back({{"id", household.household_id()},
                            {"seed", benchmark.seeds[f][h]},
                            {"file", "households/" + household.household_id() + ".csv"},
                            {"positive_samples", household.labels().positives()}});
    }
    feeders.push_back({{"id", feeder.feeder_id()},
                       {"file", "feeders/" + feeder.feeder_id() + ".csv"},
                       {"samples", feeder.load().size()},
                       {"positive_samples", feeder.labels().positives()},
                       {"households", households}});
  }
  manifest["feeders"] = feeders;
  return manifest.dump(2) + "\n";
}

void write_benchmark(const SynthBenchmark& benchmark, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir / "feeders", ec);
  std::filesystem::create_directories(dir / "households", ec);
  if (ec) {
    throw Error(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
  }
  for (std::size_t f = 0; f < benchmark.feeders.size(); ++f) {
    const auto& feeder = benchmark.feeders[f];
    write_feeder_csv(feeder, dir / "feeders" / (feeder.feeder_id() + ".csv"));
    for (const auto& household : benchmark.households[f]) {
      write_household_csv(household, dir / "households" / (household.household_id() + ".csv"));
    }
  }
  write_text_file(dir / "manifest.json", benchmark_manifest_json(benchmark));
}

std::vector<FeederRecordSet> read_benchmark_feeders(const std::filesystem::path& dir) {
  const auto lines = read_lines(dir / "manifest.json");
  std::string text;
  for (const auto& line : lines) {
    text += line;
    text += '\n';
  }
  ordered_json manifest;
  try {
    manifest = ordered_json::parse(text);
  } catch (const std::exception& e) {
    throw Error(ErrorCode::SchemaMismatch, "unreadable manifest: " + std::string(e.what()));
  }
  if (!manifest.contains("feeders") || !manifest["feeders"].is_array()) {
    throw Error(ErrorCode::SchemaMismatch, "manifest lists no feeders");
  }
  std::vector<FeederRecordSet> feeders;
  for (const auto& entry : manifest["feeders"]) {
    const std::string id = entry.at("id").get<std::string>();
    const std::string file = entry.at("file").get<std::string>();
    feeders.push_back(read_feeder_csv(dir / file, kMinuteInterval, id));
  }
  return feeders;
}

}  // namespace evdetect
