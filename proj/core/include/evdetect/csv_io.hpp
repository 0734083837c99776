#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "evdetect/series.hpp"

namespace evdetect {

inline constexpr std::string_view kHouseholdCsvHeader = "timestamp,load_kw,ev_kw";
inline constexpr std::string_view kFeederCsvHeader = "timestamp,load_kw,label";

/// "YYYY-MM-DDTHH:MM:SSZ"
std::string format_timestamp(Timestamp ts);
/// Parses the exact form produced by format_timestamp. Throws MalformedRow.
Timestamp parse_timestamp(std::string_view text);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double value);
/// Strict parse of a whole field; throws MalformedRow on trailing garbage.
double parse_double(std::string_view text);

std::vector<std::string_view> split_csv_line(std::string_view line);

/// Reads every line of a text file, without line terminators. Throws IoFailure.
std::vector<std::string> read_lines(const std::filesystem::path& path);
/// Writes text atomically enough for our purposes; throws IoFailure.
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Row locations reported by the readers below are 1-based data-row numbers
// (the header is not counted).

/// household_id defaults to the file stem.
HouseholdRecordSet read_household_csv(const std::filesystem::path& path,
                                      Interval interval = kMinuteInterval,
                                      std::string household_id = {});
void write_household_csv(const HouseholdRecordSet& household,
                         const std::filesystem::path& path);

/// feeder_id defaults to the file stem; household ids are not stored in the file.
FeederRecordSet read_feeder_csv(const std::filesystem::path& path,
                                Interval interval = kMinuteInterval,
                                std::string feeder_id = {});
void write_feeder_csv(const FeederRecordSet& feeder, const std::filesystem::path& path);

}  // namespace evdetect
