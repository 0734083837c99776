#include "evdetect/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>

namespace evdetect {

namespace {

bool parse_fixed_int(std::string_view text, std::size_t pos, std::size_t len, int& out) {
  if (pos + len > text.size()) {
    return false;
  }
  out = 0;
  for (std::size_t i = pos; i < pos + len; ++i) {
    char c = text[i];
    if (c < '0' || c > '9') {
      return false;
    }
    out = out * 10 + (c - '0');
  }
  return true;
}

std::string_view strip_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') {
    line.remove_suffix(1);
  }
  return line;
}

struct ParsedRows {
  std::vector<Timestamp> timestamps;
  std::vector<std::vector<double>> columns;
};

// Reads a timestamped numeric CSV with the exact header, checking that
// timestamps advance by `interval`.
ParsedRows read_timestamped_csv(const std::filesystem::path& path, std::string_view header,
                                Interval interval) {
  auto lines = read_lines(path);
  if (lines.empty() || strip_cr(lines.front()) != header) {
    throw Error(ErrorCode::SchemaMismatch,
                "expected header '" + std::string(header) + "' in " + path.string());
  }
  const std::size_t width = split_csv_line(header).size() - 1;
  ParsedRows rows;
  rows.columns.resize(width);
  std::size_t row = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string_view line = strip_cr(lines[i]);
    if (line.empty() && i + 1 == lines.size()) {
      break;
    }
    ++row;
    auto fields = split_csv_line(line);
    if (fields.size() != width + 1) {
      throw Error(ErrorCode::MalformedRow, "wrong field count in " + path.string(), row);
    }
    Timestamp ts;
    try {
      ts = parse_timestamp(fields[0]);
      for (std::size_t c = 0; c < width; ++c) {
        rows.columns[c].push_back(parse_double(fields[c + 1]));
      }
    } catch (const Error& e) {
      throw Error(ErrorCode::MalformedRow, std::string(e.what()) + " in " + path.string(), row);
    }
    if (!rows.timestamps.empty() && ts - rows.timestamps.back() != interval) {
      throw Error(ErrorCode::NonUniformTimestamps,
                  "expected " + std::to_string(interval.count()) + " s step in " + path.string(),
                  row);
    }
    rows.timestamps.push_back(ts);
  }
  if (rows.timestamps.empty()) {
    throw Error(ErrorCode::EmptySeries, "no data rows in " + path.string());
  }
  return rows;
}

std::string default_id(const std::filesystem::path& path, std::string id) {
  return id.empty() ? path.stem().string() : id;
}

}  // namespace

std::string format_timestamp(Timestamp ts) {
  const auto day = std::chrono::floor<std::chrono::days>(ts);
  const std::chrono::year_month_day ymd{day};
  const std::chrono::hh_mm_ss hms{ts - day};
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<int>(hms.hours().count()), static_cast<int>(hms.minutes().count()),
                static_cast<int>(hms.seconds().count()));
  return buf;
}

Timestamp parse_timestamp(std::string_view text) {
  int y, mo, d, h, mi, s;
  const bool ok = text.size() == 20 && parse_fixed_int(text, 0, 4, y) && text[4] == '-' &&
                  parse_fixed_int(text, 5, 2, mo) && text[7] == '-' &&
                  parse_fixed_int(text, 8, 2, d) && text[10] == 'T' &&
                  parse_fixed_int(text, 11, 2, h) && text[13] == ':' &&
                  parse_fixed_int(text, 14, 2, mi) && text[16] == ':' &&
                  parse_fixed_int(text, 17, 2, s) && text[19] == 'Z';
  if (!ok) {
    throw Error(ErrorCode::MalformedRow, "bad timestamp '" + std::string(text) + "'");
  }
  const std::chrono::year_month_day ymd{std::chrono::year{y},
                                        std::chrono::month{static_cast<unsigned>(mo)},
                                        std::chrono::day{static_cast<unsigned>(d)}};
  if (!ymd.ok() || h > 23 || mi > 59 || s > 59) {
    throw Error(ErrorCode::MalformedRow, "bad timestamp '" + std::string(text) + "'");
  }
  return std::chrono::sys_days{ymd} + std::chrono::hours{h} + std::chrono::minutes{mi} +
         std::chrono::seconds{s};
}

std::string format_double(double value) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') {
    ++first;
  }
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || text.empty()) {
    throw Error(ErrorCode::MalformedRow, "bad number '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t begin = 0;
  while (true) {
    std::size_t comma = line.find(',', begin);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(begin));
      break;
    }
    fields.push_back(line.substr(begin, comma - begin));
    begin = comma + 1;
  }
  return fields;
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(std::move(line));
  }
  if (in.bad()) {
    throw Error(ErrorCode::IoFailure, "read error on " + path.string());
  }
  return lines;
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw Error(ErrorCode::IoFailure, "cannot open " + path.string() + " for writing");
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  out.flush();
  if (!out) {
    throw Error(ErrorCode::IoFailure, "write error on " + path.string());
  }
}

HouseholdRecordSet read_household_csv(const std::filesystem::path& path, Interval interval,
                                      std::string household_id) {
  auto rows = read_timestamped_csv(path, kHouseholdCsvHeader, interval);
  const auto& load = rows.columns[0];
  const auto& ev = rows.columns[1];
  for (std::size_t t = 0; t < load.size(); ++t) {
    if (!(ev[t] >= 0.0) || ev[t] > load[t]) {
      throw Error(ErrorCode::MalformedRow, "ev_kw must lie in [0, load_kw]", t + 1);
    }
  }
  const Timestamp start = rows.timestamps.front();
  try {
    return HouseholdRecordSet(default_id(path, std::move(household_id)),
                              LoadSeries(start, interval, std::move(rows.columns[0])),
                              LoadSeries(start, interval, std::move(rows.columns[1])));
  } catch (const Error& e) {
    if (e.location()) {
      throw Error(ErrorCode::MalformedRow, e.what(), *e.location() + 1);
    }
    throw;
  }
}

void write_household_csv(const HouseholdRecordSet& household,
                         const std::filesystem::path& path) {
  std::string text;
  text.reserve(household.load().size() * 40);
  text += kHouseholdCsvHeader;
  text += '\n';
  for (std::size_t t = 0; t < household.load().size(); ++t) {
    text += format_timestamp(household.load().timestamp_at(t));
    text += ',';
    text += format_double(household.load()[t]);
    text += ',';
    text += format_double(household.ev_load()[t]);
    text += '\n';
  }
  write_text_file(path, text);
}

FeederRecordSet read_feeder_csv(const std::filesystem::path& path, Interval interval,
                                std::string feeder_id) {
  auto rows = read_timestamped_csv(path, kFeederCsvHeader, interval);
  std::vector<std::uint8_t> labels;
  labels.reserve(rows.columns[1].size());
  for (std::size_t t = 0; t < rows.columns[1].size(); ++t) {
    double v = rows.columns[1][t];
    if (v != 0.0 && v != 1.0) {
      throw Error(ErrorCode::MalformedRow, "label must be 0 or 1", t + 1);
    }
    labels.push_back(v == 1.0 ? 1 : 0);
  }
  try {
    return FeederRecordSet(default_id(path, std::move(feeder_id)), {},
                           LoadSeries(rows.timestamps.front(), interval,
                                      std::move(rows.columns[0])),
                           ChargingLabelSeries(std::move(labels)));
  } catch (const Error& e) {
    if (e.location()) {
      throw Error(ErrorCode::MalformedRow, e.what(), *e.location() + 1);
    }
    throw;
  }
}

void write_feeder_csv(const FeederRecordSet& feeder, const std::filesystem::path& path) {
  std::string text;
  text.reserve(feeder.load().size() * 36);
  text += kFeederCsvHeader;
  text += '\n';
  for (std::size_t t = 0; t < feeder.load().size(); ++t) {
    text += format_timestamp(feeder.load().timestamp_at(t));
    text += ',';
    text += format_double(feeder.load()[t]);
    text += feeder.labels()[t] ? ",1\n" : ",0\n";
  }
  write_text_file(path, text);
}

}  // namespace evdetect
