#pragma once

// Match records: CSV ingestion, race validation and descriptive tables.

#include <algorithm>
#include <array>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pairfit {

enum class Race : std::uint8_t { Terran = 0, Protoss = 1, Zerg = 2 };

inline constexpr std::array<Race, 3> kAllRaces{Race::Terran, Race::Protoss, Race::Zerg};

inline std::string_view to_string(Race r) {
  switch (r) {
    case Race::Terran: return "Terran";
    case Race::Protoss: return "Protoss";
    case Race::Zerg: return "Zerg";
  }
  return "?";
}

inline std::optional<Race> parse_race(std::string_view s) {
  if (s == "Terran") return Race::Terran;
  if (s == "Protoss") return Race::Protoss;
  if (s == "Zerg") return Race::Zerg;
  return std::nullopt;
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Race tags are kept as text until filter_valid; a raw record may carry
// "random" or any other tag the source used.
struct MatchRecord {
  bool winner = false;  // true iff player1 won
  std::string player1;
  std::string race1;
  std::string player2;
  std::string race2;
  std::string map;
  std::chrono::year_month_day date{};
  std::int64_t duration_seconds = 0;

  Race r1() const { return *parse_race(race1); }
  Race r2() const { return *parse_race(race2); }
  bool has_valid_races() const { return parse_race(race1) && parse_race(race2); }

  friend bool operator==(const MatchRecord&, const MatchRecord&) = default;
};

// Same game seen from the other seat.
inline MatchRecord swapped(const MatchRecord& r) {
  MatchRecord s = r;
  s.winner = !r.winner;
  std::swap(s.player1, s.player2);
  std::swap(s.race1, s.race2);
  return s;
}

struct FilteredRecord {
  MatchRecord record;
  std::string reason;
};

class Dataset {
 public:
  Dataset() = default;
  explicit Dataset(std::vector<MatchRecord> records, std::vector<FilteredRecord> filter_log = {})
      : records_(std::move(records)), filter_log_(std::move(filter_log)) {
    for (const auto& r : records_) {
      if (r.player1 == r.player2)
        throw std::invalid_argument("record has identical players: " + r.player1);
      players_.insert(r.player1);
      players_.insert(r.player2);
      maps_.insert(r.map);
    }
  }

  const std::vector<MatchRecord>& records() const { return records_; }
  const std::set<std::string>& players() const { return players_; }
  const std::set<std::string>& maps() const { return maps_; }
  const std::vector<FilteredRecord>& filter_log() const { return filter_log_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  friend bool operator==(const Dataset& a, const Dataset& b) {
    return a.records_ == b.records_;
  }

 private:
  std::vector<MatchRecord> records_;
  std::set<std::string> players_;
  std::set<std::string> maps_;
  std::vector<FilteredRecord> filter_log_;
};

namespace detail {

// RFC-4180 record splitter. Returns false at end of input. Quoted fields may
// span lines; `line` advances by the number of physical lines consumed.
inline bool read_csv_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  int c = in.peek();
  if (c == std::char_traits<char>::eof()) return false;
  ++line;
  std::string field;
  bool quoted = false;
  bool field_was_quoted = false;
  while (true) {
    c = in.get();
    if (c == std::char_traits<char>::eof()) {
      if (quoted) throw ParseError(line, "unterminated quoted field");
      fields.push_back(std::move(field));
      return true;
    }
    char ch = static_cast<char>(c);
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get();
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    if (ch == '"') {
      if (!field.empty() || field_was_quoted)
        throw ParseError(line, "stray quote inside unquoted field");
      quoted = true;
      field_was_quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
      field_was_quoted = false;
    } else if (ch == '\r') {
      if (in.peek() == '\n') in.get();
      fields.push_back(std::move(field));
      return true;
    } else if (ch == '\n') {
      fields.push_back(std::move(field));
      return true;
    } else {
      if (field_was_quoted) throw ParseError(line, "text after closing quote");
      field.push_back(ch);
    }
  }
}

inline std::optional<std::int64_t> parse_nonnegative(std::string_view s) {
  if (s.empty() || s.size() > 18) return std::nullopt;
  std::int64_t v = 0;
  for (char ch : s) {
    if (ch < '0' || ch > '9') return std::nullopt;
    v = v * 10 + (ch - '0');
  }
  return v;
}

inline std::optional<std::chrono::year_month_day> parse_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  auto y = parse_nonnegative(s.substr(0, 4));
  auto m = parse_nonnegative(s.substr(5, 2));
  auto d = parse_nonnegative(s.substr(8, 2));
  if (!y || !m || !d) return std::nullopt;
  std::chrono::year_month_day ymd{std::chrono::year(static_cast<int>(*y)),
                                  std::chrono::month(static_cast<unsigned>(*m)),
                                  std::chrono::day(static_cast<unsigned>(*d))};
  if (!ymd.ok()) return std::nullopt;
  return ymd;
}

inline std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

inline constexpr std::array<std::string_view, 8> kCsvHeader{
    "winner", "player1", "race1", "player2", "race2", "map", "date", "duration_seconds"};

inline std::string format_date(const std::chrono::year_month_day& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

// Parses the match CSV. Race tags are not validated here; see filter_valid.
inline Dataset parse_matches(std::istream& in) {
  std::vector<std::string> fields;
  std::size_t line = 0;
  if (!detail::read_csv_record(in, fields, line)) throw ParseError(1, "missing header row");
  auto is_header = [](const std::vector<std::string>& f) {
    if (f.size() != kCsvHeader.size()) return false;
    for (std::size_t i = 0; i < f.size(); ++i)
      if (f[i] != kCsvHeader[i]) return false;
    return true;
  };
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  if (!is_header(fields)) throw ParseError(line, "expected header 'winner,player1,race1,player2,race2,map,date,duration_seconds'");

  std::vector<MatchRecord> records;
  while (detail::read_csv_record(in, fields, line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // blank line
    if (is_header(fields)) throw ParseError(line, "duplicate header row");
    if (fields.size() != kCsvHeader.size())
      throw ParseError(line, "expected 8 fields, got " + std::to_string(fields.size()));
    MatchRecord r;
    if (fields[0] == "1") r.winner = true;
    else if (fields[0] == "0") r.winner = false;
    else throw ParseError(line, "winner must be 0 or 1, got '" + fields[0] + "'");
    r.player1 = fields[1];
    r.race1 = fields[2];
    r.player2 = fields[3];
    r.race2 = fields[4];
    r.map = fields[5];
    if (r.player1.empty() || r.player2.empty()) throw ParseError(line, "empty player id");
    if (r.map.empty()) throw ParseError(line, "empty map id");
    if (r.player1 == r.player2) throw ParseError(line, "player1 equals player2");
    auto date = detail::parse_date(fields[6]);
    if (!date) throw ParseError(line, "unparseable date '" + fields[6] + "'");
    r.date = *date;
    auto dur = detail::parse_nonnegative(fields[7]);
    if (!dur) throw ParseError(line, "unparseable duration '" + fields[7] + "'");
    r.duration_seconds = *dur;
    records.push_back(std::move(r));
  }
  return Dataset(std::move(records));
}

inline Dataset parse_matches(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_matches(in);
}

inline void write_matches(std::ostream& out, const Dataset& d) {
  for (std::size_t i = 0; i < kCsvHeader.size(); ++i) out << (i ? "," : "") << kCsvHeader[i];
  out << '\n';
  for (const auto& r : d.records()) {
    out << (r.winner ? '1' : '0') << ',' << detail::quote_csv(r.player1) << ','
        << detail::quote_csv(r.race1) << ',' << detail::quote_csv(r.player2) << ','
        << detail::quote_csv(r.race2) << ',' << detail::quote_csv(r.map) << ','
        << format_date(r.date) << ',' << r.duration_seconds << '\n';
  }
}

inline Dataset filter_valid(const Dataset& raw) {
  std::vector<MatchRecord> kept;
  std::vector<FilteredRecord> log = raw.filter_log();
  kept.reserve(raw.size());
  for (const auto& r : raw.records()) {
    if (r.has_valid_races()) {
      kept.push_back(r);
      continue;
    }
    std::string reason = "non-standard race tag:";
    if (!parse_race(r.race1)) reason += " race1='" + r.race1 + "'";
    if (!parse_race(r.race2)) reason += " race2='" + r.race2 + "'";
    log.push_back({r, std::move(reason)});
  }
  return Dataset(std::move(kept), std::move(log));
}

inline std::map<std::string, int> games_per_player(const Dataset& d) {
  std::map<std::string, int> counts;
  for (const auto& r : d.records()) {
    ++counts[r.player1];
    ++counts[r.player2];
  }
  return counts;
}

// Histogram of games_per_player in buckets of `width` games: 1-5, 6-10, ...
inline std::map<int, int> games_histogram(const std::map<std::string, int>& counts, int width = 5) {
  std::map<int, int> hist;
  for (const auto& [player, n] : counts) ++hist[(n - 1) / width];
  return hist;
}

using RacePair = std::pair<Race, Race>;

struct MonthlyRaceRow {
  std::chrono::year_month month;
  std::array<int, 3> counts{};
  std::array<double, 3> proportions{};
};

struct DescriptiveStats {
  std::map<Race, int> race_counts;  // players by the race they played most
  std::map<std::string, int> games_per_player;
  std::map<int, int> games_histogram;  // bucket b covers [5b+1, 5b+5]
  std::map<RacePair, int> pair_frequencies;  // key is unordered: first <= second
  std::map<RacePair, int> pair_wins;         // (a, b): games race a won against race b
  std::map<RacePair, double> win_ratios;     // cross-race only
  std::vector<MonthlyRaceRow> monthly_race_trend;
};

inline RacePair unordered_pair(Race a, Race b) { return a <= b ? RacePair{a, b} : RacePair{b, a}; }

// Monthly trend counts distinct (player, race) appearances per month, which is
// how the race-proportion table is laid out. Players who switch race within a
// month count once per race.
inline DescriptiveStats describe(const Dataset& d) {
  DescriptiveStats s;
  s.games_per_player = games_per_player(d);
  s.games_histogram = games_histogram(s.games_per_player);

  std::map<std::string, std::map<Race, int>> player_races;
  std::map<std::chrono::year_month, std::set<std::pair<std::string, Race>>> monthly;
  for (const auto& r : d.records()) {
    Race a = r.r1();
    Race b = r.r2();
    ++s.pair_frequencies[unordered_pair(a, b)];
    ++s.pair_wins[r.winner ? RacePair{a, b} : RacePair{b, a}];
    ++player_races[r.player1][a];
    ++player_races[r.player2][b];
    std::chrono::year_month ym{r.date.year(), r.date.month()};
    monthly[ym].insert({r.player1, a});
    monthly[ym].insert({r.player2, b});
  }
  for (Race r : kAllRaces) s.race_counts[r] = 0;
  for (const auto& [player, races] : player_races) {
    auto best = std::max_element(races.begin(), races.end(),
                                 [](const auto& x, const auto& y) { return x.second < y.second; });
    ++s.race_counts[best->first];
  }
  for (const auto& [pair, n] : s.pair_frequencies) {
    if (pair.first == pair.second) continue;
    auto wins = [&](RacePair p) {
      auto it = s.pair_wins.find(p);
      return it == s.pair_wins.end() ? 0 : it->second;
    };
    int ab = wins(pair);
    int ba = wins({pair.second, pair.first});
    // The smaller ratio is taken as 1 - larger (exact by Sterbenz) so the two
    // always sum to exactly 1.
    RacePair hi = ab >= ba ? pair : RacePair{pair.second, pair.first};
    RacePair lo{hi.second, hi.first};
    double r = static_cast<double>(std::max(ab, ba)) / n;
    s.win_ratios[hi] = r;
    s.win_ratios[lo] = 1.0 - r;
  }
  for (const auto& [ym, entries] : monthly) {
    MonthlyRaceRow row{ym, {}, {}};
    for (const auto& e : entries) ++row.counts[static_cast<int>(e.second)];
    int total = row.counts[0] + row.counts[1] + row.counts[2];
    for (int i = 0; i < 3; ++i) row.proportions[i] = static_cast<double>(row.counts[i]) / total;
    s.monthly_race_trend.push_back(row);
  }
  return s;
}

}  // namespace pairfit
