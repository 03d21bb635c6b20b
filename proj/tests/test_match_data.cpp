#include <gtest/gtest.h>

#include <sstream>

#include "pairfit/match_data.hpp"
#include "pairfit/random.hpp"
#include "pairfit/simulate.hpp"

using namespace pairfit;

namespace {

const char* kHeader = "winner,player1,race1,player2,race2,map,date,duration_seconds\n";

std::string csv(const std::string& body) { return std::string(kHeader) + body; }

}  // namespace

TEST(ParseMatches, ExampleRow) {
  auto d = parse_matches(csv("0,Jonathan Walsh,Protoss,Greg Fields,Zerg,Xel'Naga Caverns,2011-01-01,1295\n"));
  ASSERT_EQ(d.size(), 1u);
  const auto& r = d.records()[0];
  EXPECT_FALSE(r.winner);
  EXPECT_EQ(r.player1, "Jonathan Walsh");
  EXPECT_EQ(r.race1, "Protoss");
  EXPECT_EQ(r.player2, "Greg Fields");
  EXPECT_EQ(r.race2, "Zerg");
  EXPECT_EQ(r.map, "Xel'Naga Caverns");
  EXPECT_EQ(format_date(r.date), "2011-01-01");
  EXPECT_EQ(r.duration_seconds, 1295);  // 21 min 35 sec
  EXPECT_TRUE(d.filter_log().empty());
}

TEST(ParseMatches, HeaderOnly) {
  auto d = parse_matches(csv(""));
  EXPECT_EQ(d.size(), 0u);
  EXPECT_TRUE(d.players().empty());
  EXPECT_TRUE(d.maps().empty());
}

TEST(ParseMatches, RandomRaceParses) {
  auto d = parse_matches(csv("1,GuMihofOu,random,B,Zerg,M,2010-10-01,600\n"));
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.records()[0].race1, "random");
  EXPECT_FALSE(d.records()[0].has_valid_races());
}

TEST(ParseMatches, QuotedFieldsAndCrlf) {
  auto d = parse_matches(std::string("winner,player1,race1,player2,race2,map,date,duration_seconds\r\n") +
                         "1,\"Lim, Jae-Duk\",Zerg,\"Say \"\"Hi\"\"\",Terran,M,2010-10-01,600\r\n");
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d.records()[0].player1, "Lim, Jae-Duk");
  EXPECT_EQ(d.records()[0].player2, "Say \"Hi\"");
}

TEST(ParseMatches, ErrorsNameTheLine) {
  auto expect_line = [](const std::string& text, std::size_t line) {
    try {
      parse_matches(text);
      FAIL() << "expected a parse error for: " << text;
    } catch (const ParseError& e) {
      EXPECT_EQ(e.line(), line) << e.what();
    }
  };
  expect_line(csv("1,A,Zerg,B,Terran,M,2010-10-01\n"), 2);                      // arity
  expect_line(csv("1,A,Zerg,B,Terran,M,2010-10-01,60\n2,A,Zerg,B,Terran,M,2010-10-01,60\n"), 3);  // winner
  expect_line(csv("1,A,Zerg,B,Terran,M,2010-13-01,60\n"), 2);                   // month
  expect_line(csv("1,A,Zerg,B,Terran,M,2011-02-30,60\n"), 2);                   // day
  expect_line(csv("1,A,Zerg,B,Terran,M,2010-10-01,-5\n"), 2);                   // duration
  expect_line(csv("1,A,Zerg,B,Terran,M,2010-10-01,1.5\n"), 2);
  expect_line(csv("1,A,Zerg,B,Terran,M,2010-10-01,60\n") + kHeader, 3);         // duplicate header
  expect_line(csv("1,A,Zerg,A,Terran,M,2010-10-01,60\n"), 2);                   // same player
  expect_line("winner,player1\n", 1);                                            // bad header
}

TEST(ParseMatches, RoundTrip) {
  Rng rng(3);
  LeagueConfig cfg;
  cfg.players = 12;
  auto truth = random_truth(cfg, rng);
  auto d = generate(truth, 150, rng);
  std::ostringstream out;
  write_matches(out, d);
  auto again = parse_matches(out.str());
  EXPECT_EQ(again, d);
  std::ostringstream out2;
  write_matches(out2, again);
  EXPECT_EQ(out.str(), out2.str());
}

TEST(FilterValid, DropsNonStandardRacesAndRecomputesSets) {
  auto raw = parse_matches(csv("1,A,Zerg,B,Terran,M1,2010-10-01,60\n"
                               "0,R,random,B,Terran,M2,2010-10-02,60\n"
                               "1,C,Protoss,R,r,M1,2010-10-03,60\n"
                               "0,A,Zerg,C,Protoss,M1,2010-10-04,60\n"));
  EXPECT_EQ(raw.players().size(), 4u);
  auto d = filter_valid(raw);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.records()[0].player2, "B");
  EXPECT_EQ(d.records()[1].player2, "C");
  EXPECT_EQ(d.filter_log().size(), 2u);
  EXPECT_NE(d.filter_log()[0].reason.find("random"), std::string::npos);

  // Brute-force recomputation of the id sets from the surviving records.
  std::set<std::string> players, maps;
  for (const auto& r : d.records()) {
    players.insert(r.player1);
    players.insert(r.player2);
    maps.insert(r.map);
  }
  EXPECT_EQ(d.players(), players);
  EXPECT_EQ(d.maps(), maps);
  EXPECT_FALSE(d.players().count("R"));
  EXPECT_FALSE(d.maps().count("M2"));
}

TEST(FilterValid, NoOpAndIdempotent) {
  Rng rng(5);
  auto d = generate(random_truth({}, rng), 80, rng);
  auto f = filter_valid(d);
  EXPECT_EQ(f, d);
  EXPECT_TRUE(f.filter_log().empty());

  auto raw = parse_matches(csv("1,A,Zerg,B,Terran,M1,2010-10-01,60\n0,R,random,B,Terran,M2,2010-10-02,60\n"));
  auto once = filter_valid(raw);
  auto twice = filter_valid(once);
  EXPECT_EQ(once, twice);
  EXPECT_EQ(once.players(), twice.players());
}

TEST(GamesPerPlayer, CountsAndMean) {
  auto one = parse_matches(csv("1,A,Zerg,B,Terran,M,2010-10-01,60\n"));
  auto c = games_per_player(one);
  EXPECT_EQ(c.at("A"), 1);
  EXPECT_EQ(c.at("B"), 1);

  Rng rng(9);
  auto d = generate(random_truth({}, rng), 333, rng);
  auto counts = games_per_player(d);
  int total = 0;
  for (const auto& [p, n] : counts) total += n;
  EXPECT_EQ(total, 2 * 333);
  double mean = static_cast<double>(total) / counts.size();
  EXPECT_DOUBLE_EQ(mean, 2.0 * d.size() / d.players().size());
}

TEST(Describe, SingleGame) {
  auto d = parse_matches(csv("1,A,Terran,B,Zerg,M,2010-10-01,60\n"));
  auto s = describe(d);
  EXPECT_EQ(s.pair_frequencies.at({Race::Terran, Race::Zerg}), 1);
  EXPECT_EQ(s.win_ratios.at({Race::Terran, Race::Zerg}), 1.0);
  EXPECT_EQ(s.win_ratios.at({Race::Zerg, Race::Terran}), 0.0);
}

TEST(Describe, InvariantsOnSyntheticLeague) {
  Rng rng(11);
  LeagueConfig cfg;
  cfg.players = 30;
  auto d = generate(random_truth(cfg, rng), 700, rng);
  auto s = describe(d);
  int freq_total = 0;
  for (const auto& [pair, n] : s.pair_frequencies) freq_total += n;
  EXPECT_EQ(freq_total, 700);
  int wins_total = 0;
  for (const auto& [pair, n] : s.pair_wins) wins_total += n;
  EXPECT_EQ(wins_total, 700);
  for (const auto& [pair, n] : s.pair_frequencies) {
    if (pair.first == pair.second) continue;
    RacePair rev{pair.second, pair.first};
    int ab = s.pair_wins.count(pair) ? s.pair_wins.at(pair) : 0;
    int ba = s.pair_wins.count(rev) ? s.pair_wins.at(rev) : 0;
    EXPECT_EQ(ab + ba, n);
    EXPECT_EQ(s.win_ratios.at(pair) + s.win_ratios.at(rev), 1.0);
  }
  for (const auto& row : s.monthly_race_trend)
    EXPECT_NEAR(row.proportions[0] + row.proportions[1] + row.proportions[2], 1.0, 1e-9);
  int players = 0;
  for (const auto& [r, n] : s.race_counts) players += n;
  EXPECT_EQ(players, static_cast<int>(d.players().size()));
}

TEST(Describe, MonthlyTrendBucketsByCalendarMonth) {
  auto d = parse_matches(csv("1,A,Terran,B,Zerg,M,2010-09-30,60\n"
                             "1,A,Terran,C,Protoss,M,2010-10-01,60\n"
                             "0,A,Terran,B,Zerg,M,2010-10-31,60\n"));
  auto s = describe(d);
  ASSERT_EQ(s.monthly_race_trend.size(), 2u);
  const auto& sep = s.monthly_race_trend[0];
  EXPECT_EQ(sep.counts, (std::array<int, 3>{1, 0, 1}));
  const auto& oct = s.monthly_race_trend[1];
  EXPECT_EQ(oct.counts, (std::array<int, 3>{1, 1, 1}));  // A counted once
  EXPECT_DOUBLE_EQ(oct.proportions[1], 1.0 / 3.0);
}
