#include <gtest/gtest.h>

#include <cmath>

#include "pairfit/predict.hpp"
#include "support.hpp"

using namespace pairfit;
using support::config;
using support::league;

namespace {

// A Zerg-versus-Terran game with fixed coefficients.
FitResult zerg_terran_fit() {
  FitResult f;
  f.index = std::make_shared<const ParameterIndex>(std::vector<std::string>{"Greg Fields", "Jonathan Walsh"},
                                                   std::set<std::string>{}, std::set<std::string>{},
                                                   std::vector<std::string>{"Xel'Naga Caverns"});
  f.coefficients = Vector::Zero(f.index->p());
  f.coefficients[*f.index->player_column("Greg Fields")] = 2.098;
  f.coefficients[*f.index->player_column("Jonathan Walsh")] = 1.797;
  // Stored as Terran-Zerg; Zerg over Terran is its negation.
  auto [col, sign] = *f.index->matchup_entry(0, Race::Zerg, Race::Terran);
  f.coefficients[col] = sign * 0.0632;
  f.observed.assign(static_cast<std::size_t>(f.index->p()), true);
  return f;
}

}  // namespace

TEST(WinProbability, ZergTerranPairing) {
  auto fit = zerg_terran_fit();
  auto p = win_probability(fit, "Greg Fields", "Jonathan Walsh", Race::Zerg, Race::Terran, "Xel'Naga Caverns");
  EXPECT_NEAR(p.player1, 2.098, 1e-15);
  EXPECT_NEAR(p.player2, -1.797, 1e-15);
  EXPECT_NEAR(p.matchup, 0.0632, 1e-15);
  EXPECT_NEAR(p.eta, 0.3642, 1e-12);
  // 1 / (1 + exp(-0.3642)), evaluated independently.
  EXPECT_NEAR(p.probability, 0.5900567540562965, 1e-15);
  EXPECT_TRUE(p.unknown_inputs.empty());
  EXPECT_TRUE(p.anchored_inputs.empty());
}

TEST(WinProbability, UnknownPlayersSameRaceIsExactlyHalf) {
  auto fit = zerg_terran_fit();
  auto p = win_probability(fit, "Nobody", "Someone", Race::Protoss, Race::Protoss, "Xel'Naga Caverns");
  EXPECT_EQ(p.probability, 0.5);
  EXPECT_EQ(p.unknown_inputs, (std::vector<std::string>{"player1", "player2"}));
}

TEST(WinProbability, Errors) {
  auto fit = zerg_terran_fit();
  EXPECT_THROW(win_probability(fit, "Greg Fields", "Greg Fields", Race::Zerg, Race::Zerg, "Xel'Naga Caverns"),
               std::invalid_argument);
  EXPECT_THROW(win_probability(fit, "Greg Fields", "Jonathan Walsh", Race::Zerg, Race::Terran, "Metalopolis"),
               std::invalid_argument);
}

TEST(WinProbability, ComplementIdentityIsExact) {
  auto d = league(1, config(20, 4), 1500);
  auto fit = fit_irls(build_design(d, IndexOptions{}));
  Rng rng(2);
  std::vector<std::string> players(d.players().begin(), d.players().end());
  players.push_back("Unseen");
  std::vector<std::string> maps(d.maps().begin(), d.maps().end());
  std::uniform_int_distribution<std::size_t> pp(0, players.size() - 1), pm(0, maps.size() - 1);
  std::uniform_int_distribution<int> race(0, 2);
  for (int k = 0; k < 1000; ++k) {
    auto a = players[pp(rng)], b = players[pp(rng)];
    if (a == b) continue;
    auto ra = static_cast<Race>(race(rng)), rb = static_cast<Race>(race(rng));
    const auto& m = maps[pm(rng)];
    double forward = win_probability(fit, a, b, ra, rb, m).probability;
    double backward = win_probability(fit, b, a, rb, ra, m).probability;
    EXPECT_EQ(forward + backward, 1.0);
  }
}

TEST(WinProbability, CommonShiftCancels) {
  auto d = league(3, config(15, 3), 1000);
  auto fit = fit_irls(build_design(d, IndexOptions{.min_games = 1, .anchor = true}));
  auto shifted = fit;
  for (int j = 0; j < fit.index->player_column_count(); ++j) shifted.coefficients[j] += 0.75;
  const auto& ids = fit.index->estimated_players();
  for (std::size_t i = 0; i + 1 < ids.size(); ++i) {
    auto a = win_probability(fit, ids[i], ids[i + 1], Race::Terran, Race::Zerg, "M01");
    auto b = win_probability(shifted, ids[i], ids[i + 1], Race::Terran, Race::Zerg, "M01");
    EXPECT_NEAR(a.probability, b.probability, 1e-14);
  }
}

TEST(WinProbability, AnchoredPlayersAreFlagged) {
  FitResult fit = zerg_terran_fit();
  auto idx = std::make_shared<const ParameterIndex>(std::vector<std::string>{"Greg Fields"},
                                                    std::set<std::string>{"Jonathan Walsh"},
                                                    std::set<std::string>{}, std::vector<std::string>{"M"});
  fit.index = idx;
  fit.coefficients = Vector::Zero(idx->p());
  fit.coefficients[0] = 1.0;
  auto p = win_probability(fit, "Greg Fields", "Jonathan Walsh", Race::Terran, Race::Terran, "M");
  EXPECT_EQ(p.anchored_inputs, std::vector<std::string>{"player2"});
  EXPECT_EQ(p.eta, 1.0);
}

TEST(RankPlayers, OrderTiesAndAnchored) {
  FitResult fit;
  fit.index = std::make_shared<const ParameterIndex>(std::vector<std::string>{"A", "B", "C", "D"},
                                                     std::set<std::string>{"E"}, std::set<std::string>{"F"},
                                                     std::vector<std::string>{"M"});
  fit.coefficients = Vector::Zero(fit.index->p());
  fit.coefficients.head(4) << 0.5, 1.5, 0.5, -2.0;
  auto r = rank_players(fit);
  ASSERT_EQ(r.ranked.size(), 4u);
  EXPECT_EQ(r.ranked[0].first, "B");
  EXPECT_EQ(r.ranked[1].first, "A");  // tie with C, lexicographic
  EXPECT_EQ(r.ranked[2].first, "C");
  EXPECT_EQ(r.ranked[3].first, "D");
  EXPECT_EQ(r.anchored, (std::vector<std::string>{"E", "F"}));

  auto shifted = fit;
  shifted.coefficients.head(4).array() += 3.0;
  auto s = rank_players(shifted);
  for (std::size_t i = 0; i < 4; ++i) EXPECT_EQ(s.ranked[i].first, r.ranked[i].first);
}

TEST(RankPlayers, AllAnchoredIsEmpty) {
  FitResult fit;
  fit.index = std::make_shared<const ParameterIndex>(std::vector<std::string>{}, std::set<std::string>{"A", "B"},
                                                     std::set<std::string>{}, std::vector<std::string>{"M"});
  fit.coefficients = Vector::Zero(fit.index->p());
  auto r = rank_players(fit);
  EXPECT_TRUE(r.ranked.empty());
  EXPECT_EQ(r.anchored.size(), 2u);
}
