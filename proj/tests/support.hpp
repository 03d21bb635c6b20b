#pragma once

// Small builders shared by the test files.

#include <string>
#include <utility>

#include "pairfit/simulate.hpp"

namespace support {

inline pairfit::MatchRecord game(std::string p1, std::string r1, std::string p2, std::string r2,
                                 std::string map, bool win = true) {
  pairfit::MatchRecord r;
  r.winner = win;
  r.player1 = std::move(p1);
  r.race1 = std::move(r1);
  r.player2 = std::move(p2);
  r.race2 = std::move(r2);
  r.map = std::move(map);
  r.date = std::chrono::year(2011) / 1 / 1;
  r.duration_seconds = 600;
  return r;
}

inline pairfit::LeagueConfig config(int players, int maps, double skill_sd = 1.0, double matchup_sd = 0.5) {
  pairfit::LeagueConfig cfg;
  cfg.players = players;
  cfg.maps = maps;
  cfg.skill_sd = skill_sd;
  cfg.matchup_sd = matchup_sd;
  return cfg;
}

inline pairfit::Dataset league(std::uint64_t seed, const pairfit::LeagueConfig& cfg, std::size_t games) {
  pairfit::Rng rng(seed);
  auto truth = pairfit::random_truth(cfg, rng);
  return pairfit::generate(truth, games, rng);
}

// Same records with player order and winner flipped.
inline pairfit::Dataset flipped(const pairfit::Dataset& d) {
  std::vector<pairfit::MatchRecord> out;
  for (const auto& r : d.records()) out.push_back(pairfit::swapped(r));
  return pairfit::Dataset(std::move(out));
}

}  // namespace support
