#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pairfit/glm.hpp"

namespace pairfit {

// Estimated skill; zero for anchored or unknown players.
inline double player_coefficient(const FitResult& fit, const std::string& player) {
  auto c = fit.index->player_column(player);
  return c ? fit.coefficients[*c] : 0.0;
}

// Signed matchup(map, a, b); zero for mirror matchups and unknown maps.
inline double matchup_coefficient(const FitResult& fit, const std::string& map, Race a, Race b) {
  auto slot = fit.index->map_slot(map);
  if (!slot) return 0.0;
  auto entry = fit.index->matchup_entry(*slot, a, b);
  return entry ? entry->second * fit.coefficients[entry->first] : 0.0;
}

// Linear predictor that tolerates anything the index has not seen.
inline double lenient_eta(const FitResult& fit, const MatchRecord& r) {
  return player_coefficient(fit, r.player1) - player_coefficient(fit, r.player2) +
         matchup_coefficient(fit, r.map, r.r1(), r.r2());
}

struct Prediction {
  double probability = 0.5;
  double eta = 0.0;
  double player1 = 0.0;  // +skill(player1)
  double player2 = 0.0;  // -skill(player2)
  double matchup = 0.0;
  std::vector<std::string> unknown_inputs;   // not in the fitted index
  std::vector<std::string> anchored_inputs;  // known but skill fixed at 0
};

inline Prediction win_probability(const FitResult& fit, const std::string& player1,
                                  const std::string& player2, Race race1, Race race2,
                                  const std::string& map) {
  if (player1 == player2) throw std::invalid_argument("a player cannot face themself");
  if (!fit.index->knows_map(map)) throw std::invalid_argument("unknown map: " + map);
  Prediction out;
  auto classify = [&](const std::string& id, const char* role) {
    if (!fit.index->knows_player(id)) out.unknown_inputs.emplace_back(role);
    else if (fit.index->is_anchored(id)) out.anchored_inputs.emplace_back(role);
  };
  classify(player1, "player1");
  classify(player2, "player2");
  out.player1 = player_coefficient(fit, player1);
  out.player2 = 0.0 - player_coefficient(fit, player2);  // no -0 for zero skills
  out.matchup = matchup_coefficient(fit, map, race1, race2);
  out.eta = out.player1 + out.player2 + out.matchup;
  // Taking the lower probability as the exact complement of the upper one
  // makes P(a beats b) + P(b beats a) == 1 without rounding error.
  out.probability = out.eta >= 0 ? sigmoid(out.eta) : 1.0 - sigmoid(-out.eta);
  return out;
}

struct Ranking {
  std::vector<std::pair<std::string, double>> ranked;  // descending estimate
  std::vector<std::string> anchored;                    // unranked
};

inline Ranking rank_players(const FitResult& fit) {
  Ranking r;
  for (const auto& p : fit.index->estimated_players())
    r.ranked.emplace_back(p, fit.coefficients[*fit.index->player_column(p)]);
  std::sort(r.ranked.begin(), r.ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  auto anchored = fit.index->anchored_players();
  r.anchored.assign(anchored.begin(), anchored.end());
  return r;
}

}  // namespace pairfit
