#pragma once

// Synthetic leagues drawn from the model itself, for checking estimators
// against known parameters.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairfit/design.hpp"
#include "pairfit/glm.hpp"
#include "pairfit/random.hpp"

namespace pairfit {

enum class SchedulePolicy {
  Uniform,         // every pairing equally likely
  TournamentTail,  // heavy-tailed game counts: a few players play most games
};

struct LeagueTruth {
  std::map<std::string, double> player_skills;
  std::map<std::string, Race> races;
  // Per map, one effect per pair of kCanonicalPairs, in that orientation.
  std::map<std::string, std::array<double, 3>> matchup_effects;
  SchedulePolicy schedule = SchedulePolicy::Uniform;
  // Chance that a player fields one of their two other races in a game. With
  // 0 every player is locked to one race, and a race's skill level becomes
  // indistinguishable from its matchup effects.
  double off_race_rate = 0.0;

  // Effect of race a over race b on a map; 0 for mirror matchups.
  double matchup(const std::string& map, Race a, Race b) const {
    if (a == b) return 0.0;
    const auto& effects = matchup_effects.at(map);
    for (int k = 0; k < 3; ++k) {
      if (kCanonicalPairs[k] == RacePair{a, b}) return effects[k];
      if (kCanonicalPairs[k] == RacePair{b, a}) return -effects[k];
    }
    throw std::logic_error("unreachable race pair");
  }
};

struct LeagueConfig {
  int players = 20;
  int maps = 4;
  double skill_sd = 1.0;
  double matchup_sd = 0.5;
  SchedulePolicy schedule = SchedulePolicy::Uniform;
  double off_race_rate = 0.1;
};

inline std::string numbered(const char* prefix, int i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*d", prefix, width, i);
  return buf;
}

// Players P001.., maps M01.., races uniform, effects normal with the given SDs.
inline LeagueTruth random_truth(const LeagueConfig& cfg, Rng& rng) {
  if (cfg.players < 2) throw std::invalid_argument("a league needs at least 2 players");
  if (cfg.maps < 1) throw std::invalid_argument("a league needs at least 1 map");
  LeagueTruth t;
  t.schedule = cfg.schedule;
  if (!(cfg.off_race_rate >= 0.0 && cfg.off_race_rate <= 1.0))
    throw std::invalid_argument("off_race_rate must lie in [0, 1]");
  t.off_race_rate = cfg.off_race_rate;
  std::normal_distribution<double> skill(0.0, cfg.skill_sd);
  std::normal_distribution<double> matchup(0.0, cfg.matchup_sd);
  std::uniform_int_distribution<int> race(0, 2);
  for (int i = 1; i <= cfg.players; ++i) {
    auto id = numbered("P", i, 3);
    t.player_skills[id] = cfg.skill_sd > 0 ? skill(rng) : 0.0;
    t.races[id] = static_cast<Race>(race(rng));
  }
  for (int m = 1; m <= cfg.maps; ++m) {
    std::array<double, 3> e{};
    for (auto& x : e) x = cfg.matchup_sd > 0 ? matchup(rng) : 0.0;
    t.matchup_effects[numbered("M", m, 2)] = e;
  }
  return t;
}

// Linear predictor of a record under the truth, summed in the same order
// SparseRow::dot uses so re-encoding reproduces it bit for bit.
inline double truth_eta(const LeagueTruth& t, const MatchRecord& r) {
  double eta = 0.0;
  eta += t.player_skills.at(r.player1);
  eta += -t.player_skills.at(r.player2);
  if (r.r1() != r.r2()) eta += t.matchup(r.map, r.r1(), r.r2());
  return eta;
}

struct GeneratedGame {
  MatchRecord record;
  double eta;
};

inline std::vector<GeneratedGame> generate_games(const LeagueTruth& truth, std::size_t n, Rng& rng) {
  if (truth.player_skills.size() < 2) throw std::invalid_argument("a league needs at least 2 players");
  if (truth.matchup_effects.empty()) throw std::invalid_argument("a league needs at least 1 map");
  std::vector<std::string> ids;
  std::vector<double> weights;
  for (const auto& [id, skill] : truth.player_skills) {
    if (!truth.races.count(id)) throw std::invalid_argument("player without a race: " + id);
    ids.push_back(id);
    // Zipf-like activity: player k plays roughly in proportion to 1/k.
    weights.push_back(truth.schedule == SchedulePolicy::Uniform ? 1.0 : 1.0 / static_cast<double>(ids.size()));
  }
  std::vector<std::string> maps;
  for (const auto& [m, e] : truth.matchup_effects) maps.push_back(m);

  std::discrete_distribution<std::size_t> pick_player(weights.begin(), weights.end());
  std::uniform_int_distribution<std::size_t> pick_map(0, maps.size() - 1);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_int_distribution<int> duration(300, 2400);
  std::uniform_int_distribution<int> other_race(1, 2);
  auto field_race = [&](const std::string& id) {
    Race main = truth.races.at(id);
    if (truth.off_race_rate > 0.0 && coin(rng) < truth.off_race_rate)
      return static_cast<Race>((static_cast<int>(main) + other_race(rng)) % 3);
    return main;
  };
  const std::chrono::sys_days start{std::chrono::year(2010) / std::chrono::September / 1};

  std::vector<GeneratedGame> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t a = pick_player(rng);
    std::size_t b = pick_player(rng);
    while (b == a) b = pick_player(rng);
    MatchRecord r;
    r.player1 = ids[a];
    r.player2 = ids[b];
    r.race1 = std::string(to_string(field_race(r.player1)));
    r.race2 = std::string(to_string(field_race(r.player2)));
    r.map = maps[pick_map(rng)];
    r.date = std::chrono::year_month_day{start + std::chrono::days(static_cast<int>(i / 5))};
    r.duration_seconds = duration(rng);
    double eta = truth_eta(truth, r);
    r.winner = coin(rng) < sigmoid(eta);
    out.push_back({std::move(r), eta});
  }
  return out;
}

inline Dataset generate(const LeagueTruth& truth, std::size_t n, Rng& rng) {
  auto games = generate_games(truth, n, rng);
  std::vector<MatchRecord> records;
  records.reserve(games.size());
  for (auto& g : games) records.push_back(std::move(g.record));
  return Dataset(std::move(records));
}

// Truth laid out on the columns of an index; anchored players have no column.
inline Vector truth_vector(const LeagueTruth& t, const ParameterIndex& idx) {
  Vector beta = Vector::Zero(idx.p());
  for (int c = 0; c < idx.p(); ++c) {
    auto s = idx.symbol(c);
    beta[c] = s.kind == ColumnKind::Player ? t.player_skills.at(s.player)
                                           : t.matchup(s.map, s.races.first, s.races.second);
  }
  return beta;
}

struct SymbolError {
  std::string symbol;
  double estimate;
  double truth;
  double error;  // |estimate - truth| after offset alignment
};

struct TruthError {
  double max_abs_error = 0.0;
  std::vector<SymbolError> symbols;
};

// Coefficients are compared after removing whatever part of (estimate -
// truth) the data cannot see. With `data`, that is the projection onto the
// null space of the design in which force-anchored reference players get
// columns of their own: per connected component a common skill shift, plus
// race-level shifts traded against matchup effects when players never switch
// race. In the usual case this is the mean offset over each component's
// players. Without `data` all players form one component and matchups are
// compared directly. Threshold-anchored players are fixed at 0 by
// construction and excluded, as are unobserved matchups.
inline TruthError truth_error(const FitResult& fit, const LeagueTruth& truth, const Dataset* data = nullptr) {
  const auto& idx = *fit.index;
  std::size_t shared = 0;
  for (const auto& p : idx.estimated_players()) shared += truth.player_skills.count(p);
  for (const auto& m : idx.maps()) shared += truth.matchup_effects.count(m);
  if (shared == 0) throw std::invalid_argument("fit and truth share no symbols");

  // Extended layout: estimated and force-anchored players, then matchups.
  std::vector<std::string> players(idx.estimated_players().begin(), idx.estimated_players().end());
  players.insert(players.end(), idx.force_anchored().begin(), idx.force_anchored().end());
  std::sort(players.begin(), players.end());
  ParameterIndex ext(players, idx.threshold_anchored(), {}, idx.maps(), idx.canonical_pairs());

  std::vector<int> cols;  // extended columns taking part
  std::vector<double> diff, est, tr;
  for (int c = 0; c < ext.p(); ++c) {
    auto s = ext.symbol(c);
    double e = 0.0, t = 0.0;
    if (s.kind == ColumnKind::Player) {
      if (!truth.player_skills.count(s.player)) continue;
      if (auto fc = idx.player_column(s.player)) e = fit.coefficients[*fc];
      t = truth.player_skills.at(s.player);
    } else {
      if (!truth.matchup_effects.count(s.map)) continue;
      int fc = idx.matchup_column(*idx.map_slot(s.map), (c - ext.player_column_count()) % 3);
      if (!fit.observed.empty() && !fit.observed[fc]) continue;
      e = fit.coefficients[fc];
      t = truth.matchup(s.map, s.races.first, s.races.second);
    }
    cols.push_back(c);
    est.push_back(e);
    tr.push_back(t);
    diff.push_back(e - t);
  }
  const auto q = static_cast<Eigen::Index>(cols.size());
  Vector d = Eigen::Map<Vector>(diff.data(), q);

  Eigen::MatrixXd null_basis;
  if (data) {
    std::vector<int> pos(static_cast<std::size_t>(ext.p()), -1);
    for (Eigen::Index k = 0; k < q; ++k) pos[cols[k]] = static_cast<int>(k);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(q, q);
    for (const auto& r : data->records()) {
      auto row = encode_row(r, ext);
      for (const auto& a : row.entries())
        for (const auto& b : row.entries())
          if (pos[a.column] >= 0 && pos[b.column] >= 0) gram(pos[a.column], pos[b.column]) += a.sign * b.sign;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    const Vector& ev = eig.eigenvalues();
    double cutoff = 1e-9 * std::max(1.0, ev.cwiseAbs().maxCoeff());
    Eigen::Index k = 0;
    while (k < q && ev[k] < cutoff) ++k;
    null_basis = eig.eigenvectors().leftCols(k);
  } else {
    null_basis = Eigen::MatrixXd::Zero(q, 1);
    for (Eigen::Index k = 0; k < q; ++k)
      if (ext.symbol(cols[k]).kind == ColumnKind::Player) null_basis(k, 0) = 1.0;
    if (null_basis.squaredNorm() > 0) null_basis /= null_basis.norm();
  }
  // Basis is orthonormal, so the projection is N N^T d.
  Vector aligned = d - null_basis * (null_basis.transpose() * d);

  TruthError out;
  for (Eigen::Index k = 0; k < q; ++k) {
    double err = std::abs(aligned[k]);
    out.max_abs_error = std::max(out.max_abs_error, err);
    out.symbols.push_back({ext.symbol(cols[k]).name(), est[k], tr[k], err});
  }
  return out;
}

}  // namespace pairfit
