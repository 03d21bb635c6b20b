#pragma once

// JSON forms of the library's results. Keys are snake_case and every double
// is written with 17 significant digits (see write_json).

#include <algorithm>
#include <memory>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "pairfit/bootstrap.hpp"
#include "pairfit/design.hpp"
#include "pairfit/diagnostics.hpp"
#include "pairfit/format.hpp"
#include "pairfit/glm.hpp"
#include "pairfit/match_data.hpp"
#include "pairfit/predict.hpp"
#include "pairfit/simulate.hpp"

namespace pairfit {

using Json = nlohmann::ordered_json;

namespace detail {

inline void write_json_value(std::ostream& out, const Json& j, int indent, int depth) {
  auto newline = [&](int d) {
    out << '\n';
    for (int i = 0; i < d * indent; ++i) out << ' ';
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out << "{}";
        return;
      }
      out << '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out << ',';
        first = false;
        newline(depth + 1);
        out << Json(it.key()).dump() << ": ";
        write_json_value(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out << '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out << "[]";
        return;
      }
      // Arrays of scalars stay on one line.
      bool flat = std::all_of(j.begin(), j.end(), [](const Json& e) { return e.is_primitive(); });
      out << '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out << (flat ? ", " : ",");
        first = false;
        if (!flat) newline(depth + 1);
        write_json_value(out, e, indent, depth + 1);
      }
      if (!flat) newline(depth);
      out << ']';
      return;
    }
    case Json::value_t::number_float:
      out << format_double(j.get<double>());
      return;
    default:
      out << j.dump();
  }
}

}  // namespace detail

inline void write_json(std::ostream& out, const Json& j) {
  detail::write_json_value(out, j, 2, 0);
  out << '\n';
}

inline std::string to_json_string(const Json& j) {
  std::ostringstream s;
  write_json(s, j);
  return s.str();
}

inline Json optional_json(const std::optional<double>& x) { return x ? Json(*x) : Json(nullptr); }

inline Race race_from_json(const Json& j) {
  auto r = parse_race(j.get<std::string>());
  if (!r) throw std::invalid_argument("unknown race: " + j.get<std::string>());
  return *r;
}

inline Json to_json(const ParameterIndex& idx) {
  Json pairs = Json::array();
  for (const auto& [a, b] : idx.canonical_pairs()) pairs.push_back({to_string(a), to_string(b)});
  return {{"p", idx.p()},
          {"canonical_pairs", pairs},
          {"maps", idx.maps()},
          {"estimated_players", idx.estimated_players()},
          {"threshold_anchored", idx.threshold_anchored()},
          {"force_anchored", idx.force_anchored()}};
}

inline ParameterIndex index_from_json(const Json& j) {
  std::array<RacePair, 3> pairs{};
  const auto& jp = j.at("canonical_pairs");
  if (jp.size() != 3) throw std::invalid_argument("canonical_pairs must have 3 entries");
  for (std::size_t k = 0; k < 3; ++k) pairs[k] = {race_from_json(jp[k][0]), race_from_json(jp[k][1])};
  ParameterIndex idx(j.at("estimated_players").get<std::vector<std::string>>(),
                     j.at("threshold_anchored").get<std::set<std::string>>(),
                     j.at("force_anchored").get<std::set<std::string>>(),
                     j.at("maps").get<std::vector<std::string>>(), pairs);
  if (j.contains("p") && j.at("p").get<int>() != idx.p())
    throw std::invalid_argument("index column count does not match its symbol table");
  return idx;
}

inline Json column_json(const ParameterIndex& idx, int c) {
  auto s = idx.symbol(c);
  if (s.kind == ColumnKind::Player) return {{"column", c}, {"kind", "player"}, {"player", s.player}};
  return {{"column", c},
          {"kind", "matchup"},
          {"map", s.map},
          {"race1", to_string(s.races.first)},
          {"race2", to_string(s.races.second)}};
}

inline Json to_json(const Ranking& r) {
  Json ranked = Json::array();
  for (std::size_t i = 0; i < r.ranked.size(); ++i)
    ranked.push_back({{"rank", i + 1}, {"player", r.ranked[i].first}, {"estimate", r.ranked[i].second}});
  return {{"ranked", ranked}, {"anchored", r.anchored}};
}

inline Json to_json(const FitResult& fit) {
  const auto& idx = *fit.index;
  Json columns = Json::array();
  for (int c = 0; c < idx.p(); ++c) {
    Json col = column_json(idx, c);
    col["estimate"] = fit.coefficients[c];
    col["observed"] = fit.observed.empty() ? true : static_cast<bool>(fit.observed[c]);
    columns.push_back(col);
  }
  Json balance = Json::array();
  if (!idx.maps().empty()) {
    auto stat = aggregate_balance(fit);
    auto sds = balance_sd_across_maps(fit);
    for (int k = 0; k < 3; ++k)
      balance.push_back({{"pair", pair_label(stat.canonical_pairs[k])},
                         {"mean_across_maps", stat.per_pair[k]},
                         {"sd_across_maps", optional_json(sds[k])}});
  }
  return {{"fit",
           {{"converged", fit.converged},
            {"iterations", fit.iterations},
            {"stabilized", fit.stabilized},
            {"log_likelihood", fit.log_likelihood},
            {"deviance", fit.deviance},
            {"l1_lambda", fit.l1_lambda},
            {"p", idx.p()},
            {"p_effective", fit.effective_columns()}}},
          {"index", to_json(idx)},
          {"columns", columns},
          {"ranking", to_json(rank_players(fit))},
          {"balance", balance}};
}

inline FitResult fit_from_json(const Json& j) {
  FitResult fit;
  fit.index = std::make_shared<const ParameterIndex>(index_from_json(j.at("index")));
  const auto& idx = *fit.index;
  const auto& cols = j.at("columns");
  if (static_cast<int>(cols.size()) != idx.p()) throw std::invalid_argument("fit has the wrong number of columns");
  fit.coefficients = Vector::Zero(idx.p());
  fit.observed.assign(static_cast<std::size_t>(idx.p()), true);
  for (int c = 0; c < idx.p(); ++c) {
    const auto& col = cols[c];
    if (col.at("column").get<int>() != c) throw std::invalid_argument("columns out of order");
    Json expect = column_json(idx, c);
    for (auto it = expect.begin(); it != expect.end(); ++it)
      if (col.at(it.key()) != it.value())
        throw std::invalid_argument("column " + std::to_string(c) + " does not match the index");
    fit.coefficients[c] = col.at("estimate").get<double>();
    fit.observed[c] = col.value("observed", true);
  }
  const auto& meta = j.at("fit");
  fit.converged = meta.at("converged").get<bool>();
  fit.iterations = meta.at("iterations").get<int>();
  fit.stabilized = meta.value("stabilized", false);
  fit.log_likelihood = meta.at("log_likelihood").get<double>();
  fit.deviance = meta.at("deviance").get<double>();
  fit.l1_lambda = meta.at("l1_lambda").get<double>();
  return fit;
}

inline Json to_json(const DescriptiveStats& s, const Dataset& d) {
  Json races = Json::object();
  for (const auto& [r, n] : s.race_counts) races[std::string(to_string(r))] = n;
  Json hist = Json::array();
  for (const auto& [bucket, n] : s.games_histogram)
    hist.push_back({{"games_from", bucket * 5 + 1}, {"games_to", bucket * 5 + 5}, {"players", n}});
  Json per_player = Json::object();
  for (const auto& [p, n] : s.games_per_player) per_player[p] = n;
  Json freq = Json::array();
  for (const auto& [pair, n] : s.pair_frequencies)
    freq.push_back({{"race1", to_string(pair.first)}, {"race2", to_string(pair.second)}, {"games", n}});
  Json wins = Json::array();
  for (const auto& [pair, n] : s.pair_wins)
    wins.push_back({{"winner_race", to_string(pair.first)}, {"loser_race", to_string(pair.second)}, {"wins", n}});
  Json ratios = Json::array();
  for (const auto& [pair, r] : s.win_ratios)
    ratios.push_back({{"race", to_string(pair.first)}, {"opponent", to_string(pair.second)}, {"win_ratio", r}});
  Json monthly = Json::array();
  for (const auto& row : s.monthly_race_trend) {
    char ym[16];
    std::snprintf(ym, sizeof ym, "%04d-%02u", static_cast<int>(row.month.year()),
                  static_cast<unsigned>(row.month.month()));
    Json counts = Json::object();
    Json props = Json::object();
    for (Race r : kAllRaces) {
      counts[std::string(to_string(r))] = row.counts[static_cast<int>(r)];
      props[std::string(to_string(r))] = row.proportions[static_cast<int>(r)];
    }
    monthly.push_back({{"month", ym}, {"counts", counts}, {"proportions", props}});
  }
  double mean_games = d.players().empty() ? 0.0 : 2.0 * d.size() / static_cast<double>(d.players().size());
  return {{"records", d.size()},
          {"players", d.players().size()},
          {"maps", d.maps().size()},
          {"mean_games_per_player", mean_games},
          {"race_counts", races},
          {"games_histogram", hist},
          {"pair_frequencies", freq},
          {"pair_wins", wins},
          {"win_ratios", ratios},
          {"monthly_race_trend", monthly},
          {"games_per_player", per_player}};
}

inline Json to_json(const LrtResult& r) {
  return {{"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}};
}

inline Json to_json(const HosmerLemeshowResult& r) {
  Json groups = Json::array();
  for (const auto& g : r.groups)
    groups.push_back({{"count", g.count},
                      {"mean_fitted", g.mean_fitted},
                      {"observed", g.observed},
                      {"expected", g.expected}});
  return {{"statistic", r.statistic}, {"df", r.df}, {"p_value", r.p_value}, {"groups", groups}};
}

inline Json to_json(const DispersionEstimate& d) {
  return {{"phi", d.phi}, {"pearson_chi2", d.pearson_chi2}, {"n", d.n}, {"p_effective", d.p_effective}};
}

inline Json to_json(const CvSummary& s) {
  Json folds = Json::array();
  for (const auto& f : s.per_fold) folds.push_back({{"train_accuracy", f.train}, {"test_accuracy", f.test}});
  return {{"k", s.k},
          {"seed", s.seed},
          {"train_mean", s.train_mean},
          {"train_sd", s.train_sd},
          {"test_mean", s.test_mean},
          {"test_sd", s.test_sd},
          {"per_fold", folds}};
}

inline Json to_json(const BootstrapSummary& s) {
  Json comps = Json::array();
  for (std::size_t k = 0; k < s.components.size(); ++k) {
    Json c = {{"name", s.components[k]}, {"mean", s.mean[k]}, {"sd", optional_json(s.sd[k])}};
    if (!s.tail_prob.empty()) c["tail_prob_positive"] = s.tail_prob[k];
    comps.push_back(c);
  }
  return {{"B", s.B}, {"seed", s.seed}, {"successful", s.successful()}, {"failed", s.failed}, {"components", comps}};
}

inline Json to_json(const Prediction& p) {
  return {{"probability", p.probability},
          {"eta", p.eta},
          {"contributions", {{"player1", p.player1}, {"player2", p.player2}, {"matchup", p.matchup}}},
          {"unknown_inputs", p.unknown_inputs},
          {"anchored_inputs", p.anchored_inputs}};
}

inline Json to_json(const LeagueTruth& t) {
  Json players = Json::array();
  for (const auto& [id, skill] : t.player_skills)
    players.push_back({{"player", id}, {"race", to_string(t.races.at(id))}, {"skill", skill}});
  Json matchups = Json::array();
  for (const auto& [map, e] : t.matchup_effects)
    for (int k = 0; k < 3; ++k)
      matchups.push_back({{"map", map},
                          {"race1", to_string(kCanonicalPairs[k].first)},
                          {"race2", to_string(kCanonicalPairs[k].second)},
                          {"effect", e[k]}});
  return {{"schedule", t.schedule == SchedulePolicy::Uniform ? "uniform" : "tournament-tail"},
          {"off_race_rate", t.off_race_rate},
          {"players", players},
          {"matchups", matchups}};
}

inline LeagueTruth truth_from_json(const Json& j) {
  LeagueTruth t;
  t.schedule = j.value("schedule", std::string("uniform")) == "uniform" ? SchedulePolicy::Uniform
                                                                      : SchedulePolicy::TournamentTail;
  t.off_race_rate = j.value("off_race_rate", 0.0);
  for (const auto& p : j.at("players")) {
    auto id = p.at("player").get<std::string>();
    t.player_skills[id] = p.at("skill").get<double>();
    t.races[id] = race_from_json(p.at("race"));
  }
  for (const auto& m : j.at("matchups")) {
    RacePair pair{race_from_json(m.at("race1")), race_from_json(m.at("race2"))};
    auto& e = t.matchup_effects[m.at("map").get<std::string>()];
    double v = m.at("effect").get<double>();
    bool found = false;
    for (int k = 0; k < 3; ++k) {
      if (kCanonicalPairs[k] == pair) e[k] = v, found = true;
      else if (kCanonicalPairs[k] == RacePair{pair.second, pair.first}) e[k] = -v, found = true;
    }
    if (!found) throw std::invalid_argument("matchup effect for a mirror pair");
  }
  return t;
}

inline Json to_json(const TruthError& e) {
  Json syms = Json::array();
  for (const auto& s : e.symbols)
    syms.push_back({{"symbol", s.symbol}, {"estimate", s.estimate}, {"truth", s.truth}, {"error", s.error}});
  return {{"max_abs_error", e.max_abs_error}, {"symbols", syms}};
}

}  // namespace pairfit
