#pragma once

// Column layout of the paired-comparison model and the signed sparse
// encoding of each match.
//
// Linear predictor of a game:
//   eta = skill(player1) - skill(player2) + matchup(map, race1, race2)
// Only one matchup parameter exists per unordered race pair and map. The
// reversed orientation is realized by a sign flip, so
// matchup(map, a, b) = -matchup(map, b, a) holds structurally and
// matchup(map, a, a) = 0 is implied by the absence of a column.

#include <algorithm>
#include <array>
#include <map>
#include <memory>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "pairfit/match_data.hpp"

namespace pairfit {

class EncodingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::array<RacePair, 3> kCanonicalPairs{
    RacePair{Race::Terran, Race::Protoss}, RacePair{Race::Terran, Race::Zerg},
    RacePair{Race::Protoss, Race::Zerg}};

struct IndexOptions {
  int min_games = 6;  // players with fewer games get skill fixed at 0
  // false: no player is anchored at all (used for the lasso, which is
  // identifiable through its penalty)
  bool anchor = true;
  // Orientation of the stored matchup parameter for each unordered pair.
  std::array<RacePair, 3> canonical_pairs = kCanonicalPairs;
};

enum class ColumnKind { Player, Matchup };

struct ColumnSymbol {
  ColumnKind kind;
  std::string player;  // Player columns
  std::string map;     // Matchup columns
  RacePair races{};    // Matchup columns, canonical orientation

  std::string name() const {
    if (kind == ColumnKind::Player) return player;
    return map + ":" + std::string(to_string(races.first)) + "-" + std::string(to_string(races.second));
  }
};

class ParameterIndex {
 public:
  ParameterIndex(std::vector<std::string> estimated_players, std::set<std::string> threshold_anchored,
                 std::set<std::string> force_anchored, std::vector<std::string> maps,
                 std::array<RacePair, 3> canonical_pairs = kCanonicalPairs)
      : estimated_(std::move(estimated_players)),
        threshold_anchored_(std::move(threshold_anchored)),
        force_anchored_(std::move(force_anchored)),
        maps_(std::move(maps)),
        pairs_(canonical_pairs) {
    for (const auto& [a, b] : pairs_)
      if (a == b) throw std::invalid_argument("canonical pair must join two different races");
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j)
        if (unordered_pair(pairs_[i].first, pairs_[i].second) ==
            unordered_pair(pairs_[j].first, pairs_[j].second))
          throw std::invalid_argument("canonical pairs must be distinct");
    for (std::size_t i = 0; i < estimated_.size(); ++i) {
      if (!player_columns_.emplace(estimated_[i], static_cast<int>(i)).second)
        throw std::invalid_argument("duplicate player column: " + estimated_[i]);
      if (threshold_anchored_.count(estimated_[i]) || force_anchored_.count(estimated_[i]))
        throw std::invalid_argument("player both estimated and anchored: " + estimated_[i]);
    }
    for (const auto& p : force_anchored_)
      if (threshold_anchored_.count(p)) throw std::invalid_argument("player anchored twice: " + p);
    for (std::size_t m = 0; m < maps_.size(); ++m)
      if (!map_slots_.emplace(maps_[m], static_cast<int>(m)).second)
        throw std::invalid_argument("duplicate map: " + maps_[m]);
  }

  int p() const { return static_cast<int>(estimated_.size() + 3 * maps_.size()); }
  int player_column_count() const { return static_cast<int>(estimated_.size()); }
  int matchup_column_count() const { return static_cast<int>(3 * maps_.size()); }

  const std::vector<std::string>& estimated_players() const { return estimated_; }
  const std::vector<std::string>& maps() const { return maps_; }
  const std::set<std::string>& threshold_anchored() const { return threshold_anchored_; }
  const std::set<std::string>& force_anchored() const { return force_anchored_; }
  const std::array<RacePair, 3>& canonical_pairs() const { return pairs_; }

  std::set<std::string> anchored_players() const {
    std::set<std::string> all = threshold_anchored_;
    all.insert(force_anchored_.begin(), force_anchored_.end());
    return all;
  }

  bool knows_player(const std::string& id) const {
    return player_columns_.count(id) || threshold_anchored_.count(id) || force_anchored_.count(id);
  }
  bool is_anchored(const std::string& id) const {
    return threshold_anchored_.count(id) || force_anchored_.count(id);
  }
  bool knows_map(const std::string& id) const { return map_slots_.count(id) > 0; }

  std::optional<int> player_column(const std::string& id) const {
    auto it = player_columns_.find(id);
    if (it == player_columns_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<int> map_slot(const std::string& id) const {
    auto it = map_slots_.find(id);
    if (it == map_slots_.end()) return std::nullopt;
    return it->second;
  }

  int matchup_column(int map_slot, int pair_slot) const {
    return player_column_count() + 3 * map_slot + pair_slot;
  }

  // Column and sign realizing matchup(map, a, b); nullopt when a == b.
  std::optional<std::pair<int, int>> matchup_entry(int map_slot, Race a, Race b) const {
    if (a == b) return std::nullopt;
    for (int k = 0; k < 3; ++k) {
      if (pairs_[k] == RacePair{a, b}) return std::pair{matchup_column(map_slot, k), +1};
      if (pairs_[k] == RacePair{b, a}) return std::pair{matchup_column(map_slot, k), -1};
    }
    throw std::logic_error("race pair not covered by canonical pairs");
  }

  ColumnSymbol symbol(int column) const {
    if (column < 0 || column >= p()) throw std::out_of_range("column out of range");
    if (column < player_column_count())
      return {ColumnKind::Player, estimated_[column], {}, {}};
    int rel = column - player_column_count();
    return {ColumnKind::Matchup, {}, maps_[rel / 3], pairs_[rel % 3]};
  }

  friend bool operator==(const ParameterIndex& a, const ParameterIndex& b) {
    return a.estimated_ == b.estimated_ && a.threshold_anchored_ == b.threshold_anchored_ &&
           a.force_anchored_ == b.force_anchored_ && a.maps_ == b.maps_ && a.pairs_ == b.pairs_;
  }

 private:
  std::vector<std::string> estimated_;
  std::set<std::string> threshold_anchored_;
  std::set<std::string> force_anchored_;
  std::vector<std::string> maps_;
  std::array<RacePair, 3> pairs_;
  std::map<std::string, int> player_columns_;
  std::map<std::string, int> map_slots_;
};

// Connected components of the opponent graph, each a sorted list of ids.
inline std::vector<std::vector<std::string>> opponent_components(const Dataset& d) {
  std::vector<std::string> ids(d.players().begin(), d.players().end());
  std::map<std::string, int> pos;
  for (std::size_t i = 0; i < ids.size(); ++i) pos[ids[i]] = static_cast<int>(i);
  std::vector<int> parent(ids.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (const auto& r : d.records()) {
    int a = find(pos[r.player1]);
    int b = find(pos[r.player2]);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::map<int, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < ids.size(); ++i) groups[find(static_cast<int>(i))].push_back(ids[i]);
  std::vector<std::vector<std::string>> out;
  for (auto& [root, members] : groups) out.push_back(std::move(members));
  return out;
}

inline ParameterIndex build_parameter_index(const Dataset& d, const IndexOptions& opts = {}) {
  if (d.empty()) throw std::invalid_argument("cannot build a parameter index from an empty dataset");
  if (opts.anchor && opts.min_games < 1) throw std::invalid_argument("min_games must be positive");
  for (const auto& r : d.records())
    if (!r.has_valid_races())
      throw std::invalid_argument("dataset contains non-standard races; run filter_valid first");

  const auto counts = games_per_player(d);
  std::set<std::string> threshold;
  std::set<std::string> forced;
  if (opts.anchor) {
    for (const auto& [player, n] : counts)
      if (n < opts.min_games) threshold.insert(player);
    for (const auto& component : opponent_components(d)) {
      bool has_anchor = std::any_of(component.begin(), component.end(),
                                    [&](const std::string& p) { return threshold.count(p) > 0; });
      if (has_anchor) continue;
      // component is sorted, so the first minimum is the lexicographic tie-break
      auto pick = std::min_element(component.begin(), component.end(),
                                   [&](const std::string& a, const std::string& b) {
                                     return counts.at(a) < counts.at(b);
                                   });
      forced.insert(*pick);
    }
  }
  std::vector<std::string> estimated;
  for (const auto& p : d.players())
    if (!threshold.count(p) && !forced.count(p)) estimated.push_back(p);
  std::vector<std::string> maps(d.maps().begin(), d.maps().end());
  return ParameterIndex(std::move(estimated), std::move(threshold), std::move(forced), std::move(maps),
                        opts.canonical_pairs);
}

struct SignedEntry {
  int column;
  int sign;  // +1 or -1
  friend bool operator==(const SignedEntry&, const SignedEntry&) = default;
};

// At most three nonzeros: player1, player2, matchup.
class SparseRow {
 public:
  void push(int column, int sign) {
    if (size_ == entries_.size()) throw std::logic_error("sparse row holds at most 3 entries");
    entries_[size_++] = {column, sign};
  }
  std::span<const SignedEntry> entries() const { return {entries_.data(), size_}; }
  std::size_t size() const { return size_; }

  template <class Vec>
  double dot(const Vec& beta) const {
    double s = 0.0;
    for (const auto& e : entries()) s += e.sign * beta[e.column];
    return s;
  }

  SparseRow operator-() const {
    SparseRow out = *this;
    for (std::size_t i = 0; i < size_; ++i) out.entries_[i].sign = -out.entries_[i].sign;
    return out;
  }

  // Same entries regardless of order.
  friend bool operator==(const SparseRow& a, const SparseRow& b) {
    return a.sorted_entries() == b.sorted_entries();
  }

  std::vector<SignedEntry> sorted_entries() const {
    std::vector<SignedEntry> out(entries().begin(), entries().end());
    std::sort(out.begin(), out.end(), [](const auto& x, const auto& y) { return x.column < y.column; });
    return out;
  }

 private:
  std::array<SignedEntry, 3> entries_{};
  std::size_t size_ = 0;
};

inline SparseRow encode_row(const MatchRecord& r, const ParameterIndex& idx) {
  if (!idx.knows_player(r.player1)) throw EncodingError("unknown player: " + r.player1);
  if (!idx.knows_player(r.player2)) throw EncodingError("unknown player: " + r.player2);
  auto slot = idx.map_slot(r.map);
  if (!slot) throw EncodingError("unknown map: " + r.map);
  auto a = parse_race(r.race1);
  auto b = parse_race(r.race2);
  if (!a || !b) throw EncodingError("non-standard race in record " + r.player1 + " vs " + r.player2);
  SparseRow row;
  if (auto c = idx.player_column(r.player1)) row.push(*c, +1);
  if (auto c = idx.player_column(r.player2)) row.push(*c, -1);
  if (auto m = idx.matchup_entry(*slot, *a, *b)) row.push(m->first, m->second);
  return row;
}

struct EncodedDataset {
  std::vector<SparseRow> rows;
  std::vector<double> response;  // 1.0 iff player1 won
  std::shared_ptr<const ParameterIndex> index;

  std::size_t n() const { return rows.size(); }
  int p() const { return index->p(); }

  // Columns with at least one nonzero entry.
  std::vector<bool> observed_columns() const {
    std::vector<bool> seen(static_cast<std::size_t>(p()), false);
    for (const auto& row : rows)
      for (const auto& e : row.entries()) seen[e.column] = true;
    return seen;
  }

  int effective_columns() const {
    auto seen = observed_columns();
    return static_cast<int>(std::count(seen.begin(), seen.end(), true));
  }

  EncodedDataset subset(std::span<const std::size_t> which) const {
    EncodedDataset out{{}, {}, index};
    out.rows.reserve(which.size());
    out.response.reserve(which.size());
    for (auto i : which) {
      out.rows.push_back(rows.at(i));
      out.response.push_back(response.at(i));
    }
    return out;
  }
};

inline EncodedDataset build_design(const Dataset& d, std::shared_ptr<const ParameterIndex> idx) {
  EncodedDataset out{{}, {}, std::move(idx)};
  out.rows.reserve(d.size());
  out.response.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto& r = d.records()[i];
    try {
      out.rows.push_back(encode_row(r, *out.index));
    } catch (const EncodingError& e) {
      throw EncodingError("record " + std::to_string(i) + " (" + r.player1 + " vs " + r.player2 +
                          " on " + r.map + "): " + e.what());
    }
    out.response.push_back(r.winner ? 1.0 : 0.0);
  }
  return out;
}

inline EncodedDataset build_design(const Dataset& d, const IndexOptions& opts = {}) {
  return build_design(d, std::make_shared<const ParameterIndex>(build_parameter_index(d, opts)));
}

}  // namespace pairfit
