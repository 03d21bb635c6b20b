#pragma once

// Case-resampling bootstrap for the map-averaged race balance and for the
// Pearson dispersion.

#include <array>
#include <cstdint>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairfit/design.hpp"
#include "pairfit/diagnostics.hpp"
#include "pairfit/format.hpp"
#include "pairfit/glm.hpp"
#include "pairfit/parallel.hpp"
#include "pairfit/random.hpp"

namespace pairfit {

inline Dataset resample(const Dataset& d, Rng& rng) {
  if (d.empty()) throw std::invalid_argument("cannot resample an empty dataset");
  std::uniform_int_distribution<std::size_t> pick(0, d.size() - 1);
  std::vector<MatchRecord> out;
  out.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) out.push_back(d.records()[pick(rng)]);
  return Dataset(std::move(out));
}

struct BalanceStatistic {
  std::array<double, 3> per_pair{};  // order of canonical_pairs
  std::array<RacePair, 3> canonical_pairs = kCanonicalPairs;
  int maps = 0;
};

// Unweighted mean over all maps of each canonical matchup coefficient.
// Combinations without games contribute their fitted value, 0.
inline BalanceStatistic aggregate_balance(const FitResult& fit) {
  const auto& idx = *fit.index;
  const int m = static_cast<int>(idx.maps().size());
  if (m < 1) throw std::invalid_argument("fit has no maps");
  BalanceStatistic s;
  s.canonical_pairs = idx.canonical_pairs();
  s.maps = m;
  for (int k = 0; k < 3; ++k) {
    double sum = 0.0;
    for (int slot = 0; slot < m; ++slot) sum += fit.coefficients[idx.matchup_column(slot, k)];
    s.per_pair[k] = sum / m;
  }
  return s;
}

// Spread of the per-map coefficients around their mean (sample SD over maps).
inline std::array<std::optional<double>, 3> balance_sd_across_maps(const FitResult& fit) {
  const auto& idx = *fit.index;
  std::array<std::optional<double>, 3> out;
  for (int k = 0; k < 3; ++k) {
    std::vector<double> xs;
    for (int slot = 0; slot < static_cast<int>(idx.maps().size()); ++slot)
      xs.push_back(fit.coefficients[idx.matchup_column(slot, k)]);
    out[k] = sample_sd(xs);
  }
  return out;
}

struct BootstrapOptions {
  int draws = 1000;
  std::uint64_t seed = kDefaultSeed;
  FitOptions fit;
  IndexOptions index;
  bool freeze_index = false;  // reuse the full-data index instead of rebuilding per draw
  unsigned jobs = 1;
  double max_failure_rate = 0.2;
};

struct BootstrapSummary {
  std::vector<std::string> components;
  std::vector<std::vector<double>> draws;  // one per draw; empty when the draw failed
  std::vector<double> mean;
  std::vector<std::optional<double>> sd;
  std::vector<double> tail_prob;  // fraction of successful draws > 0; balance only
  int B = 0;
  std::uint64_t seed = 0;
  int failed = 0;

  int successful() const { return B - failed; }
};

class BootstrapError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

template <class Stat>
BootstrapSummary run_bootstrap(const Dataset& d, const BootstrapOptions& opts,
                               std::vector<std::string> components, bool tails, Stat&& stat) {
  if (d.empty()) throw std::invalid_argument("cannot bootstrap an empty dataset");
  std::shared_ptr<const ParameterIndex> frozen;
  if (opts.freeze_index) frozen = std::make_shared<const ParameterIndex>(build_parameter_index(d, opts.index));

  BootstrapSummary s;
  s.components = std::move(components);
  s.B = opts.draws;
  s.seed = opts.seed;
  s.draws.resize(static_cast<std::size_t>(opts.draws));
  parallel_for(static_cast<std::size_t>(opts.draws), opts.jobs, [&](std::size_t b) {
    Rng rng(derive_seed(opts.seed, b));
    Dataset sample = resample(d, rng);
    try {
      auto design = frozen ? build_design(sample, frozen) : build_design(sample, opts.index);
      FitResult fit = fit_irls(design, opts.fit);
      if (!fit.converged) return;
      s.draws[b] = stat(fit, design);
    } catch (const NonConvergenceError&) {
    } catch (const std::invalid_argument&) {
    }
  });

  const std::size_t c = s.components.size();
  std::vector<std::vector<double>> columns(c);
  for (const auto& draw : s.draws) {
    if (draw.empty()) {
      ++s.failed;
      continue;
    }
    for (std::size_t k = 0; k < c; ++k) columns[k].push_back(draw[k]);
  }
  if (s.failed > opts.max_failure_rate * opts.draws || s.successful() == 0)
    throw BootstrapError(std::to_string(s.failed) + " of " + std::to_string(opts.draws) +
                         " bootstrap draws failed to fit; data too unstable for inference");
  for (std::size_t k = 0; k < c; ++k) {
    s.mean.push_back(sample_mean(columns[k]));
    s.sd.push_back(sample_sd(columns[k]));
    if (tails) {
      std::size_t positive = 0;
      for (double x : columns[k]) positive += x > 0.0;
      s.tail_prob.push_back(static_cast<double>(positive) / static_cast<double>(columns[k].size()));
    }
  }
  return s;
}

}  // namespace detail

inline std::string pair_label(RacePair p) {
  return std::string(to_string(p.first)) + "-" + std::string(to_string(p.second));
}

inline BootstrapSummary bootstrap_balance(const Dataset& d, const BootstrapOptions& opts) {
  if (opts.draws < 1) throw std::invalid_argument("need at least one bootstrap draw");
  std::vector<std::string> names;
  for (const auto& p : opts.index.canonical_pairs) names.push_back(pair_label(p));
  return detail::run_bootstrap(d, opts, std::move(names), true, [](const FitResult& fit, const EncodedDataset&) {
    auto b = aggregate_balance(fit);
    return std::vector<double>(b.per_pair.begin(), b.per_pair.end());
  });
}

inline BootstrapSummary bootstrap_dispersion(const Dataset& d, const BootstrapOptions& opts) {
  if (opts.draws < 2) throw std::invalid_argument("dispersion bootstrap needs at least two draws");
  return detail::run_bootstrap(d, opts, {"phi"}, false, [](const FitResult& fit, const EncodedDataset& data) {
    return std::vector<double>{pearson_dispersion(fit, data).phi};
  });
}

inline void write_draws_csv(std::ostream& out, const BootstrapSummary& s) {
  out << "draw,status";
  for (const auto& c : s.components) out << ',' << c;
  out << '\n';
  for (std::size_t b = 0; b < s.draws.size(); ++b) {
    out << b << ',' << (s.draws[b].empty() ? "failed" : "ok");
    for (std::size_t k = 0; k < s.components.size(); ++k)
      out << ',' << (s.draws[b].empty() ? std::string() : format_double(s.draws[b][k]));
    out << '\n';
  }
}

}  // namespace pairfit
