#pragma once

// Goodness-of-fit battery for a fitted model: likelihood-ratio test against
// the constant model, Hosmer-Lemeshow, Pearson dispersion and residuals,
// k-fold cross-validated accuracy and the lasso zero-overlap check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pairfit/design.hpp"
#include "pairfit/format.hpp"
#include "pairfit/glm.hpp"
#include "pairfit/parallel.hpp"
#include "pairfit/predict.hpp"

namespace pairfit {

inline double sample_mean(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Divisor n - 1; absent for fewer than two values.
inline std::optional<double> sample_sd(std::span<const double> xs) {
  if (xs.size() < 2) return std::nullopt;
  double m = sample_mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

inline std::vector<double> fitted_probabilities(const FitResult& fit, const EncodedDataset& data,
                                                double eta_cap = 30.0) {
  check_dimension(fit.coefficients, data);
  std::vector<double> pi(data.n());
  for (std::size_t i = 0; i < data.n(); ++i)
    pi[i] = sigmoid(std::clamp(data.rows[i].dot(fit.coefficients), -eta_cap, eta_cap));
  return pi;
}

struct LrtResult {
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

// Against beta = 0 everywhere, whose log-likelihood is n log(1/2).
inline LrtResult lrt_vs_constant(const FitResult& fit, const EncodedDataset& data) {
  if (fit.l1_lambda != 0.0) throw std::invalid_argument("likelihood-ratio test needs an unpenalized fit");
  LrtResult r;
  double null_ll = static_cast<double>(data.n()) * std::log(0.5);
  r.statistic = std::max(0.0, 2.0 * (log_likelihood(fit.coefficients, data) - null_ll));
  r.df = data.effective_columns();
  r.p_value = r.df > 0 ? chi_square_sf(r.statistic, r.df) : 1.0;
  return r;
}

struct HosmerLemeshowGroup {
  std::size_t count = 0;
  double mean_fitted = 0.0;
  double observed = 0.0;
  double expected = 0.0;
};

struct HosmerLemeshowResult {
  std::vector<HosmerLemeshowGroup> groups;
  double statistic = 0.0;
  int df = 0;
  double p_value = 1.0;
};

inline HosmerLemeshowResult hosmer_lemeshow(const FitResult& fit, const EncodedDataset& data, int groups = 10) {
  if (groups < 3) throw std::invalid_argument("Hosmer-Lemeshow needs at least 3 groups");
  const std::size_t n = data.n();
  if (n < static_cast<std::size_t>(groups)) throw std::invalid_argument("fewer rows than Hosmer-Lemeshow groups");
  auto pi = fitted_probabilities(fit, data);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return pi[a] < pi[b]; });

  HosmerLemeshowResult r;
  r.df = groups - 2;
  const std::size_t base = n / groups;
  const std::size_t extra = n % groups;  // the first `extra` bins get one more row
  std::size_t pos = 0;
  for (int g = 0; g < groups; ++g) {
    HosmerLemeshowGroup bin;
    bin.count = base + (static_cast<std::size_t>(g) < extra ? 1 : 0);
    for (std::size_t k = 0; k < bin.count; ++k, ++pos) {
      bin.expected += pi[order[pos]];
      bin.observed += data.response[order[pos]];
    }
    bin.mean_fitted = bin.expected / static_cast<double>(bin.count);
    if (bin.mean_fitted <= 0.0 || bin.mean_fitted >= 1.0)
      throw std::domain_error("degenerate Hosmer-Lemeshow bin " + std::to_string(g) +
                              ": mean fitted probability is " + format_double(bin.mean_fitted));
    double diff = bin.observed - bin.expected;
    r.statistic += diff * diff / (bin.expected * (1.0 - bin.mean_fitted));
    r.groups.push_back(bin);
  }
  r.p_value = chi_square_sf(r.statistic, r.df);
  return r;
}

struct DispersionEstimate {
  double phi = 0.0;
  double pearson_chi2 = 0.0;
  std::size_t n = 0;
  int p_effective = 0;
};

inline DispersionEstimate pearson_dispersion(const FitResult& fit, const EncodedDataset& data) {
  if (fit.l1_lambda != 0.0) throw std::invalid_argument("dispersion needs an unpenalized fit");
  DispersionEstimate d;
  d.n = data.n();
  d.p_effective = data.effective_columns();
  if (d.n <= static_cast<std::size_t>(d.p_effective))
    throw std::invalid_argument("dispersion needs more rows than estimated columns");
  auto pi = fitted_probabilities(fit, data);
  for (std::size_t i = 0; i < d.n; ++i) {
    double r = data.response[i] - pi[i];
    d.pearson_chi2 += r * r / (pi[i] * (1.0 - pi[i]));
  }
  d.phi = d.pearson_chi2 / static_cast<double>(d.n - d.p_effective);
  return d;
}

struct ResidualPoint {
  double fitted;
  double residual;
};

inline std::vector<ResidualPoint> residuals_vs_fitted(const FitResult& fit, const EncodedDataset& data) {
  auto pi = fitted_probabilities(fit, data);
  std::vector<ResidualPoint> out;
  out.reserve(pi.size());
  for (std::size_t i = 0; i < pi.size(); ++i) {
    if (pi[i] <= 0.0 || pi[i] >= 1.0)
      throw std::domain_error("fitted probability is exactly 0 or 1 at row " + std::to_string(i));
    out.push_back({pi[i], (data.response[i] - pi[i]) / std::sqrt(pi[i] * (1.0 - pi[i]))});
  }
  return out;
}

struct FoldAccuracy {
  double train = 0.0;
  double test = 0.0;
};

struct CvSummary {
  std::vector<FoldAccuracy> per_fold;
  double train_mean = 0.0;
  double train_sd = 0.0;
  double test_mean = 0.0;
  double test_sd = 0.0;
  int k = 0;
  std::uint64_t seed = 0;
};

namespace detail {

inline double record_accuracy(const FitResult& fit, const Dataset& d) {
  std::size_t correct = 0;
  for (const auto& r : d.records()) correct += (lenient_eta(fit, r) >= 0.0) == r.winner;
  return static_cast<double>(correct) / static_cast<double>(d.size());
}

}  // namespace detail

// Each fold gets its own parameter index built from its training split;
// players and maps seen only in the held-out split contribute zero. With
// opts.l1_lambda > 0 the folds are fitted by lasso without anchoring.
inline CvSummary k_fold_cv(const Dataset& d, int k, const FitOptions& opts, const IndexOptions& index_opts,
                           std::uint64_t seed, unsigned jobs = 1) {
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  if (d.size() < static_cast<std::size_t>(k)) throw std::invalid_argument("fewer records than folds");
  auto fold = assign_folds(d.size(), k, seed);
  CvSummary s;
  s.k = k;
  s.seed = seed;
  s.per_fold.resize(static_cast<std::size_t>(k));
  parallel_for(static_cast<std::size_t>(k), jobs, [&](std::size_t f) {
    std::vector<MatchRecord> train, test;
    for (std::size_t i = 0; i < d.size(); ++i)
      (fold[i] == static_cast<int>(f) ? test : train).push_back(d.records()[i]);
    Dataset train_set(std::move(train));
    Dataset test_set(std::move(test));
    IndexOptions io = index_opts;
    if (opts.l1_lambda > 0) io.anchor = false;
    auto design = build_design(train_set, io);
    FitResult fit = opts.l1_lambda > 0 ? fit_lasso(design, opts) : fit_irls(design, opts);
    s.per_fold[f] = {detail::record_accuracy(fit, train_set), detail::record_accuracy(fit, test_set)};
  });
  std::vector<double> tr, te;
  for (const auto& f : s.per_fold) {
    tr.push_back(f.train);
    te.push_back(f.test);
  }
  s.train_mean = sample_mean(tr);
  s.test_mean = sample_mean(te);
  s.train_sd = *sample_sd(tr);
  s.test_sd = *sample_sd(te);
  return s;
}

// Share of threshold-anchored players whose lasso coefficient is exactly 0.
inline double zero_overlap(const std::set<std::string>& threshold_anchored, const FitResult& lasso_fit) {
  if (threshold_anchored.empty()) throw std::invalid_argument("no anchored players to compare against");
  if (!lasso_fit.index->anchored_players().empty())
    throw std::invalid_argument("lasso fit must not anchor any player");
  std::size_t zero = 0;
  for (const auto& p : threshold_anchored) {
    auto c = lasso_fit.index->player_column(p);
    if (!c) throw std::invalid_argument("player missing from lasso fit: " + p);
    zero += lasso_fit.coefficients[*c] == 0.0;
  }
  return static_cast<double>(zero) / static_cast<double>(threshold_anchored.size());
}

inline void write_residuals_csv(std::ostream& out, std::span<const ResidualPoint> points) {
  out << "row,fitted,pearson_residual\n";
  for (std::size_t i = 0; i < points.size(); ++i)
    out << i << ',' << format_double(points[i].fitted) << ',' << format_double(points[i].residual) << '\n';
}

inline void write_hl_table_csv(std::ostream& out, const HosmerLemeshowResult& hl) {
  out << "group,count,mean_fitted,observed,expected\n";
  for (std::size_t g = 0; g < hl.groups.size(); ++g) {
    const auto& b = hl.groups[g];
    out << g << ',' << b.count << ',' << format_double(b.mean_fitted) << ',' << format_double(b.observed)
        << ',' << format_double(b.expected) << '\n';
  }
}

}  // namespace pairfit
