#pragma once

// Binomial-logit fitting over an EncodedDataset: IRLS for the unpenalized
// model, proximal-Newton coordinate descent for the L1-penalized one.

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "pairfit/design.hpp"
#include "pairfit/random.hpp"

namespace pairfit {

using Vector = Eigen::VectorXd;

inline double sigmoid(double eta) {
  if (eta >= 0) return 1.0 / (1.0 + std::exp(-eta));
  double e = std::exp(eta);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
  if (x > 35) return x;
  if (x < -35) return std::exp(x);
  return std::log1p(std::exp(x));
}

inline void check_dimension(const Vector& beta, const EncodedDataset& data) {
  if (beta.size() != data.p())
    throw std::invalid_argument("coefficient vector has length " + std::to_string(beta.size()) +
                                ", design has " + std::to_string(data.p()) + " columns");
}

inline double log_likelihood(const Vector& beta, const EncodedDataset& data) {
  check_dimension(beta, data);
  double ll = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    double eta = data.rows[i].dot(beta);
    // log pi = -log1pexp(-eta), log(1 - pi) = -log1pexp(eta)
    ll -= data.response[i] > 0.5 ? log1pexp(-eta) : log1pexp(eta);
  }
  return ll;
}

// Gradient of log_likelihood: sum_i (y_i - pi_i) x_i.
inline Vector score(const Vector& beta, const EncodedDataset& data) {
  check_dimension(beta, data);
  Vector g = Vector::Zero(data.p());
  for (std::size_t i = 0; i < data.n(); ++i) {
    double r = data.response[i] - sigmoid(data.rows[i].dot(beta));
    for (const auto& e : data.rows[i].entries()) g[e.column] += e.sign * r;
  }
  return g;
}

struct FitOptions {
  int max_iterations = 100;
  double tolerance = 1e-8;  // relative deviance change
  double eta_cap = 30.0;
  double l1_lambda = 0.0;
  bool penalize_matchups = true;  // lasso only: false leaves matchup columns unpenalized
};

struct FitResult {
  Vector coefficients;
  double log_likelihood = 0.0;
  double deviance = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stabilized = false;  // a last-resort ridge was added to the normal equations
  double l1_lambda = 0.0;
  std::vector<bool> observed;  // column had at least one nonzero in the design
  std::shared_ptr<const ParameterIndex> index;

  int effective_columns() const {
    return static_cast<int>(std::count(observed.begin(), observed.end(), true));
  }
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, FitResult last)
      : std::runtime_error(what), last_iterate_(std::move(last)) {}
  const FitResult& last_iterate() const { return last_iterate_; }

 private:
  FitResult last_iterate_;
};

namespace detail {

inline void validate(const FitOptions& opts) {
  if (opts.max_iterations < 1) throw std::invalid_argument("max_iterations must be positive");
  if (!(opts.tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
  if (!(opts.eta_cap > 0)) throw std::invalid_argument("eta_cap must be positive");
  if (!(opts.l1_lambda >= 0)) throw std::invalid_argument("l1_lambda must be nonnegative");
}

inline double capped(double eta, double cap) { return std::clamp(eta, -cap, cap); }

// Deviance with the linear predictor clamped to [-cap, cap].
inline double capped_deviance(const Vector& beta, const EncodedDataset& data, double cap) {
  double dev = 0.0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    double eta = capped(data.rows[i].dot(beta), cap);
    dev += 2.0 * (data.response[i] > 0.5 ? log1pexp(-eta) : log1pexp(eta));
  }
  return dev;
}

struct Column {
  std::vector<std::size_t> rows;
  std::vector<int> signs;
};

inline std::vector<Column> columns_of(const EncodedDataset& data) {
  std::vector<Column> cols(static_cast<std::size_t>(data.p()));
  for (std::size_t i = 0; i < data.n(); ++i)
    for (const auto& e : data.rows[i].entries()) {
      cols[e.column].rows.push_back(i);
      cols[e.column].signs.push_back(e.sign);
    }
  return cols;
}

inline FitResult finish(Vector beta, const EncodedDataset& data, int iterations, bool converged,
                        bool stabilized, double lambda, std::vector<bool> observed) {
  FitResult r;
  r.log_likelihood = log_likelihood(beta, data);
  r.deviance = std::max(0.0, -2.0 * r.log_likelihood);
  r.coefficients = std::move(beta);
  r.iterations = iterations;
  r.converged = converged;
  r.stabilized = stabilized;
  r.l1_lambda = lambda;
  r.observed = std::move(observed);
  r.index = data.index;
  return r;
}

}  // namespace detail

// Newton-Raphson / IRLS with step halving. Columns without any data are held
// at zero and left out of the normal equations.
inline FitResult fit_irls(const EncodedDataset& data, const FitOptions& opts = {}) {
  detail::validate(opts);
  if (opts.l1_lambda != 0.0) throw std::invalid_argument("fit_irls is unpenalized; use fit_lasso");
  if (data.n() == 0) throw std::invalid_argument("cannot fit an empty dataset");

  const int p = data.p();
  std::vector<bool> observed = data.observed_columns();
  std::vector<int> slot(static_cast<std::size_t>(p), -1);
  std::vector<int> active;
  for (int j = 0; j < p; ++j)
    if (observed[j]) {
      slot[j] = static_cast<int>(active.size());
      active.push_back(j);
    }
  const int q = static_cast<int>(active.size());

  Vector beta = Vector::Zero(p);
  double dev = detail::capped_deviance(beta, data, opts.eta_cap);
  bool converged = q == 0;
  bool stabilized = false;
  int it = 0;

  Eigen::MatrixXd gram(q, q);
  Vector g(q);
  while (!converged && it < opts.max_iterations) {
    ++it;
    gram.setZero();
    g.setZero();
    for (std::size_t i = 0; i < data.n(); ++i) {
      const auto& row = data.rows[i];
      double pi = sigmoid(detail::capped(row.dot(beta), opts.eta_cap));
      double w = pi * (1.0 - pi);
      double r = data.response[i] - pi;
      for (const auto& a : row.entries()) {
        int sa = slot[a.column];
        g[sa] += a.sign * r;
        for (const auto& b : row.entries()) gram(sa, slot[b.column]) += w * a.sign * b.sign;
      }
    }
    Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success || llt.rcond() < 1e-13) {
      gram.diagonal().array() += 1e-10;
      stabilized = true;
      llt.compute(gram);
      if (llt.info() != Eigen::Success)
        throw NonConvergenceError(
            "weighted normal equations are singular; check identifiability",
            detail::finish(beta, data, it, false, true, 0.0, observed));
    }
    Vector step_active = llt.solve(g);
    Vector step = Vector::Zero(p);
    for (int k = 0; k < q; ++k) step[active[k]] = step_active[k];

    double t = 1.0;
    Vector candidate;
    double dev_new = dev;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      candidate = beta + t * step;
      dev_new = detail::capped_deviance(candidate, data, opts.eta_cap);
      if (std::isfinite(dev_new) && dev_new <= dev) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No descent along the Newton direction: at the optimum up to rounding
      // when the predicted decrease is negligible.
      converged = g.dot(step_active) <= opts.tolerance * (std::abs(dev) + 0.1);
      break;
    }
    double rel = std::abs(dev - dev_new) / (std::abs(dev_new) + 0.1);
    beta = std::move(candidate);
    dev = dev_new;
    if (rel < opts.tolerance) converged = true;
  }
  return detail::finish(std::move(beta), data, it, converged, stabilized, 0.0, std::move(observed));
}

namespace detail {

inline std::vector<double> penalty_weights(const EncodedDataset& data, const FitOptions& opts) {
  std::vector<double> pen(static_cast<std::size_t>(data.p()), 1.0);
  if (!opts.penalize_matchups)
    for (int j = data.index->player_column_count(); j < data.p(); ++j) pen[j] = 0.0;
  return pen;
}

inline double penalized_objective(const Vector& beta, const EncodedDataset& data, double lambda,
                                  const std::vector<double>& pen, double cap) {
  double obj = 0.5 * capped_deviance(beta, data, cap);
  if (lambda > 0)
    for (int j = 0; j < beta.size(); ++j) obj += lambda * pen[j] * std::abs(beta[j]);
  return obj;
}

inline double soft_threshold(double u, double t) {
  if (u > t) return u - t;
  if (u < -t) return u + t;
  return 0.0;
}

}  // namespace detail

// Maximizes log_likelihood - lambda * sum_j |beta_j| by proximal Newton: each
// outer iteration builds the IRLS quadratic model at the current iterate and
// minimizes it plus the penalty by cyclic coordinate descent with
// soft-thresholding, then backtracks on the true objective.
inline FitResult fit_lasso(const EncodedDataset& data, const FitOptions& opts,
                           const Vector* warm_start = nullptr) {
  detail::validate(opts);
  if (data.n() == 0) throw std::invalid_argument("cannot fit an empty dataset");
  const int p = data.p();
  const double lambda = opts.l1_lambda;
  const auto pen = detail::penalty_weights(data, opts);
  const auto cols = detail::columns_of(data);
  std::vector<bool> observed = data.observed_columns();

  Vector beta = Vector::Zero(p);
  if (warm_start) {
    check_dimension(*warm_start, data);
    beta = *warm_start;
    for (int j = 0; j < p; ++j)
      if (!observed[j]) beta[j] = 0.0;
  }
  double obj = detail::penalized_objective(beta, data, lambda, pen, opts.eta_cap);

  constexpr double kCoefTol = 1e-10;
  constexpr double kInnerTol = 1e-12;
  constexpr int kMaxSweeps = 20000;

  std::vector<double> w(data.n()), d(data.n());
  Vector g(p), a(p);
  bool converged = false;
  int it = 0;
  while (!converged && it < opts.max_iterations) {
    ++it;
    g.setZero();
    for (std::size_t i = 0; i < data.n(); ++i) {
      double pi = sigmoid(detail::capped(data.rows[i].dot(beta), opts.eta_cap));
      w[i] = pi * (1.0 - pi);
      double r = data.response[i] - pi;
      for (const auto& e : data.rows[i].entries()) g[e.column] += e.sign * r;
    }
    for (int j = 0; j < p; ++j) {
      double s = 0.0;
      for (auto i : cols[j].rows) s += w[i];
      a[j] = s;
    }

    // Minimize -g'(b - beta) + 1/2 sum_i w_i (x_i'(b - beta))^2 + lambda |b|_1.
    Vector next = beta;
    std::fill(d.begin(), d.end(), 0.0);
    auto update = [&](int j) {
      if (a[j] <= 0.0) {
        double delta = -next[j];
        next[j] = 0.0;
        return std::abs(delta);
      }
      double curv_dot = 0.0;
      for (std::size_t k = 0; k < cols[j].rows.size(); ++k) {
        auto i = cols[j].rows[k];
        curv_dot += w[i] * cols[j].signs[k] * d[i];
      }
      double u = a[j] * next[j] + g[j] - curv_dot;
      double nj = detail::soft_threshold(u, lambda * pen[j]) / a[j];
      double delta = nj - next[j];
      if (delta != 0.0) {
        next[j] = nj;
        for (std::size_t k = 0; k < cols[j].rows.size(); ++k) d[cols[j].rows[k]] += cols[j].signs[k] * delta;
      }
      return std::abs(delta);
    };
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double full = 0.0;
      for (int j = 0; j < p; ++j) full = std::max(full, update(j));
      if (full < kInnerTol) break;
      // Iterate on the active set until it settles, then re-check everything.
      for (int inner = 0; inner < kMaxSweeps; ++inner) {
        double change = 0.0;
        for (int j = 0; j < p; ++j)
          if (next[j] != 0.0) change = std::max(change, update(j));
        if (change < kInnerTol) break;
      }
    }

    Vector direction = next - beta;
    double t = 1.0;
    double obj_new = obj;
    Vector candidate;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, t *= 0.5) {
      candidate = beta + t * direction;
      obj_new = detail::penalized_objective(candidate, data, lambda, pen, opts.eta_cap);
      if (std::isfinite(obj_new) && obj_new <= obj) {
        accepted = true;
        break;
      }
    }
    double change = (t * direction).cwiseAbs().maxCoeff();
    if (!accepted) {
      converged = direction.cwiseAbs().maxCoeff() < 1e-8;
      break;
    }
    beta = std::move(candidate);
    obj = obj_new;
    if (change < kCoefTol) converged = true;
  }
  return detail::finish(std::move(beta), data, it, converged, false, lambda, std::move(observed));
}

// Smallest lambda whose solution has every penalized coefficient at zero.
inline double lambda_max(const EncodedDataset& data, const FitOptions& opts = {}) {
  FitOptions base = opts;
  Vector at_zero = Vector::Zero(data.p());
  if (!opts.penalize_matchups) {
    base.l1_lambda = std::numeric_limits<double>::max();
    at_zero = fit_lasso(data, base).coefficients;
  }
  Vector g = score(at_zero, data);
  const auto pen = detail::penalty_weights(data, opts);
  double m = 0.0;
  for (int j = 0; j < data.p(); ++j)
    if (pen[j] > 0) m = std::max(m, std::abs(g[j]));
  return m;
}

// `count` values log-spaced from lambda_max down to lambda_max * ratio.
inline std::vector<double> lambda_grid(double lambda_max, int count = 50, double ratio = 1e-3) {
  if (count < 1) throw std::invalid_argument("grid needs at least one value");
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k)
    grid.push_back(count == 1 ? lambda_max
                              : lambda_max * std::pow(ratio, static_cast<double>(k) / (count - 1)));
  return grid;
}

// Fold of each row: a seeded permutation dealt round-robin into k folds.
inline std::vector<int> assign_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<int> fold(n);
  for (std::size_t i = 0; i < n; ++i) fold[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fold;
}

// Player1 is predicted to win when eta >= 0, i.e. ties go to player1.
inline double accuracy(const Vector& beta, const EncodedDataset& data) {
  if (data.n() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.n(); ++i) {
    bool predict = data.rows[i].dot(beta) >= 0.0;
    correct += predict == (data.response[i] > 0.5);
  }
  return static_cast<double>(correct) / static_cast<double>(data.n());
}

struct LambdaSelection {
  double lambda = 0.0;
  std::vector<double> grid;
  std::vector<double> mean_accuracy;  // per grid value
};

// k-fold CV over the rows of `data`; picks the grid value with the best mean
// held-out accuracy, preferring the larger lambda on ties.
inline LambdaSelection select_lambda_cv(const EncodedDataset& data, int k, std::vector<double> grid,
                                        std::uint64_t seed, const FitOptions& opts = {}) {
  if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
  if (k < 2) throw std::invalid_argument("need at least 2 folds");
  if (data.n() < static_cast<std::size_t>(k)) throw std::invalid_argument("fewer rows than folds");
  auto fold = assign_folds(data.n(), k, seed);
  std::vector<double> total(grid.size(), 0.0);
  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t i = 0; i < data.n(); ++i) (fold[i] == f ? test : train).push_back(i);
    auto train_data = data.subset(train);
    auto test_data = data.subset(test);
    Vector warm = Vector::Zero(data.p());
    for (std::size_t g = 0; g < grid.size(); ++g) {
      FitOptions o = opts;
      o.l1_lambda = grid[g];
      auto fit = fit_lasso(train_data, o, &warm);
      warm = fit.coefficients;
      total[g] += accuracy(fit.coefficients, test_data);
    }
  }
  LambdaSelection sel;
  sel.grid = grid;
  sel.mean_accuracy.resize(grid.size());
  std::size_t best = 0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    sel.mean_accuracy[g] = total[g] / k;
    double m = sel.mean_accuracy[g];
    double b = sel.mean_accuracy[best];
    if (m > b || (m == b && grid[g] > grid[best])) best = g;
  }
  sel.lambda = grid[best];
  return sel;
}

// Upper tail of the chi-square distribution, Q(df/2, x/2).
inline double chi_square_sf(double x, int df) {
  if (df <= 0) throw std::invalid_argument("chi-square degrees of freedom must be positive");
  if (!(x >= 0)) throw std::invalid_argument("chi-square statistic must be nonnegative");
  if (x == 0) return 1.0;
  return boost::math::gamma_q(0.5 * df, 0.5 * x);
}

}  // namespace pairfit
