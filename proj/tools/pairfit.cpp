// pairfit: command-line front end. Every subcommand reads the match CSV (or
// artifacts written by earlier subcommands) and writes JSON/CSV artifacts.
// Exit codes: 0 success, 1 usage error, 2 data or convergence error.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>

#include <CLI11.hpp>

#include "pairfit/bootstrap.hpp"
#include "pairfit/diagnostics.hpp"
#include "pairfit/glm.hpp"
#include "pairfit/match_data.hpp"
#include "pairfit/predict.hpp"
#include "pairfit/serialize.hpp"
#include "pairfit/simulate.hpp"

using namespace pairfit;
namespace fs = std::filesystem;

namespace {

// Missing or inconsistent inputs the user has to fix on the command line.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::string input;
  std::string out;
  std::uint64_t seed = kDefaultSeed;
  int min_games = 6;
  int max_iter = 100;
  double tol = 1e-8;
  int folds = 10;
  int draws = 1000;
  unsigned jobs = 1;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

// "dir/fit.json" + ".groups.csv" -> "dir/fit.groups.csv"; no side files
// without --out.
std::string side_path(const std::string& out, const std::string& suffix) {
  if (out.empty()) return {};
  fs::path p(out);
  return (p.parent_path() / p.stem()).string() + suffix;
}

Dataset load_input(const Globals& g) {
  if (g.input.empty()) throw UsageError("--input is required");
  std::ifstream in(g.input, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + g.input);
  return filter_valid(parse_matches(in));
}

FitOptions fit_options(const Globals& g) {
  FitOptions o;
  o.max_iterations = g.max_iter;
  o.tolerance = g.tol;
  return o;
}

IndexOptions index_options(const Globals& g) {
  IndexOptions o;
  o.min_games = g.min_games;
  return o;
}

FitResult require_converged(FitResult fit) {
  if (!fit.converged)
    throw NonConvergenceError("fit did not converge in " + std::to_string(fit.iterations) + " iterations", fit);
  return fit;
}

FitResult load_fit(const std::string& path) { return fit_from_json(Json::parse(read_file(path))); }

// A saved fit scored on the input data, or a fresh fit when none is given.
std::pair<FitResult, EncodedDataset> fit_and_data(const Globals& g, const std::string& fit_path) {
  Dataset d = load_input(g);
  if (!fit_path.empty()) {
    FitResult fit = load_fit(fit_path);
    return {fit, build_design(d, fit.index)};
  }
  auto design = build_design(d, index_options(g));
  return {require_converged(fit_irls(design, fit_options(g))), design};
}

std::string json_text(const Json& j) { return to_json_string(j); }

int cmd_ingest(const Globals& g) {
  Dataset d = load_input(g);
  std::ostringstream csv;
  write_matches(csv, d);
  write_text(g.out, csv.str());
  Json dropped = Json::array();
  for (const auto& f : d.filter_log())
    dropped.push_back({{"player1", f.record.player1}, {"player2", f.record.player2},
                       {"date", format_date(f.record.date)}, {"reason", f.reason}});
  Json summary = {{"records_kept", d.size()},
                  {"records_dropped", d.filter_log().size()},
                  {"players", d.players().size()},
                  {"maps", d.maps().size()},
                  {"dropped", dropped}};
  if (g.out.empty()) std::cerr << json_text(summary);
  else write_text(side_path(g.out, ".ingest.json"), json_text(summary));
  return 0;
}

int cmd_describe(const Globals& g) {
  Dataset d = load_input(g);
  auto s = describe(d);
  write_text(g.out, json_text(to_json(s, d)));
  if (g.out.empty()) return 0;

  std::ostringstream pairs;
  pairs << "race,opponent,games,wins,win_ratio\n";
  for (const auto& [pair, ratio] : s.win_ratios) {
    int games = s.pair_frequencies.at(unordered_pair(pair.first, pair.second));
    int wins = s.pair_wins.count(pair) ? s.pair_wins.at(pair) : 0;
    pairs << to_string(pair.first) << ',' << to_string(pair.second) << ',' << games << ',' << wins << ','
          << format_double(ratio) << '\n';
  }
  write_text(side_path(g.out, ".win_ratios.csv"), pairs.str());

  std::ostringstream monthly;
  monthly << "month,terran,protoss,zerg,terran_share,protoss_share,zerg_share\n";
  for (const auto& row : s.monthly_race_trend) {
    char ym[16];
    std::snprintf(ym, sizeof ym, "%04d-%02u", static_cast<int>(row.month.year()),
                  static_cast<unsigned>(row.month.month()));
    monthly << ym;
    for (int c : row.counts) monthly << ',' << c;
    for (double p : row.proportions) monthly << ',' << format_double(p);
    monthly << '\n';
  }
  write_text(side_path(g.out, ".monthly.csv"), monthly.str());

  std::ostringstream hist;
  hist << "games_from,games_to,players\n";
  for (const auto& [bucket, n] : s.games_histogram) hist << bucket * 5 + 1 << ',' << bucket * 5 + 5 << ',' << n << '\n';
  write_text(side_path(g.out, ".games_histogram.csv"), hist.str());
  return 0;
}

int cmd_fit(const Globals& g) {
  Dataset d = load_input(g);
  auto design = build_design(d, index_options(g));
  auto fit = require_converged(fit_irls(design, fit_options(g)));
  write_text(g.out, json_text(to_json(fit)));
  return 0;
}

int cmd_diagnose(const Globals& g, const std::string& test, const std::string& fit_path, int groups) {
  auto [fit, data] = fit_and_data(g, fit_path);
  if (test == "lrt") {
    write_text(g.out, json_text(to_json(lrt_vs_constant(fit, data))));
  } else if (test == "hl") {
    auto hl = hosmer_lemeshow(fit, data, groups);
    write_text(g.out, json_text(to_json(hl)));
    if (!g.out.empty()) {
      std::ostringstream csv;
      write_hl_table_csv(csv, hl);
      write_text(side_path(g.out, ".groups.csv"), csv.str());
    }
  } else if (test == "dispersion") {
    write_text(g.out, json_text(to_json(pearson_dispersion(fit, data))));
  } else {
    std::ostringstream csv;
    write_residuals_csv(csv, residuals_vs_fitted(fit, data));
    write_text(g.out, csv.str());
  }
  return 0;
}

int cmd_cv(const Globals& g) {
  Dataset d = load_input(g);
  auto s = k_fold_cv(d, g.folds, fit_options(g), index_options(g), g.seed, g.jobs);
  Json j = to_json(s);
  j["min_games"] = g.min_games;
  write_text(g.out, json_text(j));
  return 0;
}

int cmd_lasso(const Globals& g, std::optional<double> lambda, bool penalize_matchups) {
  Dataset d = load_input(g);
  IndexOptions io = index_options(g);
  io.anchor = false;
  auto design = build_design(d, io);
  FitOptions o = fit_options(g);
  o.penalize_matchups = penalize_matchups;
  Json selection = nullptr;
  if (!lambda) {
    auto grid = lambda_grid(lambda_max(design, o));
    auto sel = select_lambda_cv(design, g.folds, grid, g.seed, o);
    lambda = sel.lambda;
    Json rows = Json::array();
    for (std::size_t k = 0; k < sel.grid.size(); ++k)
      rows.push_back({{"lambda", sel.grid[k]}, {"mean_test_accuracy", sel.mean_accuracy[k]}});
    selection = {{"folds", g.folds}, {"seed", g.seed}, {"grid", rows}};
  }
  o.l1_lambda = *lambda;
  auto fit = require_converged(fit_lasso(design, o));
  Json j = to_json(fit);
  j["lambda_selection"] = selection;
  auto anchored = build_parameter_index(d, index_options(g)).threshold_anchored();
  Json overlap = {{"min_games", g.min_games}, {"threshold_anchored", anchored.size()}};
  if (anchored.empty()) {
    overlap["fraction_zeroed"] = nullptr;
  } else {
    std::size_t zeroed = 0;
    double fraction = zero_overlap(anchored, fit);
    for (const auto& p : anchored) zeroed += player_coefficient(fit, p) == 0.0;
    overlap["zeroed"] = zeroed;
    overlap["fraction_zeroed"] = fraction;
  }
  j["zero_overlap"] = overlap;
  write_text(g.out, json_text(j));
  return 0;
}

int cmd_bootstrap(const Globals& g, const std::string& what, bool freeze) {
  Dataset d = load_input(g);
  BootstrapOptions o;
  o.draws = g.draws;
  o.seed = g.seed;
  o.fit = fit_options(g);
  o.index = index_options(g);
  o.freeze_index = freeze;
  o.jobs = g.jobs;
  auto s = what == "balance" ? bootstrap_balance(d, o) : bootstrap_dispersion(d, o);
  Json j = to_json(s);
  j["statistic"] = what;
  j["min_games"] = g.min_games;
  j["index"] = freeze ? "frozen" : "rebuilt_per_draw";
  write_text(g.out, json_text(j));
  if (!g.out.empty()) {
    std::ostringstream csv;
    write_draws_csv(csv, s);
    write_text(side_path(g.out, ".draws.csv"), csv.str());
  }
  return 0;
}

Race race_arg(const std::string& s) {
  auto r = parse_race(s);
  if (!r) throw UsageError("unknown race: " + s);
  return *r;
}

int cmd_predict(const Globals& g, const std::string& fit_path, const std::string& p1, const std::string& p2,
                const std::string& r1, const std::string& r2, const std::string& map) {
  auto fit = load_fit(fit_path);
  auto p = win_probability(fit, p1, p2, race_arg(r1), race_arg(r2), map);
  write_text(g.out, json_text(to_json(p)));
  return 0;
}

int cmd_rank(const Globals& g, const std::string& fit_path) {
  FitResult fit = fit_path.empty() ? fit_and_data(g, "").first : load_fit(fit_path);
  write_text(g.out, json_text(to_json(rank_players(fit))));
  return 0;
}

struct SimulateArgs {
  int players = 50;
  int maps = 4;
  std::size_t games = 5000;
  double skill_sd = 1.0;
  double matchup_sd = 0.5;
  double off_race_rate = 0.1;
  std::string schedule = "uniform";
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  LeagueConfig cfg;
  cfg.players = a.players;
  cfg.maps = a.maps;
  cfg.skill_sd = a.skill_sd;
  cfg.matchup_sd = a.matchup_sd;
  cfg.off_race_rate = a.off_race_rate;
  cfg.schedule = a.schedule == "uniform" ? SchedulePolicy::Uniform : SchedulePolicy::TournamentTail;
  Rng rng(g.seed);
  auto truth = random_truth(cfg, rng);
  auto d = generate(truth, a.games, rng);
  std::ostringstream csv;
  write_matches(csv, d);
  write_text(g.out, csv.str());
  if (!g.out.empty()) {
    Json j = to_json(truth);
    j["seed"] = g.seed;
    j["games"] = a.games;
    write_text(side_path(g.out, ".truth.json"), json_text(j));
  }
  return 0;
}

// --- report: formats saved artifacts, computes nothing ---

std::string num(const Json& v) {
  if (v.is_null()) return "absent";
  if (v.is_number_float()) return format_double(v.get<double>());
  if (v.is_string()) return v.get<std::string>();
  return v.dump();
}

std::optional<Json> load_optional(const std::string& path) {
  if (path.empty()) return std::nullopt;
  return Json::parse(read_file(path));
}

struct ReportInputs {
  std::string fit, lrt, hl, dispersion, dispersion_bootstrap, balance_bootstrap, cv, lasso, residuals;
};

int cmd_report(const Globals& g, const ReportInputs& in) {
  if (in.fit.empty()) throw UsageError("report needs --fit; run `pairfit fit` first");
  Json fit = Json::parse(read_file(in.fit));
  std::ostringstream r;
  auto heading = [&](const std::string& title) { r << '\n' << title << '\n' << std::string(title.size(), '-') << '\n'; };
  auto not_run = [&](const std::string& what) { r << "not run (" << what << ")\n"; };

  r << "pairfit report\n==============\n";
  heading("Fit");
  const auto& meta = fit.at("fit");
  r << "source: " << in.fit << '\n';
  for (auto it = meta.begin(); it != meta.end(); ++it) r << it.key() << ": " << num(it.value()) << '\n';
  r << "threshold_anchored: " << fit.at("index").at("threshold_anchored").size() << " players\n";
  r << "force_anchored: " << fit.at("index").at("force_anchored").size() << " players\n";

  heading("Player ranking");
  r << "rank\tplayer\testimate\n";
  for (const auto& row : fit.at("ranking").at("ranked"))
    r << num(row.at("rank")) << '\t' << num(row.at("player")) << '\t' << num(row.at("estimate")) << '\n';
  r << "anchored, unranked: " << fit.at("ranking").at("anchored").size() << " players\n";

  heading("Per-map matchup estimates");
  r << "map\trace1\trace2\testimate\tobserved\n";
  for (const auto& c : fit.at("columns"))
    if (c.at("kind") == "matchup")
      r << num(c.at("map")) << '\t' << num(c.at("race1")) << '\t' << num(c.at("race2")) << '\t'
        << num(c.at("estimate")) << '\t' << num(c.at("observed")) << '\n';

  heading("Race balance, mean over maps");
  r << "pair\tmean\tsd_across_maps\n";
  for (const auto& b : fit.at("balance"))
    r << num(b.at("pair")) << '\t' << num(b.at("mean_across_maps")) << '\t' << num(b.at("sd_across_maps")) << '\n';

  auto bootstrap_section = [&](const std::string& title, const std::string& path, const char* cmd) {
    heading(title);
    auto j = load_optional(path);
    if (!j) return not_run(cmd);
    r << "source: " << path << '\n';
    r << "B: " << num(j->at("B")) << "  seed: " << num(j->at("seed")) << "  successful: " << num(j->at("successful"))
      << "  failed: " << num(j->at("failed")) << '\n';
    bool tails = !j->at("components").empty() && j->at("components")[0].contains("tail_prob_positive");
    r << "component\tmean\tsd" << (tails ? "\ttail_prob_positive" : "") << '\n';
    for (const auto& c : j->at("components")) {
      r << num(c.at("name")) << '\t' << num(c.at("mean")) << '\t' << num(c.at("sd"));
      if (tails) r << '\t' << num(c.at("tail_prob_positive"));
      r << '\n';
    }
  };
  bootstrap_section("Bootstrap race balance", in.balance_bootstrap, "pairfit bootstrap balance");

  auto test_section = [&](const std::string& title, const std::string& path, const char* cmd) {
    heading(title);
    auto j = load_optional(path);
    if (!j) return not_run(cmd);
    r << "source: " << path << '\n';
    for (const char* key : {"statistic", "df", "p_value", "phi", "pearson_chi2", "n", "p_effective"})
      if (j->contains(key)) r << key << ": " << num(j->at(key)) << '\n';
  };
  test_section("Likelihood-ratio test against the constant model", in.lrt, "pairfit diagnose lrt");
  test_section("Hosmer-Lemeshow", in.hl, "pairfit diagnose hl");
  test_section("Pearson dispersion", in.dispersion, "pairfit diagnose dispersion");
  bootstrap_section("Bootstrap dispersion", in.dispersion_bootstrap, "pairfit bootstrap dispersion");

  heading("Cross-validated accuracy");
  if (auto cv = load_optional(in.cv)) {
    r << "source: " << in.cv << '\n';
    r << "folds: " << num(cv->at("k")) << "  seed: " << num(cv->at("seed")) << '\n';
    r << "train: " << num(cv->at("train_mean")) << " +- " << num(cv->at("train_sd")) << '\n';
    r << "test: " << num(cv->at("test_mean")) << " +- " << num(cv->at("test_sd")) << '\n';
  } else {
    not_run("pairfit cv");
  }

  heading("Lasso");
  if (auto lasso = load_optional(in.lasso)) {
    r << "source: " << in.lasso << '\n';
    r << "l1_lambda: " << num(lasso->at("fit").at("l1_lambda")) << '\n';
    const auto& z = lasso->at("zero_overlap");
    if (z.at("fraction_zeroed").is_null())
      r << "no threshold-anchored players at min_games " << num(z.at("min_games")) << '\n';
    else
      r << "threshold-anchored players zeroed by the lasso: " << num(z.at("zeroed")) << " of "
        << num(z.at("threshold_anchored")) << " (fraction " << num(z.at("fraction_zeroed")) << ")\n";
  } else {
    not_run("pairfit lasso");
  }

  heading("Residual plot data");
  if (in.residuals.empty()) not_run("pairfit diagnose residuals");
  else r << in.residuals << '\n';

  write_text(g.out, r.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired-comparison logistic model for head-to-head match results"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--input", g.input, "Match CSV")->option_text("FILE");
  app.add_option("--out", g.out, "Output file (stdout when omitted; side files need it)")->option_text("FILE");
  app.add_option("--seed", g.seed, "Master seed for all randomness")->capture_default_str();
  app.add_option("--min-games", g.min_games, "Players with fewer games are anchored at 0")
      ->capture_default_str()
      ->check(CLI::NonNegativeNumber);
  app.add_option("--max-iter", g.max_iter, "IRLS iteration limit")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--tol", g.tol, "Relative deviance change for convergence")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  app.add_option("--folds", g.folds, "Cross-validation folds")->capture_default_str()->check(CLI::Range(2, 1000000));
  app.add_option("-B", g.draws, "Bootstrap draws")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--jobs", g.jobs, "Worker threads; results do not depend on it")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* ingest = app.add_subcommand("ingest", "Validate a match CSV and drop games with non-standard races");
  auto* describe_cmd = app.add_subcommand("describe", "Descriptive tables: races, game counts, win ratios, monthly trend");
  auto* fit = app.add_subcommand("fit", "Maximum likelihood fit");

  auto* diagnose = app.add_subcommand("diagnose", "Goodness-of-fit checks");
  std::string test, fit_path;
  int groups = 10;
  diagnose->add_option("test", test, "lrt | hl | dispersion | residuals")
      ->required()
      ->check(CLI::IsMember({"lrt", "hl", "dispersion", "residuals"}));
  diagnose->add_option("--fit", fit_path, "Saved fit to score (refit from --input when omitted)");
  diagnose->add_option("--groups", groups, "Hosmer-Lemeshow groups")->capture_default_str();

  auto* cv = app.add_subcommand("cv", "k-fold cross-validated accuracy");

  auto* lasso = app.add_subcommand("lasso", "L1-penalized fit without anchoring; lambda chosen by CV unless given");
  std::optional<double> lambda;
  bool unpenalized_matchups = false;
  lasso->add_option("--lambda", lambda, "Fixed penalty")->check(CLI::NonNegativeNumber);
  lasso->add_flag("--unpenalized-matchups", unpenalized_matchups, "Penalize player columns only");

  auto* bootstrap = app.add_subcommand("bootstrap", "Case-resampling bootstrap");
  std::string what;
  bool freeze = false;
  bootstrap->add_option("statistic", what, "balance | dispersion")
      ->required()
      ->check(CLI::IsMember({"balance", "dispersion"}));
  bootstrap->add_flag("--freeze-index", freeze, "Keep the full-data anchored set in every draw");

  auto* predict = app.add_subcommand("predict", "Win probability of one pairing");
  std::string p1, p2, r1, r2, map;
  predict->add_option("--fit", fit_path, "Saved fit")->required();
  predict->add_option("--player1", p1)->required();
  predict->add_option("--player2", p2)->required();
  predict->add_option("--race1", r1)->required();
  predict->add_option("--race2", r2)->required();
  predict->add_option("--map", map)->required();

  auto* simulate = app.add_subcommand("simulate", "Synthetic league drawn from the model");
  SimulateArgs sim;
  simulate->add_option("--players", sim.players)->capture_default_str();
  simulate->add_option("--maps", sim.maps)->capture_default_str();
  simulate->add_option("--games", sim.games)->capture_default_str();
  simulate->add_option("--skill-sd", sim.skill_sd)->capture_default_str();
  simulate->add_option("--matchup-sd", sim.matchup_sd)->capture_default_str();
  simulate->add_option("--off-race-rate", sim.off_race_rate, "Chance a player fields another race")
      ->capture_default_str();
  simulate->add_option("--schedule", sim.schedule)
      ->capture_default_str()
      ->check(CLI::IsMember({"uniform", "tournament-tail"}));

  auto* rank = app.add_subcommand("rank", "Players ordered by estimated skill");
  rank->add_option("--fit", fit_path, "Saved fit (refit from --input when omitted)");

  auto* report = app.add_subcommand("report", "Plain-text report assembled from saved artifacts");
  ReportInputs ri;
  report->add_option("--fit", ri.fit, "Fit JSON (required)");
  report->add_option("--lrt", ri.lrt);
  report->add_option("--hl", ri.hl);
  report->add_option("--dispersion", ri.dispersion);
  report->add_option("--dispersion-bootstrap", ri.dispersion_bootstrap);
  report->add_option("--balance-bootstrap", ri.balance_bootstrap);
  report->add_option("--cv", ri.cv);
  report->add_option("--lasso", ri.lasso);
  report->add_option("--residuals", ri.residuals, "Residual CSV to reference");

  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*ingest) return cmd_ingest(g);
    if (*describe_cmd) return cmd_describe(g);
    if (*fit) return cmd_fit(g);
    if (*diagnose) return cmd_diagnose(g, test, fit_path, groups);
    if (*cv) return cmd_cv(g);
    if (*lasso) return cmd_lasso(g, lambda, !unpenalized_matchups);
    if (*bootstrap) return cmd_bootstrap(g, what, freeze);
    if (*predict) return cmd_predict(g, fit_path, p1, p2, r1, r2, map);
    if (*simulate) return cmd_simulate(g, sim);
    if (*rank) return cmd_rank(g, fit_path);
    if (*report) return cmd_report(g, ri);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << g.input << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
