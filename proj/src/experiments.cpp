// Copyright 2026 The causalrep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0

#include "causalrep/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include "causalrep/synth.hpp"

namespace causalrep::experiments {

bool ExperimentResult::all_assertions_passed() const {
  for (const Assertion& a : assertions) {
    if (!a.passed) return false;
  }
  return true;
}

Json ExperimentResult::to_json() const {
  Json cells_json = Json::array();
  for (const Cell& c : cells) {
    Json cj{{"params", c.params},
            {"metric", c.metric},
            {"mean", c.mean},
            {"count", c.count}};
    if (c.count >= 2) cj["std"] = c.stddev;
    cells_json.push_back(std::move(cj));
  }
  Json asserts_json = Json::array();
  for (const Assertion& a : assertions) {
    asserts_json.push_back(
        Json{{"name", a.name}, {"passed", a.passed}, {"detail", a.detail}});
  }
  return Json{{"experiment", name},
              {"parameters", parameters},
              {"repetitions", repetitions},
              {"cells", cells_json},
              {"assertions", asserts_json}};
}

ExperimentResult ExperimentResult::from_json(const Json& j) {
  ExperimentResult r;
  r.name = j.at("experiment").get<std::string>();
  r.parameters = j.at("parameters");
  r.repetitions = j.at("repetitions").get<int>();
  for (const Json& cj : j.at("cells")) {
    Cell c;
    c.params = cj.at("params");
    c.metric = cj.at("metric").get<std::string>();
    c.mean = cj.at("mean").get<double>();
    c.count = cj.at("count").get<int>();
    if (cj.contains("std") && !cj.at("std").is_null()) {
      c.stddev = cj.at("std").get<double>();
    }
    r.cells.push_back(std::move(c));
  }
  for (const Json& aj : j.at("assertions")) {
    r.assertions.push_back(Assertion{aj.at("name").get<std::string>(),
                                     aj.at("passed").get<bool>(),
                                     aj.at("detail").get<std::string>()});
  }
  return r;
}

std::string ExperimentResult::to_csv() const {
  std::set<std::string> keys;
  for (const Cell& c : cells) {
    for (auto it = c.params.begin(); it != c.params.end(); ++it) {
      keys.insert(it.key());
    }
  }
  std::ostringstream out;
  for (const std::string& k : keys) out << k << ',';
  out << "metric,mean,std,count\n";
  for (const Cell& c : cells) {
    for (const std::string& k : keys) {
      if (c.params.contains(k)) {
        const Json& v = c.params.at(k);
        if (v.is_string()) {
          out << v.get<std::string>();
        } else if (v.is_number_float()) {
          out << format_double(v.get<double>());
        } else {
          out << v.dump();
        }
      }
      out << ',';
    }
    out << c.metric << ',' << format_double(c.mean) << ',';
    if (c.count >= 2) out << format_double(c.stddev);
    out << ',' << c.count << '\n';
  }
  return out.str();
}

namespace {

double sample_std(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0;
  double acc = 0;
  for (double x : v) acc += (x - mean) * (x - mean);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

double mean_of(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x;
  return acc / static_cast<double>(v.size());
}

double clamp_unit(double v) { return std::min(1.0, std::max(0.0, v)); }

double r_squared_pred(const Eigen::VectorXd& y, const Eigen::VectorXd& yhat) {
  const double mean = y.mean();
  const double sst = (y.array() - mean).square().sum();
  const double ssr = (y - yhat).squaredNorm();
  return 1.0 - ssr / sst;
}

// Plain least squares prediction: fit y ~ [1, X(:, columns)] on train,
// evaluate out-of-distribution R^2 on test.
double ols_ood_r2(const LabeledDataset& train, const LabeledDataset& test,
                  const std::vector<int>& columns) {
  Eigen::MatrixXd ftrain(train.x.rows(),
                         static_cast<Eigen::Index>(columns.size()));
  Eigen::MatrixXd ftest(test.x.rows(),
                        static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) {
    ftrain.col(static_cast<Eigen::Index>(k)) = train.x.values.col(columns[k]);
    ftest.col(static_cast<Eigen::Index>(k)) = test.x.values.col(columns[k]);
  }
  const pns::OutcomeModelFit fit = pns::fit_outcome_linear(
      ftrain, train.y, Eigen::MatrixXd(train.x.rows(), 0));
  const Eigen::VectorXd yhat =
      (ftest * fit.rep_coeffs).array() + fit.intercept;
  return r_squared_pred(test.y, yhat);
}

}  // namespace

ExperimentResult poc_sweep(const std::vector<double>& p_grid,
                           std::uint64_t seed) {
  for (double p : p_grid) {
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("p grid must lie in [0,1]");
  }
  ExperimentResult result;
  result.name = "poc-sweep";
  result.parameters = Json{{"p_grid", p_grid}, {"seed", seed}};
  result.repetitions = 1;

  const std::vector<std::string> causes = {"Z1", "Z2", "Z1andZ2"};
  const std::vector<std::string> outcomes = {"Y1", "Y2"};

  std::vector<double> lb_z1_y2;
  bool cond_z2_zero = true;
  bool cond_z1_high = true;
  std::string detail_a, detail_b;

  for (double p : p_grid) {
    const scm::BinaryScm model = synth::gen_binary_poc(p);
    for (const std::string& outcome_name : outcomes) {
      const scm::EventSpec outcome{outcome_name, 1, false};
      for (const std::string& cause_name : causes) {
        const scm::EventSpec cause{cause_name, 1, false};
        Json params{{"p", p}, {"cause", cause_name}, {"outcome", outcome_name}};
        double pn = std::numeric_limits<double>::quiet_NaN();
        double ps = pn, pns = pn;
        try {
          const scm::Poc poc = scm::true_poc(model, cause, outcome);
          pn = poc.pn;
          ps = poc.ps;
          pns = poc.pns;
        } catch (const DegenerateEventError&) {
          // Conditioning event impossible at this p; series has a gap.
        }
        const double lb =
            clamp_unit(scm::pns_lower_bound(model, cause, outcome));
        result.cells.push_back({params, "pn", pn, 0, 1});
        result.cells.push_back({params, "ps", ps, 0, 1});
        result.cells.push_back({params, "pns", pns, 0, 1});
        result.cells.push_back({params, "pns_lower_bound", lb, 0, 1});
        if (cause_name == "Z1" && outcome_name == "Y2") {
          lb_z1_y2.push_back(lb);
        }
      }
      // Conditional oracle for each feature given the other.
      const double cond_z1 = scm::conditional_pns_oracle(
          model, {"Z1", 1, false}, {{"Z2", 1, false}}, outcome);
      const double cond_z2 = scm::conditional_pns_oracle(
          model, {"Z2", 1, false}, {{"Z1", 1, false}}, outcome);
      result.cells.push_back({Json{{"p", p},
                                   {"cause", "Z1"},
                                   {"outcome", outcome_name},
                                   {"given", "Z2"}},
                              "cond_pns", cond_z1, 0, 1});
      result.cells.push_back({Json{{"p", p},
                                   {"cause", "Z2"},
                                   {"outcome", outcome_name},
                                   {"given", "Z1"}},
                              "cond_pns", cond_z2, 0, 1});
      if (outcome_name == "Y1") {
        if (std::abs(cond_z2) > 1e-12) {
          cond_z2_zero = false;
          detail_a = "p=" + format_double(p) +
                     " gives cond_pns=" + format_double(cond_z2);
        }
        if (!(cond_z1 >= 0.5)) {
          cond_z1_high = false;
          detail_b = "p=" + format_double(p) +
                     " gives cond_pns=" + format_double(cond_z1);
        }
      }
    }
  }

  // The p grid runs the correlation from corr(Z1,Z2)=1 (p=0) down to -1
  // (p=1); the bound series must be non-increasing in p on the sorted grid,
  // i.e. non-decreasing in the correlation on both branches.
  std::vector<double> sorted_p = p_grid;
  std::vector<std::size_t> order(sorted_p.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return p_grid[a] < p_grid[b]; });
  bool monotone = true;
  std::string detail_c = "series non-decreasing in corr(Z1,Z2)";
  for (std::size_t i = 0; i + 1 < order.size(); ++i) {
    if (!(lb_z1_y2[order[i]] >= lb_z1_y2[order[i + 1]])) {
      monotone = false;
      detail_c = "bound rises from p=" + format_double(p_grid[order[i]]) +
                 " to p=" + format_double(p_grid[order[i + 1]]);
      break;
    }
  }

  result.assertions.push_back(
      {"cond_pns_z2_for_y1_given_z1_is_zero", cond_z2_zero,
       cond_z2_zero ? "0 within 1e-12 at every p" : detail_a});
  result.assertions.push_back(
      {"cond_pns_z1_for_y1_given_z2_at_least_half", cond_z1_high,
       cond_z1_high ? ">= 0.5 at every p" : detail_b});
  result.assertions.push_back(
      {"lower_bound_z1_y2_monotone_in_correlation", monotone, detail_c});
  return result;
}

OodLinearOptions::OodLinearOptions() {
  train.rep_class = rep::RepClass::kConvexCombination;
  train.rep_dim = 2;
  train.latent_dim = 1;
  train.lambda = 1.0;
  train.alpha = 1e-3;
  train.learning_rate = 0.05;
  train.iterations = 300;
  train.restarts = 3;
  // The toy data keeps sizeable observation noise on every column, so the
  // factor posterior is wider than in the pixel example; gate accordingly.
  train.pinpoint_threshold = 0.1;
}

ExperimentResult ood_linear(const OodLinearOptions& opts,
                            std::uint64_t seed) {
  if (opts.seeds < 1) throw InputError("need at least one seed");
  ExperimentResult result;
  result.name = "ood-linear";
  result.parameters = Json{{"seeds", opts.seeds},
                           {"n_train", opts.n_train},
                           {"n_test", opts.n_test},
                           {"seed", seed},
                           {"lambda", opts.train.lambda},
                           {"alpha", opts.train.alpha}};
  result.repetitions = opts.seeds;

  std::vector<double> r2_rep(static_cast<std::size_t>(opts.seeds));
  std::vector<double> r2_ols(static_cast<std::size_t>(opts.seeds));
  std::vector<double> r2_oracle(static_cast<std::size_t>(opts.seeds));

  parallel_for(opts.seeds, [&](int s) {
    const std::uint64_t run_seed = split_seed(seed, static_cast<std::uint64_t>(s));
    const synth::ToyLinearData data =
        synth::gen_toy_linear(run_seed, opts.n_train, opts.n_test);

    rep::TrainConfig cfg = opts.train;
    cfg.seed = split_seed(run_seed, 1);
    const rep::TrainResult trained = rep::train(data.train.x, data.train.y, cfg);
    const rep::Predictor predictor =
        rep::fit_predictor(trained.rep, data.train.x, data.train.y);
    const Eigen::VectorXd yhat =
        rep::predict(predictor, trained.rep, data.test.x);
    r2_rep[static_cast<std::size_t>(s)] = r_squared_pred(data.test.y, yhat);

    std::vector<int> all_cols(static_cast<std::size_t>(data.train.x.cols()));
    for (std::size_t j = 0; j < all_cols.size(); ++j) {
      all_cols[j] = static_cast<int>(j);
    }
    r2_ols[static_cast<std::size_t>(s)] =
        ols_ood_r2(data.train, data.test, all_cols);
    r2_oracle[static_cast<std::size_t>(s)] =
        ols_ood_r2(data.train, data.test, data.causal_columns);
  });

  int wins = 0;
  for (int s = 0; s < opts.seeds; ++s) {
    const Json params{{"seed_index", s}};
    result.cells.push_back({Json{{"seed_index", s}, {"method", "causal-rep"}},
                            "ood_r2", r2_rep[static_cast<std::size_t>(s)], 0, 1});
    result.cells.push_back({Json{{"seed_index", s}, {"method", "ols"}},
                            "ood_r2", r2_ols[static_cast<std::size_t>(s)], 0, 1});
    result.cells.push_back({Json{{"seed_index", s}, {"method", "oracle"}},
                            "ood_r2", r2_oracle[static_cast<std::size_t>(s)], 0,
                            1});
    if (r2_rep[static_cast<std::size_t>(s)] >=
        r2_ols[static_cast<std::size_t>(s)]) {
      ++wins;
    }
  }
  const double mean_rep = mean_of(r2_rep);
  const double mean_ols = mean_of(r2_ols);
  const double mean_oracle = mean_of(r2_oracle);
  result.cells.push_back({Json{{"method", "causal-rep"}}, "ood_r2", mean_rep,
                          sample_std(r2_rep, mean_rep), opts.seeds});
  result.cells.push_back({Json{{"method", "ols"}}, "ood_r2", mean_ols,
                          sample_std(r2_ols, mean_ols), opts.seeds});
  result.cells.push_back({Json{{"method", "oracle"}}, "ood_r2", mean_oracle,
                          sample_std(r2_oracle, mean_oracle), opts.seeds});

  const int need_wins = (opts.seeds * 16 + 19) / 20;  // 16-of-20 rate
  result.assertions.push_back(
      {"rep_beats_ols_most_seeds", wins >= need_wins,
       std::to_string(wins) + " of " + std::to_string(opts.seeds) +
           " seeds (need " + std::to_string(need_wins) + ")"});
  result.assertions.push_back(
      {"mean_improvement_at_least_0.05", mean_rep - mean_ols >= 0.05,
       "mean gap " + format_double(mean_rep - mean_ols)});
  result.assertions.push_back(
      {"oracle_dominates_rep", mean_oracle >= mean_rep,
       "oracle " + format_double(mean_oracle) + " vs rep " +
           format_double(mean_rep)});
  result.assertions.push_back(
      {"rep_close_to_oracle", mean_oracle - mean_rep <= 0.15,
       "gap " + format_double(mean_oracle - mean_rep)});
  return result;
}

ExperimentResult ioss_suite(const IossSuiteOptions& opts,
                            std::uint64_t seed) {
  if (opts.trials < 1) throw InputError("trials must be at least 1");
  ExperimentResult result;
  result.name = "ioss-suite";
  result.parameters = Json{{"trials", opts.trials},
                           {"factor_dim", opts.factor_dim},
                           {"factor_levels", opts.factor_levels},
                           {"factor_corr", opts.factor_corr},
                           {"factor_n", opts.factor_n},
                           {"lambdas", opts.lambdas},
                           {"sweep_seeds", opts.sweep_seeds},
                           {"seed", seed}};
  result.repetitions = opts.sweep_seeds;

  // Discrimination study on correlated factors.
  const long k_draws =
      ioss::default_k_draws(opts.factor_dim, opts.factor_n);
  const auto factor_gen = [&](std::uint64_t s) {
    return synth::gen_correlated_factors(opts.factor_dim, opts.factor_levels,
                                         opts.factor_corr, opts.factor_n, s);
  };
  const ioss::DistinguishResult disc = ioss::distinguish_experiment(
      factor_gen, opts.trials, k_draws, split_seed(seed, 1));
  result.cells.push_back({Json{{"k_draws", k_draws}},
                          "discrimination_proportion",
                          disc.proportion_correct, 0, 1});
  result.assertions.push_back(
      {"discrimination_at_least_0.9", disc.proportion_correct >= 0.9,
       format_double(disc.proportion_correct) + " over " +
           std::to_string(opts.trials) + " trials"});

  // Regularization sweep on linearly mixed correlated factors, paired by
  // seed across lambda values.
  const std::size_t n_lambdas = opts.lambdas.size();
  std::vector<std::vector<double>> rec(n_lambdas), score(n_lambdas);
  for (auto& v : rec) v.resize(static_cast<std::size_t>(opts.sweep_seeds));
  for (auto& v : score) v.resize(static_cast<std::size_t>(opts.sweep_seeds));

  parallel_for(opts.sweep_seeds, [&](int s) {
    const std::uint64_t data_seed = split_seed(seed, 2, static_cast<std::uint64_t>(s));
    const ioss::FactorSample factors = synth::gen_correlated_factors(
        3, opts.factor_levels, 0.8, opts.sweep_n, data_seed);
    Rng mix_rng(split_seed(seed, 3, static_cast<std::uint64_t>(s)));
    Eigen::MatrixXd mixing(3, opts.sweep_m);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < opts.sweep_m; ++j) mixing(i, j) = mix_rng.normal();
    }
    Eigen::MatrixXd x = factors.values * mixing;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) {
        x(i, j) += 0.05 * mix_rng.normal();
      }
    }
    const DataMatrix data(std::move(x));
    for (std::size_t li = 0; li < n_lambdas; ++li) {
      ioss::IossTrainConfig cfg = opts.sweep_train;
      cfg.dim = 3;
      cfg.lambda = opts.lambdas[li];
      cfg.seed = split_seed(seed, 4, static_cast<std::uint64_t>(s));
      const ioss::IossTrainResult run = ioss::ioss_train(data, cfg);
      rec[li][static_cast<std::size_t>(s)] = run.reconstruction_loss;
      score[li][static_cast<std::size_t>(s)] = run.exact_ioss.value;
    }
  });

  std::vector<double> mean_scores(n_lambdas), mean_recs(n_lambdas);
  for (std::size_t li = 0; li < n_lambdas; ++li) {
    mean_recs[li] = mean_of(rec[li]);
    mean_scores[li] = mean_of(score[li]);
    result.cells.push_back({Json{{"lambda", opts.lambdas[li]}},
                            "reconstruction_loss", mean_recs[li],
                            sample_std(rec[li], mean_recs[li]),
                            opts.sweep_seeds});
    result.cells.push_back({Json{{"lambda", opts.lambdas[li]}}, "exact_ioss",
                            mean_scores[li],
                            sample_std(score[li], mean_scores[li]),
                            opts.sweep_seeds});
  }

  bool decreasing = true;
  std::string detail = "mean exact score:";
  for (std::size_t li = 0; li < n_lambdas; ++li) {
    detail += " " + format_double(mean_scores[li]);
    if (li > 0 && !(mean_scores[li] < mean_scores[li - 1])) decreasing = false;
  }
  result.assertions.push_back(
      {"mean_ioss_strictly_decreasing_in_lambda", decreasing, detail});
  const double ratio = mean_recs.back() / mean_recs.front();
  result.assertions.push_back(
      {"reconstruction_within_1.3x", ratio <= 1.3,
       "loss ratio " + format_double(ratio)});
  return result;
}

bool Report::all_passed() const {
  for (const ExperimentResult& r : results) {
    if (!r.all_assertions_passed()) return false;
  }
  return true;
}

Json Report::to_json() const {
  Json arr = Json::array();
  for (const ExperimentResult& r : results) arr.push_back(r.to_json());
  return Json{{"results", arr}, {"all_passed", all_passed()}};
}

std::string Report::to_text() const {
  std::ostringstream out;
  for (const ExperimentResult& r : results) {
    out << "== " << r.name << " ==\n";
    for (const Cell& c : r.cells) {
      out << "  " << c.params.dump() << " " << c.metric << " = "
          << format_double(c.mean);
      if (c.count >= 2) {
        out << " +/- " << format_double(c.stddev) << " (n=" << c.count << ")";
      }
      out << '\n';
    }
    for (const Assertion& a : r.assertions) {
      out << "  [" << (a.passed ? "pass" : "FAIL") << "] " << a.name << ": "
          << a.detail << '\n';
    }
  }
  out << (all_passed() ? "ALL ASSERTIONS PASSED" : "ASSERTION FAILURES")
      << '\n';
  return out.str();
}

Report merge_reports(const std::vector<ExperimentResult>& results) {
  Report report;
  report.results = results;
  return report;
}

}  // namespace causalrep::experiments
