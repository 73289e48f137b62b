#include "omit/simulation.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "omit/estimation.hpp"
#include "omit/imputation.hpp"
#include "omit/regression.hpp"
#include "omit/rng.hpp"
#include "omit/special.hpp"

namespace omit {

namespace {

constexpr std::uint64_t kPopulationStream = 1;
constexpr std::uint64_t kReplicateStream = 2;

int scenario_thread_cap() {
  if (const char* env = std::getenv("OMIT_THREADS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

double alpha_t() { return std_normal_quantile(0.4); }

int variant_power(Variant v) { return v == Variant::Quadratic ? 2 : 3; }

}  // namespace

std::string to_string(Variant v) { return v == Variant::Quadratic ? "quadratic" : "cubic"; }

std::string to_string(Method m) {
  switch (m) {
    case Method::OmitCorrect: return "OMIT_Correct";
    case Method::OmitLm: return "OMIT_lm";
    case Method::OmitFlex: return "OMIT_flex";
    case Method::NaiveMI: return "NaiveMI";
    case Method::NaivePlusY: return "NaivePlusY";
    case Method::CC: return "CC";
  }
  return "?";
}

Method method_from_string(const std::string& s) {
  if (s == "OMIT_Correct" || s == "omit-correct") return Method::OmitCorrect;
  if (s == "OMIT_lm" || s == "omit-lm") return Method::OmitLm;
  if (s == "OMIT_flex" || s == "omit-flex") return Method::OmitFlex;
  if (s == "NaiveMI" || s == "naive") return Method::NaiveMI;
  if (s == "NaivePlusY" || s == "naive-y") return Method::NaivePlusY;
  if (s == "CC" || s == "cc") return Method::CC;
  throw std::invalid_argument("unknown method: " + s);
}

std::string ScenarioConfig::id() const {
  auto fmt = [](double v) {
    std::string s = format_double(v);
    for (auto& c : s) {
      if (c == '.') c = 'p';
    }
    return s;
  };
  return to_string(variant) + "_by" + fmt(beta_y) + "_s" + fmt(sigma) + "_m" +
         fmt(miss_level * 100);
}

void ScenarioConfig::validate() const {
  if (n < 4 * d) throw std::invalid_argument("ScenarioConfig: n must be at least 4*d");
  if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("correlation not positive definite: rho must be in [0,1)");
  }
  if (d >= 2 && rho < -1.0 / (d - 1)) {
    throw std::invalid_argument("correlation not positive definite");
  }
  if (!(miss_level > 0.0 && miss_level < 1.0)) {
    throw std::invalid_argument("ScenarioConfig: miss_level must be in (0,1)");
  }
  if (replicates < 1 || M < 1) throw std::invalid_argument("ScenarioConfig: counts must be >= 1");
}

Population generate_population(const ScenarioConfig& config, std::uint64_t stream_key) {
  config.validate();
  const RandomStream pop = RandomStream(stream_key);
  const RandomStream xs = pop.sub(0);
  const RandomStream eps1 = pop.sub(1);
  const RandomStream eps0 = pop.sub(2);

  const int n = config.n, d = config.d;
  Eigen::MatrixXd corr = Eigen::MatrixXd::Constant(d, d, config.rho);
  corr.diagonal().setOnes();
  Eigen::LLT<Eigen::MatrixXd> llt(corr);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("correlation not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();

  Eigen::MatrixXd Z(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      Z(i, j) = xs.normal(static_cast<std::uint64_t>(i) * d + j);
    }
  }
  Population out;
  out.X = Z * L.transpose();

  const int p = variant_power(config.variant);
  Eigen::VectorXd y1(n), y0(n);
  for (int i = 0; i < n; ++i) {
    const double x1 = out.X(i, 0);
    const double x2k = std::pow(out.X(i, 1), p);
    y1(i) = 2.0 + x1 + config.beta_y * x2k + config.sigma * eps1.normal(i);
    y0(i) = 1.0 + x1 + x2k + config.sigma * eps0.normal(i);
  }
  out.po = PotentialOutcomeTable::from(std::move(y1), std::move(y0));
  return out;
}

MaskedDraw assign_and_mask(const Population& pop, const ScenarioConfig& config,
                           int replicate_index) {
  const int n = static_cast<int>(pop.X.rows());
  const RandomStream rep = RandomStream(config.seed)
                               .sub(kReplicateStream)
                               .sub(static_cast<std::uint64_t>(replicate_index));
  const RandomStream tdraw = rep.sub(0);
  const RandomStream rdraw = rep.sub(1);

  const double at = alpha_t();
  const double ar = std_normal_quantile(config.miss_level);

  MaskedDraw out;
  out.t_true.resize(n);
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    const double pt = std_normal_cdf(at + config.beta_t2 * pop.X(i, 1));
    out.t_true(i) = tdraw.bernoulli(pt, i) ? 1 : 0;
    y(i) = out.t_true(i) == 1 ? pop.po.y1(i) : pop.po.y0(i);
  }

  Eigen::VectorXd ytilde = y;
  standardize(ytilde, "realized outcome");

  out.table.X = pop.X;
  out.table.y = y;
  out.table.t.resize(n);
  out.table.r.resize(n);
  for (int i = 0; i < n; ++i) {
    const double pr =
        std_normal_cdf(ar + config.beta_r2 * pop.X(i, 1) + config.gamma * ytilde(i));
    out.table.r(i) = rdraw.bernoulli(pr, i) ? 1 : 0;
    out.table.t(i) = out.table.r(i) == 1 ? ObservationTable::kMissing : out.t_true(i);
  }
  out.table.covariate_names.resize(config.d);
  for (int j = 0; j < config.d; ++j) out.table.covariate_names[j] = "x" + std::to_string(j + 1);
  return out;
}

namespace {

struct RepOutcome {
  MethodRep rep;
  double match_rate = 0.0;
  bool has_match_rate = false;
};

double match_rate(const std::vector<CompletedDataset>& datasets, const ObservationTable& table,
                  const Eigen::VectorXi& t_true) {
  long hits = 0, total = 0;
  for (const auto& ds : datasets) {
    for (int i = 0; i < table.n(); ++i) {
      if (table.r(i) == 1) {
        ++total;
        if (ds.t_star(i) == t_true(i)) ++hits;
      }
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(total);
}

RepOutcome run_method(Method method, const MaskedDraw& draw, const ScenarioConfig& config,
                      const Eigen::VectorXd& e_hat, double tau_fp, std::uint64_t imp_seed) {
  const ObservationTable& table = draw.table;
  RepOutcome out;

  if (method == Method::CC) {
    const IPWEstimate est = ipw_complete_case(table, e_hat);
    const double q = std_normal_quantile(0.5 * (1.0 + config.level));
    out.rep.tau_hat = est.tau_hat;
    out.rep.ci_low = est.tau_hat - q * std::sqrt(est.u);
    out.rep.ci_high = est.tau_hat + q * std::sqrt(est.u);
  } else {
    const ObservationTable cc = table.complete_case_view();
    ImputationPlan plan;
    switch (method) {
      case Method::OmitCorrect: {
        DesignSpec spec{DesignSpec::Kind::correct, variant_power(config.variant)};
        plan = plan_omit(table, e_hat, fit_outcome(cc, spec), config.M, imp_seed);
        break;
      }
      case Method::OmitLm: {
        DesignSpec spec{DesignSpec::Kind::interaction};
        plan = plan_omit(table, e_hat, fit_outcome(cc, spec), config.M, imp_seed);
        break;
      }
      case Method::OmitFlex: {
        DesignSpec spec{DesignSpec::Kind::interaction_poly3};
        plan = plan_omit(table, e_hat, fit_outcome(cc, spec), config.M, imp_seed);
        break;
      }
      case Method::NaiveMI:
        plan = plan_naive(table, e_hat, config.M, imp_seed);
        break;
      case Method::NaivePlusY:
        plan = plan_naive_plus_y(table, config.M, imp_seed);
        break;
      default:
        throw std::logic_error("run_method: unhandled method");
    }
    const auto datasets = materialize(plan);
    std::vector<IPWEstimate> estimates;
    estimates.reserve(datasets.size());
    for (const auto& ds : datasets) {
      estimates.push_back(ipw_estimate(table.y, ds.t_star, e_hat, table.n()));
    }
    const PooledEstimate pooled = pool(estimates, config.level);
    out.rep.tau_hat = pooled.tau_bar;
    out.rep.ci_low = pooled.ci_low;
    out.rep.ci_high = pooled.ci_high;
    out.match_rate = match_rate(datasets, table, draw.t_true);
    out.has_match_rate = true;
  }
  out.rep.covered = out.rep.ci_low <= tau_fp && tau_fp <= out.rep.ci_high;
  out.rep.ok = true;
  return out;
}

}  // namespace

ScenarioResult run_scenario(const ScenarioConfig& config) {
  config.validate();
  if (config.methods.empty()) {
    throw std::invalid_argument("run_scenario: no methods requested");
  }

  const RandomStream base(config.seed);
  ScenarioResult result;
  result.config = config;

  const Population pop = generate_population(config, base.sub(kPopulationStream).key());
  result.tau_fp = pop.po.tau_fp;

  const int n_methods = static_cast<int>(config.methods.size());
  for (Method m : config.methods) {
    result.reps[m].resize(config.replicates);
  }
  std::vector<double> miss_by_rep(config.replicates, 0.0);
  std::vector<double> treat_by_rep(config.replicates, 0.0);
  // match_by_rep[k][rep] < 0 means no rate recorded for that replicate.
  std::vector<std::vector<double>> match_by_rep(
      n_methods, std::vector<double>(config.replicates, -1.0));

  auto process_rep = [&](int rep) {
    const MaskedDraw draw = assign_and_mask(pop, config, rep);
    miss_by_rep[rep] = static_cast<double>(draw.table.n_missing()) / config.n;
    treat_by_rep[rep] = draw.t_true.cast<double>().mean();

    const std::uint64_t rep_key =
        base.sub(kReplicateStream).sub(static_cast<std::uint64_t>(rep)).sub(2).key();

    // Correctly specified propensity model: probit of t on x_2, fit on
    // complete cases, scored on every unit.
    FittedPropensityModel ps_model;
    Eigen::VectorXd e_hat;
    bool ps_ok = true;
    try {
      const ObservationTable cc = draw.table.complete_case_view();
      ps_model = fit_probit(cc.X.col(1), cc.t);
      e_hat = ps_model.predict(draw.table.X.col(1));
    } catch (const std::exception&) {
      ps_ok = false;
    }

    int method_index = 0;
    for (Method m : config.methods) {
      MethodRep& slot = result.reps[m][rep];
      if (!ps_ok) {
        slot.ok = false;
        ++method_index;
        continue;
      }
      try {
        RepOutcome out = run_method(m, draw, config, e_hat, result.tau_fp,
                                    RandomStream(rep_key).sub(method_index).key());
        slot = out.rep;
        if (out.has_match_rate) match_by_rep[method_index][rep] = out.match_rate;
      } catch (const std::exception&) {
        slot.ok = false;
      }
      ++method_index;
    }
  };

  const int threads = std::min(scenario_thread_cap(), config.replicates);
  if (threads <= 1) {
    for (int rep = 0; rep < config.replicates; ++rep) process_rep(rep);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int k = 0; k < threads; ++k) {
      pool.emplace_back([&, k] {
        for (int rep = k; rep < config.replicates; rep += threads) process_rep(rep);
      });
    }
    for (auto& th : pool) th.join();
  }

  double miss_sum = 0.0, treat_sum = 0.0;
  for (int rep = 0; rep < config.replicates; ++rep) {
    miss_sum += miss_by_rep[rep];
    treat_sum += treat_by_rep[rep];
  }
  result.realized_missingness = miss_sum / config.replicates;
  result.realized_treated_fraction = treat_sum / config.replicates;

  std::map<Method, double> match_sum;
  std::map<Method, int> match_cnt;
  {
    int method_index = 0;
    for (Method m : config.methods) {
      for (double v : match_by_rep[method_index]) {
        if (v >= 0.0) {
          match_sum[m] += v;
          match_cnt[m] += 1;
        }
      }
      ++method_index;
    }
  }

  for (Method m : config.methods) {
    MethodSummary s;
    double bias_sum = 0.0, sq_sum = 0.0;
    int covered = 0;
    for (const MethodRep& rep : result.reps[m]) {
      if (!rep.ok) {
        ++s.excluded;
        continue;
      }
      ++s.used;
      const double diff = rep.tau_hat - result.tau_fp;
      bias_sum += diff;
      sq_sum += diff * diff;
      covered += rep.covered ? 1 : 0;
    }
    if (s.used > 0) {
      s.mean_bias = bias_sum / s.used;
      s.mse = sq_sum / s.used;
      s.coverage = static_cast<double>(covered) / s.used;
    }
    if (match_cnt.count(m)) s.mean_match_rate = match_sum[m] / match_cnt[m];
    result.summaries[m] = s;
  }
  return result;
}

nlohmann::json to_json(const ScenarioResult& result) {
  nlohmann::json methods = nlohmann::json::object();
  for (const auto& [m, s] : result.summaries) {
    methods[to_string(m)] = {{"mean_bias", s.mean_bias},   {"mse", s.mse},
                             {"coverage", s.coverage},     {"used", s.used},
                             {"excluded", s.excluded},     {"mean_match_rate", s.mean_match_rate}};
  }
  return {{"scenario", result.config.id()},
          {"variant", to_string(result.config.variant)},
          {"beta_y", result.config.beta_y},
          {"sigma", result.config.sigma},
          {"miss_level", result.config.miss_level},
          {"replicates", result.config.replicates},
          {"M", result.config.M},
          {"seed", result.config.seed},
          {"tau_fp", result.tau_fp},
          {"realized_missingness", result.realized_missingness},
          {"realized_treated_fraction", result.realized_treated_fraction},
          {"methods", methods}};
}

void summarize_grid(const std::vector<ScenarioResult>& results, const std::string& out_dir) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);

  std::ofstream cov_all(fs::path(out_dir) / "coverage.csv");
  cov_all << "variant,beta_y,sigma,miss_level,method,coverage,mean_bias,mse,used,excluded\n";

  bool any_cubic = false;
  std::ofstream npy;
  for (const auto& res : results) {
    const fs::path dir = fs::path(out_dir) / res.config.id();
    fs::create_directories(dir);

    std::ofstream bias(dir / "bias.csv");
    bias << "method,variant,beta_y,sigma,miss_level,replicate,diff\n";
    for (const auto& [m, reps] : res.reps) {
      for (size_t i = 0; i < reps.size(); ++i) {
        if (!reps[i].ok) continue;
        bias << to_string(m) << ',' << to_string(res.config.variant) << ','
             << format_double(res.config.beta_y) << ',' << format_double(res.config.sigma) << ','
             << format_double(res.config.miss_level) << ',' << i << ','
             << format_double(reps[i].tau_hat - res.tau_fp) << '\n';
      }
    }

    std::ofstream cov(dir / "coverage.csv");
    cov << "method,coverage,mean_bias,mse,used,excluded\n";
    for (const auto& [m, s] : res.summaries) {
      cov << to_string(m) << ',' << format_double(s.coverage) << ','
          << format_double(s.mean_bias) << ',' << format_double(s.mse) << ',' << s.used << ','
          << s.excluded << '\n';
      cov_all << to_string(res.config.variant) << ',' << format_double(res.config.beta_y) << ','
              << format_double(res.config.sigma) << ',' << format_double(res.config.miss_level)
              << ',' << to_string(m) << ',' << format_double(s.coverage) << ','
              << format_double(s.mean_bias) << ',' << format_double(s.mse) << ',' << s.used << ','
              << s.excluded << '\n';
    }

    std::ofstream diag(dir / "diagnostics.json");
    diag << to_json(res).dump(2) << '\n';

    if (res.config.variant == Variant::Cubic) {
      if (!any_cubic) {
        npy.open(fs::path(out_dir) / "naive_plus_y_comparison.csv");
        npy << "beta_y,sigma,miss_level,method,mean_abs_bias,coverage\n";
        any_cubic = true;
      }
      for (const auto& [m, reps] : res.reps) {
        double abs_sum = 0.0;
        int used = 0;
        for (const auto& rep : reps) {
          if (!rep.ok) continue;
          abs_sum += std::abs(rep.tau_hat - res.tau_fp);
          ++used;
        }
        npy << format_double(res.config.beta_y) << ',' << format_double(res.config.sigma) << ','
            << format_double(res.config.miss_level) << ',' << to_string(m) << ','
            << format_double(used ? abs_sum / used : 0.0) << ','
            << format_double(res.summaries.at(m).coverage) << '\n';
      }
    }
  }
}

}  // namespace omit
