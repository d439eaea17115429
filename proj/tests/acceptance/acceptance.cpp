// Acceptance checks: one PASS/FAIL line per criterion, non-zero exit on failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "refcast/metrics.hpp"
#include "refcast/pipeline.hpp"
#include "refcast/predictive.hpp"
#include "refcast/priors.hpp"
#include "refcast/solver.hpp"
#include "refcast/theory_mc.hpp"
#include "refcast/tuner.hpp"

using namespace refcast;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char *f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

ModelSpec make(Variant v, double lambda, std::vector<double> s, double mu_bar = 0.0, double sigma2 = 1.0) {
  ModelSpec m;
  m.transform = v.transform;
  m.penalty = v.penalty;
  m.lambda = lambda;
  m.priors = std::move(s);
  m.mu_bar = mu_bar;
  m.sigma2 = sigma2;
  return m;
}

std::vector<double> draw_simplex(std::mt19937_64 &rng, std::size_t k) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> s(k);
  double sum = 0.0;
  for (auto &x : s) sum += (x = u(rng));
  for (auto &x : s) x /= sum;
  return s;
}

double inf_dist(const std::vector<double> &a, const std::vector<double> &b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

double l2_dist(const std::vector<double> &a, const std::vector<double> &b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d);
}

Outcome closed_form_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> logl(-3.0, 4.0);
  const std::size_t ks[4] = {2, 5, 10, 17};
  double worst = 0.0;
  for (int r = 0; r < 100; ++r) {
    const std::size_t k = ks[r % 4];
    std::vector<double> mu(k);
    for (auto &x : mu) x = 2.0 * n(rng);
    const auto spec = make({Transform::Identity, Penalty::L2}, std::pow(10.0, logl(rng)), draw_simplex(rng, k),
                           consensus_mean(mu));
    worst = std::max(worst, inf_dist(solve(mu, spec).weights, closed_form_identity_l2(mu, spec)));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-6 && secs < 10.0, "max inf-norm gap " + fmt("%.2e", worst) + ", " + fmt("%.2f s", secs)};
}

Outcome grid_dominance() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  int bad = 0;
  double worst = -1e300;
  for (auto v : all_variants()) {
    for (int r = 0; r < 20; ++r) {
      std::vector<double> mu(3);
      for (auto &x : mu) x = 2.0 * n(rng);
      const auto spec = make(v, std::exp(1.5 * n(rng)), draw_simplex(rng, 3), consensus_mean(mu), 0.5);
      const auto g = grid_oracle(mu, spec, 1e-3);
      const double gap = solve(mu, spec).objective_value - (g.objective + g.step_variation);
      worst = std::max(worst, gap);
      bad += gap > 0.0;
    }
  }
  const double secs = seconds_since(t0);
  return {bad == 0 && secs < 120.0,
          std::to_string(bad) + "/120 violations, worst margin " + fmt("%.2e", worst) + ", " + fmt("%.1f s", secs)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  double worst = 0.0;
  for (auto v : all_variants()) {
    for (int r = 0; r < 100; ++r) {
      const std::size_t k = 5;
      std::vector<double> mu(k), z(k);
      for (auto &x : mu) x = 2.0 * n(rng);
      for (auto &x : z) x = n(rng);
      const auto spec = make(v, std::exp(n(rng)), draw_simplex(rng, k), 0.3 * n(rng), 0.7);
      const auto g = gradient_z(z, mu, spec);
      const auto fd = oracle::fd_gradient(
          [&](const std::vector<double> &zz) { return objective(softmax(zz), mu, spec).total; }, z);
      double num = 0.0, den = 0.0;
      for (std::size_t i = 0; i < k; ++i) {
        num = std::max(num, std::abs(g[i] - fd[i]));
        den = std::max(den, std::abs(fd[i]));
      }
      worst = std::max(worst, num / std::max(den, 1e-8));
    }
  }
  return {worst <= 1e-5, "max relative error " + fmt("%.2e", worst)};
}

Outcome limit_behavior() {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> dev(0.7, 2.0);
  int bad0 = 0, bad_inf = 0;
  double worst_w = 0.0, worst_l2 = 0.0, worst_ent = 0.0;
  for (auto v : all_variants()) {
    for (int r = 0; r < 5; ++r) {
      // lambda = 0 against the lattice argmin.
      std::vector<double> mu(3);
      for (auto &x : mu) x = (n(rng) < 0 ? -1.0 : 1.0) * dev(rng);
      const auto s = draw_simplex(rng, 3);
      const auto spec0 = make(v, 0.0, s, 0.0, 0.5);
      const auto g = grid_oracle(mu, spec0, 1e-3);
      const auto w = solve(mu, spec0);
      const double wgap = inf_dist(w.weights, g.weights);
      worst_w = std::max(worst_w, wgap);
      if (w.objective_value > g.objective + g.step_variation || wgap > 1e-3 + 1e-9) ++bad0;
      // Dominant penalty.
      std::vector<double> mu5(4);
      for (auto &x : mu5) x = 3.0 * n(rng);
      const auto s5 = draw_simplex(rng, 4);
      const auto wi = solve(mu5, make(v, 1e9, s5, consensus_mean(mu5), 0.5));
      const double d = inf_dist(wi.weights, s5);
      if (v.penalty == Penalty::L2) {
        worst_l2 = std::max(worst_l2, d);
        bad_inf += d > 1e-4;
      } else {
        worst_ent = std::max(worst_ent, d);
        bad_inf += d > 1e-3;
      }
    }
  }
  return {bad0 == 0 && bad_inf == 0, "lambda=0 max weight gap to lattice argmin " + fmt("%.2e", worst_w) +
                                         "; lambda=1e9 max |w-s| L2 " + fmt("%.2e", worst_l2) + ", entropy " +
                                         fmt("%.2e", worst_ent)};
}

Outcome monotonicity() {
  int bad = 0;
  double worst = 0.0;
  for (auto v : all_variants()) {
    for (double lambda : {0.3, 3.0}) {
      const double mu2 = -1.2;
      // Increasing squared deviation of expert 1.
      for (double s1 : {0.2, 0.5, 0.8}) {
        double prev = 2.0;
        for (int i = 1; i <= 40; ++i) {
          const double mu1 = 0.1 * i;
          const double w1 = solve(std::vector<double>{mu1, mu2}, make(v, lambda, {s1, 1.0 - s1}, 0.0, 0.5)).weights[0];
          if (w1 > prev + 1e-8) {
            ++bad;
            worst = std::max(worst, w1 - prev);
          }
          prev = w1;
        }
      }
      // Increasing prior of expert 1.
      for (double mu1 : {0.3, 1.0, 2.5}) {
        double prev = -1.0;
        for (int j = 1; j <= 39; ++j) {
          const double s1 = 0.025 * j;
          const double w1 = solve(std::vector<double>{mu1, mu2}, make(v, lambda, {s1, 1.0 - s1}, 0.0, 0.5)).weights[0];
          if (w1 < prev - 1e-8) {
            ++bad;
            worst = std::max(worst, prev - w1);
          }
          prev = w1;
        }
      }
    }
  }
  return {bad == 0, std::to_string(bad) + " violations, worst " + fmt("%.2e", worst)};
}

Outcome shrinkage_path() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0, 1);
  std::uniform_real_distribution<double> u(0.05, 0.95);
  const std::vector<double> lambdas{0.0, 1.0, 3.0, 10.0, 1e4};
  int bad = 0;
  for (auto v : all_variants()) {
    for (int r = 0; r < 50; ++r) {
      const std::vector<double> mu{2.0 * n(rng), 2.0 * n(rng)};
      const double s1 = u(rng);
      const std::vector<double> s{s1, 1.0 - s1};
      const auto path = weight_path(mu, make(v, 0.0, s, 0.0, 0.5), lambdas);
      for (std::size_t j = 1; j < path.size(); ++j) bad += l2_dist(path[j].weights, s) > l2_dist(path[j - 1].weights, s) + 1e-8;
    }
  }
  return {bad == 0, std::to_string(bad) + " increases over 300 paths"};
}

Outcome simple_mean_rate() {
  const auto t0 = Clock::now();
  RateExperiment e;
  e.k_grid = {10, 100, 1000};
  e.replications = 2000;
  const auto r = mspe_simple_mean(e);
  bool ok = true;
  std::string detail;
  for (const auto &p : r.points) {
    const double z = (p.mspe - p.analytic_simple_mean) / p.se;
    ok = ok && std::abs(z) <= 4.0;
    detail += "k=" + std::to_string(p.k) + " z=" + fmt("%.2f", z) + "; ";
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 60.0, detail + fmt("%.1f s", secs)};
}

Outcome ref_excess_rate() {
  const auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  for (auto v : std::vector<Variant>{{Transform::Identity, Penalty::L2},
                                     {Transform::Identity, Penalty::Entropy},
                                     {Transform::Log, Penalty::L2},
                                     {Transform::Log, Penalty::Entropy}}) {
    RateExperiment e;
    e.variant = v;
    const auto r = mspe_ref(e);
    ok = ok && r.slope >= -1.5 && r.slope <= -0.5;
    detail += variant_name(v) + " " + fmt("%.3f", r.slope) + "; ";
  }
  const double secs = seconds_since(t0);
  return {ok && secs < 600.0, "slopes " + detail + fmt("%.1f s", secs)};
}

Outcome ccr_fixture() {
  const auto a = ccr_raw_weights(std::vector<double>{1.0, 4.0}, 0.5);
  const auto b = ccr_raw_weights(std::vector<double>{1.0, 4.0}, 0.0);
  const bool ok = a[0] == 1.0 && a[1] == 0.0 && b[0] == 0.8 && b[1] == 0.2;
  return {ok, "rho=0.5 -> (" + fmt("%.17g", a[0]) + ", " + fmt("%.17g", a[1]) + "), rho=0 -> (" +
                  fmt("%.17g", b[0]) + ", " + fmt("%.17g", b[1]) + ")"};
}

Outcome rmsse_fixture() {
  const std::vector<double> f{1, 2}, y{0, 0}, ins{1, 2, 4};
  const double base = rmsse(f, y, ins);
  double worst = 0.0;
  for (double c : {1e-3, 1.0, 1e6}) {
    auto fs = f, ys = y, is = ins;
    for (auto *v : {&fs, &ys, &is})
      for (auto &x : *v) x *= c;
    worst = std::max(worst, std::abs(rmsse(fs, ys, is) - base));
  }
  return {base == 1.0 && worst <= 1e-12, "hand value " + fmt("%.17g", base) + ", scale drift " + fmt("%.1e", worst)};
}

Outcome penalty_share_checks() {
  const std::vector<double> mu{1.0, 2.0, -0.5};
  bool zero = true;
  for (auto v : all_variants()) zero = zero && penalty_share(solve(mu, make(v, 0.0, {0.2, 0.3, 0.5}, 0.0, 1.0))) == 0.0;
  const auto parts = objective(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 2.0},
                               make({Transform::Identity, Penalty::L2}, 10.0, {0.25, 0.75}));
  const double half = penalty_share(parts.penalty_term, parts.variance_term);
  const auto bins = ps_bins(std::vector<double>{0.9, 0.1, 0.5, 0.3, 0.7, 0.2, 0.8, 0.4, 0.6, 0.0});
  const auto low = std::count(bins.begin(), bins.end(), PsBin::Low);
  const auto mid = std::count(bins.begin(), bins.end(), PsBin::Medium);
  const auto high = std::count(bins.begin(), bins.end(), PsBin::High);
  return {zero && half == 0.5 && low == 4 && mid == 3 && high == 3,
          "PS(lambda=0) zero for all variants: " + std::string(zero ? "yes" : "no") + ", equal terms " +
              fmt("%.17g", half) + ", bins " + std::to_string(low) + "/" + std::to_string(mid) + "/" +
              std::to_string(high)};
}

Outcome delta_fixture() {
  const double d = delta_rmsse(0.351, 0.335);
  return {std::abs(d - 0.016) <= 1e-12, "delta " + fmt("%.15f", d)};
}

// Panel with T validation periods and history, built per period by `gen`,
// which returns k forecasts given the actual.
ForecastPanel constructed_panel(std::mt19937_64 &rng, int periods,
                                const std::function<std::vector<double>(double)> &gen) {
  std::normal_distribution<double> n(0, 1);
  PanelData d;
  d.series_id = "mc";
  double y = 50.0;
  for (int j = 0; j < 40; ++j) d.insample.push_back(y += n(rng));
  std::vector<std::vector<double>> cols;
  for (int t = 0; t < periods; ++t) {
    y += n(rng);
    d.actuals.push_back(y);
    cols.push_back(gen(y));
  }
  const std::size_t k = cols.front().size();
  d.forecasts.assign(k, std::vector<double>(periods));
  for (std::size_t i = 0; i < k; ++i) {
    d.experts.push_back("E" + std::to_string(i + 1));
    for (int t = 0; t < periods; ++t) d.forecasts[i][t] = cols[t][i];
  }
  return ForecastPanel(std::move(d));
}

Outcome tuning_sanity() {
  TuningPlan plan;
  const Variant v{Transform::Identity, Penalty::L2};
  int top = 0, bottom = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0, 1);
    // Priors informative: expert 1 is nearly exact, the others are noise,
    // so current deviations carry no useful signal.
    const auto a = constructed_panel(rng, plan.T, [&](double y) {
      return std::vector<double>{y + 1e-6 * n(rng), y + 10.0 * n(rng), y + 10.0 * n(rng)};
    });
    top += tune_fixed(a, v, plan).lambda_star == plan.lambda_grid.back();
    // Deviations informative: a tight cluster around the truth plus one
    // outlier whose identity changes every period, so histories are alike.
    std::uniform_int_distribution<int> pick(0, 4);
    std::uniform_real_distribution<double> off(10.0, 20.0);
    const auto b = constructed_panel(rng, plan.T, [&](double y) {
      std::vector<double> f(5);
      for (auto &x : f) x = y + 0.01 * n(rng);
      f[pick(rng)] += (n(rng) < 0 ? -1.0 : 1.0) * off(rng);
      return f;
    });
    bottom += tune_fixed(b, v, plan).lambda_star == 0.0;
  }
  return {top >= 80 && bottom >= 80, "priors-informative top of grid " + std::to_string(top) +
                                         "/100, deviations-informative lambda=0 " + std::to_string(bottom) + "/100"};
}

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism() {
  const auto dir = fs::temp_directory_path() / "refcast_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::vector<ForecastPanel> panels;
  for (int s = 0; s < 2; ++s) {
    SyntheticConfig sc;
    sc.series_id = "S" + std::to_string(s + 1);
    sc.seed = 500 + s;
    sc.rho = 0.4;
    panels.push_back(generate_synthetic(6, 28, sc));
  }
  write_panels(panels, (dir / "f.csv").string(), (dir / "a.csv").string(), (dir / "i.csv").string());
  RunConfig cfg;
  apply_preset(cfg, "m5");
  cfg.forecasts_csv = (dir / "f.csv").string();
  cfg.actuals_csv = (dir / "a.csv").string();
  cfg.insample_csv = (dir / "i.csv").string();
  cfg.seed = 11;
  cfg.solver.seed = 11;
  cfg.predictive = true;
  cfg.output_dir = (dir / "run1").string();
  run_pipeline(cfg);
  cfg.output_dir = (dir / "run2").string();
  run_pipeline(cfg);
  std::size_t same = 0;
  for (const auto &name : output_files()) {
    const auto a = slurp(dir / "run1" / name);
    same += !a.empty() && a == slurp(dir / "run2" / name);
  }
  fs::remove_all(dir);
  return {same == output_files().size(),
          std::to_string(same) + "/" + std::to_string(output_files().size()) + " files byte-identical"};
}

Outcome predictive_checks() {
  double worst = 0.0;
  for (double a : {1.5, 2.0, 3.0, 10.0}) {
    PredictiveSpec s;
    s.point = 1.3;
    s.scale_core = 0.8;
    s.a = a;
    const StudentTPredictive t(s);
    worst = std::max(worst, std::abs(oracle::integrate_line([&](double y) { return t.pdf(y); }, t.mean(), t.scale(),
                                                            4000) -
                                     1.0));
  }
  for (double var : {0.01, 1.0, 50.0}) {
    PredictiveSpec s;
    s.family = PredictiveFamily::NormalKnownVar;
    s.point = -2.0;
    s.sigma2 = var;
    const NormalPredictive nd(s);
    worst = std::max(worst, std::abs(oracle::integrate_line([&](double y) { return nd.pdf(y); }, nd.mean(), nd.sd(),
                                                            4000) -
                                     1.0));
  }
  PredictiveSpec ts;
  ts.scale_core = 1.0;
  ts.a = 1e4;
  const StudentTPredictive t(ts);
  PredictiveSpec ns;
  ns.family = PredictiveFamily::NormalKnownVar;
  ns.sigma2 = t.variance();
  const NormalPredictive nd(ns);
  double ks = 0.0;
  for (double x = -8.0; x <= 8.0; x += 0.005) ks = std::max(ks, std::abs(t.cdf(x) - nd.cdf(x)));
  return {worst <= 1e-6 && ks < 1e-3,
          "max |integral - 1| " + fmt("%.2e", worst) + ", Kolmogorov distance at a=1e4 " + fmt("%.2e", ks)};
}

} // namespace

int main() {
  struct Criterion {
    int id;
    const char *name;
    Outcome (*run)();
  };
  const Criterion criteria[] = {
      {1, "closed-form oracle", closed_form_oracle},
      {2, "grid-oracle dominance", grid_dominance},
      {3, "gradient correctness", gradient_check},
      {4, "limit behavior", limit_behavior},
      {5, "monotonicity", monotonicity},
      {6, "shrinkage path", shrinkage_path},
      {7, "simple-mean MSPE", simple_mean_rate},
      {8, "REF excess-MSPE rate", ref_excess_rate},
      {9, "CCR prior fixture", ccr_fixture},
      {10, "RMSSE fixture", rmsse_fixture},
      {11, "penalty share", penalty_share_checks},
      {12, "delta RMSSE arithmetic", delta_fixture},
      {13, "tuning sanity", tuning_sanity},
      {14, "end-to-end determinism", determinism},
      {15, "predictive distributions", predictive_checks},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s criterion %2d (%s): %s\n", o.pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/15 criteria passed\n", 15 - failed);
  return failed == 0 ? 0 : 1;
}
