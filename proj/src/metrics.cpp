#include "refcast/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include <json.hpp>

#include "refcast/csv.hpp"
#include "refcast/error.hpp"

namespace refcast {

double naive_scale(std::span<const double> insample, const std::string &series_id) {
  if (insample.size() < 2) {
    throw DomainError("naive_scale: in-sample history needs at least 2 values");
  }
  double ss = 0.0;
  for (std::size_t j = 1; j < insample.size(); ++j) {
    const double d = insample[j] - insample[j - 1];
    ss += d * d;
  }
  const double scale = std::sqrt(ss / static_cast<double>(insample.size() - 1));
  if (!(scale > 0.0)) {
    throw DomainError("rmsse: constant in-sample history" + (series_id.empty() ? "" : " for series '" + series_id + "'"));
  }
  return scale;
}

double rmse(std::span<const double> forecasts, std::span<const double> actuals) {
  if (forecasts.size() != actuals.size()) {
    throw DomainError("rmse: length mismatch");
  }
  double ss = 0.0;
  std::size_t n = 0;
  for (std::size_t j = 0; j < forecasts.size(); ++j) {
    if (is_missing(forecasts[j]) || is_missing(actuals[j])) {
      continue;
    }
    const double e = forecasts[j] - actuals[j];
    ss += e * e;
    ++n;
  }
  if (n == 0) {
    throw DomainError("rmse: no evaluation periods");
  }
  return std::sqrt(ss / static_cast<double>(n));
}

double rmsse(std::span<const double> forecasts, std::span<const double> actuals,
             std::span<const double> insample, const std::string &series_id) {
  const double scale = naive_scale(insample, series_id);
  return rmse(forecasts, actuals) / scale;
}

double penalty_share(double penalty_term, double variance_term) {
  const double p = std::abs(penalty_term);
  const double v = std::abs(variance_term);
  if (p + v == 0.0) {
    return 0.0;
  }
  return p / (p + v);
}

double penalty_share(const WeightVector &w) { return penalty_share(w.penalty_term, w.variance_term); }

std::string ps_bin_name(PsBin b) {
  switch (b) {
  case PsBin::Low:
    return "Low";
  case PsBin::Medium:
    return "Medium";
  case PsBin::High:
    return "High";
  }
  return "?";
}

std::vector<PsBin> ps_bins(std::span<const double> shares) {
  const std::size_t n = shares.size();
  if (n < 3) {
    throw DomainError("ps_bins: need at least 3 values");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return shares[a] < shares[b]; });
  const std::size_t base = n / 3;
  const std::size_t rem = n % 3;
  const std::size_t n_low = base + (rem > 0 ? 1 : 0);
  const std::size_t n_mid = base + (rem > 1 ? 1 : 0);
  std::vector<PsBin> bins(n);
  for (std::size_t r = 0; r < n; ++r) {
    bins[order[r]] = r < n_low ? PsBin::Low : (r < n_low + n_mid ? PsBin::Medium : PsBin::High);
  }
  return bins;
}

double delta_rmsse(double benchmark, double reference) { return benchmark - reference; }

std::optional<double> ps_ratio(double ps_a, double ps_b) {
  if (ps_b == 0.0) {
    return std::nullopt;
  }
  return ps_a / ps_b;
}

namespace {

std::pair<double, double> mean_sd(const std::vector<double> &x) {
  const double n = static_cast<double>(x.size());
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / n;
  if (x.size() < 2) {
    return {m, 0.0};
  }
  double ss = 0.0;
  for (double v : x) {
    ss += (v - m) * (v - m);
  }
  return {m, std::sqrt(ss / (n - 1.0))};
}

} // namespace

void EvaluationReport::finalize() {
  std::sort(scores.begin(), scores.end(), [](const MethodScore &a, const MethodScore &b) {
    return std::tie(a.series_id, a.method) < std::tie(b.series_id, b.method);
  });
  std::sort(shares.begin(), shares.end(), [](const PenaltyShareRecord &a, const PenaltyShareRecord &b) {
    return std::tie(a.series_id, a.period, a.variant) < std::tie(b.series_id, b.period, b.variant);
  });

  deltas.clear();
  std::map<std::string, std::map<std::string, const MethodScore *>> by_series;
  for (const auto &s : scores) {
    by_series[s.series_id][s.method] = &s;
  }
  for (const auto &[sid, methods] : by_series) {
    auto ref = methods.find(reference_method);
    if (ref == methods.end()) {
      continue;
    }
    for (const auto &b : benchmarks) {
      auto it = methods.find(b);
      if (it != methods.end()) {
        deltas.push_back({sid, b, delta_rmsse(it->second->rmsse, ref->second->rmsse)});
      }
    }
  }
  std::sort(deltas.begin(), deltas.end(), [](const DeltaRecord &a, const DeltaRecord &b) {
    return std::tie(a.series_id, a.benchmark) < std::tie(b.series_id, b.benchmark);
  });

  if (shares.size() >= 3) {
    std::vector<double> values;
    for (const auto &r : shares) {
      values.push_back(r.share);
    }
    const auto bins = ps_bins(values);
    for (std::size_t i = 0; i < shares.size(); ++i) {
      shares[i].bin = bins[i];
    }
  }

  aggregates.clear();
  std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_method;
  for (const auto &s : scores) {
    per_method[s.method].first.push_back(s.rmsse);
    per_method[s.method].second.push_back(s.rmse);
  }
  for (const auto &[method, v] : per_method) {
    MethodAggregate a;
    a.method = method;
    std::tie(a.mean_rmsse, a.sd_rmsse) = mean_sd(v.first);
    std::tie(a.mean_rmse, a.sd_rmse) = mean_sd(v.second);
    a.series = v.first.size();
    aggregates.push_back(a);
  }
}

void EvaluationReport::write_csv(std::ostream &out) const {
  using csv::format_double;
  csv::write_row(out, {"series_id", "method", "metric", "value"});
  for (const auto &s : scores) {
    csv::write_row(out, {s.series_id, s.method, "rmsse", format_double(s.rmsse)});
    csv::write_row(out, {s.series_id, s.method, "rmse", format_double(s.rmse)});
    csv::write_row(out, {s.series_id, s.method, "periods", std::to_string(s.periods)});
  }
  for (const auto &d : deltas) {
    csv::write_row(out, {d.series_id, d.benchmark, "delta_rmsse", format_double(d.delta)});
  }
  for (const auto &a : aggregates) {
    csv::write_row(out, {"ALL", a.method, "avg_rmsse", format_double(a.mean_rmsse)});
    csv::write_row(out, {"ALL", a.method, "std_rmsse", format_double(a.sd_rmsse)});
    csv::write_row(out, {"ALL", a.method, "avg_rmse", format_double(a.mean_rmse)});
    csv::write_row(out, {"ALL", a.method, "std_rmse", format_double(a.sd_rmse)});
  }
}

void EvaluationReport::write_json(std::ostream &out) const {
  nlohmann::json j;
  j["reference_method"] = reference_method;
  auto &methods = j["methods"];
  methods = nlohmann::json::object();
  for (const auto &a : aggregates) {
    methods[a.method] = {{"avg_rmsse", a.mean_rmsse},
                         {"std_rmsse", a.sd_rmsse},
                         {"avg_rmse", a.mean_rmse},
                         {"std_rmse", a.sd_rmse},
                         {"series", a.series}};
  }
  j["ranking"] = ranking();
  auto &series = j["series"];
  series = nlohmann::json::object();
  for (const auto &s : scores) {
    series[s.series_id][s.method] = {{"rmsse", s.rmsse}, {"rmse", s.rmse}, {"periods", s.periods}};
  }
  for (const auto &d : deltas) {
    series[d.series_id][d.benchmark]["delta_rmsse"] = d.delta;
  }
  auto &ps = j["penalty_share"];
  ps = nlohmann::json::object();
  std::map<std::string, std::vector<double>> by_bin, by_variant;
  for (const auto &r : shares) {
    by_bin[ps_bin_name(r.bin)].push_back(r.share);
    by_variant[r.variant].push_back(r.share);
  }
  for (const auto &[name, v] : by_bin) {
    ps["bins"][name] = {{"count", v.size()}, {"mean", mean_sd(v).first}};
  }
  for (const auto &[name, v] : by_variant) {
    ps["variants"][name] = {{"count", v.size()}, {"mean", mean_sd(v).first}};
  }
  out << j.dump(2) << "\n";
}

void EvaluationReport::write_penalty_shares(std::ostream &out) const {
  csv::write_row(out, {"series_id", "period", "variant", "lambda", "penalty_share", "bin"});
  for (const auto &r : shares) {
    csv::write_row(out, {r.series_id, std::to_string(r.period), r.variant, csv::format_double(r.lambda),
                         csv::format_double(r.share), ps_bin_name(r.bin)});
  }
}

std::vector<std::string> EvaluationReport::ranking() const {
  std::vector<const MethodAggregate *> v;
  for (const auto &a : aggregates) {
    v.push_back(&a);
  }
  std::stable_sort(v.begin(), v.end(),
                   [](const MethodAggregate *a, const MethodAggregate *b) { return a->mean_rmsse < b->mean_rmsse; });
  std::vector<std::string> out;
  for (const auto *a : v) {
    out.push_back(a->method);
  }
  return out;
}

} // namespace refcast
