#include "refcast/panel.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <tuple>

#include "refcast/csv.hpp"
#include "refcast/error.hpp"

namespace refcast {

ForecastPanel::ForecastPanel(PanelData data) : data_(std::move(data)) {
  const auto &d = data_;
  const std::string where = "series '" + d.series_id + "'";
  if (d.experts.empty()) {
    throw InputError(where + ": no experts");
  }
  if (d.forecasts.size() != d.experts.size()) {
    throw InputError(where + ": forecast rows do not match expert count");
  }
  const std::size_t n = d.actuals.size();
  if (n == 0) {
    throw InputError(where + ": no forecast periods");
  }
  for (const auto &row : d.forecasts) {
    if (row.size() != n) {
      throw InputError(where + ": forecast row length does not match period count");
    }
    for (double v : row) {
      if (!is_missing(v) && !std::isfinite(v)) {
        throw InputError(where + ": non-finite forecast value");
      }
    }
  }
  for (std::size_t t = 0; t < n; ++t) {
    bool any = false;
    for (const auto &row : d.forecasts) {
      any = any || !is_missing(row[t]);
    }
    if (!any) {
      throw InputError(where + ": period " + std::to_string(t + 1) + " has no forecasts");
    }
  }
  bool seen_missing = false;
  for (std::size_t t = 0; t < n; ++t) {
    if (is_missing(d.actuals[t])) {
      seen_missing = true;
    } else if (!std::isfinite(d.actuals[t])) {
      throw InputError(where + ": non-finite actual at period " + std::to_string(t + 1));
    } else if (seen_missing) {
      throw InputError(where + ": actual at period " + std::to_string(t + 1) +
                       " follows an unrealised period; only trailing actuals may be missing");
    }
  }
  if (d.insample.size() < 2) {
    throw InputError(where + ": in-sample history needs at least 2 values");
  }
  for (double v : d.insample) {
    if (!std::isfinite(v)) {
      throw InputError(where + ": non-finite in-sample value");
    }
  }
}

void ForecastPanel::check_period(Period t) const {
  if (!contains(t)) {
    throw DomainError("series '" + data_.series_id + "': period " + std::to_string(t) +
                      " outside forecast range 1.." + std::to_string(last_period()));
  }
}

double ForecastPanel::forecast(std::size_t expert, Period t) const {
  check_period(t);
  return data_.forecasts.at(expert)[static_cast<std::size_t>(t - 1)];
}

std::vector<double> ForecastPanel::forecasts_at(Period t) const {
  check_period(t);
  std::vector<double> out;
  out.reserve(expert_count());
  for (const auto &row : data_.forecasts) {
    out.push_back(row[static_cast<std::size_t>(t - 1)]);
  }
  return out;
}

double ForecastPanel::actual(Period t) const {
  check_period(t);
  return data_.actuals[static_cast<std::size_t>(t - 1)];
}

Period ForecastPanel::last_observed_period() const {
  Period last = 0;
  for (Period t = 1; t <= last_period(); ++t) {
    if (has_actual(t)) {
      last = t;
    }
  }
  return last;
}

std::size_t ForecastPanel::missing_count() const {
  std::size_t n = 0;
  for (const auto &row : data_.forecasts) {
    n += static_cast<std::size_t>(std::count_if(row.begin(), row.end(), is_missing));
  }
  return n;
}

PoolSnapshot snapshot_pool(const ForecastPanel &panel, Period t, int window) {
  if (window < 1) {
    throw DomainError("snapshot_pool: window length must be >= 1");
  }
  if (!panel.contains(t)) {
    throw DomainError("snapshot_pool: period " + std::to_string(t) + " outside forecast range of '" +
                      panel.series_id() + "'");
  }
  PoolSnapshot snap;
  snap.period = t;
  const Period from = std::max<Period>(1, t - window);
  for (std::size_t i = 0; i < panel.expert_count(); ++i) {
    if (!panel.has_forecast(i, t)) {
      continue;
    }
    snap.active_experts.push_back(i);
    for (Period tau = from; tau < t; ++tau) {
      if (panel.has_forecast(i, tau)) {
        snap.window_experts.push_back(i);
        break;
      }
    }
  }
  return snap;
}

namespace {

Period parse_period(const std::string &s, const std::string &locator) {
  Period p = 0;
  const auto *end = s.data() + s.size();
  const auto res = std::from_chars(s.data(), end, p);
  if (s.empty() || res.ec != std::errc() || res.ptr != end) {
    throw InputError(locator + ": period '" + s + "' is not an integer");
  }
  return p;
}

double parse_value(const std::string &s, const std::string &locator) {
  if (s.empty()) {
    return kMissing;
  }
  char *end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size()) {
    throw InputError(locator + ": value '" + s + "' is not a number");
  }
  if (!std::isfinite(v)) {
    throw InputError(locator + ": non-finite value '" + s + "'");
  }
  return v;
}

std::string locate(const std::string &source, const csv::Row &row) {
  return source + " line " + std::to_string(row.line);
}

const std::string &field(const csv::Row &row, std::size_t col, const std::string &source) {
  if (col >= row.fields.size()) {
    throw InputError(locate(source, row) + ": too few fields");
  }
  return row.fields[col];
}

struct SeriesBuild {
  std::vector<std::string> experts;
  std::map<std::string, std::size_t> expert_index;
  std::map<std::pair<Period, std::size_t>, double> cells;
  std::set<Period> periods;
  std::map<Period, double> actuals;
  std::map<Period, double> insample;
};

std::vector<ForecastPanel> build_panels(const csv::Table &fc, const csv::Table &ac,
                                        const csv::Table &in) {
  const std::string fsrc = "forecasts";
  const std::string asrc = "actuals";
  const std::string isrc = "insample";
  std::map<std::string, SeriesBuild> series;

  {
    const auto cs = fc.column("series_id", fsrc);
    const auto cp = fc.column("period", fsrc);
    const auto ce = fc.column("expert_id", fsrc);
    const auto cv = fc.column("value", fsrc);
    std::set<std::tuple<std::string, Period, std::string>> seen;
    for (const auto &row : fc.rows) {
      const auto loc = locate(fsrc, row);
      const auto &sid = field(row, cs, fsrc);
      const Period t = parse_period(field(row, cp, fsrc), loc);
      const auto &eid = field(row, ce, fsrc);
      const double v = parse_value(field(row, cv, fsrc), loc);
      if (!seen.emplace(sid, t, eid).second) {
        throw InputError(loc + ": duplicate key (" + sid + ", " + std::to_string(t) + ", " + eid + ")");
      }
      auto &sb = series[sid];
      auto [it, inserted] = sb.expert_index.emplace(eid, sb.experts.size());
      if (inserted) {
        sb.experts.push_back(eid);
      }
      sb.periods.insert(t);
      sb.cells[{t, it->second}] = v;
    }
  }

  auto read_values = [&series](const csv::Table &table, const std::string &src, bool is_actual) {
    const auto cs = table.column("series_id", src);
    const auto cp = table.column("period", src);
    const auto cv = table.column("value", src);
    for (const auto &row : table.rows) {
      const auto loc = locate(src, row);
      const auto &sid = field(row, cs, src);
      const Period t = parse_period(field(row, cp, src), loc);
      const double v = parse_value(field(row, cv, src), loc);
      auto it = series.find(sid);
      if (it == series.end()) {
        throw InputError(loc + ": series '" + sid + "' has no forecasts");
      }
      auto &target = is_actual ? it->second.actuals : it->second.insample;
      if (!target.emplace(t, v).second) {
        throw InputError(loc + ": duplicate key (" + sid + ", " + std::to_string(t) + ")");
      }
    }
  };
  read_values(ac, asrc, true);
  read_values(in, isrc, false);

  std::vector<ForecastPanel> panels;
  for (auto &[sid, sb] : series) {
    const std::string where = "series '" + sid + "'";
    if (*sb.periods.begin() != 1) {
      throw InputError(where + ": forecast periods must start at 1");
    }
    const Period last = *sb.periods.rbegin();
    if (static_cast<std::size_t>(last) != sb.periods.size()) {
      throw InputError(where + ": forecast periods must be contiguous from 1");
    }
    PanelData data;
    data.series_id = sid;
    data.experts = sb.experts;
    data.forecasts.assign(sb.experts.size(), std::vector<double>(static_cast<std::size_t>(last), kMissing));
    for (const auto &[key, v] : sb.cells) {
      data.forecasts[key.second][static_cast<std::size_t>(key.first - 1)] = v;
    }
    data.actuals.assign(static_cast<std::size_t>(last), kMissing);
    for (const auto &[t, v] : sb.actuals) {
      if (t < 1 || t > last) {
        throw InputError(where + ": actual at period " + std::to_string(t) + " outside forecast range");
      }
      data.actuals[static_cast<std::size_t>(t - 1)] = v;
    }
    if (sb.insample.empty()) {
      throw InputError(where + ": empty in-sample history");
    }
    if (sb.insample.rbegin()->first != 0) {
      throw InputError(where + ": in-sample history must end at period 0");
    }
    Period expect = sb.insample.begin()->first;
    for (const auto &[t, v] : sb.insample) {
      if (t != expect++) {
        throw InputError(where + ": in-sample periods must be contiguous");
      }
      if (is_missing(v)) {
        throw InputError(where + ": missing in-sample value at period " + std::to_string(t));
      }
      data.insample.push_back(v);
    }
    panels.emplace_back(std::move(data));
  }
  return panels;
}

} // namespace

std::vector<ForecastPanel> load_panels(std::istream &forecasts, std::istream &actuals,
                                       std::istream &insample) {
  return build_panels(csv::read(forecasts), csv::read(actuals), csv::read(insample));
}

std::vector<ForecastPanel> load_panels(const std::string &forecasts_csv, const std::string &actuals_csv,
                                       const std::string &insample_csv) {
  auto open = [](const std::string &path) {
    std::ifstream in(path);
    if (!in) {
      throw InputError("cannot open '" + path + "'");
    }
    return in;
  };
  auto f = open(forecasts_csv);
  auto a = open(actuals_csv);
  auto i = open(insample_csv);
  return load_panels(f, a, i);
}

void write_panels(std::span<const ForecastPanel> panels, const std::string &forecasts_csv,
                  const std::string &actuals_csv, const std::string &insample_csv) {
  std::ofstream f(forecasts_csv);
  std::ofstream a(actuals_csv);
  std::ofstream in(insample_csv);
  if (!f || !a || !in) {
    throw Error("cannot open output files for writing panels");
  }
  csv::write_row(f, {"series_id", "period", "expert_id", "value"});
  csv::write_row(a, {"series_id", "period", "value"});
  csv::write_row(in, {"series_id", "period", "value"});
  for (const auto &p : panels) {
    // Expert-major order keeps the expert order on reload.
    for (std::size_t i = 0; i < p.expert_count(); ++i) {
      for (Period t = 1; t <= p.last_period(); ++t) {
        if (p.has_forecast(i, t)) {
          csv::write_row(f, {p.series_id(), std::to_string(t), p.experts()[i],
                             csv::format_double(p.forecast(i, t))});
        }
      }
    }
    for (Period t = 1; t <= p.last_period(); ++t) {
      if (p.has_actual(t)) {
        csv::write_row(a, {p.series_id(), std::to_string(t), csv::format_double(p.actual(t))});
      }
    }
    const auto hist = p.insample();
    const Period first = -static_cast<Period>(hist.size()) + 1;
    for (std::size_t j = 0; j < hist.size(); ++j) {
      csv::write_row(in, {p.series_id(), std::to_string(first + static_cast<Period>(j)),
                          csv::format_double(hist[j])});
    }
  }
}

std::vector<double> synthetic_error_sd(std::size_t k, const SyntheticConfig &cfg) {
  if (!cfg.error_sd.empty()) {
    if (cfg.error_sd.size() != k) {
      throw DomainError("generate_synthetic: error_sd length must equal k");
    }
    return cfg.error_sd;
  }
  std::vector<double> sd(k);
  for (std::size_t i = 0; i < k; ++i) {
    sd[i] = k == 1 ? 1.0 : 0.5 + 1.5 * static_cast<double>(i) / static_cast<double>(k - 1);
  }
  return sd;
}

ForecastPanel generate_synthetic(std::size_t k, int periods, const SyntheticConfig &cfg) {
  if (k < 2 || periods < 2) {
    throw DomainError("generate_synthetic: need k >= 2 and at least 2 periods");
  }
  if (!(cfg.rho >= 0.0 && cfg.rho < 1.0)) {
    throw DomainError("generate_synthetic: rho must lie in [0, 1)");
  }
  if (!(cfg.missing_rate >= 0.0 && cfg.missing_rate < 1.0)) {
    throw DomainError("generate_synthetic: missing_rate must lie in [0, 1)");
  }
  if (cfg.insample_length < 2) {
    throw DomainError("generate_synthetic: insample_length must be >= 2");
  }
  const auto sd = synthetic_error_sd(k, cfg);
  for (double s : sd) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      throw DomainError("generate_synthetic: error sds must be positive");
    }
  }

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  PanelData d;
  d.series_id = cfg.series_id;
  for (std::size_t i = 0; i < k; ++i) {
    d.experts.push_back("E" + std::to_string(i + 1));
  }
  const auto n = static_cast<std::size_t>(periods);
  double y = cfg.level;
  for (int j = 0; j < cfg.insample_length; ++j) {
    y += cfg.step_sd * normal(rng);
    d.insample.push_back(y);
  }
  d.actuals.resize(n);
  d.forecasts.assign(k, std::vector<double>(n, kMissing));
  const double a = std::sqrt(cfg.rho);
  const double b = std::sqrt(1.0 - cfg.rho);
  for (std::size_t t = 0; t < n; ++t) {
    y += cfg.step_sd * normal(rng);
    d.actuals[t] = y;
    const double common = normal(rng);
    for (std::size_t i = 0; i < k; ++i) {
      const double e = sd[i] * (a * common + b * normal(rng));
      d.forecasts[i][t] = y + e;
    }
  }
  if (cfg.missing_rate > 0.0) {
    std::uniform_int_distribution<std::size_t> pick(0, k - 1);
    for (std::size_t t = 0; t < n; ++t) {
      std::vector<double> keep(k);
      bool any = false;
      for (std::size_t i = 0; i < k; ++i) {
        keep[i] = d.forecasts[i][t];
        if (unif(rng) < cfg.missing_rate) {
          d.forecasts[i][t] = kMissing;
        } else {
          any = true;
        }
      }
      if (!any) {
        const auto i = pick(rng);
        d.forecasts[i][t] = keep[i];
      }
    }
  }
  return ForecastPanel(std::move(d));
}

} // namespace refcast
