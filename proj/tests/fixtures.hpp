#pragma once

#include <string>
#include <vector>

#include "refcast/panel.hpp"

namespace fixture {

/// Panel from a dense forecast matrix (rows are experts); NaN marks missing.
inline refcast::ForecastPanel panel(std::vector<std::vector<double>> forecasts, std::vector<double> actuals,
                                    std::vector<double> insample = {1.0, 2.0, 3.0},
                                    const std::string &id = "s1") {
  refcast::PanelData d;
  d.series_id = id;
  for (std::size_t i = 0; i < forecasts.size(); ++i) d.experts.push_back("e" + std::to_string(i + 1));
  d.forecasts = std::move(forecasts);
  d.actuals = std::move(actuals);
  d.insample = std::move(insample);
  return refcast::ForecastPanel(std::move(d));
}

inline constexpr double NA = refcast::kMissing;

} // namespace fixture
