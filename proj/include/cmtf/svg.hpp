#pragma once

// Minimal static boxplot rendering. Boxes span the quartiles, whiskers the
// extreme values within 1.5 IQR; outliers are not drawn.

#include <optional>
#include <string>
#include <vector>

namespace cmtf::svg {

struct BoxStats {
  double q1 = 0, median = 0, q3 = 0;
  double whisker_lo = 0, whisker_hi = 0;
  int count = 0;
};

/// Quartiles by linear interpolation. Non-finite values are dropped; an
/// empty input gives count = 0.
BoxStats box_stats(std::vector<double> values);

struct BoxSeries {
  std::string label;
  std::vector<std::vector<double>> groups;  // one sample per category
};

struct BoxPanel {
  std::string title;
  std::string y_label;
  std::vector<std::string> categories;
  std::vector<BoxSeries> series;
  bool log_y = true;
  std::optional<double> reference_line;
};

/// Panels stacked vertically in one document.
std::string render_boxplots(const std::vector<BoxPanel>& panels);

}  // namespace cmtf::svg
