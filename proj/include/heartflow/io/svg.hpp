#pragma once

#include <string>
#include <vector>

namespace heartflow::io::svg {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct Plot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  int width = 760;
  int height = 440;
};

/// Line chart with axes, ticks and a legend. Non-finite samples break the
/// line. Output depends only on the data, so reruns are byte-identical.
std::string render(const Plot& plot);
void write(const std::string& path, const Plot& plot);

}  // namespace heartflow::io::svg
