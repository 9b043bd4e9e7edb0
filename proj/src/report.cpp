/*  Copyright 2026 The rankmin Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.  */

#include "rankmin/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "rankmin/io.hpp"

namespace rankmin {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

}  // namespace

double PlotGeometry::py(double y) const {
  return margin + (-std::log10(y)) / (-log_y_min) * height;
}

double PlotGeometry::radius(double area) const {
  return std::sqrt(area / M_PI) * unit_radius;
}

std::vector<ButtonCircle> button_merge(const std::vector<ButtonPoint>& points,
                                       const PlotGeometry& geom) {
  std::vector<ButtonCircle> circles;
  circles.reserve(points.size());
  for (const auto& p : points) {
    if (!(p.area > 0) || !(p.y > 0))
      throw DomainError("button_merge: areas and y values must be positive");
    circles.push_back({p.x, p.y, p.area});
  }
  while (circles.size() > 1) {
    // deepest visual overlap first; ties resolved by index order
    std::size_t best_i = 0, best_j = 0;
    double best_depth = 0;
    for (std::size_t i = 0; i + 1 < circles.size(); ++i) {
      for (std::size_t j = i + 1; j < circles.size(); ++j) {
        const double dx = geom.px(circles[i].x) - geom.px(circles[j].x);
        const double dy = geom.py(circles[i].y) - geom.py(circles[j].y);
        const double dist = std::hypot(dx, dy);
        const double depth =
            geom.radius(circles[i].area) + geom.radius(circles[j].area) - dist;
        if (depth > best_depth) {
          best_depth = depth;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_depth <= 0) break;
    const ButtonCircle a = circles[best_i];
    const ButtonCircle b = circles[best_j];
    const double s = a.area + b.area;
    ButtonCircle merged;
    merged.x = (a.area * a.x + b.area * b.x) / s;
    merged.y =
        std::exp((a.area * std::log(a.y) + b.area * std::log(b.y)) / s);
    merged.area = s;
    circles[best_i] = merged;
    circles.erase(circles.begin() + static_cast<std::ptrdiff_t>(best_j));
  }
  return circles;
}

Chart emit_bar(const std::vector<TrialOutcome>& outcomes) {
  int k_upper = 0;
  for (const auto& o : outcomes) k_upper = std::max(k_upper, o.k);
  std::vector<long> success(static_cast<std::size_t>(k_upper) + 1, 0);
  std::vector<long> improvement(static_cast<std::size_t>(k_upper) + 1, 0);
  long fails = 0;
  for (const auto& o : outcomes) {
    if (o.k < 0) {
      ++fails;
    } else if (o.category == Category::Success) {
      ++success[static_cast<std::size_t>(o.k)];
    } else {
      ++improvement[static_cast<std::size_t>(o.k)];
    }
  }

  Chart chart;
  chart.csv = "label,success,improvement,fail\n";
  for (int k = 0; k <= k_upper; ++k) {
    chart.csv += "k" + std::to_string(k) + "," +
                 std::to_string(success[static_cast<std::size_t>(k)]) + "," +
                 std::to_string(improvement[static_cast<std::size_t>(k)]) +
                 ",0\n";
  }
  chart.csv += "fail,0,0," + std::to_string(fails) + "\n";

  long peak = std::max(fails, 1L);
  for (int k = 0; k <= k_upper; ++k)
    peak = std::max({peak, success[static_cast<std::size_t>(k)],
                     improvement[static_cast<std::size_t>(k)]});

  const double margin = 40, slot = 36, bar_w = 24, half = 150;
  const double width = margin * 2 + slot * static_cast<double>(k_upper + 2);
  const double height = margin * 2 + 2 * half;
  const double axis_y = margin + half;
  const double scale = half / static_cast<double>(peak);

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
       "\" height=\"" + num(height) + "\">\n";
  s += "<line x1=\"" + num(margin / 2) + "\" y1=\"" + num(axis_y) +
       "\" x2=\"" + num(width - margin / 2) + "\" y2=\"" + num(axis_y) +
       "\" stroke=\"black\"/>\n";
  const auto bar = [&](int slot_idx, long count, bool below,
                       const char* color) {
    if (count == 0) return;
    const double h = scale * static_cast<double>(count);
    const double x = margin + slot * slot_idx + (slot - bar_w) / 2;
    const double y = below ? axis_y : axis_y - h;
    s += "<rect x=\"" + num(x) + "\" y=\"" + num(y) + "\" width=\"" +
         num(bar_w) + "\" height=\"" + num(h) + "\" fill=\"" + color +
         "\"/>\n";
    const double label_y = below ? y + h + 12 : y - 4;
    s += "<text x=\"" + num(x + bar_w / 2) + "\" y=\"" + num(label_y) +
         "\" font-size=\"10\" text-anchor=\"middle\">" +
         std::to_string(count) + "</text>\n";
  };
  for (int k = 0; k <= k_upper; ++k) {
    bar(k, success[static_cast<std::size_t>(k)], false, "#2a7f3f");
    bar(k, improvement[static_cast<std::size_t>(k)], true, "#2a4f7f");
    const double x = margin + slot * k + slot / 2;
    s += "<text x=\"" + num(x) + "\" y=\"" + num(height - margin / 4) +
         "\" font-size=\"10\" text-anchor=\"middle\">k=" + std::to_string(k) +
         "</text>\n";
  }
  bar(k_upper + 1, fails, false, "#a03030");
  s += "<text x=\"" + num(margin + slot * (k_upper + 1) + slot / 2) +
       "\" y=\"" + num(height - margin / 4) +
       "\" font-size=\"10\" text-anchor=\"middle\">fail</text>\n";
  s += "</svg>\n";
  chart.svg = std::move(s);
  return chart;
}

Chart emit_button(const std::vector<TrialOutcome>& outcomes,
                  const PlotGeometry& geom) {
  std::vector<ButtonPoint> points;
  points.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    ButtonPoint p;
    p.x = std::max(geom.x_min, std::min(o.Q, geom.x_max));
    p.y = std::max(std::pow(10.0, geom.log_y_min), std::min(o.error_rel, 1.0));
    p.area = 1.0;
    points.push_back(p);
  }
  const std::vector<ButtonCircle> circles = button_merge(points, geom);

  Chart chart;
  chart.csv = "x,y,area\n";
  for (const auto& c : circles)
    chart.csv += format_double(c.x) + "," + format_double(c.y) + "," +
                 format_double(c.area) + "\n";

  const double width = geom.width + 2 * geom.margin;
  const double height = geom.height + 2 * geom.margin;
  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(width) +
       "\" height=\"" + num(height) + "\">\n";
  // frame
  s += "<rect x=\"" + num(geom.margin) + "\" y=\"" + num(geom.margin) +
       "\" width=\"" + num(geom.width) + "\" height=\"" + num(geom.height) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double x : {0.9, 0.95, 1.0, 1.05}) {
    s += "<text x=\"" + num(geom.px(x)) + "\" y=\"" +
         num(geom.margin + geom.height + 16) +
         "\" font-size=\"10\" text-anchor=\"middle\">" + num(x) +
         "</text>\n";
  }
  for (int e = 0; e >= -16; e -= 4) {
    const double y = std::pow(10.0, e);
    s += "<text x=\"" + num(geom.margin - 6) + "\" y=\"" +
         num(geom.py(y) + 3) +
         "\" font-size=\"10\" text-anchor=\"end\">1e" + std::to_string(e) +
         "</text>\n";
  }
  for (const auto& c : circles) {
    s += "<circle cx=\"" + num(geom.px(c.x)) + "\" cy=\"" + num(geom.py(c.y)) +
         "\" r=\"" + num(geom.radius(c.area)) +
         "\" fill=\"#2a4f7f\" fill-opacity=\"0.45\" stroke=\"#2a4f7f\"/>\n";
  }
  for (const auto& c : circles) {
    const double cx = geom.px(c.x), cy = geom.py(c.y), arm = 3;
    s += "<line x1=\"" + num(cx - arm) + "\" y1=\"" + num(cy) + "\" x2=\"" +
         num(cx + arm) + "\" y2=\"" + num(cy) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
    s += "<line x1=\"" + num(cx) + "\" y1=\"" + num(cy - arm) + "\" x2=\"" +
         num(cx) + "\" y2=\"" + num(cy + arm) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  }
  s += "</svg>\n";
  chart.svg = std::move(s);
  return chart;
}

}  // namespace rankmin
