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

#pragma once

#include <string>
#include <vector>

#include "rankmin/harness.hpp"

namespace rankmin {

struct ButtonPoint {
  double x = 0;     // clipped quotient, in [0.9, 1.05]
  double y = 0;     // clipped relative error, in [1e-16, 1]
  double area = 1;  // marker area, conserved under merging
};

struct ButtonCircle {
  double x = 0;
  double y = 0;
  double area = 0;
};

// Pinned canvas for the button plot: x linear on [0.9, 1.05], y log on
// [1e-16, 1], radius = sqrt(area/pi) * unit_radius pixels. Overlap is tested
// in these rendered coordinates.
struct PlotGeometry {
  double width = 600;
  double height = 400;
  double margin = 60;
  double unit_radius = 6;
  double x_min = 0.9, x_max = 1.05;
  double log_y_min = -16;  // log10 of the y floor

  double px(double x) const {
    return margin + (x - x_min) / (x_max - x_min) * width;
  }
  double py(double y) const;
  double radius(double area) const;
};

// Recursively combine visually overlapping circles: area-weighted arithmetic
// mean in x, geometric mean in y, total area conserved. Deterministic.
std::vector<ButtonCircle> button_merge(const std::vector<ButtonPoint>& points,
                                       const PlotGeometry& geom = {});

struct Chart {
  std::string svg;
  std::string csv;
};

// Sensitivity bar chart: per-index success counts above the axis,
// improvement counts below it, plus one bar for all failures. The CSV
// mirrors the plotted counts exactly.
Chart emit_bar(const std::vector<TrialOutcome>& outcomes);

// Button plot of (Q, relative error) pairs with the clipping rules
// x = clamp(Q, 0.9, 1.05) and y = clamp(error, 1e-16, 1); merged circle
// centers are drawn as crosses. The CSV lists the merged circles.
Chart emit_button(const std::vector<TrialOutcome>& outcomes,
                  const PlotGeometry& geom = {});

}  // namespace rankmin
