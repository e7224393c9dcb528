/*
 * Copyright 2026 The hsseg Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <fstream>
#include <sstream>

#include "hsseg/error.hpp"
#include "hsseg/stats.hpp"

namespace hsseg {

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

constexpr double kWidth = 640.0;
constexpr double kAxisLeft = 180.0;
constexpr double kAxisRight = 460.0;
constexpr double kAxisY = 60.0;
constexpr double kRowGap = 22.0;

}  // namespace

// Rank 1 sits at the left end of the axis. The better half of the methods is
// labelled on the left, the rest on the right with the worst on the top row,
// so connector lines never cross. Clique bars are drawn just below the axis.
std::string cd_svg(const CdModel& model) {
  const std::size_t k = model.methods.size();
  if (k < 2 || model.avg_ranks.size() != k) throw ValidationError("cd_svg: invalid model");
  const auto x_of = [&](double rank) {
    return kAxisLeft + (rank - 1.0) / static_cast<double>(k - 1) * (kAxisRight - kAxisLeft);
  };
  const std::vector<std::size_t> order = rank_order(model);
  const std::size_t left = (k + 1) / 2;
  const double first_row = kAxisY + 20.0 + 8.0 * static_cast<double>(model.cliques.size());
  const double height = first_row + kRowGap * static_cast<double>(left) + 10.0;

  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << fixed(kWidth)
     << "\" height=\"" << fixed(height) << "\" viewBox=\"0 0 " << fixed(kWidth) << ' '
     << fixed(height) << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect x=\"0\" y=\"0\" width=\"" << fixed(kWidth) << "\" height=\"" << fixed(height)
     << "\" fill=\"white\"/>\n";
  os << "<line class=\"axis\" x1=\"" << fixed(kAxisLeft) << "\" y1=\"" << fixed(kAxisY)
     << "\" x2=\"" << fixed(kAxisRight) << "\" y2=\"" << fixed(kAxisY)
     << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
  for (std::size_t r = 1; r <= k; ++r) {
    const double x = x_of(static_cast<double>(r));
    os << "<line class=\"tick\" x1=\"" << fixed(x) << "\" y1=\"" << fixed(kAxisY - 6.0)
       << "\" x2=\"" << fixed(x) << "\" y2=\"" << fixed(kAxisY) << "\" stroke=\"black\"/>\n";
    os << "<text class=\"tick-label\" x=\"" << fixed(x) << "\" y=\"" << fixed(kAxisY - 10.0)
       << "\" text-anchor=\"middle\">" << r << "</text>\n";
  }
  for (std::size_t c = 0; c < model.cliques.size(); ++c) {
    double lo = 1e300, hi = -1e300;
    for (std::size_t m : model.cliques[c]) {
      lo = std::min(lo, model.avg_ranks[m]);
      hi = std::max(hi, model.avg_ranks[m]);
    }
    const double y = kAxisY + 10.0 + 8.0 * static_cast<double>(c);
    os << "<line class=\"clique\" x1=\"" << fixed(x_of(lo) - 4.0) << "\" y1=\"" << fixed(y)
       << "\" x2=\"" << fixed(x_of(hi) + 4.0) << "\" y2=\"" << fixed(y)
       << "\" stroke=\"red\" stroke-width=\"3\" stroke-linecap=\"round\"/>\n";
  }
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t m = order[i];
    const double rank = model.avg_ranks[m];
    const double x = x_of(rank);
    const bool on_left = i < left;
    const std::size_t row = on_left ? i : k - 1 - i;
    const double y = first_row + kRowGap * static_cast<double>(row);
    const double end_x = on_left ? kAxisLeft - 20.0 : kAxisRight + 20.0;
    const std::string label = escape_xml(model.methods[m]) + " (" + fixed(rank) + ")";
    os << "<circle class=\"method\" cx=\"" << fixed(x) << "\" cy=\"" << fixed(kAxisY)
       << "\" r=\"3\" fill=\"black\"/>\n";
    os << "<polyline class=\"connector\" points=\"" << fixed(x) << ',' << fixed(kAxisY) << ' '
       << fixed(x) << ',' << fixed(y) << ' ' << fixed(end_x) << ',' << fixed(y)
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    os << "<text class=\"label-" << (on_left ? "left" : "right") << "\" x=\""
       << fixed(on_left ? end_x - 4.0 : end_x + 4.0) << "\" y=\"" << fixed(y + 4.0)
       << "\" text-anchor=\"" << (on_left ? "end" : "start") << "\">" << label << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void render_cd_svg(const CdModel& model, const std::filesystem::path& path) {
  const std::string svg = cd_svg(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write " + path.string());
  out << svg;
  if (!out) throw ValidationError("write failed: " + path.string());
}

}  // namespace hsseg
