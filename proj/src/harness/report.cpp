#include <cstdio>
#include <sstream>

#include "rsub/common/error.hpp"
#include "rsub/common/tensor_file.hpp"
#include "rsub/harness/harness.hpp"

namespace rsub {

namespace {

std::string fmt(double v, const char* spec = "%.6f") {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

}  // namespace

std::string report_csv(const Report& r) {
  std::ostringstream os;
  os << "method,setting,race,rate,bias_score,outcome_delta\n";
  for (const auto& row : r.rows) {
    const auto& m = row.metrics;
    double mean = 0;
    for (int j = 0; j < 4; ++j) {
      os << row.method << ',' << row.setting << ',' << to_string(kAllRaces[j]) << ','
         << fmt(m.rates[j]) << ",,\n";
      mean += m.rates[j] / 4;
    }
    os << row.method << ',' << row.setting << ",all," << fmt(mean) << ',' << fmt(m.bias_score) << ','
       << (m.outcome_delta ? fmt(*m.outcome_delta) : "") << '\n';
  }
  return os.str();
}

std::string report_svg(const Report& r) {
  constexpr int kGroup = 120, kLeft = 70, kTop = 40, kPlot = 240, kBar = 22;
  static const char* kColors[4] = {"#4e79a7", "#f28e2b", "#59a14f", "#e15759"};
  const int width = kLeft + kGroup * static_cast<int>(r.rows.size()) + 130;
  const int height = kTop + kPlot + 70;
  std::ostringstream os;
  os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
     << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
     << "  <text x=\"" << kLeft << "\" y=\"20\" font-size=\"13\">" << xml_escape(r.kind)
     << ": acceptance rate by race</text>\n"
     << "  <text class=\"seed\" x=\"" << width - 10 << "\" y=\"20\" text-anchor=\"end\">panel seed "
     << r.panel_seed << "</text>\n";
  // Axes with ticks every 25 points.
  const int base = kTop + kPlot;
  os << "  <line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << base
     << "\" stroke=\"black\"/>\n"
     << "  <line x1=\"" << kLeft << "\" y1=\"" << base << "\" x2=\"" << width - 130 << "\" y2=\""
     << base << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 100; tick += 25) {
    const int y = base - kPlot * tick / 100;
    os << "  <text x=\"" << kLeft - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << tick
       << "</text>\n";
  }
  os << "  <text x=\"18\" y=\"" << kTop + kPlot / 2 << "\" transform=\"rotate(-90 18 "
     << kTop + kPlot / 2 << ")\" text-anchor=\"middle\">Acceptance rate (%)</text>\n"
     << "  <text x=\"" << kLeft + kGroup * static_cast<int>(r.rows.size()) / 2 << "\" y=\""
     << height - 10 << "\" text-anchor=\"middle\">Method</text>\n";
  for (std::size_t i = 0; i < r.rows.size(); ++i) {
    const auto& row = r.rows[i];
    const int x0 = kLeft + 10 + kGroup * static_cast<int>(i);
    os << "  <g class=\"method\" data-method=\"" << xml_escape(row.method) << "\">\n";
    for (int j = 0; j < 4; ++j) {
      const double h = kPlot * row.metrics.rates[j];
      os << "    <rect x=\"" << x0 + j * (kBar + 2) << "\" y=\"" << fmt(base - h, "%.2f")
         << "\" width=\"" << kBar << "\" height=\"" << fmt(h, "%.2f") << "\" fill=\"" << kColors[j]
         << "\"><title>" << to_string(kAllRaces[j]) << " " << fmt(100 * row.metrics.rates[j], "%.2f")
         << "</title></rect>\n";
    }
    os << "    <text x=\"" << x0 + 2 * (kBar + 2) << "\" y=\"" << base + 16
       << "\" text-anchor=\"middle\">" << xml_escape(row.method) << "</text>\n"
       << "  </g>\n";
  }
  for (int j = 0; j < 4; ++j) {
    const int y = kTop + 16 * j;
    os << "  <rect x=\"" << width - 115 << "\" y=\"" << y << "\" width=\"10\" height=\"10\" fill=\""
       << kColors[j] << "\"/>\n"
       << "  <text x=\"" << width - 100 << "\" y=\"" << y + 9 << "\">" << to_string(kAllRaces[j])
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_report(const Report& r,
                                               const std::vector<std::string>& formats,
                                               const std::filesystem::path& dir,
                                               const std::string& stem) {
  std::vector<std::filesystem::path> written;
  for (const auto& f : formats) {
    std::string body;
    if (f == "json") {
      body = r.to_json().dump(2) + "\n";
    } else if (f == "csv") {
      body = report_csv(r);
    } else if (f == "svg") {
      body = report_svg(r);
    } else {
      fail(ErrorKind::kUsage, "unknown report format '" + f + "' (json, csv, svg)");
    }
    const auto path = dir / (stem + "." + f);
    write_file_atomic(path, body);
    written.push_back(path);
  }
  return written;
}

}  // namespace rsub
