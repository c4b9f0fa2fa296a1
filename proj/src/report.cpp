#include "fordn/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

#include "fordn/errors.hpp"

namespace fordn {

namespace {

std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

double parse_double(const std::string& s) {
  if (s == "nan") return std::nan("");
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  std::size_t used = 0;
  const double v = std::stod(s, &used);
  if (used != s.size()) throw std::invalid_argument("csv: bad number '" + s + "'");
  return v;
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text, const std::string& header) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != header) throw std::invalid_argument("csv: expected header '" + header + "'");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string xml_escape(const std::string& s) {
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

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::vector<ErrorRow> error_rows(const std::map<std::string, ErrorSummary>& summaries) {
  std::vector<ErrorRow> rows;
  for (Region r : kRegions) {
    for (const auto& [method, summary] : summaries) {
      const auto& s = summary.regions.at(r);
      rows.push_back({region_name(r), method, s.mean, s.std, s.count});
    }
  }
  return rows;
}

std::vector<StatsRow> stats_rows(const std::vector<ComparisonRow>& comparisons) {
  std::vector<StatsRow> rows;
  for (const auto& c : comparisons) rows.push_back({c.pair, region_name(c.region), c.stats.t, c.stats.p, c.stats.d});
  return rows;
}

std::string format_errors_csv(const std::vector<ErrorRow>& rows) {
  std::string out = "region,method,mean,std,n\n";
  for (const auto& r : rows) {
    out += r.region + "," + r.method + "," + fmt_double(r.mean) + "," + fmt_double(r.std) + "," + std::to_string(r.n) + "\n";
  }
  return out;
}

std::string format_stats_csv(const std::vector<StatsRow>& rows) {
  std::string out = "pair,region,t,p,d\n";
  for (const auto& r : rows) {
    out += r.pair + "," + r.region + "," + fmt_double(r.t) + "," + fmt_double(r.p) + "," + fmt_double(r.d) + "\n";
  }
  return out;
}

std::vector<ErrorRow> parse_errors_csv(const std::string& text) {
  std::vector<ErrorRow> rows;
  for (const auto& c : parse_csv(text, "region,method,mean,std,n")) {
    if (c.size() != 5) throw std::invalid_argument("errors.csv: expected 5 columns");
    rows.push_back({c[0], c[1], parse_double(c[2]), parse_double(c[3]), std::stoul(c[4])});
  }
  return rows;
}

std::vector<StatsRow> parse_stats_csv(const std::string& text) {
  std::vector<StatsRow> rows;
  for (const auto& c : parse_csv(text, "pair,region,t,p,d")) {
    if (c.size() != 5) throw std::invalid_argument("stats.csv: expected 5 columns");
    rows.push_back({c[0], c[1], parse_double(c[2]), parse_double(c[3]), parse_double(c[4])});
  }
  return rows;
}

std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<std::string>& categories, const std::vector<std::string>& series,
                            const std::vector<std::vector<double>>& values,
                            const std::vector<std::vector<double>>& errors) {
  static const char* palette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948"};
  const double width = 720, height = 420, left = 70, right = 150, top = 50, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;

  double hi = 0.0, lo = 0.0;
  for (std::size_t s = 0; s < values.size(); ++s) {
    for (std::size_t c = 0; c < values[s].size(); ++c) {
      const double v = values[s][c];
      if (!std::isfinite(v)) continue;
      const double e = errors.empty() ? 0.0 : errors[s][c];
      hi = std::max(hi, v + (std::isfinite(e) ? e : 0.0));
      lo = std::min(lo, v);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const double span = (hi - lo) * 1.1;
  auto ypos = [&](double v) { return top + plot_h * (1.0 - (v - lo) / span); };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << " " << height << "\">\n"
      << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"25\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n"
      << "<text x=\"18\" y=\"" << top + plot_h / 2 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
      << "transform=\"rotate(-90 18 " << top + plot_h / 2 << ")\">" << xml_escape(y_label) << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << ypos(0.0) << "\" x2=\"" << left + plot_w << "\" y2=\"" << ypos(0.0)
      << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int tick = 0; tick <= 5; ++tick) {
    const double v = lo + span * tick / 5.0;
    char label[32];
    std::snprintf(label, sizeof(label), "%.2f", v);
    svg << "<text x=\"" << left - 6 << "\" y=\"" << ypos(v) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
        << "font-size=\"10\">" << label << "</text>\n";
  }

  const double group_w = plot_w / static_cast<double>(std::max<std::size_t>(categories.size(), 1));
  const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(series.size(), 1));
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = left + group_w * static_cast<double>(c);
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = values[s][c];
      if (!std::isfinite(v)) continue;
      const double x = gx + group_w * 0.1 + bar_w * static_cast<double>(s);
      const double y0 = ypos(std::max(v, 0.0));
      const double h = std::abs(ypos(v) - ypos(0.0));
      svg << "<rect x=\"" << x << "\" y=\"" << y0 << "\" width=\"" << bar_w * 0.95 << "\" height=\"" << h
          << "\" fill=\"" << palette[s % 6] << "\"/>\n";
      if (!errors.empty() && std::isfinite(errors[s][c])) {
        const double cx = x + bar_w * 0.475;
        svg << "<line x1=\"" << cx << "\" y1=\"" << ypos(v + errors[s][c]) << "\" x2=\"" << cx << "\" y2=\""
            << ypos(std::max(lo, v - errors[s][c])) << "\" stroke=\"black\"/>\n";
      }
    }
    svg << "<text x=\"" << gx + group_w / 2 << "\" y=\"" << top + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">" << xml_escape(categories[c])
        << "</text>\n";
  }
  for (std::size_t s = 0; s < series.size(); ++s) {
    const double ly = top + 20.0 * static_cast<double>(s);
    svg << "<rect x=\"" << left + plot_w + 20 << "\" y=\"" << ly << "\" width=\"12\" height=\"12\" fill=\""
        << palette[s % 6] << "\"/>\n"
        << "<text x=\"" << left + plot_w + 38 << "\" y=\"" << ly + 10 << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(series[s]) << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_report(const std::map<std::string, ErrorSummary>& summaries, const std::vector<ComparisonRow>& comparisons,
                 const std::filesystem::path& out_dir, const std::string& config_hash) {
  if (summaries.empty()) throw std::invalid_argument("emit_report: no error summaries");
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create report directory " + out_dir.string() + ": " + ec.message());

  write_file(out_dir / "errors.csv", format_errors_csv(error_rows(summaries)));
  write_file(out_dir / "stats.csv", format_stats_csv(stats_rows(comparisons)));

  std::vector<std::string> categories;
  for (Region r : kRegions) categories.push_back(region_name(r));

  std::vector<std::string> methods;
  std::vector<std::vector<double>> means, stds;
  for (const auto& [method, summary] : summaries) {
    methods.push_back(method);
    std::vector<double> m, s;
    for (Region r : kRegions) {
      m.push_back(summary.regions.at(r).mean);
      s.push_back(summary.regions.at(r).std);
    }
    means.push_back(std::move(m));
    stds.push_back(std::move(s));
  }
  write_file(out_dir / "errors.svg",
             grouped_bar_svg(std::string("FO error (") + kErrorMetricName + ")", "error (degrees)", categories, methods,
                             means, stds));

  std::vector<std::string> pairs;
  for (const auto& c : comparisons) {
    if (std::find(pairs.begin(), pairs.end(), c.pair) == pairs.end()) pairs.push_back(c.pair);
  }
  std::vector<std::vector<double>> effect(pairs.size(), std::vector<double>(categories.size(), std::nan("")));
  for (const auto& c : comparisons) {
    const auto s = static_cast<std::size_t>(std::find(pairs.begin(), pairs.end(), c.pair) - pairs.begin());
    effect[s][static_cast<std::size_t>(c.region)] = c.stats.d;
  }
  write_file(out_dir / "effect_sizes.svg", grouped_bar_svg("Effect size (Cohen's d)", "d", categories, pairs, effect));

  nlohmann::ordered_json meta;
  meta["metric"] = kErrorMetricName;
  meta["config_hash"] = config_hash;
  meta["methods"] = methods;
  meta["pairs"] = pairs;
  meta["code_version"] = FORDN_VERSION;
  write_file(out_dir / "report.json", meta.dump(2) + "\n");
}

}  // namespace fordn
