#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "fordn/eval.hpp"

namespace fordn {

struct ErrorRow {
  std::string region;
  std::string method;
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
  friend bool operator==(const ErrorRow&, const ErrorRow&) = default;
};

struct StatsRow {
  std::string pair;
  std::string region;
  double t = 0.0;
  double p = 0.0;
  double d = 0.0;
  friend bool operator==(const StatsRow&, const StatsRow&) = default;
};

std::vector<ErrorRow> error_rows(const std::map<std::string, ErrorSummary>& summaries);
std::vector<StatsRow> stats_rows(const std::vector<ComparisonRow>& comparisons);

std::string format_errors_csv(const std::vector<ErrorRow>& rows);
std::string format_stats_csv(const std::vector<StatsRow>& rows);
std::vector<ErrorRow> parse_errors_csv(const std::string& text);
std::vector<StatsRow> parse_stats_csv(const std::string& text);

/// Static grouped bar chart: one group per category, one bar per series.
/// `errors` (same shape as values) draws +-1 error bars when nonempty.
std::string grouped_bar_svg(const std::string& title, const std::string& y_label,
                            const std::vector<std::string>& categories, const std::vector<std::string>& series,
                            const std::vector<std::vector<double>>& values,
                            const std::vector<std::vector<double>>& errors = {});

/// Writes errors.csv, stats.csv, errors.svg, effect_sizes.svg and report.json
/// into `out_dir`. Throws IoError when the directory cannot be written.
void emit_report(const std::map<std::string, ErrorSummary>& summaries, const std::vector<ComparisonRow>& comparisons,
                 const std::filesystem::path& out_dir, const std::string& config_hash);

}  // namespace fordn
