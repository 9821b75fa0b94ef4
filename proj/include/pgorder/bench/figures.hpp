#pragma once

#include <array>
#include <cmath>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pgorder/bench/report.hpp"
#include "pgorder/fs.hpp"
#include "pgorder/training/fit.hpp"

namespace pgo {

inline constexpr const char* kFig1File = "fig1_grouped_bars.csv";
inline constexpr const char* kFig2File = "fig2_short_vs_long.csv";
inline constexpr const char* kFig3File = "fig3_pe_ablation.csv";
inline constexpr const char* kFig4File = "fig4_training_dynamics.csv";

inline constexpr std::array<const char*, 3> kPeVariantNames{"learned", "sinusoidal", "none"};

struct ShortLongPoint {
  std::string id;
  std::string model;
  std::optional<double> tau_short;
  std::optional<double> tau_long;
  std::optional<bool> below_diagonal;  // tau_long < tau_short

  friend bool operator==(const ShortLongPoint&, const ShortLongPoint&) = default;
};

struct AblationRow {
  std::string variant;
  std::array<std::optional<double>, 5> tau{};
  double overall = 0.0;
  std::array<std::optional<double>, 5> relative{};  // (tau − tau_learned) / |tau_learned|
  std::optional<double> relative_overall;

  friend bool operator==(const AblationRow&, const AblationRow&) = default;
};

struct TrainingDynamics {
  std::vector<int> epochs;
  std::map<std::string, std::vector<std::optional<double>>> series;  // variant → one value per epoch

  friend bool operator==(const TrainingDynamics&, const TrainingDynamics&) = default;
};

namespace detail {

inline std::optional<double> relative_to(const std::optional<double>& v, const std::optional<double>& base) {
  if (!v || !base || *base == 0.0) return std::nullopt;
  return (*v - *base) / std::abs(*base);
}

inline std::vector<std::string> data_lines(std::istream& is, const std::string& header) {
  std::vector<std::string> lines;
  std::string line;
  std::size_t line_no = 0;
  bool seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (!seen) {
      if (line != header) throw ParseError("unexpected header", line_no);
      seen = true;
      continue;
    }
    lines.push_back(line);
  }
  if (!seen) throw ParseError("missing header", line_no);
  return lines;
}

inline std::string bucket_columns(const std::string& prefix) {
  std::string s;
  for (auto b : kAllBuckets) s += "," + prefix + bucket_suffix(b);
  return s;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// fig1: tau by method and length range

inline std::string fig1_header() {
  return "id,model" + detail::bucket_columns("tau_") + ",overall,params" + detail::bucket_columns("docs_");
}

inline std::string fig1_csv(const EvalReport& report) {
  std::ostringstream os;
  os << fig1_header() << '\n';
  for (const auto& row : report.rows) {
    std::vector<std::string> f{row.id, row.model};
    for (const auto& t : row.tau) f.push_back(csv::optional_number(t));
    f.push_back(csv::number(row.overall));
    f.push_back(std::to_string(row.params));
    for (auto d : row.docs) f.push_back(std::to_string(d));
    os << csv::join(f) << '\n';
  }
  return os.str();
}

/// Rows as plotted; annotations are restored from the published table by id.
inline std::vector<ReportRow> read_fig1(std::istream& is) {
  std::vector<ReportRow> rows;
  for (const auto& line : detail::data_lines(is, fig1_header())) {
    const auto f = csv::split(line);
    if (f.size() != 14) throw FormatError("fig1: expected 14 fields");
    ReportRow row;
    row.id = f[0];
    row.model = f[1];
    for (std::size_t b = 0; b < 5; ++b) row.tau[b] = csv::parse_optional(f[2 + b]);
    row.overall = csv::parse_number(f[7]);
    row.params = detail::parse_integer<std::size_t>(f[8]);
    for (std::size_t b = 0; b < 5; ++b) row.docs[b] = detail::parse_integer<std::size_t>(f[9 + b]);
    const std::string display = row.model;
    annotate_row(row);
    row.model = display;
    rows.push_back(std::move(row));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// fig2: short (2–5) against long (21–25)

inline std::vector<ShortLongPoint> short_long_points(const EvalReport& report) {
  std::vector<ShortLongPoint> pts;
  for (const auto& row : report.rows) {
    ShortLongPoint p{row.id, row.model, row.tau.front(), row.tau.back(), std::nullopt};
    if (p.tau_short && p.tau_long) p.below_diagonal = *p.tau_long < *p.tau_short;
    pts.push_back(std::move(p));
  }
  return pts;
}

inline std::string fig2_header() { return "id,model,tau_short,tau_long,below_diagonal"; }

inline std::string fig2_csv(const EvalReport& report) {
  std::ostringstream os;
  os << fig2_header() << '\n';
  for (const auto& p : short_long_points(report)) {
    os << csv::join({p.id, p.model, csv::optional_number(p.tau_short), csv::optional_number(p.tau_long),
                     p.below_diagonal ? (*p.below_diagonal ? "1" : "0") : ""})
       << '\n';
  }
  return os.str();
}

inline std::vector<ShortLongPoint> read_fig2(std::istream& is) {
  std::vector<ShortLongPoint> pts;
  for (const auto& line : detail::data_lines(is, fig2_header())) {
    const auto f = csv::split(line);
    if (f.size() != 5) throw FormatError("fig2: expected 5 fields");
    ShortLongPoint p{f[0], f[1], csv::parse_optional(f[2]), csv::parse_optional(f[3]), std::nullopt};
    if (f[4] == "1") p.below_diagonal = true;
    else if (f[4] == "0") p.below_diagonal = false;
    else if (!f[4].empty()) throw FormatError("fig2: below_diagonal must be 0, 1 or empty");
    pts.push_back(std::move(p));
  }
  return pts;
}

// ---------------------------------------------------------------------------
// fig3: positional-encoding ablation

inline std::vector<AblationRow> ablation_rows(const EvalReport& report) {
  const auto* learned = report.find("seq2seq_learned");
  std::vector<AblationRow> rows;
  for (const char* v : kPeVariantNames) {
    const auto* row = report.find(std::string("seq2seq_") + v);
    if (!row) continue;
    AblationRow a;
    a.variant = v;
    a.tau = row->tau;
    a.overall = row->overall;
    if (row == learned) {
      for (std::size_t b = 0; b < 5; ++b) {
        if (a.tau[b]) a.relative[b] = 0.0;
      }
      a.relative_overall = 0.0;
    } else if (learned) {
      for (std::size_t b = 0; b < 5; ++b) a.relative[b] = detail::relative_to(a.tau[b], learned->tau[b]);
      a.relative_overall = detail::relative_to(a.overall, learned->overall);
    }
    rows.push_back(std::move(a));
  }
  return rows;
}

inline std::string fig3_header() {
  return "variant" + detail::bucket_columns("tau_") + ",overall" + detail::bucket_columns("rel_") + ",rel_overall";
}

inline std::string fig3_csv(const EvalReport& report) {
  std::ostringstream os;
  os << fig3_header() << '\n';
  for (const auto& a : ablation_rows(report)) {
    std::vector<std::string> f{a.variant};
    for (const auto& t : a.tau) f.push_back(csv::optional_number(t));
    f.push_back(csv::number(a.overall));
    for (const auto& r : a.relative) f.push_back(csv::optional_number(r));
    f.push_back(csv::optional_number(a.relative_overall));
    os << csv::join(f) << '\n';
  }
  return os.str();
}

inline std::vector<AblationRow> read_fig3(std::istream& is) {
  std::vector<AblationRow> rows;
  for (const auto& line : detail::data_lines(is, fig3_header())) {
    const auto f = csv::split(line);
    if (f.size() != 13) throw FormatError("fig3: expected 13 fields");
    AblationRow a;
    a.variant = f[0];
    for (std::size_t b = 0; b < 5; ++b) a.tau[b] = csv::parse_optional(f[1 + b]);
    a.overall = csv::parse_number(f[6]);
    for (std::size_t b = 0; b < 5; ++b) a.relative[b] = csv::parse_optional(f[7 + b]);
    a.relative_overall = csv::parse_optional(f[12]);
    rows.push_back(std::move(a));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// fig4: validation tau per epoch for each positional-encoding variant

inline TrainingDynamics training_dynamics(const std::map<std::string, std::vector<EpochRecord>>& logs) {
  TrainingDynamics d;
  std::map<int, std::map<std::string, double>> table;
  for (const char* v : kPeVariantNames) {
    const auto it = logs.find(std::string("seq2seq_") + v);
    if (it == logs.end()) continue;
    d.series[v];
    for (const auto& rec : it->second) table[rec.epoch][v] = rec.val_tau;
  }
  for (const auto& [epoch, values] : table) {
    d.epochs.push_back(epoch);
    for (auto& [variant, series] : d.series) {
      const auto v = values.find(variant);
      series.push_back(v == values.end() ? std::nullopt : std::optional<double>(v->second));
    }
  }
  return d;
}

inline std::string fig4_header() {
  std::string h = "epoch";
  for (const char* v : kPeVariantNames) h += std::string(",") + v;
  return h;
}

inline std::string fig4_csv(const TrainingDynamics& d) {
  std::ostringstream os;
  os << fig4_header() << '\n';
  for (std::size_t i = 0; i < d.epochs.size(); ++i) {
    std::vector<std::string> f{std::to_string(d.epochs[i])};
    for (const char* v : kPeVariantNames) {
      const auto it = d.series.find(v);
      f.push_back(it == d.series.end() ? "" : csv::optional_number(it->second[i]));
    }
    os << csv::join(f) << '\n';
  }
  return os.str();
}

/// Variants whose column is entirely empty are treated as absent.
inline TrainingDynamics read_fig4(std::istream& is) {
  TrainingDynamics d;
  std::map<std::string, std::vector<std::optional<double>>> columns;
  for (const auto& line : detail::data_lines(is, fig4_header())) {
    const auto f = csv::split(line);
    if (f.size() != 1 + kPeVariantNames.size()) throw FormatError("fig4: wrong field count");
    d.epochs.push_back(std::stoi(f[0]));
    for (std::size_t k = 0; k < kPeVariantNames.size(); ++k) columns[kPeVariantNames[k]].push_back(csv::parse_optional(f[1 + k]));
  }
  for (auto& [variant, values] : columns) {
    bool any = false;
    for (const auto& v : values) any = any || v.has_value();
    if (any) d.series[variant] = std::move(values);
  }
  return d;
}

struct FigurePaths {
  std::filesystem::path fig1, fig2, fig3, fig4;
};

/// Writes the four figure-data files into `out_dir`.
inline FigurePaths emit_figures(const EvalReport& report, const std::map<std::string, std::vector<EpochRecord>>& logs,
                                const std::filesystem::path& out_dir) {
  FigurePaths p{out_dir / kFig1File, out_dir / kFig2File, out_dir / kFig3File, out_dir / kFig4File};
  write_file_atomic(p.fig1, fig1_csv(report));
  write_file_atomic(p.fig2, fig2_csv(report));
  write_file_atomic(p.fig3, fig3_csv(report));
  write_file_atomic(p.fig4, fig4_csv(training_dynamics(logs)));
  return p;
}

}  // namespace pgo
