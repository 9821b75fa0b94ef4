#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pgorder/bench/paper_reference.hpp"
#include "pgorder/corpus/types.hpp"
#include "pgorder/csv.hpp"
#include "pgorder/errors.hpp"

namespace pgo {

/// One configuration's test-set results next to the published numbers.
struct ReportRow {
  std::string id;     // menu identifier, e.g. "pairwise"
  std::string model;  // display name
  std::array<std::optional<double>, 5> tau{};
  double overall = 0.0;
  std::size_t params = 0;
  std::array<std::size_t, 5> docs{};
  std::array<std::optional<double>, 5> paper_tau{};
  std::string paper_params;

  friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

struct ReportMetadata {
  std::string corpus_digest;
  std::uint64_t corpus_seed = 0;
  std::uint64_t split_seed = 0;
  std::uint64_t eval_seed = 0;
  std::uint64_t train_seed = 0;
  int epochs = 0;
  std::string timestamp;

  friend bool operator==(const ReportMetadata&, const ReportMetadata&) = default;
};

struct EvalReport {
  ReportMetadata meta;
  std::vector<ReportRow> rows;

  [[nodiscard]] const ReportRow* find(std::string_view id) const {
    for (const auto& r : rows) {
      if (r.id == id) return &r;
    }
    return nullptr;
  }

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Fills the display name and reference annotations for a menu id.
inline void annotate_row(ReportRow& row) {
  if (const auto* p = paper::find_row(row.id)) {
    row.model = std::string(p->display);
    for (std::size_t b = 0; b < 5; ++b) row.paper_tau[b] = p->tau[b];
    row.paper_params = std::string(p->params);
  } else if (row.model.empty()) {
    row.model = row.id;
  }
}

namespace detail {

inline std::string bucket_suffix(LengthBucket b) {
  const auto r = bucket_range(b);
  return std::to_string(r.min_len) + "_" + std::to_string(r.max_len);
}

template <class T>
T parse_integer(const std::string& s) {
  std::size_t used = 0;
  const unsigned long long v = std::stoull(s, &used);
  if (used != s.size()) throw FormatError("bad integer '" + s + "'");
  return static_cast<T>(v);
}

}  // namespace detail

inline std::string report_header() {
  std::string h = "id,model";
  for (auto b : kAllBuckets) h += ",tau_" + detail::bucket_suffix(b);
  h += ",overall,params";
  for (auto b : kAllBuckets) h += ",docs_" + detail::bucket_suffix(b);
  for (auto b : kAllBuckets) h += ",paper_" + detail::bucket_suffix(b);
  h += ",paper_params";
  return h;
}

inline void write_report_csv(const EvalReport& r, std::ostream& os) {
  const auto& m = r.meta;
  os << "# corpus_digest," << m.corpus_digest << '\n'
     << "# corpus_seed," << m.corpus_seed << '\n'
     << "# split_seed," << m.split_seed << '\n'
     << "# eval_seed," << m.eval_seed << '\n'
     << "# train_seed," << m.train_seed << '\n'
     << "# epochs," << m.epochs << '\n'
     << "# timestamp," << m.timestamp << '\n'
     << report_header() << '\n';
  for (const auto& row : r.rows) {
    std::vector<std::string> f{row.id, row.model};
    for (const auto& t : row.tau) f.push_back(csv::optional_number(t));
    f.push_back(csv::number(row.overall));
    f.push_back(std::to_string(row.params));
    for (auto d : row.docs) f.push_back(std::to_string(d));
    for (const auto& t : row.paper_tau) f.push_back(csv::optional_number(t));
    f.push_back(row.paper_params);
    os << csv::join(f) << '\n';
  }
}

inline std::string report_csv(const EvalReport& r) {
  std::ostringstream os;
  write_report_csv(r, os);
  return os.str();
}

inline EvalReport read_report_csv(std::istream& is) {
  EvalReport r;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      if (line.rfind("# ", 0) == 0) {
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw FormatError("metadata line without value");
        const auto key = line.substr(2, comma - 2);
        const auto value = line.substr(comma + 1);
        auto& m = r.meta;
        if (key == "corpus_digest") m.corpus_digest = value;
        else if (key == "corpus_seed") m.corpus_seed = detail::parse_integer<std::uint64_t>(value);
        else if (key == "split_seed") m.split_seed = detail::parse_integer<std::uint64_t>(value);
        else if (key == "eval_seed") m.eval_seed = detail::parse_integer<std::uint64_t>(value);
        else if (key == "train_seed") m.train_seed = detail::parse_integer<std::uint64_t>(value);
        else if (key == "epochs") m.epochs = std::stoi(value);
        else if (key == "timestamp") m.timestamp = value;
        else throw FormatError("unknown metadata key '" + key + "'");
        continue;
      }
      if (!header_seen) {
        if (line != report_header()) throw FormatError("unexpected report header");
        header_seen = true;
        continue;
      }
      const auto f = csv::split(line);
      if (f.size() != 20) throw FormatError("expected 20 fields, got " + std::to_string(f.size()));
      ReportRow row;
      row.id = f[0];
      row.model = f[1];
      for (std::size_t b = 0; b < 5; ++b) row.tau[b] = csv::parse_optional(f[2 + b]);
      row.overall = csv::parse_number(f[7]);
      row.params = detail::parse_integer<std::size_t>(f[8]);
      for (std::size_t b = 0; b < 5; ++b) row.docs[b] = detail::parse_integer<std::size_t>(f[9 + b]);
      for (std::size_t b = 0; b < 5; ++b) row.paper_tau[b] = csv::parse_optional(f[14 + b]);
      row.paper_params = f[19];
      r.rows.push_back(std::move(row));
    } catch (const ParseError&) {
      throw;
    } catch (const std::exception& e) {
      throw ParseError(e.what(), line_no);
    }
  }
  if (!header_seen) throw ParseError("report has no header", line_no);
  return r;
}

/// Aligned plain-text table: measured tau per bucket with the published value in brackets.
inline std::string render_report_text(const EvalReport& r) {
  std::ostringstream os;
  char buf[128];
  os << "Kendall's tau by document length (test split)\n"
     << "corpus " << r.meta.corpus_digest.substr(0, 16) << "  seeds corpus=" << r.meta.corpus_seed
     << " split=" << r.meta.split_seed << " eval=" << r.meta.eval_seed << " train=" << r.meta.train_seed
     << "  epochs=" << r.meta.epochs;
  if (!r.meta.timestamp.empty()) os << "  timestamp=" << r.meta.timestamp;
  os << "\n\n";
  std::snprintf(buf, sizeof(buf), "%-28s", "Model");
  os << buf;
  for (auto b : kAllBuckets) {
    std::snprintf(buf, sizeof(buf), " %17s", (bucket_name(b) + " pages").c_str());
    os << buf;
  }
  std::snprintf(buf, sizeof(buf), " %8s %10s %8s\n", "overall", "params", "paper");
  os << buf;
  for (const auto& row : r.rows) {
    std::snprintf(buf, sizeof(buf), "%-28s", row.model.c_str());
    os << buf;
    for (std::size_t b = 0; b < 5; ++b) {
      std::string cell = row.tau[b] ? (std::snprintf(buf, sizeof(buf), "%.3f", *row.tau[b]), std::string(buf)) : "-";
      if (row.paper_tau[b]) {
        std::snprintf(buf, sizeof(buf), " [%.3f]", *row.paper_tau[b]);
        cell += buf;
      }
      std::snprintf(buf, sizeof(buf), " %17s", cell.c_str());
      os << buf;
    }
    std::snprintf(buf, sizeof(buf), " %8.3f %10zu %8s\n", row.overall, row.params, row.paper_params.c_str());
    os << buf;
  }
  os << "\nDocuments per bucket:";
  if (!r.rows.empty()) {
    for (std::size_t b = 0; b < 5; ++b) os << ' ' << bucket_name(kAllBuckets[b]) << '=' << r.rows.front().docs[b];
  }
  os << "\nBracketed values are published reference numbers on different data; they are annotations only.\n";
  return os.str();
}

}  // namespace pgo
