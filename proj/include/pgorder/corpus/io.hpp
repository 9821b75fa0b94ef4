#pragma once

#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pgorder/corpus/types.hpp"
#include "pgorder/errors.hpp"

namespace pgo {

/// One JSON object per line: {"dim": d, "doc_id": id, "pages": [[...], ...]}.
/// Numbers use the shortest decimal form that round-trips, so a save/load
/// cycle reproduces every embedding bit for bit.
inline std::string corpus_line(const Document& doc) {
  nlohmann::json j;
  j["doc_id"] = doc.doc_id;
  j["dim"] = doc.dim();
  j["pages"] = doc.pages;
  return j.dump();
}

inline void write_corpus(const std::vector<Document>& docs, std::ostream& os) {
  for (const auto& d : docs) os << corpus_line(d) << '\n';
}

inline std::vector<Document> read_corpus(std::istream& is) {
  std::vector<Document> docs;
  std::string line;
  std::size_t line_no = 0;
  std::size_t corpus_dim = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    Document doc;
    std::size_t dim = 0;
    try {
      doc.doc_id = j.at("doc_id").get<std::string>();
      dim = j.at("dim").get<std::size_t>();
      doc.pages = j.at("pages").get<std::vector<Embedding>>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad document record: ") + e.what(), line_no);
    }
    if (dim == 0) throw ParseError("dim must be positive", line_no);
    for (const auto& p : doc.pages) {
      if (p.size() != dim) throw FormatError("line " + std::to_string(line_no) + ": page length differs from dim");
    }
    if (doc.length() < kMinPages || doc.length() > kMaxPages) {
      throw FormatError("line " + std::to_string(line_no) + ": document has " + std::to_string(doc.length()) +
                        " pages, expected 2..25");
    }
    if (corpus_dim == 0) corpus_dim = dim;
    if (dim != corpus_dim) {
      throw FormatError("line " + std::to_string(line_no) + ": dim " + std::to_string(dim) +
                        " differs from corpus dim " + std::to_string(corpus_dim));
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

/// Writes to a sibling temp file and renames it into place.
inline void save_corpus(const std::vector<Document>& docs, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot write " + tmp);
    write_corpus(docs, os);
    if (!os) throw IoError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<Document> load_corpus(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot read " + path.string());
  return read_corpus(is);
}

}  // namespace pgo
