#pragma once

#include <filesystem>
#include <fstream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "hsynth/search/record.hpp"

namespace hsynth::search {

class DbError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DbContents {
  std::vector<CandidateRecord> records;
  std::vector<std::string> warnings;
};

/// Reads a JSON-lines heuristic DB. A malformed final line is treated as a
/// torn write: it is dropped with a warning. Malformed earlier lines are errors.
inline DbContents db_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DbError("cannot open heuristic DB '" + path.string() + "'");
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) lines.push_back(line);
  while (!lines.empty() && lines.back().empty()) lines.pop_back();

  DbContents out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      out.records.push_back(record_from_json(nlohmann::json::parse(lines[i])));
    } catch (const std::exception& e) {
      if (i + 1 == lines.size()) {
        out.warnings.push_back(path.string() + ":" + std::to_string(i + 1) + ": dropped partial final record");
        break;
      }
      throw DbError(path.string() + ":" + std::to_string(i + 1) + ": " + e.what());
    }
  }
  return out;
}

/// Append-only writer. Appends are serialized and flushed per record.
class HeuristicDb {
 public:
  enum class Mode { append, truncate };

  HeuristicDb(std::filesystem::path path, Mode mode) : path_(std::move(path)) {
    auto flags = std::ios::binary | (mode == Mode::truncate ? std::ios::trunc : std::ios::app);
    out_.open(path_, flags);
    if (!out_) throw DbError("cannot open heuristic DB '" + path_.string() + "' for writing");
  }

  void append(const CandidateRecord& r) {
    std::lock_guard lock(mu_);
    out_ << to_json(r).dump() << '\n';
    out_.flush();
    if (!out_) throw DbError("write failed on '" + path_.string() + "'");
  }

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::mutex mu_;
};

/// Replaces the file with exactly `records`.
inline void db_rewrite(const std::filesystem::path& path, const std::vector<CandidateRecord>& records) {
  HeuristicDb db(path, HeuristicDb::Mode::truncate);
  for (const auto& r : records) db.append(r);
}

}  // namespace hsynth::search
