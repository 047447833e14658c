#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "stylefx/io.hpp"

namespace stylefx {

/// Stage order: each stage may only run after its predecessors completed.
inline const std::vector<std::string> kStages{"extract", "generate", "judge", "matrix",
                                               "screen",  "mitigate", "report"};

struct RunManifest {
  std::string run_id;
  std::string config_hash;
  std::map<std::string, std::string> backend_ids;  // role -> id
  std::string catalog_hash;
  std::string split_hash;
  std::map<std::string, std::string> stage_status;  // stage -> "complete" | "partial" | "failed"
  std::map<std::string, std::string> timestamps;    // event -> ISO-8601 UTC
  OrderedJson extra = OrderedJson::object();        // layer mapping, prompts, etc.
};

OrderedJson to_json(const RunManifest& m);
RunManifest run_manifest_from_json(const Json& j);

std::string utc_timestamp();

/// Directory-per-run store: manifest.json plus one JSONL file per record set.
/// Record files are created exclusively and never overwritten.
class RunStore {
 public:
  explicit RunStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const noexcept { return dir_; }
  bool has_manifest() const;
  RunManifest load_manifest() const;
  void save_manifest(const RunManifest& m) const;

  std::filesystem::path record_path(std::string_view stage, std::string_view name) const;
  bool has_records(std::string_view stage, std::string_view name) const;
  /// IoError if the file already exists.
  void write_records(std::string_view stage, std::string_view name, const std::vector<OrderedJson>& records) const;
  std::vector<Json> read_records(std::string_view stage, std::string_view name) const;
  /// Every record file of a stage, sorted by name.
  std::vector<std::filesystem::path> record_files(std::string_view stage) const;

 private:
  std::filesystem::path dir_;
};

/// InvalidConfig when a stage preceding `stage` is not complete in `m`.
void require_predecessors(const RunManifest& m, std::string_view stage, const std::vector<std::string>& needed);

/// File-name-safe form of a record set key.
std::string safe_name(std::string_view key);

}  // namespace stylefx
