#include "stylefx/run_store.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <ctime>

#include "stylefx/error.hpp"

namespace stylefx {

namespace fs = std::filesystem;

OrderedJson to_json(const RunManifest& m) {
  OrderedJson j;
  j["run_id"] = m.run_id;
  j["config_hash"] = m.config_hash;
  j["backend_ids"] = m.backend_ids;
  j["catalog_hash"] = m.catalog_hash;
  j["split_hash"] = m.split_hash;
  j["stage_status"] = m.stage_status;
  j["timestamps"] = m.timestamps;
  j["extra"] = m.extra;
  return j;
}

RunManifest run_manifest_from_json(const Json& j) {
  try {
    RunManifest m;
    m.run_id = j.at("run_id").get<std::string>();
    m.config_hash = j.value("config_hash", std::string{});
    m.backend_ids = j.value("backend_ids", std::map<std::string, std::string>{});
    m.catalog_hash = j.value("catalog_hash", std::string{});
    m.split_hash = j.value("split_hash", std::string{});
    m.stage_status = j.value("stage_status", std::map<std::string, std::string>{});
    m.timestamps = j.value("timestamps", std::map<std::string, std::string>{});
    if (j.contains("extra")) m.extra = OrderedJson::parse(j.at("extra").dump());
    return m;
  } catch (const Json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("manifest: ") + e.what());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

RunStore::RunStore(fs::path dir) : dir_(std::move(dir)) { fs::create_directories(dir_); }

bool RunStore::has_manifest() const { return fs::exists(dir_ / "manifest.json"); }

RunManifest RunStore::load_manifest() const {
  try {
    return run_manifest_from_json(Json::parse(read_text_file(dir_ / "manifest.json")));
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::ParseError, std::string("manifest.json: ") + e.what());
  }
}

void RunStore::save_manifest(const RunManifest& m) const {
  write_text_file(dir_ / "manifest.json", dump_json(to_json(m), 2) + "\n");
}

std::string safe_name(std::string_view key) {
  std::string out;
  for (unsigned char c : key) out += std::isalnum(c) || c == '-' || c == '.' || c == '_' ? static_cast<char>(c) : '_';
  return out;
}

fs::path RunStore::record_path(std::string_view stage, std::string_view name) const {
  return dir_ / std::string(stage) / (safe_name(name) + ".jsonl");
}

bool RunStore::has_records(std::string_view stage, std::string_view name) const {
  return fs::exists(record_path(stage, name));
}

void RunStore::write_records(std::string_view stage, std::string_view name,
                             const std::vector<OrderedJson>& records) const {
  std::string text;
  for (const auto& r : records) text += dump_json(r) + "\n";
  create_text_file_exclusive(record_path(stage, name), text);
}

std::vector<Json> RunStore::read_records(std::string_view stage, std::string_view name) const {
  return read_jsonl(record_path(stage, name));
}

std::vector<fs::path> RunStore::record_files(std::string_view stage) const {
  std::vector<fs::path> out;
  const fs::path d = dir_ / std::string(stage);
  if (!fs::exists(d)) return out;
  for (const auto& e : fs::directory_iterator(d))
    if (e.is_regular_file() && e.path().extension() == ".jsonl") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

void require_predecessors(const RunManifest& m, std::string_view stage, const std::vector<std::string>& needed) {
  for (const auto& s : needed) {
    auto it = m.stage_status.find(s);
    if (it == m.stage_status.end() || it->second == "failed")
      throw Error(ErrorKind::InvalidConfig, "stage '" + std::string(stage) + "' needs '" + s + "' to run first");
  }
}

}  // namespace stylefx
