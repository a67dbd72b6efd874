#include "figlab/workspace.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace figlab {

using nlohmann::json;

std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string fnv1a64_hex(std::string_view data) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(data)));
  return buf;
}

std::string hash_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("hash_file: cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return fnv1a64_hex(buf.str());
}

namespace {

std::filesystem::path manifest_path(const std::filesystem::path& root) {
  return root / "manifest.json";
}

json load_manifest(const std::filesystem::path& root) {
  std::ifstream in(manifest_path(root));
  if (!in) return json{{"artifacts", json::object()}};
  json j = json::parse(in);
  if (!j.contains("artifacts")) j["artifacts"] = json::object();
  return j;
}

void store_manifest(const std::filesystem::path& root, const json& manifest) {
  std::ofstream out(manifest_path(root));
  if (!out) throw std::runtime_error("workspace: cannot write manifest under " + root.string());
  out << manifest.dump(2) << "\n";
}

}  // namespace

Workspace Workspace::open(const std::filesystem::path& root) {
  Workspace ws{root};
  std::filesystem::create_directories(ws.datasets_dir());
  std::filesystem::create_directories(ws.graphs_dir());
  std::filesystem::create_directories(ws.runs_dir());
  std::filesystem::create_directories(ws.reports_dir());
  if (!std::filesystem::exists(manifest_path(root))) store_manifest(root, load_manifest(root));
  return ws;
}

void Workspace::record_artifact(const std::filesystem::path& file) const {
  const auto rel = std::filesystem::relative(file, root);
  if (rel.empty() || rel.native().starts_with(".."))
    throw std::invalid_argument("record_artifact: " + file.string() + " is outside " +
                                root.string());
  json manifest = load_manifest(root);
  manifest["artifacts"][rel.generic_string()] = {
      {"fnv1a64", hash_file(file)},
      {"bytes", std::filesystem::file_size(file)}};
  store_manifest(root, manifest);
}

std::vector<std::string> Workspace::verify() const {
  json manifest = load_manifest(root);
  std::vector<std::string> bad;
  for (const auto& [rel, entry] : manifest.at("artifacts").items()) {
    const auto path = root / rel;
    if (!std::filesystem::exists(path)) {
      bad.push_back(rel + " (missing)");
      continue;
    }
    if (hash_file(path) != entry.at("fnv1a64").get<std::string>())
      bad.push_back(rel + " (hash mismatch)");
  }
  return bad;
}

void write_artifact(const Workspace& ws, const std::filesystem::path& path,
                    const std::string& content) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_artifact: cannot open " + path.string());
  out << content;
  out.close();
  ws.record_artifact(path);
}

}  // namespace figlab
