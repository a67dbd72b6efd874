#pragma once
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace figlab {

std::uint64_t fnv1a64(std::string_view data);
std::string fnv1a64_hex(std::string_view data);
std::string hash_file(const std::filesystem::path& path);

// Artifact tree with a content-hash manifest:
//   <root>/datasets/  <root>/graphs/  <root>/runs/  <root>/reports/
//   <root>/manifest.json
struct Workspace {
  std::filesystem::path root;

  static Workspace open(const std::filesystem::path& root);

  std::filesystem::path datasets_dir() const { return root / "datasets"; }
  std::filesystem::path graphs_dir() const { return root / "graphs"; }
  std::filesystem::path runs_dir() const { return root / "runs"; }
  std::filesystem::path reports_dir() const { return root / "reports"; }

  // Hash an artifact into the manifest (path must live under root).
  void record_artifact(const std::filesystem::path& file) const;
  // Relative paths of manifest entries that are missing or hash-mismatched.
  std::vector<std::string> verify() const;
};

// Writes content to path and records it in the workspace manifest.
void write_artifact(const Workspace& ws, const std::filesystem::path& path,
                    const std::string& content);

}  // namespace figlab
