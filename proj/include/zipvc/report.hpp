#pragma once

#include "zipvc/dataset.hpp"
#include "zipvc/omnibus.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace zipvc {

inline constexpr const char* kToolVersion = "0.1.0";

struct InputDigest {
  std::string path;
  std::string sha256;
};

/// Everything needed to rerun a command. Wall time is deliberately not part
/// of the embedded manifest so that reruns are byte-identical.
struct RunManifest {
  std::string command;
  nlohmann::ordered_json options = nlohmann::ordered_json::object();
  std::vector<InputDigest> inputs;
  std::string version = kToolVersion;
  std::uint64_t seed = 0;
};

/// Lower-case hex SHA-256 of a file's bytes.
std::string sha256_file(const std::filesystem::path& path);

InputDigest digest_input(const std::filesystem::path& path);

nlohmann::ordered_json to_json(const RunManifest& manifest);
nlohmann::ordered_json to_json(const TestReport& report, const RunManifest& manifest);
nlohmann::ordered_json to_json(const PruneReport& report, const std::vector<std::string>& names,
                               const RunManifest& manifest);

/// The five p-values, tab separated, shortest round-trip formatting.
std::string pvalue_line(const TestReport& report);

/// Pretty-printed JSON with a trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::ordered_json& doc);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace zipvc
