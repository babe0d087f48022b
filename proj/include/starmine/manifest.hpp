#pragma once

#include <map>
#include <string>
#include <vector>

namespace starmine {

inline constexpr const char *kVersion = "0.1.0";
inline constexpr const char *kTieBreakPolicy = "lex-leafset-v1";

// Hex SHA-256 of a file's bytes. Throws InputError if it cannot be read.
std::string sha256_file(const std::string &path);
std::string sha256_hex(const std::string &bytes);

struct RunManifest {
  std::string command;
  std::map<std::string, std::string> inputs; // role -> sha256
  std::string algorithm;
  std::string gain;
  std::string tie_break = kTieBreakPolicy;
  std::vector<std::string> attribute_order; // lexicographic
  std::string version = kVersion;
};

std::string to_json(const RunManifest &m);
void write_manifest(const RunManifest &m, const std::string &path);

} // namespace starmine
