#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace imfas {

inline constexpr const char* kToolVersion = "0.1.0";

// FNV-1a 64-bit over raw bytes.
std::uint64_t fnv1a64(const void* data, std::size_t size);
std::string digest_text(const std::string& text);  // "fnv1a64:<hex>"
std::string digest_file(const std::string& path);

// Written to <out>/manifest.json before any heavy work starts; a run is
// reproducible from its manifest alone (resolved config + seeds + input
// digests).
struct RunManifest {
    std::string command;
    std::map<std::string, std::string> config;  // resolved key-values
    std::vector<std::uint64_t> seeds;
    std::map<std::string, std::string> input_digests;  // path -> digest
    std::vector<std::string> outputs;
};

std::string manifest_to_json(const RunManifest& manifest);
void write_manifest(const RunManifest& manifest, const std::string& out_dir);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace imfas
