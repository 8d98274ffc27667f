#include "imfas/manifest.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "imfas/errors.hpp"

namespace imfas {

std::uint64_t fnv1a64(const void* data, std::size_t size) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (std::size_t i = 0; i < size; ++i) {
        hash ^= bytes[i];
        hash *= 0x100000001b3ULL;
    }
    return hash;
}

namespace {

std::string hex_digest(std::uint64_t hash) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

}  // namespace

std::string digest_text(const std::string& text) {
    return hex_digest(fnv1a64(text.data(), text.size()));
}

std::string digest_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file for digest: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    const std::string contents = buffer.str();
    return hex_digest(fnv1a64(contents.data(), contents.size()));
}

std::string manifest_to_json(const RunManifest& manifest) {
    nlohmann::ordered_json root;
    root["tool"] = "imfas";
    root["tool_version"] = kToolVersion;
    root["command"] = manifest.command;
    root["config"] = manifest.config;
    root["seeds"] = manifest.seeds;
    root["inputs"] = manifest.input_digests;
    root["outputs"] = manifest.outputs;
    return root.dump(2) + "\n";
}

void write_manifest(const RunManifest& manifest, const std::string& out_dir) {
    write_text_file((std::filesystem::path(out_dir) / "manifest.json").string(),
                    manifest_to_json(manifest));
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out.good()) throw IoError("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

}  // namespace imfas
