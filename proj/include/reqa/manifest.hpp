#pragma once

#include <cstdint>
#include <map>
#include <string>

namespace reqa {

const char* tool_version();

// FNV-1a content hash, used to fingerprint datasets, vocabularies and
// checkpoints referenced from run manifests.
std::uint64_t fnv1a_file(const std::string& path);
std::string hash_hex(std::uint64_t hash);

// Record of how an artifact was produced: subcommand, flags, input content
// hashes, seed, tool version and wall clock. Saved as a sidecar
// `<artifact>.manifest.json`. Re-running a subcommand with an identical
// manifest (wall clock aside) reproduces byte-identical metric outputs.
struct RunManifest {
    std::string subcommand;
    std::map<std::string, std::string> flags;
    std::map<std::string, std::string> input_hashes;  // path -> content hash
    std::uint64_t seed = 0;
    double wall_clock_seconds = 0.0;

    std::string to_json() const;
    void save_sidecar(const std::string& artifact_path) const;
};

}  // namespace reqa
