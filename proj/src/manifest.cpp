#include "reqa/manifest.hpp"

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "reqa/error.hpp"

namespace reqa {

const char* tool_version() { return "0.1.0"; }

std::uint64_t fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for hashing: " + path);
    std::uint64_t h = 14695981039346656037ULL;
    char buf[1 << 16];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string hash_hex(std::uint64_t hash) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

std::string RunManifest::to_json() const {
    nlohmann::ordered_json j;
    j["tool"] = "reqa";
    j["version"] = tool_version();
    j["subcommand"] = subcommand;
    j["flags"] = flags;
    j["inputs"] = input_hashes;
    j["seed"] = seed;
    j["wall_clock_seconds"] = wall_clock_seconds;
    return j.dump(2);
}

void RunManifest::save_sidecar(const std::string& artifact_path) const {
    const std::string path = artifact_path + ".manifest.json";
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << to_json() << '\n';
}

}  // namespace reqa
