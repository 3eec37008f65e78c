#pragma once

// Shared fixtures for the test binaries: asset lookup, temp directories,
// scripted-reply directories, and canned HLMTs/plans used across suites.

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "restmorph/mt_model.hpp"
#include "restmorph/spec_model.hpp"

namespace testsupport {

namespace fs = std::filesystem;

inline std::string asset_path(const std::string& rel) {
    return std::string(RESTMORPH_ASSETS_DIR) + "/" + rel;
}

inline std::string templates_path() {
    return std::string(RESTMORPH_TEMPLATES_DIR);
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("test asset missing: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

inline void write_file(const fs::path& path, const std::string& bytes) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << bytes;
    if (!out.good()) throw std::runtime_error("cannot write test file: " + path.string());
}

// Self-deleting unique directory under the system temp root.
class TempDir {
public:
    TempDir() {
        static std::atomic<unsigned> counter{0};
        std::random_device rd;
        std::ostringstream name;
        name << "restmorph-test-" << rd() << "-" << counter++;
        path_ = fs::temp_directory_path() / name.str();
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const fs::path& path() const { return path_; }
    std::string str() const { return path_.string(); }
    fs::path file(const std::string& rel) const { return path_ / rel; }

private:
    fs::path path_;
};

// Writes replies as 001.txt, 002.txt, ... into dir/sub and returns that path.
inline std::string scripted_dir(const TempDir& dir, const std::vector<std::string>& replies,
                                const std::string& sub = "replies") {
    const fs::path root = dir.path() / sub;
    fs::create_directories(root);
    int n = 0;
    for (const auto& text : replies) {
        std::ostringstream name;
        name << std::setw(3) << std::setfill('0') << ++n << ".txt";
        write_file(root / name.str(), text);
    }
    return root.string();
}

inline const restmorph::ApiSpecification& fixture_spec() {
    static const restmorph::ApiSpecification spec =
        restmorph::parse_spec(read_file(asset_path("specs/testbed.json")));
    return spec;
}

inline const restmorph::ApiSpecification& petstore_spec() {
    static const restmorph::ApiSpecification spec =
        restmorph::parse_spec(read_file(asset_path("specs/petstore3.json")));
    return spec;
}

inline const restmorph::ApiSpecification& usermgmt_spec() {
    static const restmorph::ApiSpecification spec =
        restmorph::parse_spec(read_file(asset_path("specs/usermanagement2.yaml")));
    return spec;
}

// The worked-example HLMT the scripted fig2 replies emit, texts verbatim.
inline restmorph::Hlmt fig2_hlmt(int iteration = 1) {
    return restmorph::make_hlmt(
        "MR26",
        "Updating a pet's status should be observable when retrieving that pet by its "
        "identifier.",
        "a seed input that retrieves a pet by its identifier using the "
        "pet-retrieval-by-identifier operation, producing a seed output with the pet's "
        "current status.",
        "a follow-up input is created by updating the pet's status using the "
        "pet-update-with-form-data operation and then retrieving the same pet by the same "
        "identifier again using the pet-retrieval-by-identifier operation, yielding a "
        "follow-up output.",
        "the follow-up output should reflect the updated status for that pet, and the pet's "
        "identifier should remain the same as in the seed output.",
        iteration);
}

inline std::string fig2_scripted_dir() {
    return asset_path("scripted/fig2");
}

// Deterministic RNG for property suites: fixed seed, reproducible failures.
inline std::mt19937_64 property_rng(unsigned salt = 0) {
    return std::mt19937_64(0x5eed5eedULL + salt);
}

} // namespace testsupport
