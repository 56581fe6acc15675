#include "rubriq/cli/output_dir.hpp"

#include "rubriq/digest.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>

namespace rubriq::cli {

using nlohmann::json;

OutputDir::OutputDir(std::filesystem::path dir, LabelMode label_mode, long seed,
                     const std::filesystem::path& cache_dir)
    : root_(std::move(dir)), label_mode_(label_mode), seed_(seed) {
    if (root_.empty()) throw UsageError("output directory is required");
    std::filesystem::create_directories(root_);
    if (!cache_dir.empty()) {
        std::error_code ec;
        auto canonical_out = std::filesystem::weakly_canonical(root_, ec);
        auto canonical_cache = std::filesystem::weakly_canonical(cache_dir, ec);
        if (canonical_out == canonical_cache) {
            throw UsageError("output directory must differ from the cache directory");
        }
    }
    std::filesystem::path manifest = root_ / "manifest.json";
    if (std::filesystem::exists(manifest)) {
        std::ifstream in(manifest, std::ios::binary);
        json doc = json::parse(in);
        auto existing = label_mode_from_string(doc.value("label_mode", ""));
        if (existing && *existing != label_mode_) {
            throw UsageError("output directory was produced with label_mode " +
                             doc.value("label_mode", "") + "; refusing to mix modes");
        }
    }
}

void OutputDir::write_file(const std::string& relpath, const std::string& content) const {
    std::filesystem::path path = root_ / relpath;
    std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write " + path.string());
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

std::string OutputDir::read_file(const std::string& relpath) const {
    std::filesystem::path path = root_ / relpath;
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

void OutputDir::finalize() const {
    std::map<std::string, std::string> files;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(root_)) {
        if (!entry.is_regular_file()) continue;
        std::string rel = std::filesystem::relative(entry.path(), root_).generic_string();
        if (rel == "manifest.json") continue;
        std::ifstream in(entry.path(), std::ios::binary);
        std::string content(std::istreambuf_iterator<char>(in), {});
        files[rel] = sha256_hex(content);
    }
    json manifest{{"format", "manifest/1"},
                  {"label_mode", label_mode_to_string(label_mode_)},
                  {"seed", seed_},
                  {"files", files}};
    write_file("manifest.json", manifest.dump(2) + "\n");
}

} // namespace rubriq::cli
