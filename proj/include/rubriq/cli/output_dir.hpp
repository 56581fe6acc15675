#pragma once

#include "rubriq/corpus.hpp"

#include <filesystem>
#include <string>

namespace rubriq::cli {

// Run output directory with a content manifest. finalize() rescans the whole
// tree so files written by lower layers (prompt store, caches excluded by
// construction) are covered too. The manifest carries no timestamps or
// absolute paths; identical runs produce byte-identical manifests.
class OutputDir {
  public:
    OutputDir(std::filesystem::path dir, LabelMode label_mode, long seed,
              const std::filesystem::path& cache_dir);

    const std::filesystem::path& root() const { return root_; }

    void write_file(const std::string& relpath, const std::string& content) const;
    std::string read_file(const std::string& relpath) const;

    // Writes manifest.json: format, label_mode, seed, and a digest per file.
    void finalize() const;

  private:
    std::filesystem::path root_;
    LabelMode label_mode_;
    long seed_;
};

} // namespace rubriq::cli
