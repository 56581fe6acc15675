#pragma once

#include "rubriq/errors.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace rubriq {

struct EmptyCorpusError : Error {
    using Error::Error;
};

struct SparseVector {
    std::vector<std::uint32_t> indices; // sorted, unique
    std::vector<double> values;
    std::size_t dim = 0;

    double norm() const;
};

// Merge-join dot product; bitwise symmetric in its arguments.
double dot(const SparseVector& a, const SparseVector& b);

struct VectorizerConfig {
    int ngram_min = 2;
    int ngram_max = 10;
    // Vocabulary cap; lowest-df grams are pruned first (ties by gram order).
    std::size_t max_vocabulary = 2000000;
};

// Character n-gram TF-IDF over Unicode code points: raw term frequency,
// smoothed idf ln((1+N)/(1+df)) + 1, L2-normalized output. Texts sharing no
// gram with the vocabulary transform to the zero vector.
class Vectorizer {
  public:
    static Vectorizer fit(const std::vector<std::string>& texts, VectorizerConfig config = {});

    SparseVector transform(const std::string& text) const;

    std::size_t vocabulary_size() const { return grams_.size(); }
    const std::vector<std::string>& grams() const { return grams_; }
    const std::vector<double>& idf() const { return idf_; }
    const VectorizerConfig& config() const { return config_; }

    nlohmann::json to_json() const;
    static Vectorizer from_json(const nlohmann::json& j);

  private:
    struct TransparentHash {
        using is_transparent = void;
        std::size_t operator()(std::string_view s) const {
            return std::hash<std::string_view>{}(s);
        }
    };

    VectorizerConfig config_;
    std::vector<std::string> grams_; // lexicographic; position = feature index
    std::vector<double> idf_;
    std::unordered_map<std::string, std::uint32_t, TransparentHash, std::equal_to<>> index_;

    void rebuild_index();
};

// Code-point boundaries of a UTF-8 string (byte offsets of rune starts plus
// the end offset); malformed bytes count as single runes.
std::vector<std::size_t> utf8_boundaries(const std::string& text);

} // namespace rubriq
