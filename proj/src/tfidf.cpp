#include "rubriq/tfidf.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

namespace rubriq {

using nlohmann::json;

double SparseVector::norm() const {
    double sum = 0.0;
    for (double v : values) sum += v * v;
    return std::sqrt(sum);
}

double dot(const SparseVector& a, const SparseVector& b) {
    double sum = 0.0;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < a.indices.size() && j < b.indices.size()) {
        if (a.indices[i] < b.indices[j]) {
            ++i;
        } else if (a.indices[i] > b.indices[j]) {
            ++j;
        } else {
            sum += a.values[i] * b.values[j];
            ++i;
            ++j;
        }
    }
    return sum;
}

std::vector<std::size_t> utf8_boundaries(const std::string& text) {
    std::vector<std::size_t> starts;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if ((static_cast<unsigned char>(text[i]) & 0xC0) != 0x80) starts.push_back(i);
    }
    starts.push_back(text.size());
    return starts;
}

namespace {

// Applies fn to every n-gram (as a byte span) for n in [min, max].
template <typename Fn>
void for_each_gram(const std::string& text, int ngram_min, int ngram_max, Fn&& fn) {
    std::vector<std::size_t> b = utf8_boundaries(text);
    std::size_t runes = b.size() - 1;
    for (std::size_t start = 0; start < runes; ++start) {
        for (int n = ngram_min; n <= ngram_max; ++n) {
            if (start + static_cast<std::size_t>(n) > runes) break;
            fn(std::string_view(text).substr(b[start], b[start + n] - b[start]));
        }
    }
}

} // namespace

Vectorizer Vectorizer::fit(const std::vector<std::string>& texts, VectorizerConfig config) {
    bool any_nonempty = std::any_of(texts.begin(), texts.end(),
                                    [](const std::string& t) { return !t.empty(); });
    if (texts.empty() || !any_nonempty) {
        throw EmptyCorpusError("vectorizer requires at least one non-empty text");
    }

    // std::map keeps grams in byte-lexicographic order, which equals
    // code-point order for UTF-8.
    std::map<std::string, std::size_t> df;
    for (const std::string& text : texts) {
        std::set<std::string, std::less<>> seen;
        for_each_gram(text, config.ngram_min, config.ngram_max, [&](std::string_view gram) {
            if (seen.find(gram) == seen.end()) seen.emplace(gram);
        });
        for (const auto& gram : seen) ++df[gram];
    }

    Vectorizer v;
    v.config_ = config;
    if (df.size() > config.max_vocabulary) {
        std::vector<const std::pair<const std::string, std::size_t>*> entries;
        entries.reserve(df.size());
        for (const auto& entry : df) entries.push_back(&entry);
        std::sort(entries.begin(), entries.end(), [](const auto* a, const auto* b) {
            if (a->second != b->second) return a->second > b->second;
            return a->first < b->first;
        });
        entries.resize(config.max_vocabulary);
        std::map<std::string, std::size_t> kept;
        for (const auto* entry : entries) kept.emplace(entry->first, entry->second);
        df = std::move(kept);
    }

    const double n_docs = static_cast<double>(texts.size());
    v.grams_.reserve(df.size());
    v.idf_.reserve(df.size());
    for (const auto& [gram, count] : df) {
        v.grams_.push_back(gram);
        v.idf_.push_back(std::log((1.0 + n_docs) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    v.rebuild_index();
    return v;
}

void Vectorizer::rebuild_index() {
    index_.clear();
    index_.reserve(grams_.size());
    for (std::size_t i = 0; i < grams_.size(); ++i) {
        index_.emplace(grams_[i], static_cast<std::uint32_t>(i));
    }
}

SparseVector Vectorizer::transform(const std::string& text) const {
    std::map<std::uint32_t, double> tf;
    for_each_gram(text, config_.ngram_min, config_.ngram_max, [&](std::string_view gram) {
        auto it = index_.find(gram);
        if (it != index_.end()) tf[it->second] += 1.0;
    });

    SparseVector out;
    out.dim = grams_.size();
    out.indices.reserve(tf.size());
    out.values.reserve(tf.size());
    double sq = 0.0;
    for (const auto& [idx, count] : tf) {
        double value = count * idf_[idx];
        out.indices.push_back(idx);
        out.values.push_back(value);
        sq += value * value;
    }
    if (sq > 0.0) {
        double inv = 1.0 / std::sqrt(sq);
        for (double& value : out.values) value *= inv;
    }
    return out;
}

json Vectorizer::to_json() const {
    return json{{"ngram_min", config_.ngram_min},
                {"ngram_max", config_.ngram_max},
                {"max_vocabulary", config_.max_vocabulary},
                {"grams", grams_},
                {"idf", idf_}};
}

Vectorizer Vectorizer::from_json(const json& j) {
    Vectorizer v;
    v.config_.ngram_min = j.at("ngram_min").get<int>();
    v.config_.ngram_max = j.at("ngram_max").get<int>();
    v.config_.max_vocabulary = j.at("max_vocabulary").get<std::size_t>();
    v.grams_ = j.at("grams").get<std::vector<std::string>>();
    v.idf_ = j.at("idf").get<std::vector<double>>();
    if (v.grams_.size() != v.idf_.size()) throw Error("vectorizer grams/idf size mismatch");
    v.rebuild_index();
    return v;
}

} // namespace rubriq
