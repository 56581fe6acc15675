#pragma once

#include "rubriq/errors.hpp"

#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace rubriq {

/// Ordered label set. The order is load-bearing: QWK weights depend on it.
enum class Label { Incorrect = 0, PartiallyCorrect = 1, Correct = 2 };

enum class LabelMode { TwoWay, ThreeWay };

enum class Split { Train, Trial, Test };

std::string_view label_to_string(Label l);
std::optional<Label> label_from_string(std::string_view s); // exact match after trim
std::string_view split_to_string(Split s);
std::optional<Split> split_from_string(std::string_view s);
std::string_view label_mode_to_string(LabelMode m);
std::optional<LabelMode> label_mode_from_string(std::string_view s);

/// Active classes for a mode, in label order.
std::vector<Label> active_labels(LabelMode mode);
int class_count(LabelMode mode);

/// Index of a label within the ordered k-class set (k = 2 drops PartiallyCorrect).
/// Throws Error if the label is not in the active set.
int label_index(Label l, int k);
Label label_at(int index, int k);

/// Collapses PartiallyCorrect to Incorrect in two-way mode; identity otherwise.
Label label_in_mode(Label l, LabelMode mode);

struct Rubric {
    std::string incorrect;
    std::string partially_correct; // may be empty in two-way corpora
    std::string correct;

    bool operator==(const Rubric&) const = default;
};

struct AnswerRecord {
    std::string id;
    std::string question;
    Rubric rubric;
    std::string answer;
    std::optional<Label> gold; // present for Train and Trial
    Split split = Split::Train;
    bool synthetic = false;
};

/// Stable digest of the trimmed (question, rubric) key. Two records share a
/// GroupId iff their trimmed question and rubric texts are byte-identical.
struct GroupId {
    std::string hex;

    auto operator<=>(const GroupId&) const = default;
};

GroupId group_key(std::string_view question, const Rubric& rubric);
GroupId group_key(const AnswerRecord& record);

struct RubricGroup {
    GroupId id;
    std::string question; // trimmed key form
    Rubric rubric;        // trimmed key form
    std::vector<AnswerRecord> members;

    std::vector<const AnswerRecord*> split_members(Split s) const;
    /// Train members; synthetic records included only when requested.
    std::vector<const AnswerRecord*> train_members(bool include_synthetic) const;
};

struct Corpus {
    std::vector<AnswerRecord> records;
    LabelMode label_mode = LabelMode::TwoWay;
};

class MalformedRecordError : public Error {
public:
    MalformedRecordError(std::size_t line, const std::string& reason);
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class DuplicateIdError : public Error {
public:
    explicit DuplicateIdError(const std::string& id);
};

class MissingGoldError : public Error {
public:
    explicit MissingGoldError(const std::string& id);
};

class GroupNotFoundError : public Error {
public:
    explicit GroupNotFoundError(const std::string& record_id);
};

/// Loads a JSONL corpus (one object per line). In TwoWay mode gold labels
/// collapse PartiallyCorrect -> Incorrect at load time.
Corpus load_corpus(const std::filesystem::path& path, LabelMode mode);
Corpus parse_corpus(std::istream& in, LabelMode mode);

/// Serializes back to the JSONL schema, one record per line, stable key order.
void save_corpus(const Corpus& corpus, const std::filesystem::path& path);
std::string corpus_to_jsonl(const Corpus& corpus);

/// Disjoint exhaustive partition into question-rubric groups,
/// ordered by GroupId (lexicographic, hence deterministic).
std::vector<RubricGroup> group_by_rubric(const Corpus& corpus);

/// Exact-match routing of records onto a fixed set of groups.
class GroupIndex {
public:
    explicit GroupIndex(const std::vector<RubricGroup>& groups);

    /// Returns the unique matching group id; throws GroupNotFoundError for
    /// unseen-questions records (callers fall back to a group-agnostic scorer).
    GroupId route(const AnswerRecord& record) const;
    std::optional<GroupId> try_route(const AnswerRecord& record) const;
    const RubricGroup* find(const GroupId& id) const;

private:
    const std::vector<RubricGroup>* groups_;
    std::unordered_map<std::string, std::size_t> by_key_;
};

} // namespace rubriq
