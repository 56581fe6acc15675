#include "rubriq/corpus.hpp"

#include "rubriq/digest.hpp"
#include "rubriq/strings.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <map>
#include <sstream>
#include <unordered_set>

using nlohmann::json;

namespace rubriq {

std::string_view label_to_string(Label l) {
    switch (l) {
    case Label::Incorrect: return "Incorrect";
    case Label::PartiallyCorrect: return "Partially Correct";
    case Label::Correct: return "Correct";
    }
    return "Incorrect";
}

std::optional<Label> label_from_string(std::string_view s) {
    std::string_view t = trim_view(s);
    if (t == "Correct") return Label::Correct;
    if (t == "Partially Correct") return Label::PartiallyCorrect;
    if (t == "Incorrect") return Label::Incorrect;
    return std::nullopt;
}

std::string_view split_to_string(Split s) {
    switch (s) {
    case Split::Train: return "Train";
    case Split::Trial: return "Trial";
    case Split::Test: return "Test";
    }
    return "Train";
}

std::optional<Split> split_from_string(std::string_view s) {
    std::string_view t = trim_view(s);
    if (t == "Train") return Split::Train;
    if (t == "Trial") return Split::Trial;
    if (t == "Test") return Split::Test;
    return std::nullopt;
}

std::string_view label_mode_to_string(LabelMode m) {
    return m == LabelMode::TwoWay ? "two-way" : "three-way";
}

std::optional<LabelMode> label_mode_from_string(std::string_view s) {
    std::string t = to_lower_ascii(trim_view(s));
    if (t == "two-way" || t == "2-way" || t == "two" || t == "2") return LabelMode::TwoWay;
    if (t == "three-way" || t == "3-way" || t == "three" || t == "3") return LabelMode::ThreeWay;
    return std::nullopt;
}

std::vector<Label> active_labels(LabelMode mode) {
    if (mode == LabelMode::TwoWay) return {Label::Incorrect, Label::Correct};
    return {Label::Incorrect, Label::PartiallyCorrect, Label::Correct};
}

int class_count(LabelMode mode) {
    return mode == LabelMode::TwoWay ? 2 : 3;
}

int label_index(Label l, int k) {
    if (k == 3) return static_cast<int>(l);
    if (k == 2) {
        if (l == Label::Incorrect) return 0;
        if (l == Label::Correct) return 1;
        throw Error("label_index: PartiallyCorrect is not a two-way class");
    }
    throw Error("label_index: class count must be 2 or 3");
}

Label label_at(int index, int k) {
    if (k == 3 && index >= 0 && index <= 2) return static_cast<Label>(index);
    if (k == 2 && index == 0) return Label::Incorrect;
    if (k == 2 && index == 1) return Label::Correct;
    throw Error("label_at: index out of range");
}

Label label_in_mode(Label l, LabelMode mode) {
    if (mode == LabelMode::TwoWay && l == Label::PartiallyCorrect) return Label::Incorrect;
    return l;
}

namespace {

// Length-framed field encoding so that ("ab","c") and ("a","bc") cannot collide.
void append_framed(std::string& buf, std::string_view field) {
    buf += std::to_string(field.size());
    buf += ':';
    buf += field;
}

} // namespace

GroupId group_key(std::string_view question, const Rubric& rubric) {
    std::string buf;
    append_framed(buf, trim_view(question));
    append_framed(buf, trim_view(rubric.incorrect));
    append_framed(buf, trim_view(rubric.partially_correct));
    append_framed(buf, trim_view(rubric.correct));
    return GroupId{sha256_hex(buf)};
}

GroupId group_key(const AnswerRecord& record) {
    return group_key(record.question, record.rubric);
}

std::vector<const AnswerRecord*> RubricGroup::split_members(Split s) const {
    std::vector<const AnswerRecord*> out;
    for (const auto& r : members) {
        if (r.split == s) out.push_back(&r);
    }
    return out;
}

std::vector<const AnswerRecord*> RubricGroup::train_members(bool include_synthetic) const {
    std::vector<const AnswerRecord*> out;
    for (const auto& r : members) {
        if (r.split != Split::Train) continue;
        if (r.synthetic && !include_synthetic) continue;
        out.push_back(&r);
    }
    return out;
}

MalformedRecordError::MalformedRecordError(std::size_t line, const std::string& reason)
    : Error("malformed record at line " + std::to_string(line) + ": " + reason), line_(line) {}

DuplicateIdError::DuplicateIdError(const std::string& id)
    : Error("duplicate record id: " + id) {}

MissingGoldError::MissingGoldError(const std::string& id)
    : Error("missing gold label for Train/Trial record: " + id) {}

GroupNotFoundError::GroupNotFoundError(const std::string& record_id)
    : Error("no question-rubric group matches record: " + record_id) {}

namespace {

std::string require_string(const json& obj, const char* key, std::size_t line) {
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
        throw MalformedRecordError(line, std::string("missing or non-string field '") + key + "'");
    }
    return it->get<std::string>();
}

AnswerRecord parse_record(const json& obj, std::size_t line, LabelMode mode) {
    if (!obj.is_object()) throw MalformedRecordError(line, "not a JSON object");

    AnswerRecord rec;
    rec.id = require_string(obj, "id", line);
    if (trim_view(rec.id).empty()) throw MalformedRecordError(line, "empty id");
    rec.question = require_string(obj, "question", line);
    rec.answer = require_string(obj, "answer", line);
    rec.rubric.incorrect = require_string(obj, "rubric_incorrect", line);
    rec.rubric.partially_correct = require_string(obj, "rubric_partially_correct", line);
    rec.rubric.correct = require_string(obj, "rubric_correct", line);

    if (trim_view(rec.rubric.correct).empty()) {
        throw MalformedRecordError(line, "rubric_correct must be non-empty");
    }
    if (trim_view(rec.rubric.incorrect).empty()) {
        throw MalformedRecordError(line, "rubric_incorrect must be non-empty");
    }
    if (mode == LabelMode::ThreeWay && trim_view(rec.rubric.partially_correct).empty()) {
        throw MalformedRecordError(line, "rubric_partially_correct must be non-empty in three-way mode");
    }

    auto split = split_from_string(require_string(obj, "split", line));
    if (!split) throw MalformedRecordError(line, "split must be one of Train, Trial, Test");
    rec.split = *split;

    if (auto it = obj.find("synthetic"); it != obj.end() && !it->is_null()) {
        if (!it->is_boolean()) throw MalformedRecordError(line, "synthetic must be a boolean");
        rec.synthetic = it->get<bool>();
    }
    if (rec.synthetic && rec.split != Split::Train) {
        throw MalformedRecordError(line, "synthetic records must carry split=Train");
    }

    if (auto it = obj.find("label"); it != obj.end() && !it->is_null()) {
        if (!it->is_string()) throw MalformedRecordError(line, "label must be a string");
        auto gold = label_from_string(it->get<std::string>());
        if (!gold) throw MalformedRecordError(line, "label must be Correct, Partially Correct, or Incorrect");
        if (mode == LabelMode::TwoWay && *gold == Label::PartiallyCorrect) {
            gold = Label::Incorrect; // two-way collapse
        }
        rec.gold = gold;
    }

    if (!rec.gold && (rec.split == Split::Train || rec.split == Split::Trial)) {
        throw MissingGoldError(rec.id);
    }
    return rec;
}

} // namespace

Corpus parse_corpus(std::istream& in, LabelMode mode) {
    Corpus corpus;
    corpus.label_mode = mode;
    std::unordered_set<std::string> seen_ids;

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim_view(line).empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw MalformedRecordError(line_no, e.what());
        }
        AnswerRecord rec = parse_record(obj, line_no, mode);
        if (!seen_ids.insert(rec.id).second) throw DuplicateIdError(rec.id);
        corpus.records.push_back(std::move(rec));
    }
    return corpus;
}

Corpus load_corpus(const std::filesystem::path& path, LabelMode mode) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open corpus file: " + path.string());
    return parse_corpus(in, mode);
}

std::string corpus_to_jsonl(const Corpus& corpus) {
    std::string out;
    for (const auto& r : corpus.records) {
        json obj;
        obj["id"] = r.id;
        obj["question"] = r.question;
        obj["answer"] = r.answer;
        obj["rubric_incorrect"] = r.rubric.incorrect;
        obj["rubric_partially_correct"] = r.rubric.partially_correct;
        obj["rubric_correct"] = r.rubric.correct;
        if (r.gold) obj["label"] = std::string(label_to_string(*r.gold));
        obj["split"] = std::string(split_to_string(r.split));
        obj["synthetic"] = r.synthetic;
        out += obj.dump();
        out += '\n';
    }
    return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write corpus file: " + path.string());
    out << corpus_to_jsonl(corpus);
}

std::vector<RubricGroup> group_by_rubric(const Corpus& corpus) {
    std::map<GroupId, RubricGroup> by_id;
    for (const auto& rec : corpus.records) {
        GroupId gid = group_key(rec);
        auto [it, inserted] = by_id.try_emplace(gid);
        if (inserted) {
            it->second.id = gid;
            it->second.question = trim(rec.question);
            it->second.rubric.incorrect = trim(rec.rubric.incorrect);
            it->second.rubric.partially_correct = trim(rec.rubric.partially_correct);
            it->second.rubric.correct = trim(rec.rubric.correct);
        }
        it->second.members.push_back(rec);
    }
    std::vector<RubricGroup> groups;
    groups.reserve(by_id.size());
    for (auto& [_, g] : by_id) groups.push_back(std::move(g));
    return groups;
}

GroupIndex::GroupIndex(const std::vector<RubricGroup>& groups) : groups_(&groups) {
    for (std::size_t i = 0; i < groups.size(); ++i) {
        by_key_.emplace(groups[i].id.hex, i);
    }
}

GroupId GroupIndex::route(const AnswerRecord& record) const {
    auto id = try_route(record);
    if (!id) throw GroupNotFoundError(record.id);
    return *id;
}

std::optional<GroupId> GroupIndex::try_route(const AnswerRecord& record) const {
    GroupId key = group_key(record);
    if (by_key_.count(key.hex) == 0) return std::nullopt;
    return key;
}

const RubricGroup* GroupIndex::find(const GroupId& id) const {
    auto it = by_key_.find(id.hex);
    if (it == by_key_.end()) return nullptr;
    return &(*groups_)[it->second];
}

} // namespace rubriq
