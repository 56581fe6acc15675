#include "rubriq/prompt.hpp"

#include "rubriq/strings.hpp"

#include <algorithm>

namespace rubriq {

MissingBindingError::MissingBindingError(const std::string& name)
    : Error("missing binding for placeholder: " + name) {}

UnresolvedPlaceholderError::UnresolvedPlaceholderError(const std::string& name)
    : Error("unresolved placeholder in rendered prompt: " + name) {}

namespace {

bool is_ident_start(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
}

bool is_ident_char(char c) {
    return is_ident_start(c) || (c >= '0' && c <= '9');
}

// Returns the identifier inside {..} starting at pos (which must point at
// '{'), or empty if this is not a placeholder token.
std::string_view placeholder_at(std::string_view text, std::size_t pos, std::size_t* end) {
    std::size_t i = pos + 1;
    if (i >= text.size() || !is_ident_start(text[i])) return {};
    std::size_t start = i;
    while (i < text.size() && is_ident_char(text[i])) ++i;
    if (i >= text.size() || text[i] != '}') return {};
    *end = i + 1;
    return text.substr(start, i - start);
}

} // namespace

std::vector<std::string> find_placeholders(std::string_view text) {
    std::vector<std::string> out;
    std::size_t pos = 0;
    while ((pos = text.find('{', pos)) != std::string_view::npos) {
        std::size_t end = 0;
        std::string_view name = placeholder_at(text, pos, &end);
        if (!name.empty()) {
            out.emplace_back(name);
            pos = end;
        } else {
            ++pos;
        }
    }
    return out;
}

std::string render(const PromptTemplate& tpl,
                   const std::map<std::string, std::string>& bindings) {
    std::string out;
    out.reserve(tpl.text.size());
    std::string_view text = tpl.text;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t brace = text.find('{', pos);
        if (brace == std::string_view::npos) {
            out.append(text.substr(pos));
            break;
        }
        out.append(text.substr(pos, brace - pos));
        std::size_t end = 0;
        std::string_view name = placeholder_at(text, brace, &end);
        if (name.empty()) {
            out.push_back('{');
            pos = brace + 1;
            continue;
        }
        auto it = bindings.find(std::string(name));
        if (it == bindings.end()) {
            if (tpl.required_placeholders.count(std::string(name)) > 0) {
                throw MissingBindingError(std::string(name));
            }
            throw UnresolvedPlaceholderError(std::string(name));
        }
        out.append(it->second); // never re-scanned
        pos = end;
    }
    return out;
}

std::string violation_to_string(const Violation& v) {
    return (v.kind == Violation::Kind::Missing ? "missing placeholder {" : "extraneous placeholder {") +
           v.name + "}";
}

std::vector<Violation> validate_template(std::string_view text,
                                         const std::set<std::string>& required) {
    std::vector<Violation> out;
    std::vector<std::string> found = find_placeholders(text);
    for (const auto& name : required) {
        if (std::find(found.begin(), found.end(), name) == found.end()) {
            out.push_back({Violation::Kind::Missing, name});
        }
    }
    std::set<std::string> reported;
    for (const auto& name : found) {
        if (required.count(name) == 0 && reported.insert(name).second) {
            out.push_back({Violation::Kind::Extraneous, name});
        }
    }
    return out;
}

namespace {

// Matches a label word (case-insensitive) at position pos with word
// boundaries on both sides; "correct" inside "incorrect" does not match.
bool standalone_match(std::string_view text, std::size_t pos, std::string_view word) {
    if (pos + word.size() > text.size()) return false;
    if (!iequals_ascii(text.substr(pos, word.size()), word)) return false;
    auto is_word_char = [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9');
    };
    if (pos > 0 && is_word_char(text[pos - 1])) return false;
    std::size_t after = pos + word.size();
    if (after < text.size() && is_word_char(text[after])) return false;
    return true;
}

std::optional<Label> strict_parse(std::string_view text, const std::vector<Label>& labels) {
    std::string_view t = trim_view(text);
    for (Label l : labels) {
        if (iequals_ascii(t, label_to_string(l))) return l;
    }
    return std::nullopt;
}

// Last `#Label#` span: adjacent '#' pairs are inspected in order; the last
// pair whose inner text strict-parses wins ("#Incorrect# .. #Correct#" -> Correct).
std::optional<Label> last_hash_span(std::string_view text, const std::vector<Label>& labels) {
    std::vector<std::size_t> hashes;
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '#') hashes.push_back(i);
    }
    std::optional<Label> result;
    for (std::size_t i = 0; i + 1 < hashes.size(); ++i) {
        std::string_view inner = text.substr(hashes[i] + 1, hashes[i + 1] - hashes[i] - 1);
        if (auto l = strict_parse(inner, labels)) result = l;
    }
    return result;
}

// Last standalone label word; on equal end positions the longer label wins,
// so "partially correct" beats its trailing "correct".
std::optional<Label> last_standalone_word(std::string_view text, const std::vector<Label>& labels) {
    std::optional<Label> best;
    std::size_t best_end = 0;
    std::size_t best_len = 0;
    for (Label l : labels) {
        std::string_view word = label_to_string(l);
        for (std::size_t pos = 0; pos + word.size() <= text.size(); ++pos) {
            if (!standalone_match(text, pos, word)) continue;
            std::size_t end = pos + word.size();
            if (end > best_end || (end == best_end && word.size() > best_len)) {
                best = l;
                best_end = end;
                best_len = word.size();
            }
        }
    }
    return best;
}

} // namespace

std::optional<ParsedLabel> parse_label(std::string_view text, LabelMode mode,
                                       ParseMode parse_mode) {
    const std::vector<Label> labels = active_labels(mode);
    std::optional<Label> result;
    if (parse_mode == ParseMode::Strict) {
        result = strict_parse(text, labels);
    } else {
        result = last_hash_span(text, labels);
        if (!result) result = last_standalone_word(text, labels);
    }
    if (!result) return std::nullopt;
    return ParsedLabel{*result, parse_mode, std::string(text)};
}

} // namespace rubriq
