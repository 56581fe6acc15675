#pragma once

#include "rubriq/corpus.hpp"
#include "rubriq/errors.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace rubriq {

enum class TemplateSource { Builtin, Induced, UserFile };

/// A text template with single-brace `{name}` placeholders.
struct PromptTemplate {
    std::string text;
    std::set<std::string> required_placeholders;
    TemplateSource source = TemplateSource::Builtin;
};

class MissingBindingError : public Error {
public:
    explicit MissingBindingError(const std::string& name);
};

class UnresolvedPlaceholderError : public Error {
public:
    explicit UnresolvedPlaceholderError(const std::string& name);
};

/// Placeholder occurrences in a template: `{identifier}` tokens only;
/// braces around anything else (JSON, code) are left alone.
std::vector<std::string> find_placeholders(std::string_view text);

/// Substitutes each `{name}` occurrence verbatim. Binding values are never
/// re-scanned, so a value containing "{question}" stays literal.
std::string render(const PromptTemplate& tpl,
                   const std::map<std::string, std::string>& bindings);

struct Violation {
    enum class Kind { Missing, Extraneous };
    Kind kind;
    std::string name;

    bool operator==(const Violation&) const = default;
};

std::string violation_to_string(const Violation& v);

/// Checks that every required placeholder occurs and that no `{name}` token
/// outside the required set remains. Violations are data, not errors.
std::vector<Violation> validate_template(std::string_view text,
                                         const std::set<std::string>& required);

enum class ParseMode { Strict, Lenient };

struct ParsedLabel {
    Label label;
    ParseMode mode;
    std::string raw;
};

/// Strict: trimmed, ASCII-case-insensitive whole-string match against the
/// active label set ("Partially Correct" with a single internal space).
/// Lenient: the last `#Label#` span wins; failing that, the last standalone
/// label word in the text. Returns nullopt when unparsable (the scorer
/// layer turns that into an abstention).
std::optional<ParsedLabel> parse_label(std::string_view text, LabelMode mode,
                                       ParseMode parse_mode);

} // namespace rubriq
