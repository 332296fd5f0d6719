#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace vsfleet::xml {

/// Minimal element tree produced by parse(). Text is the concatenated
/// character data directly inside the element, whitespace-trimmed.
struct Element {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::string text;
    std::vector<Element> children;

    const std::string* attribute(std::string_view key) const noexcept;
    const Element* child(std::string_view child_name) const noexcept;
    /// First child named `child_name` whose attribute `key` equals `value`.
    const Element* child_with(std::string_view child_name, std::string_view key, std::string_view value) const noexcept;
};

/// Throws Error(xml_invalid) when the document is not well-formed.
Element parse(std::string_view document);

bool well_formed(std::string_view document) noexcept;

/// Escapes &, <, >, " and ' for use in text or attribute values.
std::string escape(std::string_view text);

}  // namespace vsfleet::xml
