#include "vsfleet/xml.hpp"

#include <memory>

#include <expat.h>

#include "vsfleet/error.hpp"

namespace vsfleet::xml {

const std::string* Element::attribute(std::string_view key) const noexcept {
    for (const auto& [k, v] : attributes)
        if (k == key) return &v;
    return nullptr;
}

const Element* Element::child(std::string_view child_name) const noexcept {
    for (const auto& c : children)
        if (c.name == child_name) return &c;
    return nullptr;
}

const Element* Element::child_with(std::string_view child_name, std::string_view key,
                                   std::string_view value) const noexcept {
    for (const auto& c : children) {
        if (c.name != child_name) continue;
        if (const auto* v = c.attribute(key); v && *v == value) return &c;
    }
    return nullptr;
}

namespace {

struct ParserDeleter {
    void operator()(XML_Parser p) const noexcept { XML_ParserFree(p); }
};
using ParserHandle = std::unique_ptr<std::remove_pointer_t<XML_Parser>, ParserDeleter>;

struct TreeBuilder {
    Element root;
    std::vector<Element*> stack;
    bool started = false;
};

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

void XMLCALL on_start(void* data, const XML_Char* name, const XML_Char** attrs) {
    auto* b = static_cast<TreeBuilder*>(data);
    Element* e;
    if (!b->started) {
        b->started = true;
        e = &b->root;
    } else {
        b->stack.back()->children.emplace_back();
        e = &b->stack.back()->children.back();
    }
    e->name = name;
    for (int i = 0; attrs[i]; i += 2) e->attributes.emplace_back(attrs[i], attrs[i + 1]);
    b->stack.push_back(e);
}

void XMLCALL on_end(void* data, const XML_Char*) {
    auto* b = static_cast<TreeBuilder*>(data);
    b->stack.back()->text = trim(b->stack.back()->text);
    b->stack.pop_back();
}

void XMLCALL on_text(void* data, const XML_Char* s, int len) {
    auto* b = static_cast<TreeBuilder*>(data);
    if (!b->stack.empty()) b->stack.back()->text.append(s, static_cast<std::size_t>(len));
}

ParserHandle make_parser() {
    ParserHandle parser(XML_ParserCreate("UTF-8"));
    if (!parser) throw Error(ErrorCode::io_error, "cannot allocate XML parser");
    return parser;
}

bool feed(XML_Parser parser, std::string_view document) {
    return XML_Parse(parser, document.data(), static_cast<int>(document.size()), XML_TRUE) == XML_STATUS_OK;
}

}  // namespace

Element parse(std::string_view document) {
    auto parser = make_parser();
    TreeBuilder builder;
    XML_SetUserData(parser.get(), &builder);
    XML_SetElementHandler(parser.get(), on_start, on_end);
    XML_SetCharacterDataHandler(parser.get(), on_text);
    if (!feed(parser.get(), document)) {
        throw Error(ErrorCode::xml_invalid,
                    std::string(XML_ErrorString(XML_GetErrorCode(parser.get()))) + " at line " +
                        std::to_string(XML_GetCurrentLineNumber(parser.get())));
    }
    return std::move(builder.root);
}

bool well_formed(std::string_view document) noexcept {
    try {
        auto parser = make_parser();
        return feed(parser.get(), document);
    } catch (...) {
        return false;
    }
}

std::string escape(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (char c : text) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace vsfleet::xml
