#pragma once

#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace melroi {

// Minimal XML document model: elements, attributes, nesting. Text content
// is not retained (the annotation schema carries everything in attributes).
struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
    std::vector<XmlNode> children;
    int line = 0;
    int column = 0;

    const std::string* attribute(std::string_view key) const {
        for (const auto& [k, v] : attributes)
            if (k == key) return &v;
        return nullptr;
    }
    // Children with a given element name, in document order.
    std::vector<const XmlNode*> children_named(std::string_view name_) const {
        std::vector<const XmlNode*> out;
        for (const XmlNode& c : children)
            if (c.name == name_) out.push_back(&c);
        return out;
    }
};

// Parses one document (prolog and comments allowed) and returns the root
// element. Malformed input raises ParseError carrying line and column.
XmlNode parse_xml(std::string_view text);

std::string xml_escape(std::string_view raw);

} // namespace melroi
