#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace rsplat::xml {

// Minimal XML element tree, enough for the URDF subset: elements, attributes,
// comments and declarations are handled; entities beyond the five standard
// ones, CDATA and processing instructions are not.
struct Element {
    std::string name;
    std::map<std::string, std::string> attributes;
    std::vector<std::unique_ptr<Element>> children;

    const Element* first(const std::string& child_name) const;
    std::vector<const Element*> all(const std::string& child_name) const;
    std::string attr(const std::string& key, const std::string& fallback = "") const;
    bool has_attr(const std::string& key) const;
};

// Parses a document and returns its root element. Throws Error(MalformedXml).
std::unique_ptr<Element> parse(std::string_view text);

}  // namespace rsplat::xml
