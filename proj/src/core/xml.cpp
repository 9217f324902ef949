#include "xml.hpp"

#include <cctype>

#include "common.hpp"

namespace rsplat::xml {

const Element* Element::first(const std::string& child_name) const {
    for (const auto& c : children) {
        if (c->name == child_name) return c.get();
    }
    return nullptr;
}

std::vector<const Element*> Element::all(const std::string& child_name) const {
    std::vector<const Element*> out;
    for (const auto& c : children) {
        if (c->name == child_name) out.push_back(c.get());
    }
    return out;
}

std::string Element::attr(const std::string& key, const std::string& fallback) const {
    auto it = attributes.find(key);
    return it == attributes.end() ? fallback : it->second;
}

bool Element::has_attr(const std::string& key) const { return attributes.count(key) > 0; }

namespace {

struct Cursor {
    std::string_view text;
    size_t pos = 0;

    bool done() const { return pos >= text.size(); }
    char peek() const { return text[pos]; }
    char take() { return text[pos++]; }

    [[noreturn]] void fail(const std::string& what) const {
        rsplat::fail(ErrorCode::MalformedXml, what + " at offset " + std::to_string(pos));
    }

    void skip_ws() {
        while (!done() && std::isspace(static_cast<unsigned char>(peek()))) ++pos;
    }

    bool consume(std::string_view s) {
        if (text.substr(pos, s.size()) == s) {
            pos += s.size();
            return true;
        }
        return false;
    }

    void expect(std::string_view s) {
        if (!consume(s)) fail("expected '" + std::string(s) + "'");
    }

    void skip_until(std::string_view end) {
        size_t found = text.find(end, pos);
        if (found == std::string_view::npos) fail("unterminated section");
        pos = found + end.size();
    }
};

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' ||
           c == '.';
}

std::string read_name(Cursor& cur) {
    size_t start = cur.pos;
    while (!cur.done() && is_name_char(cur.peek())) cur.take();
    if (cur.pos == start) cur.fail("expected a name");
    return std::string(cur.text.substr(start, cur.pos - start));
}

std::string decode_entities(std::string_view raw, Cursor& cur) {
    std::string out;
    out.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '&') {
            out.push_back(raw[i]);
            continue;
        }
        auto rest = raw.substr(i);
        if (rest.rfind("&amp;", 0) == 0) {
            out.push_back('&');
            i += 4;
        } else if (rest.rfind("&lt;", 0) == 0) {
            out.push_back('<');
            i += 3;
        } else if (rest.rfind("&gt;", 0) == 0) {
            out.push_back('>');
            i += 3;
        } else if (rest.rfind("&quot;", 0) == 0) {
            out.push_back('"');
            i += 5;
        } else if (rest.rfind("&apos;", 0) == 0) {
            out.push_back('\'');
            i += 5;
        } else {
            cur.fail("unknown entity");
        }
    }
    return out;
}

void skip_misc(Cursor& cur) {
    for (;;) {
        cur.skip_ws();
        if (cur.consume("<!--")) {
            cur.skip_until("-->");
        } else if (cur.consume("<?")) {
            cur.skip_until("?>");
        } else if (cur.consume("<!")) {
            cur.skip_until(">");
        } else {
            return;
        }
    }
}

std::unique_ptr<Element> parse_element(Cursor& cur) {
    cur.expect("<");
    auto elem = std::make_unique<Element>();
    elem->name = read_name(cur);
    for (;;) {
        cur.skip_ws();
        if (cur.done()) cur.fail("unterminated tag");
        if (cur.consume("/>")) return elem;
        if (cur.consume(">")) break;
        std::string key = read_name(cur);
        cur.skip_ws();
        cur.expect("=");
        cur.skip_ws();
        char quote = cur.done() ? '\0' : cur.take();
        if (quote != '"' && quote != '\'') cur.fail("expected quoted attribute value");
        size_t start = cur.pos;
        while (!cur.done() && cur.peek() != quote) cur.take();
        if (cur.done()) cur.fail("unterminated attribute value");
        std::string_view raw = cur.text.substr(start, cur.pos - start);
        cur.take();
        if (elem->attributes.count(key)) cur.fail("duplicate attribute '" + key + "'");
        elem->attributes[key] = decode_entities(raw, cur);
    }
    // Content: child elements and ignored text.
    for (;;) {
        while (!cur.done() && cur.peek() != '<') cur.take();
        if (cur.done()) cur.fail("missing close tag for <" + elem->name + ">");
        if (cur.consume("<!--")) {
            cur.skip_until("-->");
            continue;
        }
        if (cur.text.substr(cur.pos, 2) == "</") {
            cur.expect("</");
            std::string closing = read_name(cur);
            if (closing != elem->name)
                cur.fail("mismatched close tag </" + closing + "> for <" + elem->name + ">");
            cur.skip_ws();
            cur.expect(">");
            return elem;
        }
        elem->children.push_back(parse_element(cur));
    }
}

}  // namespace

std::unique_ptr<Element> parse(std::string_view text) {
    Cursor cur{text};
    skip_misc(cur);
    if (cur.done()) cur.fail("empty document");
    auto root = parse_element(cur);
    skip_misc(cur);
    if (!cur.done()) cur.fail("trailing content after root element");
    return root;
}

}  // namespace rsplat::xml
