#include "melroi/xml.hpp"

#include <cctype>

#include "melroi/errors.hpp"

namespace melroi {

namespace {

class Cursor {
public:
    explicit Cursor(std::string_view text) : text_(text) {}

    bool eof() const { return pos_ >= text_.size(); }
    char peek() const { return text_[pos_]; }
    bool starts_with(std::string_view s) const { return text_.substr(pos_, s.size()) == s; }

    char advance() {
        const char c = text_[pos_++];
        if (c == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        return c;
    }

    void advance_by(std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) advance();
    }

    void skip_whitespace() {
        while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) advance();
    }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    int line() const { return line_; }
    int column() const { return col_; }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

bool is_name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == ':' || c == '.';
}

std::string unescape(Cursor& cur, const std::string& raw) {
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] != '&') {
            out.push_back(raw[i]);
            continue;
        }
        const std::size_t semi = raw.find(';', i);
        if (semi == std::string::npos) cur.fail("unterminated entity reference");
        const std::string ent = raw.substr(i + 1, semi - i - 1);
        if (ent == "amp") out.push_back('&');
        else if (ent == "lt") out.push_back('<');
        else if (ent == "gt") out.push_back('>');
        else if (ent == "quot") out.push_back('"');
        else if (ent == "apos") out.push_back('\'');
        else cur.fail("unknown entity &" + ent + ";");
        i = semi;
    }
    return out;
}

void skip_misc(Cursor& cur) {
    for (;;) {
        cur.skip_whitespace();
        if (cur.starts_with("<!--")) {
            cur.advance_by(4);
            while (!cur.starts_with("-->")) {
                if (cur.eof()) cur.fail("unterminated comment");
                cur.advance();
            }
            cur.advance_by(3);
        } else if (cur.starts_with("<?")) {
            cur.advance_by(2);
            while (!cur.starts_with("?>")) {
                if (cur.eof()) cur.fail("unterminated processing instruction");
                cur.advance();
            }
            cur.advance_by(2);
        } else {
            return;
        }
    }
}

std::string read_name(Cursor& cur) {
    std::string name;
    while (!cur.eof() && is_name_char(cur.peek())) name.push_back(cur.advance());
    if (name.empty()) cur.fail("expected a name");
    return name;
}

XmlNode parse_element(Cursor& cur) {
    if (cur.eof() || cur.peek() != '<') cur.fail("expected '<'");
    XmlNode node;
    node.line = cur.line();
    node.column = cur.column();
    cur.advance();
    node.name = read_name(cur);

    for (;;) {
        cur.skip_whitespace();
        if (cur.eof()) cur.fail("unterminated start tag <" + node.name + ">");
        if (cur.peek() == '/') {
            cur.advance();
            if (cur.eof() || cur.peek() != '>') cur.fail("expected '>' after '/'");
            cur.advance();
            return node; // self-closing
        }
        if (cur.peek() == '>') {
            cur.advance();
            break;
        }
        std::string key = read_name(cur);
        cur.skip_whitespace();
        if (cur.eof() || cur.peek() != '=') cur.fail("expected '=' after attribute " + key);
        cur.advance();
        cur.skip_whitespace();
        if (cur.eof() || (cur.peek() != '"' && cur.peek() != '\''))
            cur.fail("expected quoted value for attribute " + key);
        const char quote = cur.advance();
        std::string raw;
        while (!cur.eof() && cur.peek() != quote) {
            if (cur.peek() == '<') cur.fail("'<' inside attribute value");
            raw.push_back(cur.advance());
        }
        if (cur.eof()) cur.fail("unterminated attribute value for " + key);
        cur.advance();
        node.attributes.emplace_back(std::move(key), unescape(cur, raw));
    }

    // Content: child elements and ignorable text until the matching end tag.
    for (;;) {
        while (!cur.eof() && cur.peek() != '<') cur.advance();
        if (cur.eof()) cur.fail("missing end tag </" + node.name + ">");
        if (cur.starts_with("<!--") || cur.starts_with("<?")) {
            skip_misc(cur);
            continue;
        }
        if (cur.starts_with("</")) {
            cur.advance_by(2);
            const std::string closer = read_name(cur);
            if (closer != node.name)
                cur.fail("mismatched end tag </" + closer + ">, expected </" + node.name + ">");
            cur.skip_whitespace();
            if (cur.eof() || cur.peek() != '>') cur.fail("expected '>' in end tag");
            cur.advance();
            return node;
        }
        node.children.push_back(parse_element(cur));
    }
}

} // namespace

XmlNode parse_xml(std::string_view text) {
    Cursor cur(text);
    skip_misc(cur);
    if (cur.eof()) cur.fail("empty document");
    XmlNode root = parse_element(cur);
    skip_misc(cur);
    if (!cur.eof()) cur.fail("trailing content after root element");
    return root;
}

std::string xml_escape(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (char c : raw) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

} // namespace melroi
