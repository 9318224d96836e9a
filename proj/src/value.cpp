#include "nsx/value.hpp"

#include <charconv>
#include <cstdio>

namespace nsx {

namespace {

void append_escaped(std::string& out, const std::string& s) {
    out += '"';
    for (unsigned char c : s) {
        switch (c) {
        case '\\': out += "\\\\"; break;
        case '"': out += "\\\""; break;
        case '\n': out += "\\n"; break;
        case '\t': out += "\\t"; break;
        case '\r': out += "\\r"; break;
        default:
            if (c < 0x20 || c >= 0x7f) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\x%02x", c);
                out += buf;
            } else {
                out += char(c);
            }
        }
    }
    out += '"';
}

} // namespace

std::string to_string(const TypedValue& v) {
    switch (v.kind) {
    case Kind::Int:
        return std::to_string(v.i);
    case Kind::Real: {
        char buf[64];
        auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v.r);
        (void)ec;
        return std::string(buf, p);
    }
    case Kind::Str: {
        std::string out;
        append_escaped(out, v.s);
        return out;
    }
    }
    return "?";
}

std::string to_string(const Assignment& a) {
    std::string out;
    for (const auto& [name, value] : a) {
        if (!out.empty()) out += ' ';
        out += name;
        out += '=';
        out += to_string(value);
    }
    return out;
}

} // namespace nsx
