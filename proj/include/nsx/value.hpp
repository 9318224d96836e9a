#pragma once

#include <cmath>
#include <map>
#include <string>

#include "nsx/error.hpp"

namespace nsx {

enum class Kind { Int, Real, Str };

inline const char* kind_name(Kind k) {
    switch (k) {
    case Kind::Int: return "int";
    case Kind::Real: return "real";
    case Kind::Str: return "str";
    }
    return "?";
}

struct TypedValue {
    Kind kind = Kind::Int;
    long long i = 0;
    double r = 0.0;
    std::string s;

    static TypedValue of_int(long long v) {
        TypedValue t;
        t.kind = Kind::Int;
        t.i = v;
        return t;
    }
    static TypedValue of_real(double v) {
        TypedValue t;
        t.kind = Kind::Real;
        t.r = v;
        return t;
    }
    static TypedValue of_str(std::string v) {
        TypedValue t;
        t.kind = Kind::Str;
        t.s = std::move(v);
        return t;
    }

    bool is_numeric() const { return kind != Kind::Str; }

    // Numeric view; exact for Int values up to 2^53.
    double num() const {
        if (kind == Kind::Str) throw EvalError("string value used as number");
        return kind == Kind::Int ? double(i) : r;
    }

    bool operator==(const TypedValue& o) const {
        if (kind != o.kind) return false;
        switch (kind) {
        case Kind::Int: return i == o.i;
        case Kind::Real: return r == o.r;
        case Kind::Str: return s == o.s;
        }
        return false;
    }
    bool operator!=(const TypedValue& o) const { return !(*this == o); }
};

// Ordered map so that iteration (printing, hashing, reporting) is
// deterministic.
using Assignment = std::map<std::string, TypedValue>;

std::string to_string(const TypedValue& v);
std::string to_string(const Assignment& a);

} // namespace nsx
