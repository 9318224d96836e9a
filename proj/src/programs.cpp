#include <cmath>

#include "nsx/harness.hpp"

// The built-in black-box target suite: 21 loop programs whose negated guard
// types cover T1 (>=/<=), T2 (>/<), T3 (==/!=) and T4 (&&/||), plus one
// vulnerable request parser. Each program records one observation row per
// loop-head visit; cnt counts completed iterations.

namespace nsx {

namespace {

ProgramInput int_in(const std::string& name, long long lo, long long hi) {
    ProgramInput in;
    in.name = name;
    in.kind = Kind::Int;
    in.lo = lo;
    in.hi = hi;
    return in;
}

ProgramInput str_in(const std::string& name, long long lo, long long hi,
                    const std::string& length_column) {
    ProgramInput in;
    in.name = name;
    in.kind = Kind::Str;
    in.lo = lo;
    in.hi = hi;
    in.length_column = length_column;
    return in;
}

// Record-at-head loop driver: rows at cnt = 0..T where T is the first
// guard-false visit, truncated to step_limit rows for diverging loops.
template <typename State, typename Guard, typename Body>
Trace drive(State st, Guard guard, Body body, int step_limit,
            std::vector<double> (*obs)(const State&)) {
    Trace tr;
    int cnt = 0;
    for (;;) {
        tr.rows.push_back({cnt, obs(st)});
        if (!guard(st)) break;
        if (cnt + 1 >= step_limit) {
            tr.truncated = true;
            break;
        }
        body(st);
        ++cnt;
    }
    return tr;
}

struct S2 {
    long long a = 0, b = 0;
};
struct S3 {
    long long a = 0, b = 0, c = 0;
};

std::vector<double> obs2(const S2& s) { return {double(s.a), double(s.b)}; }
std::vector<double> obs3_ab(const S3& s) { return {double(s.a), double(s.b)}; }
std::vector<double> obs1(const S2& s) { return {double(s.a)}; }

TargetProgram make(const std::string& name, const std::string& desc,
                   std::vector<ProgramInput> inputs, std::vector<std::string> observed,
                   const std::string& guard_text, const std::string& cls, int samples,
                   std::function<Trace(const Assignment&, int)> run) {
    TargetProgram p;
    p.name = name;
    p.description = desc;
    p.inputs = std::move(inputs);
    p.observed = std::move(observed);
    p.guard_text = guard_text;
    p.guard_class = cls;
    p.default_samples = samples;
    p.run = std::move(run);
    return p;
}

std::vector<TargetProgram> build_suite() {
    std::vector<TargetProgram> s;

    // while (c > d) { c = c + d + 1; d = d + 1; }  starting c=a, d=b
    s.push_back(make(
        "accel_race", "accelerating race; diverges when a > b",
        {int_in("a", -5, 5), int_in("b", -5, 5)}, {"c", "d"}, "c > d", "T1", 6000,
        [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S2& x) { return x.a > x.b; },
                [](S2& x) {
                    x.a = x.a + x.b + 1;
                    x.b = x.b + 1;
                },
                lim, obs2);
        }));
    // c and d explode along the divergent branch; a short horizon keeps the
    // observed values inside the range the accuracy rule can resolve.
    s.back().step_limit = 4;

    // while (i < n) { i++; s += 2; }
    s.push_back(make(
        "count_up", "linear counter with a scaled accumulator",
        {int_in("n", 0, 80)}, {"i", "s"}, "i < n", "T1", 700,
        [](const Assignment& in, int lim) {
            S3 st{0, 0, in.at("n").i};
            return drive(
                st, [](const S3& x) { return x.a < x.c; },
                [](S3& x) {
                    x.a += 1;
                    x.b += 2;
                },
                lim, obs3_ab);
        }));

    // while (x > 0) { x--; y += 2; }
    s.push_back(make(
        "sum_down", "countdown with linear growth",
        {int_in("a", 0, 60), int_in("b", 0, 30)}, {"x", "y"}, "x > 0", "T1", 1200,
        [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S2& x) { return x.a > 0; },
                [](S2& x) {
                    x.a -= 1;
                    x.b += 2;
                },
                lim, obs2);
        }));

    // while (p < n) { p *= 2; k++; }
    s.push_back(make(
        "double_up", "geometric doubling", {int_in("n", 1, 60)}, {"p", "k"}, "p < n", "T1",
        5000, [](const Assignment& in, int lim) {
            S3 st{1, 0, in.at("n").i};
            return drive(
                st, [](const S3& x) { return x.a < x.c; },
                [](S3& x) {
                    x.a *= 2;
                    x.b += 1;
                },
                lim, obs3_ab);
        }));

    // while (s <= n) { i++; s += i; }
    s.push_back(make(
        "tri_sum", "triangular-number accumulator", {int_in("n", 0, 60)}, {"i", "s"},
        "s <= n", "T2", 3000, [](const Assignment& in, int lim) {
            S3 st{0, 0, in.at("n").i};
            return drive(
                st, [](const S3& x) { return x.b <= x.c; },
                [](S3& x) {
                    x.a += 1;
                    x.b += x.a;
                },
                lim, obs3_ab);
        }));

    // while (r >= b) { r -= b; q++; }
    s.push_back(make(
        "div_loop", "division by repeated subtraction",
        {int_in("a", 0, 36), int_in("b", 1, 4)}, {"q", "r"}, "r >= b", "T2", 2600,
        [](const Assignment& in, int lim) {
            S3 st{0, in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S3& x) { return x.b >= x.c; },
                [](S3& x) {
                    x.b -= x.c;
                    x.a += 1;
                },
                lim, obs3_ab);
        }));

    // while (x < y) { x += 3; y += 1; }
    s.push_back(make(
        "race", "pursuit with unequal speeds", {int_in("a", 0, 50), int_in("b", 0, 100)},
        {"x", "y"}, "x < y", "T1", 3000, [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S2& x) { return x.a < x.b; },
                [](S2& x) {
                    x.a += 3;
                    x.b += 1;
                },
                lim, obs2);
        }));

    // while (i != n) { i++; t += 2; }
    s.push_back(make(
        "eq_count", "counter that stops exactly at n", {int_in("n", 0, 120)}, {"i", "t"},
        "i != n", "T3", 450, [](const Assignment& in, int lim) {
            S3 st{0, 0, in.at("n").i};
            return drive(
                st, [](const S3& x) { return x.a != x.c; },
                [](S3& x) {
                    x.a += 1;
                    x.b += 2;
                },
                lim, obs3_ab);
        }));

    // while (x == y) { x += 1; y += 2; }
    s.push_back(make(
        "lockstep", "equality broken after one step",
        {int_in("a", -40, 40), int_in("b", -40, 40)}, {"x", "y"}, "x == y", "T3", 24000,
        [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S2& x) { return x.a == x.b; },
                [](S2& x) {
                    x.a += 1;
                    x.b += 2;
                },
                lim, obs2);
        }));

    // while (x != y) { if (x > y) x--; else x++; }
    s.push_back(make(
        "abs_conv", "walk toward a fixed target",
        {int_in("a", -15, 15), int_in("b", -15, 15)}, {"x", "y"}, "x != y", "T3", 2600,
        [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S2& x) { return x.a != x.b; },
                [](S2& x) { x.a += x.a > x.b ? -1 : 1; }, lim, obs2);
        }));

    // while (x < n && y < m) { x += 1; y += 2; }
    s.push_back(make(
        "and_guard", "two racing bounds, both required",
        {int_in("n", 1, 60), int_in("m", 1, 90)}, {"x", "y"}, "x < n && y < m", "T4", 1500,
        [](const Assignment& in, int lim) {
            struct S {
                long long x, y, n, m;
            } st{0, 0, in.at("n").i, in.at("m").i};
            Trace tr;
            int cnt = 0;
            for (;;) {
                tr.rows.push_back({cnt, {double(st.x), double(st.y)}});
                if (!(st.x < st.n && st.y < st.m)) break;
                if (cnt + 1 >= lim) {
                    tr.truncated = true;
                    break;
                }
                st.x += 1;
                st.y += 2;
                ++cnt;
            }
            return tr;
        }));

    // while (x < n || y < m) { x += 1; y += 1; }
    s.push_back(make(
        "or_guard", "two racing bounds, either sufficient",
        {int_in("n", 1, 50), int_in("m", 1, 50)}, {"x", "y"}, "x < n || y < m", "T4", 900,
        [](const Assignment& in, int lim) {
            struct S {
                long long x, y, n, m;
            } st{0, 0, in.at("n").i, in.at("m").i};
            Trace tr;
            int cnt = 0;
            for (;;) {
                tr.rows.push_back({cnt, {double(st.x), double(st.y)}});
                if (!(st.x < st.n || st.y < st.m)) break;
                if (cnt + 1 >= lim) {
                    tr.truncated = true;
                    break;
                }
                st.x += 1;
                st.y += 1;
                ++cnt;
            }
            return tr;
        }));

    // while (t <= n) { t *= r; s += t; }
    s.push_back(make(
        "geo_sum", "geometric series with sampled ratio",
        {int_in("r", 2, 3), int_in("n", 2, 30)}, {"t", "s"}, "t <= n", "T2", 8000,
        [](const Assignment& in, int lim) {
            struct S {
                long long t, s, r, n;
            } st{1, 1, in.at("r").i, in.at("n").i};
            Trace tr;
            int cnt = 0;
            for (;;) {
                tr.rows.push_back({cnt, {double(st.t), double(st.s)}});
                if (!(st.t <= st.n)) break;
                if (cnt + 1 >= lim) {
                    tr.truncated = true;
                    break;
                }
                st.t *= st.r;
                st.s += st.t;
                ++cnt;
            }
            return tr;
        }));

    // while (i < n) { s += 2*i + 1; i++; }   (s = i^2)
    s.push_back(make(
        "sq_sum", "odd-number sum building squares", {int_in("n", 0, 8)}, {"i", "s"},
        "i < n", "T1", 8000, [](const Assignment& in, int lim) {
            S3 st{0, 0, in.at("n").i};
            return drive(
                st, [](const S3& x) { return x.a < x.c; },
                [](S3& x) {
                    x.b += 2 * x.a + 1;
                    x.a += 1;
                },
                lim, obs3_ab);
        }));

    // while (y > 0) { z += a; y--; }   (z = a*cnt)
    s.push_back(make(
        "mul_acc", "multiplication by repeated addition",
        {int_in("a", 0, 6), int_in("b", 0, 6)}, {"y", "z"}, "y > 0", "T1", 9000,
        [](const Assignment& in, int lim) {
            S3 st{in.at("b").i, 0, in.at("a").i};
            return drive(
                st, [](const S3& x) { return x.a > 0; },
                [](S3& x) {
                    x.b += x.c;
                    x.a -= 1;
                },
                lim, obs3_ab);
        }));

    // while (i >= 1) { s += i; i--; }
    s.push_back(make(
        "gauss_alt", "descending sum", {int_in("n", 0, 10)}, {"i", "s"}, "i >= 1", "T2", 7000,
        [](const Assignment& in, int lim) {
            S2 st{in.at("n").i, 0};
            return drive(
                st, [](const S2& x) { return x.a >= 1; },
                [](S2& x) {
                    x.b += x.a;
                    x.a -= 1;
                },
                lim, obs2);
        }));

    // while (x > t) { x -= d; }
    s.push_back(make(
        "clamp_walk", "stride descent to a threshold",
        {int_in("a", 0, 60), int_in("t", 0, 20), int_in("d", 1, 3)}, {"x"}, "x > t", "T1",
        2200, [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, 0};
            const long long t = in.at("t").i;
            const long long d = in.at("d").i;
            return drive(
                st, [t](const S2& x) { return x.a > t; }, [d](S2& x) { x.a -= d; }, lim, obs1);
        }));

    // while (c != 0) { c--; s += 3; }
    s.push_back(make(
        "delta", "drain to exactly zero", {int_in("a", 0, 50)}, {"c", "s"}, "c != 0", "T3",
        1200, [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, 0};
            return drive(
                st, [](const S2& x) { return x.a != 0; },
                [](S2& x) {
                    x.a -= 1;
                    x.b += 3;
                },
                lim, obs2);
        }));

    // while (i < j) { i += 2; j += 1; }
    s.push_back(make(
        "interleave", "gap closing at unit rate", {int_in("a", 0, 30), int_in("b", 0, 60)},
        {"i", "j"}, "i < j", "T1", 1800, [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S2& x) { return x.a < x.b; },
                [](S2& x) {
                    x.a += 2;
                    x.b += 1;
                },
                lim, obs2);
        }));

    // while (u > 0 && v > 0) { u -= 1; v -= 2; }
    s.push_back(make(
        "drain2", "two tanks, either empties first",
        {int_in("a", 0, 30), int_in("b", 0, 40)}, {"u", "v"}, "u > 0 && v > 0", "T4", 2600,
        [](const Assignment& in, int lim) {
            S2 st{in.at("a").i, in.at("b").i};
            return drive(
                st, [](const S2& x) { return x.a > 0 && x.b > 0; },
                [](S2& x) {
                    x.a -= 1;
                    x.b -= 2;
                },
                lim, obs2);
        }));

    // while (q*q <= n) { q += 1; }
    s.push_back(make(
        "sq_cap", "integer square root by counting", {int_in("n", 0, 3000)}, {"q"},
        "q * q <= n", "T2", 800, [](const Assignment& in, int lim) {
            S2 st{0, 0};
            const long long n = in.at("n").i;
            return drive(
                st, [n](const S2& x) { return x.a * x.a <= n; }, [](S2& x) { x.a += 1; }, lim,
                obs1);
        }));

    return s;
}

// Vulnerable request parser: extracts uri and version fields, validates
// the version, then concatenates both into a 100-byte message buffer. The
// write index `ptr` reaches uri_len + ver_len + 1 at the final write; the
// overflow flag fires when any write lands past index 99. Writes are
// simulated, only the index is tracked.
TargetProgram build_parser() {
    TargetProgram p;
    p.name = "http_parser";
    p.description = "vulnerable request parser (message reassembly overflow)";
    p.inputs = {str_in("input_uri", 0, 120, "uri_length"),
                str_in("input_version", 0, 120, "ver_length")};
    p.observed = {"ptr"};
    p.guard_text = "ptr <= 99"; // safety condition at the write site
    p.guard_class = "EXP";
    p.default_samples = 20000;
    p.prepare = [](const Assignment& a) {
        Assignment out = a;
        // protocol marker: version[5] must be '1' (format knowledge)
        auto it = out.find("input_version");
        if (it != out.end() && it->second.s.size() > 5) it->second.s[5] = '1';
        return out;
    };
    p.run = [](const Assignment& a, int /*step_limit*/) {
        const std::string input =
            "GET " + a.at("input_uri").s + " " + a.at("input_version").s + "\n";
        Trace tr;
        if (input.compare(0, 4, "GET ") != 0) {
            tr.rejected = true;
            return tr;
        }
        size_t idx = 4;
        char uri_buf[80];
        char ver_buf[80];
        long long uri_len = 0, ver_len = 0;
        while (idx < input.size() && input[idx] != ' ') {
            if (uri_len < 80) uri_buf[uri_len] = input[idx];
            ++uri_len;
            ++idx;
        }
        if (idx >= input.size()) {
            tr.rejected = true;
            return tr;
        }
        ++idx;
        while (idx < input.size() && input[idx] != '\n') {
            if (ver_len < 80) ver_buf[ver_len] = input[idx];
            ++ver_len;
            ++idx;
        }
        (void)uri_buf;
        if (ver_len < 8 || ver_buf[5] != '1') {
            tr.rejected = true;
            return tr;
        }
        // message reassembly: msgbuf[100]
        long long ptr = 0;
        long long max_write = -1;
        for (long long i = 0; i < uri_len; ++i) max_write = std::max(max_write, ptr++);
        max_write = std::max(max_write, ptr++); // ','
        for (long long j = 0; j < ver_len; ++j) max_write = std::max(max_write, ptr++);
        max_write = std::max(max_write, ptr); // terminator
        tr.overflow = max_write > 99;
        tr.rows.push_back({0, {double(ptr)}});
        return tr;
    };
    return p;
}

} // namespace

const std::vector<TargetProgram>& builtin_loop_suite() {
    static const std::vector<TargetProgram> suite = build_suite();
    return suite;
}

const TargetProgram& builtin_exploit_program() {
    static const TargetProgram p = build_parser();
    return p;
}

const TargetProgram* find_program(const std::string& name) {
    for (const auto& p : builtin_loop_suite())
        if (p.name == name) return &p;
    if (builtin_exploit_program().name == name) return &builtin_exploit_program();
    return nullptr;
}

} // namespace nsx
