#include "nsx/parser.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <cstring>

#include "nsx/error.hpp"

namespace nsx {

namespace {

// ---------------------------------------------------------------------------
// Lexer

enum class Tok {
    End, Ident, Num, Str,
    Semi, Comma, LParen, RParen, DotDot, Arrow,
    EqEq, Ne, Ge, Le, Gt, Lt,
    AndAnd, OrOr,
    Plus, Minus, Star, Slash,
};

struct Token {
    Tok kind = Tok::End;
    std::string text;  // Ident / Str (decoded)
    double num = 0.0;  // Num
    int line = 1, col = 1;
};

class Lexer {
public:
    explicit Lexer(const std::string& src) : src_(src) { advance(); }

    const Token& peek() const { return cur_; }

    Token take() {
        Token t = cur_;
        advance();
        return t;
    }

    // Snapshot/restore for the one-token-of-lookahead-is-not-enough spot
    // (parenthesized constraint vs parenthesized expression).
    struct Mark {
        size_t pos;
        int line, col;
        Token cur;
    };
    Mark mark() const { return {pos_, line_, col_, cur_}; }
    void rewind(const Mark& m) {
        pos_ = m.pos;
        line_ = m.line;
        col_ = m.col;
        cur_ = m.cur;
    }

private:
    [[noreturn]] void fail(const std::string& msg, int line, int col) {
        throw ParseError(msg, line, col);
    }

    int cur_char() const { return pos_ < src_.size() ? (unsigned char)src_[pos_] : -1; }

    void bump() {
        if (pos_ < src_.size()) {
            if (src_[pos_] == '\n') {
                ++line_;
                col_ = 1;
            } else {
                ++col_;
            }
            ++pos_;
        }
    }

    void skip_space() {
        for (;;) {
            int c = cur_char();
            if (c == '#') {
                while (cur_char() != -1 && cur_char() != '\n') bump();
            } else if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
                bump();
            } else {
                return;
            }
        }
    }

    void advance() {
        skip_space();
        cur_ = Token{};
        cur_.line = line_;
        cur_.col = col_;
        int c = cur_char();
        if (c == -1) {
            cur_.kind = Tok::End;
            return;
        }
        if (std::isalpha(c) || c == '_') {
            std::string s;
            while (std::isalnum(cur_char()) || cur_char() == '_') {
                s += char(cur_char());
                bump();
            }
            cur_.kind = Tok::Ident;
            cur_.text = std::move(s);
            return;
        }
        if (std::isdigit(c)) {
            lex_number();
            return;
        }
        if (c == '"') {
            lex_string();
            return;
        }
        auto two = [&](char a, char b) {
            return src_[pos_] == a && pos_ + 1 < src_.size() && src_[pos_ + 1] == b;
        };
        if (two('=', '=')) { bump(); bump(); cur_.kind = Tok::EqEq; return; }
        if (two('!', '=')) { bump(); bump(); cur_.kind = Tok::Ne; return; }
        if (two('>', '=')) { bump(); bump(); cur_.kind = Tok::Ge; return; }
        if (two('<', '=')) { bump(); bump(); cur_.kind = Tok::Le; return; }
        if (two('&', '&')) { bump(); bump(); cur_.kind = Tok::AndAnd; return; }
        if (two('|', '|')) { bump(); bump(); cur_.kind = Tok::OrOr; return; }
        if (two('.', '.')) { bump(); bump(); cur_.kind = Tok::DotDot; return; }
        if (two('-', '>')) { bump(); bump(); cur_.kind = Tok::Arrow; return; }
        switch (c) {
        case ';': bump(); cur_.kind = Tok::Semi; return;
        case ',': bump(); cur_.kind = Tok::Comma; return;
        case '(': bump(); cur_.kind = Tok::LParen; return;
        case ')': bump(); cur_.kind = Tok::RParen; return;
        case '>': bump(); cur_.kind = Tok::Gt; return;
        case '<': bump(); cur_.kind = Tok::Lt; return;
        case '+': bump(); cur_.kind = Tok::Plus; return;
        case '-': bump(); cur_.kind = Tok::Minus; return;
        case '*': bump(); cur_.kind = Tok::Star; return;
        case '/': bump(); cur_.kind = Tok::Slash; return;
        default:
            fail(std::string("unexpected character '") + char(c) + "'", line_, col_);
        }
    }

    void lex_number() {
        const int line = line_, col = col_;
        std::string s;
        while (std::isdigit(cur_char())) {
            s += char(cur_char());
            bump();
        }
        // A '.' starts a fraction only if not part of a '..' range token.
        if (cur_char() == '.' && pos_ + 1 < src_.size() && src_[pos_ + 1] != '.') {
            s += '.';
            bump();
            if (!std::isdigit(cur_char())) fail("digit expected after '.'", line_, col_);
            while (std::isdigit(cur_char())) {
                s += char(cur_char());
                bump();
            }
        }
        if (cur_char() == 'e' || cur_char() == 'E') {
            s += 'e';
            bump();
            if (cur_char() == '+' || cur_char() == '-') {
                s += char(cur_char());
                bump();
            }
            if (!std::isdigit(cur_char())) fail("digit expected in exponent", line_, col_);
            while (std::isdigit(cur_char())) {
                s += char(cur_char());
                bump();
            }
        }
        double v = 0.0;
        auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || p != s.data() + s.size())
            fail("malformed number '" + s + "'", line, col);
        cur_.kind = Tok::Num;
        cur_.num = v;
        cur_.line = line;
        cur_.col = col;
    }

    void lex_string() {
        const int line = line_, col = col_;
        bump(); // opening quote
        std::string out;
        for (;;) {
            int c = cur_char();
            if (c == -1 || c == '\n') fail("unterminated string literal", line, col);
            if (c == '"') {
                bump();
                break;
            }
            if (c == '\\') {
                bump();
                int e = cur_char();
                switch (e) {
                case '\\': out += '\\'; bump(); break;
                case '"': out += '"'; bump(); break;
                case 'n': out += '\n'; bump(); break;
                case 't': out += '\t'; bump(); break;
                case 'r': out += '\r'; bump(); break;
                case '0': out += '\0'; bump(); break;
                case 'x': {
                    bump();
                    int hi = hex_digit();
                    int lo = hex_digit();
                    out += char(hi * 16 + lo);
                    break;
                }
                default:
                    fail("bad escape sequence", line_, col_);
                }
            } else {
                out += char(c);
                bump();
            }
        }
        cur_.kind = Tok::Str;
        cur_.text = std::move(out);
        cur_.line = line;
        cur_.col = col;
    }

    int hex_digit() {
        int c = cur_char();
        int v;
        if (c >= '0' && c <= '9') v = c - '0';
        else if (c >= 'a' && c <= 'f') v = c - 'a' + 10;
        else if (c >= 'A' && c <= 'F') v = c - 'A' + 10;
        else { fail("hex digit expected", line_, col_); }
        bump();
        return v;
    }

    const std::string& src_;
    size_t pos_ = 0;
    int line_ = 1, col_ = 1;
    Token cur_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
public:
    explicit Parser(const std::string& src) : lex_(src) {}

    ConstraintFile parse_file() {
        ConstraintFile cf;
        while (lex_.peek().kind != Tok::End) {
            const Token& t = lex_.peek();
            if (t.kind != Tok::Ident)
                throw ParseError("declaration, assert or neural expected", t.line, t.col);
            if (t.text == "int" || t.text == "real" || t.text == "str")
                cf.decls.push_back(parse_decl());
            else if (t.text == "assert")
                cf.symbolic.push_back(parse_assert());
            else if (t.text == "neural")
                cf.neural.push_back(parse_neural());
            else
                throw ParseError("unknown directive '" + t.text + "'", t.line, t.col);
        }
        validate(cf);
        return cf;
    }

    ConstraintPtr parse_single_constraint() {
        ConstraintPtr c = parse_constraint();
        expect(Tok::End, "end of input");
        return c;
    }

private:
    VarDecl parse_decl() {
        Token kw = lex_.take();
        VarDecl d;
        d.kind = kw.text == "int" ? Kind::Int : kw.text == "real" ? Kind::Real : Kind::Str;
        Token name = expect(Tok::Ident, "variable name");
        if (is_keyword(name.text))
            throw ParseError("'" + name.text + "' is a reserved word", name.line, name.col);
        d.name = name.text;
        if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "in") {
            if (d.kind == Kind::Str)
                throw ParseError("string variables take 'maxlen', not 'in'", lex_.peek().line,
                                 lex_.peek().col);
            lex_.take();
            d.has_domain = true;
            d.lo = parse_signed_number();
            expect(Tok::DotDot, "'..'");
            d.hi = parse_signed_number();
        } else if (lex_.peek().kind == Tok::Ident && lex_.peek().text == "maxlen") {
            if (d.kind != Kind::Str)
                throw ParseError("'maxlen' applies to string variables only", lex_.peek().line,
                                 lex_.peek().col);
            lex_.take();
            Token n = expect(Tok::Num, "length");
            d.has_maxlen = true;
            d.maxlen = (long long)n.num;
        }
        expect(Tok::Semi, "';'");
        return d;
    }

    ConstraintPtr parse_assert() {
        lex_.take(); // assert
        ConstraintPtr c = parse_constraint();
        expect(Tok::Semi, "';'");
        return c;
    }

    NeuralDecl parse_neural() {
        Token kw = lex_.take();
        NeuralDecl n;
        n.line = kw.line;
        n.col = kw.col;
        Token path = expect(Tok::Str, "model path string");
        n.model_path = path.text;
        expect(Tok::LParen, "'('");
        n.inputs = parse_name_list();
        expect(Tok::RParen, "')'");
        expect(Tok::Arrow, "'->'");
        expect(Tok::LParen, "'('");
        n.outputs = parse_name_list();
        expect(Tok::RParen, "')'");
        expect(Tok::Semi, "';'");
        return n;
    }

    std::vector<std::string> parse_name_list() {
        std::vector<std::string> names;
        names.push_back(expect(Tok::Ident, "variable name").text);
        while (lex_.peek().kind == Tok::Comma) {
            lex_.take();
            names.push_back(expect(Tok::Ident, "variable name").text);
        }
        return names;
    }

    double parse_signed_number() {
        bool neg = false;
        if (lex_.peek().kind == Tok::Minus) {
            lex_.take();
            neg = true;
        }
        Token n = expect(Tok::Num, "number");
        return neg ? -n.num : n.num;
    }

    ConstraintPtr parse_constraint() {
        ConstraintPtr c = parse_conj();
        while (lex_.peek().kind == Tok::OrOr) {
            Token op = lex_.take();
            ConstraintPtr rhs = parse_conj();
            auto node = std::const_pointer_cast<Constraint>(make_or(c, rhs));
            node->line = op.line;
            node->col = op.col;
            c = node;
        }
        return c;
    }

    ConstraintPtr parse_conj() {
        ConstraintPtr c = parse_prim();
        while (lex_.peek().kind == Tok::AndAnd) {
            Token op = lex_.take();
            ConstraintPtr rhs = parse_prim();
            auto node = std::const_pointer_cast<Constraint>(make_and(c, rhs));
            node->line = op.line;
            node->col = op.col;
            c = node;
        }
        return c;
    }

    ConstraintPtr parse_prim() {
        const Token& t = lex_.peek();
        if (t.kind == Tok::Ident && t.text == "contains") {
            Token kw = lex_.take();
            expect(Tok::LParen, "'('");
            ExprPtr h = parse_expr();
            expect(Tok::Comma, "','");
            ExprPtr n = parse_expr();
            expect(Tok::RParen, "')'");
            auto node = std::const_pointer_cast<Constraint>(make_contains(h, n));
            node->line = kw.line;
            node->col = kw.col;
            return node;
        }
        if (t.kind == Tok::LParen) {
            // Either a parenthesized constraint or a parenthesized expression
            // starting an atom; try the atom reading first and rewind on
            // failure. Report whichever error got further into the input.
            auto m = lex_.mark();
            try {
                return parse_atom();
            } catch (const ParseError& atom_err) {
                lex_.rewind(m);
                lex_.take(); // '('
                try {
                    ConstraintPtr c = parse_constraint();
                    expect(Tok::RParen, "')'");
                    return c;
                } catch (const ParseError& grp_err) {
                    throw further(atom_err, grp_err);
                }
            }
        }
        return parse_atom();
    }

    static ParseError further(const ParseError& a, const ParseError& b) {
        if (a.line != b.line) return a.line > b.line ? a : b;
        return a.col >= b.col ? a : b;
    }

    ConstraintPtr parse_atom() {
        ExprPtr lhs = parse_expr();
        const Token& t = lex_.peek();
        CmpOp op;
        switch (t.kind) {
        case Tok::EqEq: op = CmpOp::Eq; break;
        case Tok::Ne: op = CmpOp::Ne; break;
        case Tok::Gt: op = CmpOp::Gt; break;
        case Tok::Ge: op = CmpOp::Ge; break;
        case Tok::Lt: op = CmpOp::Lt; break;
        case Tok::Le: op = CmpOp::Le; break;
        default:
            throw ParseError("comparison operator expected", t.line, t.col);
        }
        Token opt = lex_.take();
        ExprPtr rhs = parse_expr();
        auto node = std::const_pointer_cast<Constraint>(make_atom(op, lhs, rhs));
        node->line = opt.line;
        node->col = opt.col;
        return node;
    }

    ExprPtr parse_expr() {
        ExprPtr e = parse_term();
        for (;;) {
            const Tok k = lex_.peek().kind;
            if (k != Tok::Plus && k != Tok::Minus) break;
            Token op = lex_.take();
            ExprPtr rhs = parse_term();
            auto node = std::const_pointer_cast<Expr>(
                make_arith(k == Tok::Plus ? ArithOp::Add : ArithOp::Sub, e, rhs));
            node->line = op.line;
            node->col = op.col;
            e = node;
        }
        return e;
    }

    ExprPtr parse_term() {
        ExprPtr e = parse_factor();
        for (;;) {
            const Tok k = lex_.peek().kind;
            if (k != Tok::Star && k != Tok::Slash) break;
            Token op = lex_.take();
            ExprPtr rhs = parse_factor();
            auto node = std::const_pointer_cast<Expr>(
                make_arith(k == Tok::Star ? ArithOp::Mul : ArithOp::Div, e, rhs));
            node->line = op.line;
            node->col = op.col;
            e = node;
        }
        return e;
    }

    ExprPtr parse_factor() {
        const Token t = lex_.peek();
        switch (t.kind) {
        case Tok::Num: {
            lex_.take();
            auto node = std::const_pointer_cast<Expr>(make_num(t.num));
            node->line = t.line;
            node->col = t.col;
            return node;
        }
        case Tok::Str: {
            lex_.take();
            auto node = std::const_pointer_cast<Expr>(make_str(t.text));
            node->line = t.line;
            node->col = t.col;
            return node;
        }
        case Tok::Minus: {
            lex_.take();
            ExprPtr inner = parse_factor();
            if (inner->node == Expr::Node::ConstNum) {
                auto node = std::const_pointer_cast<Expr>(make_num(-inner->num));
                node->line = t.line;
                node->col = t.col;
                return node;
            }
            // General negation is sugar for 0 - e.
            auto node = std::const_pointer_cast<Expr>(make_arith(ArithOp::Sub, make_num(0.0), inner));
            node->line = t.line;
            node->col = t.col;
            return node;
        }
        case Tok::LParen: {
            lex_.take();
            ExprPtr e = parse_expr();
            expect(Tok::RParen, "')'");
            return e;
        }
        case Tok::Ident: {
            if (t.text == "strlen" || t.text == "strstr" || t.text == "concat")
                return parse_builtin(t.text);
            if (is_keyword(t.text))
                throw ParseError("unexpected keyword '" + t.text + "'", t.line, t.col);
            lex_.take();
            auto node = std::const_pointer_cast<Expr>(make_var(t.text));
            node->line = t.line;
            node->col = t.col;
            return node;
        }
        default:
            throw ParseError("expression expected", t.line, t.col);
        }
    }

    ExprPtr parse_builtin(const std::string& fn) {
        Token kw = lex_.take();
        expect(Tok::LParen, "'('");
        ExprPtr a = parse_expr();
        ExprPtr result;
        if (fn == "strlen") {
            result = make_strlen(a);
        } else {
            expect(Tok::Comma, "','");
            ExprPtr b = parse_expr();
            result = fn == "strstr" ? make_strstr(a, b) : make_concat(a, b);
        }
        expect(Tok::RParen, "')'");
        auto node = std::const_pointer_cast<Expr>(result);
        node->line = kw.line;
        node->col = kw.col;
        return node;
    }

    static bool is_keyword(const std::string& s) {
        static const char* kws[] = {"int",  "real",   "str",    "assert", "neural",
                                    "in",   "maxlen", "strlen", "strstr", "concat",
                                    "contains"};
        for (const char* k : kws)
            if (s == k) return true;
        return false;
    }

    Token expect(Tok kind, const char* what) {
        const Token& t = lex_.peek();
        if (t.kind != kind) throw ParseError(std::string(what) + " expected", t.line, t.col);
        return lex_.take();
    }

    Lexer lex_;
};

// ---------------------------------------------------------------------------
// Printer

void print_expr(std::string& out, const Expr& e, int parent_prec);

int expr_prec(const Expr& e) {
    if (e.node != Expr::Node::Arith) return 3;
    return (e.op == ArithOp::Mul || e.op == ArithOp::Div) ? 2 : 1;
}

void print_escaped(std::string& out, const std::string& s) {
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

void print_expr(std::string& out, const Expr& e, int parent_prec) {
    switch (e.node) {
    case Expr::Node::ConstNum:
        out += print_number(e.num);
        return;
    case Expr::Node::ConstStr:
        print_escaped(out, e.str);
        return;
    case Expr::Node::VarRef:
        out += e.name;
        return;
    case Expr::Node::StrLen:
        out += "strlen(";
        print_expr(out, *e.a, 0);
        out += ")";
        return;
    case Expr::Node::StrStr:
    case Expr::Node::Concat:
        out += e.node == Expr::Node::StrStr ? "strstr(" : "concat(";
        print_expr(out, *e.a, 0);
        out += ", ";
        print_expr(out, *e.b, 0);
        out += ")";
        return;
    case Expr::Node::Arith: {
        const int prec = expr_prec(e);
        const bool parens = prec < parent_prec;
        if (parens) out += "(";
        print_expr(out, *e.a, prec);
        out += " ";
        out += arith_op_name(e.op);
        out += " ";
        print_expr(out, *e.b, prec + 1); // left-associative
        if (parens) out += ")";
        return;
    }
    }
}

int constraint_prec(const Constraint& c) {
    switch (c.node) {
    case Constraint::Node::Or: return 1;
    case Constraint::Node::And: return 2;
    default: return 3;
    }
}

void print_constraint(std::string& out, const Constraint& c, int parent_prec) {
    switch (c.node) {
    case Constraint::Node::Atom:
        print_expr(out, *c.lhs, 0);
        out += " ";
        out += cmp_op_name(c.cmp);
        out += " ";
        print_expr(out, *c.rhs, 0);
        return;
    case Constraint::Node::Contains:
        out += "contains(";
        print_expr(out, *c.lhs, 0);
        out += ", ";
        print_expr(out, *c.rhs, 0);
        out += ")";
        return;
    case Constraint::Node::And:
    case Constraint::Node::Or: {
        const int prec = constraint_prec(c);
        const bool parens = prec < parent_prec;
        if (parens) out += "(";
        print_constraint(out, *c.a, prec);
        out += c.node == Constraint::Node::And ? " && " : " || ";
        print_constraint(out, *c.b, prec + 1);
        if (parens) out += ")";
        return;
    }
    }
}

} // namespace

ConstraintFile parse(const std::string& text) { return Parser(text).parse_file(); }

ConstraintPtr parse_constraint_text(const std::string& text, const std::vector<VarDecl>& decls) {
    ConstraintPtr c = Parser(text).parse_single_constraint();
    ConstraintFile tmp;
    tmp.decls = decls;
    tmp.symbolic = {c};
    validate(tmp);
    return c;
}

std::string print_number(double v) {
    char buf[64];
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, p);
}

std::string print(const Expr& e) {
    std::string out;
    print_expr(out, e, 0);
    return out;
}

std::string print(const Constraint& c) {
    std::string out;
    print_constraint(out, c, 0);
    return out;
}

std::string print(const ConstraintFile& cf) {
    std::string out;
    for (const auto& d : cf.decls) {
        out += kind_name(d.kind);
        out += " ";
        out += d.name;
        if (d.has_domain) {
            out += " in ";
            out += print_number(d.lo);
            out += "..";
            out += print_number(d.hi);
        }
        if (d.has_maxlen) {
            out += " maxlen ";
            out += std::to_string(d.maxlen);
        }
        out += ";\n";
    }
    for (const auto& c : cf.symbolic) {
        out += "assert ";
        print_constraint(out, *c, 0);
        out += ";\n";
    }
    for (const auto& n : cf.neural) {
        out += "neural ";
        print_escaped(out, n.model_path);
        out += " (";
        for (size_t i = 0; i < n.inputs.size(); ++i) {
            if (i) out += ", ";
            out += n.inputs[i];
        }
        out += ") -> (";
        for (size_t i = 0; i < n.outputs.size(); ++i) {
            if (i) out += ", ";
            out += n.outputs[i];
        }
        out += ");\n";
    }
    return out;
}

} // namespace nsx
