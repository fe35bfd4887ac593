#pragma once

#include <cctype>
#include <cstddef>
#include <string>
#include <string_view>

#include "rknl/errors.hpp"
#include "rknl/term.hpp"

namespace rknl {

// Concrete grammar:
//   term := lam | app
//   lam  := ("\" | "λ") ident "." term
//   app  := atom {atom}
//   atom := ident | "(" term ")"
//   ident := letter-or-underscore {letter | digit | "_" | "'"}
// Whitespace-insensitive between tokens. Two decorations re-read the
// non-source namespaces the machinery prints: a trailing "~" marks an
// overlined identifier and a leading "#" a location-as-name identifier.
// Fresh identifiers print as "z_0" but re-parse as source names; the two
// never compare equal because the namespaces differ.

namespace detail {

struct Parser {
    std::string_view src;
    std::size_t pos = 0;

    void skip_ws() {
        while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
    }

    bool at_lambda() {
        if (pos < src.size() && src[pos] == '\\') return true;
        return pos + 1 < src.size() && static_cast<unsigned char>(src[pos]) == 0xCE &&
               static_cast<unsigned char>(src[pos + 1]) == 0xBB;
    }

    void eat_lambda() { pos += (src[pos] == '\\') ? 1 : 2; }

    static bool ident_start(char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
    }
    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'';
    }

    bool at_ident() {
        if (pos >= src.size()) return false;
        return ident_start(src[pos]) || src[pos] == '#';
    }

    Ident parse_ident() {
        skip_ws();
        if (pos >= src.size()) throw ParseError("expected identifier", pos);
        bool loc_name = false;
        if (src[pos] == '#') {
            loc_name = true;
            ++pos;
            if (pos >= src.size() || !ident_char(src[pos])) {
                throw ParseError("expected identifier after '#'", pos);
            }
        } else if (!ident_start(src[pos])) {
            throw ParseError("expected identifier", pos);
        }
        std::size_t start = pos;
        while (pos < src.size() && ident_char(src[pos])) ++pos;
        std::string base(src.substr(start, pos - start));
        if (loc_name) return Ident{Space::LocName, std::move(base), std::nullopt};
        if (pos < src.size() && src[pos] == '~') {
            ++pos;
            return Ident{Space::Overlined, std::move(base), std::nullopt};
        }
        return source_ident(std::move(base));
    }

    TermRef parse_term() {
        skip_ws();
        if (at_lambda()) {
            eat_lambda();
            Ident x = parse_ident();
            skip_ws();
            if (pos >= src.size() || src[pos] != '.') throw ParseError("expected '.'", pos);
            ++pos;
            return lam(std::move(x), parse_term());
        }
        return parse_app();
    }

    TermRef parse_app() {
        TermRef t = parse_atom();
        for (;;) {
            skip_ws();
            if (pos < src.size() && (at_ident() || src[pos] == '(')) {
                t = app(std::move(t), parse_atom());
            } else {
                return t;
            }
        }
    }

    TermRef parse_atom() {
        skip_ws();
        if (pos >= src.size()) throw ParseError("expected term", pos);
        if (src[pos] == '(') {
            ++pos;
            TermRef t = parse_term();
            skip_ws();
            if (pos >= src.size() || src[pos] != ')') throw ParseError("expected ')'", pos);
            ++pos;
            return t;
        }
        if (at_ident()) return var(parse_ident());
        throw ParseError("expected term", pos);
    }
};

}  // namespace detail

inline TermRef parse(std::string_view text) {
    detail::Parser p{text};
    TermRef t = p.parse_term();
    p.skip_ws();
    if (p.pos != text.size()) throw ParseError("unexpected trailing input", p.pos);
    return t;
}

enum class PrintStyle { Compact, Unicode };

namespace detail {

enum class Pos { Top, AppFn, AppArg };

inline void print_to(const TermRef& t, PrintStyle style, Pos pos, std::string& out) {
    if (const Var* v = as_var(t)) {
        out += render(v->name);
        return;
    }
    if (const Lam* l = as_lam(t)) {
        bool parens = pos != Pos::Top;
        if (parens) out += '(';
        out += (style == PrintStyle::Unicode) ? "\xCE\xBB" : "\\";
        out += render(l->binder);
        out += '.';
        print_to(l->body, style, Pos::Top, out);
        if (parens) out += ')';
        return;
    }
    const App* a = as_app(t);
    bool parens = pos == Pos::AppArg;
    if (parens) out += '(';
    print_to(a->fn, style, Pos::AppFn, out);
    out += ' ';
    print_to(a->arg, style, Pos::AppArg, out);
    if (parens) out += ')';
}

}  // namespace detail

// Printing expands sharing; parse(print(t)) is structurally `t` whenever no
// identifier's rendering collides across namespaces.
inline std::string print(const TermRef& t, PrintStyle style = PrintStyle::Compact) {
    std::string out;
    detail::print_to(t, style, detail::Pos::Top, out);
    return out;
}

}  // namespace rknl
