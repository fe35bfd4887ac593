#pragma once

#include <cstdint>
#include <optional>

#include "rknl/term.hpp"

namespace rknl {

// Small-step normal-order (leftmost-outermost) reducer. Deliberately naive:
// this is the independent oracle the machine is checked against, so it must
// not share or memoize anything.

// Capture-avoiding substitution of `s` for free occurrences of `x` in `t`.
// Binders are renamed into the fresh namespace only at actual capture
// points, picking the smallest unused index for the binder's base.
inline TermRef subst(const TermRef& t, const Ident& x, const TermRef& s) {
    if (const Var* v = as_var(t)) {
        return v->name == x ? s : t;
    }
    if (const App* a = as_app(t)) {
        TermRef f = subst(a->fn, x, s);
        TermRef g = subst(a->arg, x, s);
        return (f == a->fn && g == a->arg) ? t : app(std::move(f), std::move(g));
    }
    const Lam* l = as_lam(t);
    if (l->binder == x) return t;
    auto fv_body = free_vars(l->body);
    if (!fv_body.count(x)) return t;
    auto fv_s = free_vars(s);
    if (fv_s.count(l->binder)) {
        Ident nb;
        for (std::uint32_t i = 0;; ++i) {
            nb = fresh_ident(l->binder.base, i);
            if (!fv_body.count(nb) && !fv_s.count(nb) && nb != x) break;
        }
        TermRef renamed = subst(l->body, l->binder, var(nb));
        return lam(std::move(nb), subst(renamed, x, s));
    }
    return lam(l->binder, subst(l->body, x, s));
}

// Grammar membership: a ::= x | a n, n ::= λx.n | a.
inline bool is_neutral(const TermRef& t);
inline bool is_normal(const TermRef& t) {
    if (const Lam* l = as_lam(t)) return is_normal(l->body);
    return is_neutral(t);
}
inline bool is_neutral(const TermRef& t) {
    if (as_var(t)) return true;
    if (const App* a = as_app(t)) return is_neutral(a->fn) && is_normal(a->arg);
    return false;
}

struct RedexSite {
    ContextPath path;
    Ident binder;
    TermRef body;
    TermRef argument;
};

namespace detail {

// Leftmost-outermost search. Descending left of an application enters the
// N̄ state of the context grammar; a redex there is caught one level up, so
// the state never needs to be threaded explicitly. Descending right is only
// reached once the function part turned out normal and non-abstraction,
// i.e. neutral, which is exactly the "a N" production.
inline std::optional<RedexSite> find_redex_at(const TermRef& t, ContextPath& path) {
    if (const Lam* l = as_lam(t)) {
        path.push_back(Step::LamBody);
        auto r = find_redex_at(l->body, path);
        if (r) return r;
        path.pop_back();
        return std::nullopt;
    }
    if (const App* a = as_app(t)) {
        if (const Lam* f = as_lam(a->fn)) {
            return RedexSite{path, f->binder, f->body, a->arg};
        }
        path.push_back(Step::AppLeft);
        auto r = find_redex_at(a->fn, path);
        if (r) return r;
        path.pop_back();
        path.push_back(Step::AppRight);
        r = find_redex_at(a->arg, path);
        if (r) return r;
        path.pop_back();
        return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace detail

// The unique redex under the normal-order context grammar, if any.
inline std::optional<RedexSite> find_redex(const TermRef& t) {
    ContextPath path;
    return detail::find_redex_at(t, path);
}

inline std::optional<TermRef> no_step(const TermRef& t) {
    auto r = find_redex(t);
    if (!r) return std::nullopt;
    return plug(t, r->path, subst(r->body, r->binder, r->argument));
}

struct NormalizeOutcome {
    TermRef term;               // normal form, or the partial term on fuel exhaustion
    std::uint64_t beta_steps = 0;
    bool finished = false;
};

inline NormalizeOutcome no_normalize(TermRef t, std::uint64_t fuel) {
    std::uint64_t n = 0;
    for (;;) {
        auto next = no_step(t);
        if (!next) return {std::move(t), n, true};
        if (n == fuel) return {std::move(t), n, false};
        t = std::move(*next);
        ++n;
    }
}

}  // namespace rknl
