#pragma once

#include <cstdint>
#include <memory>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <variant>
#include <vector>

#include "rknl/errors.hpp"
#include "rknl/ident.hpp"

namespace rknl {

// Immutable lambda terms. Subterms are held by shared reference, so two
// occurrences may point at the same node (a DAG); all observations below
// behave as on the unfolded tree unless stated otherwise.
struct TermNode;
using TermRef = std::shared_ptr<const TermNode>;

struct Var {
    Ident name;
};
struct App {
    TermRef fn;
    TermRef arg;
};
struct Lam {
    Ident binder;
    TermRef body;
};

struct TermNode {
    std::variant<Var, App, Lam> node;
};

inline TermRef var(Ident x) { return std::make_shared<const TermNode>(TermNode{Var{std::move(x)}}); }
inline TermRef var(std::string name) { return var(source_ident(std::move(name))); }
inline TermRef app(TermRef f, TermRef a) {
    return std::make_shared<const TermNode>(TermNode{App{std::move(f), std::move(a)}});
}
inline TermRef app(TermRef f, TermRef a, TermRef b) { return app(app(std::move(f), std::move(a)), std::move(b)); }
inline TermRef lam(Ident x, TermRef body) {
    return std::make_shared<const TermNode>(TermNode{Lam{std::move(x), std::move(body)}});
}
inline TermRef lam(std::string x, TermRef body) { return lam(source_ident(std::move(x)), std::move(body)); }

inline const Var* as_var(const TermRef& t) { return std::get_if<Var>(&t->node); }
inline const App* as_app(const TermRef& t) { return std::get_if<App>(&t->node); }
inline const Lam* as_lam(const TermRef& t) { return std::get_if<Lam>(&t->node); }

// Constructor count of the unfolded tree. Shared nodes are counted once per
// occurrence, so this can overflow for heavily shared terms; refuses to wrap.
inline std::uint64_t term_size(const TermRef& t) {
    std::unordered_map<const TermNode*, std::uint64_t> memo;
    auto go = [&](auto&& self, const TermRef& u) -> std::uint64_t {
        auto it = memo.find(u.get());
        if (it != memo.end()) return it->second;
        std::uint64_t r = 1;
        if (const App* a = as_app(u)) {
            r = checked_add(r, checked_add(self(self, a->fn), self(self, a->arg)));
        } else if (const Lam* l = as_lam(u)) {
            r = checked_add(r, self(self, l->body));
        }
        memo.emplace(u.get(), r);
        return r;
    };
    return go(go, t);
}

// Number of distinct shared nodes; node_count(t) <= size(t), with equality
// exactly for tree-shaped terms.
inline std::uint64_t node_count(const TermRef& t) {
    std::unordered_set<const TermNode*> seen;
    auto go = [&](auto&& self, const TermRef& u) -> void {
        if (!seen.insert(u.get()).second) return;
        if (const App* a = as_app(u)) {
            self(self, a->fn);
            self(self, a->arg);
        } else if (const Lam* l = as_lam(u)) {
            self(self, l->body);
        }
    };
    go(go, t);
    return seen.size();
}

namespace detail {
inline const std::set<Ident>& free_vars_memo(const TermRef& t,
                                             std::unordered_map<const TermNode*, std::set<Ident>>& memo) {
    auto it = memo.find(t.get());
    if (it != memo.end()) return it->second;
    std::set<Ident> fv;
    if (const Var* v = as_var(t)) {
        fv.insert(v->name);
    } else if (const App* a = as_app(t)) {
        const auto& l = free_vars_memo(a->fn, memo);
        const auto& r = free_vars_memo(a->arg, memo);
        fv.insert(l.begin(), l.end());
        fv.insert(r.begin(), r.end());
    } else {
        const Lam* l = as_lam(t);
        fv = free_vars_memo(l->body, memo);
        fv.erase(l->binder);
    }
    return memo.emplace(t.get(), std::move(fv)).first->second;
}
}  // namespace detail

inline std::set<Ident> free_vars(const TermRef& t) {
    std::unordered_map<const TermNode*, std::set<Ident>> memo;
    return detail::free_vars_memo(t, memo);
}

inline bool is_closed(const TermRef& t) { return free_vars(t).empty(); }

// Structural equality on the unfolded trees. Pairs proven equal are cached,
// which keeps the walk linear in the DAG even for exponentially unfolding
// shared terms.
inline bool term_eq(const TermRef& a, const TermRef& b) {
    std::set<std::pair<const TermNode*, const TermNode*>> proven;
    auto go = [&](auto&& self, const TermRef& x, const TermRef& y) -> bool {
        if (x.get() == y.get()) return true;
        auto key = std::make_pair(x.get(), y.get());
        if (proven.count(key)) return true;
        bool eq = false;
        if (const Var* vx = as_var(x)) {
            const Var* vy = as_var(y);
            eq = vy && vx->name == vy->name;
        } else if (const App* ax = as_app(x)) {
            const App* ay = as_app(y);
            eq = ay && self(self, ax->fn, ay->fn) && self(self, ax->arg, ay->arg);
        } else {
            const Lam* lx = as_lam(x);
            const Lam* ly = as_lam(y);
            eq = ly && lx->binder == ly->binder && self(self, lx->body, ly->body);
        }
        if (eq) proven.insert(key);
        return eq;
    };
    return go(go, a, b);
}

// Alpha-equivalence; free variables must match exactly, namespaces included.
inline bool alpha_eq(const TermRef& a, const TermRef& b) {
    std::vector<std::pair<Ident, Ident>> bound;
    auto go = [&](auto&& self, const TermRef& x, const TermRef& y) -> bool {
        if (const Var* vx = as_var(x)) {
            const Var* vy = as_var(y);
            if (!vy) return false;
            for (auto it = bound.rbegin(); it != bound.rend(); ++it) {
                bool hit_l = it->first == vx->name;
                bool hit_r = it->second == vy->name;
                if (hit_l || hit_r) return hit_l && hit_r;
            }
            return vx->name == vy->name;
        }
        if (const App* ax = as_app(x)) {
            const App* ay = as_app(y);
            return ay && self(self, ax->fn, ay->fn) && self(self, ax->arg, ay->arg);
        }
        const Lam* lx = as_lam(x);
        const Lam* ly = as_lam(y);
        if (!ly) return false;
        bound.emplace_back(lx->binder, ly->binder);
        bool r = self(self, lx->body, ly->body);
        bound.pop_back();
        return r;
    };
    return go(go, a, b);
}

// A path from the root of a term to a hole position.
enum class Step : std::uint8_t { AppLeft, AppRight, LamBody };
using ContextPath = std::vector<Step>;

inline TermRef subterm_at(const TermRef& t, const ContextPath& path, std::size_t from = 0) {
    if (from == path.size()) return t;
    switch (path[from]) {
        case Step::AppLeft:  return subterm_at(as_app(t)->fn, path, from + 1);
        case Step::AppRight: return subterm_at(as_app(t)->arg, path, from + 1);
        default:             return subterm_at(as_lam(t)->body, path, from + 1);
    }
}

// Rebuilds `t` with `s` plugged at `path`; untouched siblings stay shared.
inline TermRef plug(const TermRef& t, const ContextPath& path, const TermRef& s, std::size_t from = 0) {
    if (from == path.size()) return s;
    switch (path[from]) {
        case Step::AppLeft: {
            const App* a = as_app(t);
            return app(plug(a->fn, path, s, from + 1), a->arg);
        }
        case Step::AppRight: {
            const App* a = as_app(t);
            return app(a->fn, plug(a->arg, path, s, from + 1));
        }
        default: {
            const Lam* l = as_lam(t);
            return lam(l->binder, plug(l->body, path, s, from + 1));
        }
    }
}

}  // namespace rknl
