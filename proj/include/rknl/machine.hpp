#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "rknl/errors.hpp"
#include "rknl/pmap.hpp"
#include "rknl/syntax.hpp"
#include "rknl/term.hpp"

namespace rknl {

// The RKNL abstract machine: configurations over closures, a defunctionalized
// stack and a global store of memothunks, with the eleven transitions of the
// source table. Rule ids 1..11 follow the paper's numbering everywhere
// (traces, histograms, the CLI).

struct IllFormedError : Error {
    using Error::Error;
};
struct FreshExhaustedError : Error {
    using Error::Error;
};

enum class LocKind : std::uint8_t { Arg, Annot };

struct Location {
    std::uint32_t id = 0;
    LocKind kind = LocKind::Arg;
    friend bool operator==(const Location&, const Location&) = default;
    friend auto operator<=>(const Location&, const Location&) = default;
};

using Env = PMap<Ident, Location>;

struct Closure {
    TermRef term;
    Env env;
};

struct Value {
    struct Plain {
        TermRef term;
    };
    // (λx.t, e)^ℓ — an abstraction closure annotated with the location
    // reserved for its strong normal form.
    struct AnnotAbs {
        TermRef lam;  // the Lam node itself
        Env env;
        Location annot;
    };
    std::variant<Plain, AnnotAbs> v;
};

inline const Value::Plain* as_plain(const Value& v) { return std::get_if<Value::Plain>(&v.v); }
inline const Value::AnnotAbs* as_annot_abs(const Value& v) { return std::get_if<Value::AnnotAbs>(&v.v); }

struct Frame {
    struct Arg {
        Closure c;
    };  // □ c
    struct LApp {
        TermRef t;
    };  // t □
    struct LamF {
        Ident x;
    };  // λx.□
    struct Cache {
        Location loc;
    };  // ℓ := □
    std::variant<Arg, LApp, LamF, Cache> f;
};

// Persistent stack with shared tails; a snapshot is a pointer copy.
struct StackNode;
using Stack = std::shared_ptr<const StackNode>;
struct StackNode {
    Frame frame;
    Stack rest;
    std::uint64_t depth;
};

inline Stack stack_push(Frame f, Stack rest) {
    std::uint64_t d = rest ? rest->depth + 1 : 1;
    return std::make_shared<const StackNode>(StackNode{std::move(f), std::move(rest), d});
}
inline std::uint64_t stack_depth(const Stack& s) { return s ? s->depth : 0; }

// Why each location was created. Written once at allocation and never
// changed; the history-based decoding reads these instead of cell contents.
struct InitRecord {
    struct ByRule2 {};
    struct ByRule6 {
        Closure arg;
    };
    struct ByRule7 {
        Ident fresh;
    };
    std::variant<ByRule2, ByRule6, ByRule7> r;
};

struct StorableValue {
    struct TodoEmpty {};
    struct TodoClosure {
        Closure c;
    };
    struct Done {
        Value v;
    };
    std::variant<TodoEmpty, TodoClosure, Done> s;
};

inline constexpr std::uint64_t kNeverWritten = ~std::uint64_t{0};

struct Cell {
    LocKind kind;
    InitRecord init;
    std::uint64_t alloc_step;
    std::optional<Value> done_value;  // present once the cell reached "done"
    std::uint64_t done_step = kNeverWritten;
};

// Append-only store. Each cell moves from "to do" to "done" at most once in
// the default variant, which is what makes old configurations readable: the
// state at any past step is recovered from (alloc_step, done_step).
class Store {
public:
    Location alloc(LocKind kind, InitRecord init, std::uint64_t step) {
        Location loc{static_cast<std::uint32_t>(cells_.size()), kind};
        Cell cell{kind, std::move(init), step, std::nullopt, kNeverWritten};
        if (const auto* r7 = std::get_if<InitRecord::ByRule7>(&cell.init.r)) {
            cell.done_value = Value{Value::Plain{var(r7->fresh)}};
            cell.done_step = step;
        }
        cells_.push_back(std::move(cell));
        return loc;
    }

    void write_done(Location loc, Value v, std::uint64_t step, bool allow_rewrite) {
        Cell& c = cells_.at(loc.id);
        if (c.done_value) {
            if (!allow_rewrite) throw Error("store write-once violated");
            rewritten_ = true;
            c.done_value = std::move(v);
            return;
        }
        c.done_value = std::move(v);
        c.done_step = step;
    }

    const Cell& cell(Location loc) const { return cells_.at(loc.id); }

    StorableValue state_now(Location loc) const {
        const Cell& c = cells_.at(loc.id);
        if (c.done_value) return StorableValue{StorableValue::Done{*c.done_value}};
        return initial_state(c);
    }

    // Cell state as it was at `version` transitions into the run. Only valid
    // for write-once histories; the rule-8-disabled variant rewrites cells.
    StorableValue state_at(Location loc, std::uint64_t version) const {
        if (rewritten_) throw Error("store history invalid: cells were rewritten");
        const Cell& c = cells_.at(loc.id);
        if (c.alloc_step > version) throw Error("location not yet allocated at this step");
        if (c.done_value && c.done_step <= version) {
            return StorableValue{StorableValue::Done{*c.done_value}};
        }
        return initial_state(c);
    }

    std::size_t size() const { return cells_.size(); }

    std::size_t size_at(std::uint64_t version) const {
        std::size_t n = 0;
        while (n < cells_.size() && cells_[n].alloc_step <= version) ++n;
        return n;
    }

    bool rewritten() const { return rewritten_; }

private:
    static StorableValue initial_state(const Cell& c) {
        if (std::holds_alternative<InitRecord::ByRule2>(c.init.r)) {
            return StorableValue{StorableValue::TodoEmpty{}};
        }
        if (const auto* r6 = std::get_if<InitRecord::ByRule6>(&c.init.r)) {
            return StorableValue{StorableValue::TodoClosure{r6->arg}};
        }
        const auto& r7 = std::get<InitRecord::ByRule7>(c.init.r);
        return StorableValue{StorableValue::Done{Value{Value::Plain{var(r7.fresh)}}}};
    }

    std::vector<Cell> cells_;
    bool rewritten_ = false;
};

using StoreRef = std::shared_ptr<Store>;

struct Config {
    std::variant<Closure, Value> focus;  // Closure = eval mode, Value = cont mode
    Stack stack;
    StoreRef store;
    std::uint64_t version = 0;  // transitions taken when this was current
};

inline bool in_eval_mode(const Config& k) { return std::holds_alternative<Closure>(k.focus); }

struct MachineOptions {
    // Fire rule 7 unconditionally, leaving rule 8 unused; rule 5 may then
    // rewrite done cells, so the write-once invariant is suspended.
    bool disable_rule8 = false;
};

// Which transition the table prescribes for `k`; 0 means unload.
inline int classify_rule(const Config& k, const Store& store, const MachineOptions& opts) {
    if (const Closure* c = std::get_if<Closure>(&k.focus)) {
        if (as_app(c->term)) return 1;
        if (as_lam(c->term)) return 2;
        const Var* v = as_var(c->term);
        if (const Location* loc = c->env.find(v->name)) {
            StorableValue s = store.state_now(*loc);
            if (std::holds_alternative<StorableValue::TodoClosure>(s.s)) return 3;
            if (std::holds_alternative<StorableValue::Done>(s.s)) return 4;
            throw IllFormedError("environment maps " + render(v->name) + " to an empty todo cell");
        }
        return 4;  // open variable: taken as a value
    }
    const Value& v = std::get<Value>(k.focus);
    const Frame* top = k.stack ? &k.stack->frame : nullptr;
    if (top && std::holds_alternative<Frame::Cache>(top->f)) return 5;
    if (const Value::AnnotAbs* a = as_annot_abs(v)) {
        if (top && std::holds_alternative<Frame::Arg>(top->f)) return 6;
        if (opts.disable_rule8) return 7;
        StorableValue s = store.state_now(a->annot);
        return std::holds_alternative<StorableValue::Done>(s.s) ? 8 : 7;
    }
    if (!top) return 0;
    if (std::holds_alternative<Frame::Arg>(top->f)) return 9;
    if (std::holds_alternative<Frame::LApp>(top->f)) return 10;
    return 11;  // LamF
}

// Independent re-statement of the transition guards, used by tests to check
// that exactly one rule matches any reachable configuration. Rules 7 and 8
// carry the "no argument and no cache frame on top" side condition that the
// table expresses through rule order.
inline std::vector<int> matching_rules(const Config& k, const Store& store, const MachineOptions& opts) {
    std::vector<int> out;
    const Frame* top = k.stack ? &k.stack->frame : nullptr;
    auto top_is = [&](auto tag) {
        using T = decltype(tag);
        return top && std::holds_alternative<T>(top->f);
    };
    if (const Closure* c = std::get_if<Closure>(&k.focus)) {
        if (as_app(c->term)) out.push_back(1);
        if (as_lam(c->term)) out.push_back(2);
        if (const Var* v = as_var(c->term)) {
            if (const Location* loc = c->env.find(v->name)) {
                StorableValue s = store.state_now(*loc);
                if (std::holds_alternative<StorableValue::TodoClosure>(s.s)) out.push_back(3);
                if (std::holds_alternative<StorableValue::Done>(s.s)) out.push_back(4);
            } else {
                out.push_back(4);
            }
        }
        return out;
    }
    const Value& v = std::get<Value>(k.focus);
    if (top_is(Frame::Cache{})) out.push_back(5);
    bool quiet_top = !top_is(Frame::Arg{}) && !top_is(Frame::Cache{});
    if (const Value::AnnotAbs* a = as_annot_abs(v)) {
        if (top_is(Frame::Arg{})) out.push_back(6);
        if (quiet_top) {
            if (opts.disable_rule8) {
                out.push_back(7);
            } else {
                StorableValue s = store.state_now(a->annot);
                out.push_back(std::holds_alternative<StorableValue::Done>(s.s) ? 8 : 7);
            }
        }
    } else {
        if (top_is(Frame::Arg{})) out.push_back(9);
        if (top_is(Frame::LApp{})) out.push_back(10);
        if (top_is(Frame::LamF{})) out.push_back(11);
    }
    return out;
}

class Machine {
public:
    explicit Machine(TermRef t0, MachineOptions opts = {})
        : opts_(opts), store_(std::make_shared<Store>()) {
        seed_fresh_counters(t0);
        cfg_ = Config{Closure{std::move(t0), Env{}}, nullptr, store_, 0};
    }

    const Config& config() const { return cfg_; }
    const Store& store() const { return *store_; }
    const StoreRef& store_ref() const { return store_; }
    const MachineOptions& options() const { return opts_; }
    std::uint64_t steps() const { return steps_; }
    bool terminal() const { return terminal_; }

    TermRef result() const {
        if (!terminal_) throw Error("machine has not unloaded");
        return as_plain(std::get<Value>(cfg_.focus))->term;
    }

    // Rule the next step would fire, or 0 at a terminal configuration.
    int peek_rule() const { return classify_rule(cfg_, *store_, opts_); }

    // Deterministic per-base gensym; counters live in the run.
    Ident fresh_name(const Ident& base) {
        std::uint32_t& n = fresh_counters_[base.base];
        if (n == ~std::uint32_t{0}) throw FreshExhaustedError("fresh-name counter exhausted");
        return fresh_ident(base.base, n++);
    }

    // Applies one transition; returns its rule id, or nullopt on unload.
    std::optional<int> step() {
        if (terminal_) return std::nullopt;
        int rule = peek_rule();
        if (rule == 0) {
            terminal_ = true;
            return std::nullopt;
        }
        const std::uint64_t v = steps_ + 1;
        switch (rule) {
            case 1: {
                const Closure& c = std::get<Closure>(cfg_.focus);
                const App* a = as_app(c.term);
                Stack s = stack_push(Frame{Frame::Arg{Closure{a->arg, c.env}}}, cfg_.stack);
                cfg_ = Config{Closure{a->fn, c.env}, std::move(s), store_, v};
                break;
            }
            case 2: {
                const Closure& c = std::get<Closure>(cfg_.focus);
                Location loc = store_->alloc(LocKind::Annot, InitRecord{InitRecord::ByRule2{}}, v);
                cfg_ = Config{Value{Value::AnnotAbs{c.term, c.env, loc}}, cfg_.stack, store_, v};
                break;
            }
            case 3: {
                const Closure& c = std::get<Closure>(cfg_.focus);
                Location loc = *c.env.find(as_var(c.term)->name);
                auto state = store_->state_now(loc);
                Closure inner = std::get<StorableValue::TodoClosure>(state.s).c;
                Stack s = stack_push(Frame{Frame::Cache{loc}}, cfg_.stack);
                cfg_ = Config{std::move(inner), std::move(s), store_, v};
                break;
            }
            case 4: {
                const Closure& c = std::get<Closure>(cfg_.focus);
                const Location* loc = c.env.find(as_var(c.term)->name);
                Value val = loc ? std::get<StorableValue::Done>(store_->state_now(*loc).s).v
                                : Value{Value::Plain{c.term}};
                cfg_ = Config{std::move(val), cfg_.stack, store_, v};
                break;
            }
            case 5: {
                const Value& val = std::get<Value>(cfg_.focus);
                Location loc = std::get<Frame::Cache>(cfg_.stack->frame.f).loc;
                store_->write_done(loc, val, v, opts_.disable_rule8);
                cfg_ = Config{val, cfg_.stack->rest, store_, v};
                break;
            }
            case 6: {
                const Value::AnnotAbs& a = *as_annot_abs(std::get<Value>(cfg_.focus));
                Closure arg = std::get<Frame::Arg>(cfg_.stack->frame.f).c;
                Location loc = store_->alloc(LocKind::Arg, InitRecord{InitRecord::ByRule6{arg}}, v);
                const Lam* l = as_lam(a.lam);
                cfg_ = Config{Closure{l->body, a.env.insert(l->binder, loc)}, cfg_.stack->rest, store_, v};
                break;
            }
            case 7: {
                const Value::AnnotAbs& a = *as_annot_abs(std::get<Value>(cfg_.focus));
                const Lam* l = as_lam(a.lam);
                Ident fresh = fresh_name(l->binder);
                Location loc = store_->alloc(LocKind::Arg, InitRecord{InitRecord::ByRule7{fresh}}, v);
                Stack s = stack_push(Frame{Frame::Cache{a.annot}}, cfg_.stack);
                s = stack_push(Frame{Frame::LamF{fresh}}, std::move(s));
                cfg_ = Config{Closure{l->body, a.env.insert(l->binder, loc)}, std::move(s), store_, v};
                break;
            }
            case 8: {
                const Value::AnnotAbs& a = *as_annot_abs(std::get<Value>(cfg_.focus));
                Value memo = std::get<StorableValue::Done>(store_->state_now(a.annot).s).v;
                cfg_ = Config{std::move(memo), cfg_.stack, store_, v};
                break;
            }
            case 9: {
                TermRef t = as_plain(std::get<Value>(cfg_.focus))->term;
                Closure arg = std::get<Frame::Arg>(cfg_.stack->frame.f).c;
                Stack s = stack_push(Frame{Frame::LApp{std::move(t)}}, cfg_.stack->rest);
                cfg_ = Config{std::move(arg), std::move(s), store_, v};
                break;
            }
            case 10: {
                TermRef t2 = as_plain(std::get<Value>(cfg_.focus))->term;
                TermRef t1 = std::get<Frame::LApp>(cfg_.stack->frame.f).t;
                cfg_ = Config{Value{Value::Plain{app(std::move(t1), std::move(t2))}}, cfg_.stack->rest,
                              store_, v};
                break;
            }
            case 11: {
                TermRef t = as_plain(std::get<Value>(cfg_.focus))->term;
                Ident x = std::get<Frame::LamF>(cfg_.stack->frame.f).x;
                cfg_ = Config{Value{Value::Plain{lam(std::move(x), std::move(t))}}, cfg_.stack->rest,
                              store_, v};
                break;
            }
        }
        ++steps_;
        return rule;
    }

private:
    // Fresh names must not collide with anything already in the input; a
    // pre-scan bumps each base counter past any fresh identifiers present.
    void seed_fresh_counters(const TermRef& t0) {
        std::set<const TermNode*> seen;
        auto note = [&](const Ident& x) {
            if (x.space == Space::Fresh && x.index) {
                std::uint32_t& n = fresh_counters_[x.base];
                if (*x.index >= n) n = *x.index + 1;
            }
        };
        auto go = [&](auto&& self, const TermRef& t) -> void {
            if (!seen.insert(t.get()).second) return;
            if (const Var* v = as_var(t)) {
                note(v->name);
            } else if (const App* a = as_app(t)) {
                self(self, a->fn);
                self(self, a->arg);
            } else {
                const Lam* l = as_lam(t);
                note(l->binder);
                self(self, l->body);
            }
        };
        go(go, t0);
    }

    MachineOptions opts_;
    StoreRef store_;
    Config cfg_;
    std::uint64_t steps_ = 0;
    bool terminal_ = false;
    std::map<std::string, std::uint32_t> fresh_counters_;
};

struct TraceEntry {
    std::uint64_t step;  // 0 for the initial configuration
    int rule;            // rule that produced this configuration; 0 for step 0
    Config config;
};

struct RunResult {
    std::optional<TermRef> normal_form;  // nullopt: fuel exhausted
    std::uint64_t steps = 0;
    std::uint64_t beta_steps = 0;  // rule-6 firings
    std::array<std::uint64_t, 12> rule_histogram{};
    std::vector<TraceEntry> trace;  // only populated when tracing; entry 0 is the load
    Config final_config;
    MachineOptions options;
    TermRef source;
};

inline RunResult run(TermRef t0, MachineOptions opts = {}, std::uint64_t fuel = 1'000'000,
                     bool trace = false) {
    Machine m(t0, opts);
    RunResult res;
    res.options = opts;
    res.source = std::move(t0);
    if (trace) res.trace.push_back(TraceEntry{0, 0, m.config()});
    while (res.steps < fuel) {
        auto rule = m.step();
        if (!rule) {
            res.normal_form = m.result();
            break;
        }
        ++res.steps;
        res.rule_histogram[static_cast<std::size_t>(*rule)]++;
        if (trace) res.trace.push_back(TraceEntry{res.steps, *rule, m.config()});
    }
    if (!res.normal_form && m.peek_rule() == 0) {
        // exactly out of fuel at the terminal configuration
        m.step();
        res.normal_form = m.result();
    }
    res.beta_steps = res.rule_histogram[6];
    res.final_config = m.config();
    return res;
}

// One JSON line per transition: the configuration reached by it.
inline std::string trace_json_line(const TraceEntry& e) {
    auto escape = [](const std::string& s) {
        std::string out;
        out.reserve(s.size());
        for (char c : s) {
            if (c == '"' || c == '\\') {
                out += '\\';
                out += c;
            } else if (static_cast<unsigned char>(c) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", c);
                out += buf;
            } else {
                out += c;
            }
        }
        return out;
    };
    std::string focus;
    if (const Closure* c = std::get_if<Closure>(&e.config.focus)) {
        focus = print(c->term);
    } else {
        const Value& v = std::get<Value>(e.config.focus);
        focus = print(as_plain(v) ? as_plain(v)->term : as_annot_abs(v)->lam);
    }
    std::string line = "{\"step\": " + std::to_string(e.step);
    line += ", \"rule\": " + std::to_string(e.rule);
    line += std::string(", \"mode\": \"") + (in_eval_mode(e.config) ? "eval" : "cont") + "\"";
    line += ", \"focus\": \"" + escape(focus) + "\"";
    line += ", \"stack_depth\": " + std::to_string(stack_depth(e.config.stack));
    line += ", \"store_size\": " + std::to_string(e.config.store->size_at(e.config.version));
    line += "}";
    return line;
}

inline std::string trace_jsonl(const RunResult& res) {
    std::string out;
    for (const TraceEntry& e : res.trace) {
        if (e.step == 0) continue;
        out += trace_json_line(e);
        out += '\n';
    }
    return out;
}

}  // namespace rknl
