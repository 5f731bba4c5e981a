#include "coda/ast.hpp"

#include <algorithm>

namespace coda {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void merge(std::set<std::string>& into, std::set<std::string> from) {
    into.insert(from.begin(), from.end());
}

}  // namespace

ExprPtr unit_expr() {
    static const ExprPtr e = mk(Const{ConstValue{std::monostate{}}});
    return e;
}
ExprPtr bool_expr(bool b) { return mk(Const{ConstValue{b}}); }
ExprPtr int_expr(std::int64_t v) { return mk(Const{ConstValue{v}}); }
ExprPtr string_expr(std::string s) { return mk(Const{ConstValue{std::move(s)}}); }

// ---------------------------------------------------------------------------
// Predicates

bool is_value(const Expr& e) {
    return std::visit(overloaded{
                          [](const Const&) { return true; },
                          [](const Fun&) { return true; },
                          [](const Prim&) { return true; },
                          [](const BehVariation&) { return true; },
                          [](const FactExpr& f) { return f.atom.is_ground(); },
                          [](const auto&) { return false; },
                      },
                      e.node);
}

bool is_value(const ExprPtr& e) { return is_value(*e); }

bool is_unit(const Expr& e) {
    const auto* c = std::get_if<Const>(&e.node);
    return c != nullptr && std::holds_alternative<std::monostate>(c->v);
}

// ---------------------------------------------------------------------------
// Equality

static bool case_equal(const VaCase& a, const VaCase& b) {
    return a.guard == b.guard && equal(a.body, b.body);
}

static bool va_equal(const Va& a, const Va& b) {
    if (a.size() != b.size()) return false;
    for (size_t i = 0; i < a.size(); ++i)
        if (!case_equal(a[i], b[i])) return false;
    return true;
}

bool penv_equal(const PEnv& a, const PEnv& b) {
    if (a.size() != b.size()) return false;
    auto it = b.begin();
    for (const auto& [name, va] : a) {
        if (it->first != name || !va_equal(va, it->second)) return false;
        ++it;
    }
    return true;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    return std::visit(
        overloaded{
            [&](const Const& x) { return x.v == std::get<Const>(b.node).v; },
            [&](const VarRef& x) { return x.name == std::get<VarRef>(b.node).name; },
            [&](const DynVarRef& x) { return x.name == std::get<DynVarRef>(b.node).name; },
            [&](const GoalVarRef& x) { return x.name == std::get<GoalVarRef>(b.node).name; },
            [&](const Fun& x) {
                const auto& y = std::get<Fun>(b.node);
                return x.self == y.self && x.param == y.param && equal(x.body, y.body);
            },
            [&](const Prim& x) {
                const auto& y = std::get<Prim>(b.node);
                if (x.name != y.name || x.arity != y.arity || !(x.result == y.result) ||
                    x.args.size() != y.args.size())
                    return false;
                for (size_t i = 0; i < x.args.size(); ++i)
                    if (!equal(x.args[i], y.args[i])) return false;
                return true;
            },
            [&](const BehVariation& x) {
                const auto& y = std::get<BehVariation>(b.node);
                return x.param == y.param && va_equal(x.cases, y.cases);
            },
            [&](const FactExpr& x) { return x.atom == std::get<FactExpr>(b.node).atom; },
            [&](const App& x) {
                const auto& y = std::get<App>(b.node);
                return equal(x.fn, y.fn) && equal(x.arg, y.arg);
            },
            [&](const Let& x) {
                const auto& y = std::get<Let>(b.node);
                return x.name == y.name && equal(x.bound, y.bound) && equal(x.body, y.body);
            },
            [&](const Dlet& x) {
                const auto& y = std::get<Dlet>(b.node);
                return x.param == y.param && x.guard == y.guard && equal(x.bound, y.bound) &&
                       equal(x.body, y.body);
            },
            [&](const If& x) {
                const auto& y = std::get<If>(b.node);
                return equal(x.cond, y.cond) && equal(x.then_branch, y.then_branch) &&
                       equal(x.else_branch, y.else_branch);
            },
            [&](const Tell& x) { return equal(x.arg, std::get<Tell>(b.node).arg); },
            [&](const Retract& x) { return equal(x.arg, std::get<Retract>(b.node).arg); },
            [&](const Append& x) {
                const auto& y = std::get<Append>(b.node);
                return equal(x.lhs, y.lhs) && equal(x.rhs, y.rhs);
            },
            [&](const VaApp& x) {
                const auto& y = std::get<VaApp>(b.node);
                return equal(x.fn, y.fn) && equal(x.arg, y.arg);
            },
            [&](const Checkpointed& x) {
                const auto& y = std::get<Checkpointed>(b.node);
                return equal(x.inner, y.inner) && x.ann->goal == y.ann->goal &&
                       penv_equal(x.ann->env, y.ann->env) && equal(x.ann->resume, y.ann->resume);
            },
            [&](const Overlined& x) {
                const auto& y = std::get<Overlined>(b.node);
                return x.param == y.param && equal(x.body, y.body);
            },
        },
        a.node);
}

bool equal(const ExprPtr& a, const ExprPtr& b) {
    if (a == b) return true;
    return equal(*a, *b);
}

// ---------------------------------------------------------------------------
// Free variables

std::set<std::string> free_vars(const Expr& e) {
    std::set<std::string> out;
    std::visit(
        overloaded{
            [&](const Const&) {},
            [&](const VarRef& v) { out.insert(v.name); },
            [&](const DynVarRef&) {},
            [&](const GoalVarRef&) {},
            [&](const FactExpr&) {},
            [&](const Prim& p) {
                for (const auto& a : p.args) merge(out, free_vars(*a));
            },
            [&](const Fun& f) {
                auto s = free_vars(*f.body);
                s.erase(f.param);
                if (!f.self.empty()) s.erase(f.self);
                merge(out, std::move(s));
            },
            [&](const BehVariation& b) {
                for (const auto& c : b.cases) {
                    auto s = free_vars(*c.body);
                    s.erase(b.param);
                    merge(out, std::move(s));
                }
            },
            [&](const App& a) {
                merge(out, free_vars(*a.fn));
                merge(out, free_vars(*a.arg));
            },
            [&](const Let& l) {
                merge(out, free_vars(*l.bound));
                auto s = free_vars(*l.body);
                s.erase(l.name);
                merge(out, std::move(s));
            },
            [&](const Dlet& d) {
                merge(out, free_vars(*d.bound));
                merge(out, free_vars(*d.body));
            },
            [&](const If& i) {
                merge(out, free_vars(*i.cond));
                merge(out, free_vars(*i.then_branch));
                merge(out, free_vars(*i.else_branch));
            },
            [&](const Tell& t) { merge(out, free_vars(*t.arg)); },
            [&](const Retract& r) { merge(out, free_vars(*r.arg)); },
            [&](const Append& a) {
                merge(out, free_vars(*a.lhs));
                merge(out, free_vars(*a.rhs));
            },
            [&](const VaApp& v) {
                merge(out, free_vars(*v.fn));
                merge(out, free_vars(*v.arg));
            },
            [&](const Checkpointed& c) { merge(out, free_vars(*c.inner)); },
            [&](const Overlined& o) { merge(out, free_vars(*o.body)); },
        },
        e.node);
    return out;
}

std::set<std::string> free_dyn_vars(const Expr& e) {
    std::set<std::string> out;
    std::visit(
        overloaded{
            [&](const Const&) {},
            [&](const VarRef&) {},
            [&](const DynVarRef& v) { out.insert(v.name); },
            [&](const GoalVarRef&) {},
            [&](const FactExpr&) {},
            [&](const Prim& p) {
                for (const auto& a : p.args) merge(out, free_dyn_vars(*a));
            },
            [&](const Fun& f) { merge(out, free_dyn_vars(*f.body)); },
            [&](const BehVariation& b) {
                for (const auto& c : b.cases) merge(out, free_dyn_vars(*c.body));
            },
            [&](const App& a) {
                merge(out, free_dyn_vars(*a.fn));
                merge(out, free_dyn_vars(*a.arg));
            },
            [&](const Let& l) {
                merge(out, free_dyn_vars(*l.bound));
                merge(out, free_dyn_vars(*l.body));
            },
            [&](const Dlet& d) {
                auto s = free_dyn_vars(*d.bound);
                merge(s, free_dyn_vars(*d.body));
                s.erase(d.param);
                merge(out, std::move(s));
            },
            [&](const If& i) {
                merge(out, free_dyn_vars(*i.cond));
                merge(out, free_dyn_vars(*i.then_branch));
                merge(out, free_dyn_vars(*i.else_branch));
            },
            [&](const Tell& t) { merge(out, free_dyn_vars(*t.arg)); },
            [&](const Retract& r) { merge(out, free_dyn_vars(*r.arg)); },
            [&](const Append& a) {
                merge(out, free_dyn_vars(*a.lhs));
                merge(out, free_dyn_vars(*a.rhs));
            },
            [&](const VaApp& v) {
                merge(out, free_dyn_vars(*v.fn));
                merge(out, free_dyn_vars(*v.arg));
            },
            [&](const Checkpointed& c) { merge(out, free_dyn_vars(*c.inner)); },
            [&](const Overlined& o) {
                auto s = free_dyn_vars(*o.body);
                s.erase(o.param);
                merge(out, std::move(s));
            },
        },
        e.node);
    return out;
}

std::set<std::string> closed_check(const Expr& e) {
    auto fv = free_vars(e);
    if (!fv.empty()) throw FreeVarError(*fv.begin());
    return free_dyn_vars(e);
}

std::string fresh_var(const std::string& hint, const std::set<std::string>& avoid) {
    if (!avoid.count(hint)) return hint;
    for (int i = 1;; ++i) {
        std::string cand = hint + std::to_string(i);
        if (!avoid.count(cand)) return cand;
    }
}

// ---------------------------------------------------------------------------
// Substitution

namespace {

ExprPtr subst_impl(const ExprPtr& e, const std::string& name, const ExprPtr& repl,
                   const std::set<std::string>& repl_free);

ExprPtr rename_var(const ExprPtr& e, const std::string& from, const std::string& to) {
    return subst_impl(e, from, mk(VarRef{to}), {to});
}

ExprPtr subst_impl(const ExprPtr& e, const std::string& name, const ExprPtr& repl,
                   const std::set<std::string>& repl_free) {
    return std::visit(
        overloaded{
            [&](const Const&) { return e; },
            [&](const VarRef& v) { return v.name == name ? repl : e; },
            [&](const DynVarRef&) { return e; },
            [&](const GoalVarRef&) { return e; },
            [&](const FactExpr&) { return e; },
            [&](const Prim& p) {
                bool changed = false;
                std::vector<ExprPtr> args;
                args.reserve(p.args.size());
                for (const auto& a : p.args) {
                    args.push_back(subst_impl(a, name, repl, repl_free));
                    changed |= args.back() != a;
                }
                if (!changed) return e;
                return mk(Prim{p.name, p.arity, p.result, std::move(args)});
            },
            [&](const Fun& f) {
                if (f.self == name || f.param == name) return e;
                std::string self = f.self, param = f.param;
                ExprPtr body = f.body;
                auto avoid = [&] {
                    auto s = repl_free;
                    merge(s, free_vars(*body));
                    s.insert(name);
                    s.insert(self);
                    s.insert(param);
                    return s;
                };
                if (!self.empty() && repl_free.count(self)) {
                    std::string ns = fresh_var(self, avoid());
                    body = rename_var(body, self, ns);
                    self = ns;
                }
                if (repl_free.count(param)) {
                    std::string np = fresh_var(param, avoid());
                    body = rename_var(body, param, np);
                    param = np;
                }
                ExprPtr nb = subst_impl(body, name, repl, repl_free);
                if (nb == f.body && self == f.self && param == f.param) return e;
                return mk(Fun{std::move(self), std::move(param), std::move(nb)});
            },
            [&](const BehVariation& b) {
                if (b.param == name) return e;
                std::string param = b.param;
                Va cases = b.cases;
                if (repl_free.count(param)) {
                    auto avoid = repl_free;
                    for (const auto& c : cases) merge(avoid, free_vars(*c.body));
                    avoid.insert(name);
                    avoid.insert(param);
                    std::string np = fresh_var(param, avoid);
                    for (auto& c : cases) c.body = rename_var(c.body, param, np);
                    param = np;
                }
                bool changed = param != b.param;
                for (auto& c : cases) {
                    ExprPtr nb = subst_impl(c.body, name, repl, repl_free);
                    changed |= nb != c.body;
                    c.body = std::move(nb);
                }
                if (!changed) return e;
                return mk(BehVariation{std::move(param), std::move(cases)});
            },
            [&](const App& a) {
                ExprPtr fn = subst_impl(a.fn, name, repl, repl_free);
                ExprPtr arg = subst_impl(a.arg, name, repl, repl_free);
                if (fn == a.fn && arg == a.arg) return e;
                return mk(App{std::move(fn), std::move(arg)});
            },
            [&](const Let& l) {
                ExprPtr bound = subst_impl(l.bound, name, repl, repl_free);
                if (l.name == name) {
                    if (bound == l.bound) return e;
                    return mk(Let{l.name, std::move(bound), l.body});
                }
                std::string n = l.name;
                ExprPtr body = l.body;
                if (repl_free.count(n)) {
                    auto avoid = repl_free;
                    merge(avoid, free_vars(*body));
                    avoid.insert(name);
                    avoid.insert(n);
                    std::string nn = fresh_var(n, avoid);
                    body = rename_var(body, n, nn);
                    n = nn;
                }
                ExprPtr nb = subst_impl(body, name, repl, repl_free);
                if (bound == l.bound && nb == l.body && n == l.name) return e;
                return mk(Let{std::move(n), std::move(bound), std::move(nb)});
            },
            [&](const Dlet& d) {
                ExprPtr bound = subst_impl(d.bound, name, repl, repl_free);
                ExprPtr body = subst_impl(d.body, name, repl, repl_free);
                if (bound == d.bound && body == d.body) return e;
                return mk(Dlet{d.param, d.guard, std::move(bound), std::move(body)});
            },
            [&](const If& i) {
                ExprPtr c = subst_impl(i.cond, name, repl, repl_free);
                ExprPtr t = subst_impl(i.then_branch, name, repl, repl_free);
                ExprPtr f = subst_impl(i.else_branch, name, repl, repl_free);
                if (c == i.cond && t == i.then_branch && f == i.else_branch) return e;
                return mk(If{std::move(c), std::move(t), std::move(f)});
            },
            [&](const Tell& t) {
                ExprPtr a = subst_impl(t.arg, name, repl, repl_free);
                if (a == t.arg) return e;
                return mk(Tell{std::move(a)});
            },
            [&](const Retract& r) {
                ExprPtr a = subst_impl(r.arg, name, repl, repl_free);
                if (a == r.arg) return e;
                return mk(Retract{std::move(a)});
            },
            [&](const Append& a) {
                ExprPtr l = subst_impl(a.lhs, name, repl, repl_free);
                ExprPtr r = subst_impl(a.rhs, name, repl, repl_free);
                if (l == a.lhs && r == a.rhs) return e;
                return mk(Append{std::move(l), std::move(r)});
            },
            [&](const VaApp& v) {
                ExprPtr fn = subst_impl(v.fn, name, repl, repl_free);
                ExprPtr arg = subst_impl(v.arg, name, repl, repl_free);
                if (fn == v.fn && arg == v.arg) return e;
                return mk(VaApp{std::move(fn), std::move(arg)});
            },
            [&](const Checkpointed& c) {
                ExprPtr inner = subst_impl(c.inner, name, repl, repl_free);
                if (inner == c.inner) return e;
                return mk(Checkpointed{std::move(inner), c.ann});
            },
            [&](const Overlined& o) {
                ExprPtr body = subst_impl(o.body, name, repl, repl_free);
                if (body == o.body) return e;
                return mk(Overlined{o.param, std::move(body)});
            },
        },
        e->node);
}

}  // namespace

ExprPtr substitute(const ExprPtr& e, const std::string& name, const ExprPtr& replacement) {
    return subst_impl(e, name, replacement, free_vars(*replacement));
}

// ---------------------------------------------------------------------------
// Goal-variable substitution

ExprPtr term_to_expr(const datalog::Term& t) {
    switch (t.kind) {
        case datalog::Term::Kind::integer: return int_expr(t.ival);
        case datalog::Term::Kind::symbol: return string_expr(t.name);
        case datalog::Term::Kind::variable: return mk(GoalVarRef{t.name});
    }
    return unit_expr();
}

ExprPtr apply_goal_subst(const ExprPtr& e, const datalog::Substitution& s) {
    if (s.empty()) return e;
    return std::visit(
        overloaded{
            [&](const Const&) { return e; },
            [&](const VarRef&) { return e; },
            [&](const DynVarRef&) { return e; },
            [&](const GoalVarRef& g) {
                auto it = s.find(g.name);
                if (it == s.end()) return e;
                return term_to_expr(it->second);
            },
            [&](const FactExpr& f) {
                datalog::Atom a = datalog::apply(s, f.atom);
                if (a == f.atom) return e;
                return mk(FactExpr{std::move(a)});
            },
            [&](const Prim& p) {
                bool changed = false;
                std::vector<ExprPtr> args;
                for (const auto& a : p.args) {
                    args.push_back(apply_goal_subst(a, s));
                    changed |= args.back() != a;
                }
                if (!changed) return e;
                return mk(Prim{p.name, p.arity, p.result, std::move(args)});
            },
            [&](const Fun& f) {
                ExprPtr body = apply_goal_subst(f.body, s);
                if (body == f.body) return e;
                return mk(Fun{f.self, f.param, std::move(body)});
            },
            [&](const BehVariation& b) {
                bool changed = false;
                Va cases = b.cases;
                for (auto& c : cases) {
                    datalog::Goal g = datalog::apply(s, c.guard);
                    ExprPtr nb = apply_goal_subst(c.body, s);
                    changed |= !(g == c.guard) || nb != c.body;
                    c.guard = std::move(g);
                    c.body = std::move(nb);
                }
                if (!changed) return e;
                return mk(BehVariation{b.param, std::move(cases)});
            },
            [&](const App& a) {
                ExprPtr fn = apply_goal_subst(a.fn, s);
                ExprPtr arg = apply_goal_subst(a.arg, s);
                if (fn == a.fn && arg == a.arg) return e;
                return mk(App{std::move(fn), std::move(arg)});
            },
            [&](const Let& l) {
                ExprPtr bound = apply_goal_subst(l.bound, s);
                ExprPtr body = apply_goal_subst(l.body, s);
                if (bound == l.bound && body == l.body) return e;
                return mk(Let{l.name, std::move(bound), std::move(body)});
            },
            [&](const Dlet& d) {
                datalog::Goal g = datalog::apply(s, d.guard);
                ExprPtr bound = apply_goal_subst(d.bound, s);
                ExprPtr body = apply_goal_subst(d.body, s);
                if (g == d.guard && bound == d.bound && body == d.body) return e;
                return mk(Dlet{d.param, std::move(g), std::move(bound), std::move(body)});
            },
            [&](const If& i) {
                ExprPtr c = apply_goal_subst(i.cond, s);
                ExprPtr t = apply_goal_subst(i.then_branch, s);
                ExprPtr f = apply_goal_subst(i.else_branch, s);
                if (c == i.cond && t == i.then_branch && f == i.else_branch) return e;
                return mk(If{std::move(c), std::move(t), std::move(f)});
            },
            [&](const Tell& t) {
                ExprPtr a = apply_goal_subst(t.arg, s);
                if (a == t.arg) return e;
                return mk(Tell{std::move(a)});
            },
            [&](const Retract& r) {
                ExprPtr a = apply_goal_subst(r.arg, s);
                if (a == r.arg) return e;
                return mk(Retract{std::move(a)});
            },
            [&](const Append& a) {
                ExprPtr l = apply_goal_subst(a.lhs, s);
                ExprPtr r = apply_goal_subst(a.rhs, s);
                if (l == a.lhs && r == a.rhs) return e;
                return mk(Append{std::move(l), std::move(r)});
            },
            [&](const VaApp& v) {
                ExprPtr fn = apply_goal_subst(v.fn, s);
                ExprPtr arg = apply_goal_subst(v.arg, s);
                if (fn == v.fn && arg == v.arg) return e;
                return mk(VaApp{std::move(fn), std::move(arg)});
            },
            [&](const Checkpointed& c) {
                ExprPtr inner = apply_goal_subst(c.inner, s);
                if (inner == c.inner) return e;
                return mk(Checkpointed{std::move(inner), c.ann});
            },
            [&](const Overlined& o) {
                ExprPtr body = apply_goal_subst(o.body, s);
                if (body == o.body) return e;
                return mk(Overlined{o.param, std::move(body)});
            },
        },
        e->node);
}

// ---------------------------------------------------------------------------
// Goal-variable scoping

namespace {

std::unordered_set<std::string> as_unordered(const std::set<std::string>& s) {
    return {s.begin(), s.end()};
}

// Variables bound by the positive atoms of a guard.
void add_guard_vars(const datalog::Goal& g, std::set<std::string>& into) {
    for (const auto& l : g) {
        if (l.kind != datalog::Literal::Kind::positive) continue;
        for (const auto& t : l.atom.args)
            if (t.kind == datalog::Term::Kind::variable) into.insert(t.name);
    }
}

}  // namespace

void validate_goal_scope(const Expr& e, const std::set<std::string>& bound) {
    std::visit(
        overloaded{
            [&](const Const&) {},
            [&](const VarRef&) {},
            [&](const DynVarRef&) {},
            [&](const GoalVarRef& g) {
                if (!bound.count(g.name)) throw RangeRestrictionError(g.name);
            },
            [&](const FactExpr& f) {
                for (const auto& t : f.atom.args)
                    if (t.kind == datalog::Term::Kind::variable && !bound.count(t.name))
                        throw RangeRestrictionError(t.name);
            },
            [&](const Prim& p) {
                for (const auto& a : p.args) validate_goal_scope(*a, bound);
            },
            [&](const Fun& f) { validate_goal_scope(*f.body, bound); },
            [&](const BehVariation& b) {
                for (const auto& c : b.cases) {
                    datalog::check_range_restriction(nullptr, c.guard, as_unordered(bound));
                    auto inner = bound;
                    add_guard_vars(c.guard, inner);
                    validate_goal_scope(*c.body, inner);
                }
            },
            [&](const App& a) {
                validate_goal_scope(*a.fn, bound);
                validate_goal_scope(*a.arg, bound);
            },
            [&](const Let& l) {
                validate_goal_scope(*l.bound, bound);
                validate_goal_scope(*l.body, bound);
            },
            [&](const Dlet& d) {
                datalog::check_range_restriction(nullptr, d.guard, as_unordered(bound));
                auto inner = bound;
                add_guard_vars(d.guard, inner);
                validate_goal_scope(*d.bound, inner);
                validate_goal_scope(*d.body, bound);
            },
            [&](const If& i) {
                validate_goal_scope(*i.cond, bound);
                validate_goal_scope(*i.then_branch, bound);
                validate_goal_scope(*i.else_branch, bound);
            },
            [&](const Tell& t) { validate_goal_scope(*t.arg, bound); },
            [&](const Retract& r) { validate_goal_scope(*r.arg, bound); },
            [&](const Append& a) {
                validate_goal_scope(*a.lhs, bound);
                validate_goal_scope(*a.rhs, bound);
            },
            [&](const VaApp& v) {
                validate_goal_scope(*v.fn, bound);
                validate_goal_scope(*v.arg, bound);
            },
            [&](const Checkpointed& c) { validate_goal_scope(*c.inner, bound); },
            [&](const Overlined& o) { validate_goal_scope(*o.body, bound); },
        },
        e.node);
}

// ---------------------------------------------------------------------------
// Printing

std::string const_to_string(const ConstValue& v) {
    return std::visit(overloaded{
                          [](const std::monostate&) { return std::string("()"); },
                          [](bool b) { return std::string(b ? "true" : "false"); },
                          [](std::int64_t i) { return std::to_string(i); },
                          [](const std::string& s) {
                              std::string out = "\"";
                              for (char c : s) {
                                  switch (c) {
                                      case '"': out += "\\\""; break;
                                      case '\\': out += "\\\\"; break;
                                      case '\n': out += "\\n"; break;
                                      case '\t': out += "\\t"; break;
                                      case '\r': out += "\\r"; break;
                                      default: out += c;
                                  }
                              }
                              return out + "\"";
                          },
                      },
                      v);
}

namespace {

// Precedence levels used by the printer (higher binds tighter):
//   0 expr (let/if/fn/tell bodies), 1 append, 2 application, 3 '#', 4 primary
constexpr int kExpr = 0, kAppend = 1, kJuxt = 2, kVaApp = 3, kPrimary = 4;

void print(const Expr& e, int level, std::string& out);

void print_guard(const datalog::Goal& g, std::string& out) {
    out += "<- ";
    if (!g.empty()) {
        out += datalog::to_string(g);
        out += " ";
    }
    out += ". ";
}

void print_cases(const Va& cases, std::string& out) {
    out += "{";
    for (size_t i = 0; i < cases.size(); ++i) {
        if (i) out += ", ";
        print_guard(cases[i].guard, out);
        print(*cases[i].body, kExpr, out);
    }
    out += "}";
}

int natural_level(const Expr& e) {
    return std::visit(
        overloaded{
            [](const Const&) { return kPrimary; },
            [](const VarRef&) { return kPrimary; },
            [](const DynVarRef&) { return kPrimary; },
            [](const GoalVarRef&) { return kPrimary; },
            [](const FactExpr&) { return kPrimary; },
            [](const BehVariation&) { return kPrimary; },
            [](const Overlined&) { return kPrimary; },
            [](const Checkpointed&) { return kPrimary; },
            [](const Prim& p) { return p.args.empty() ? kPrimary : kJuxt; },
            [](const App&) { return kJuxt; },
            [](const VaApp&) { return kVaApp; },
            [](const Append&) { return kAppend; },
            [](const auto&) { return kExpr; },
        },
        e.node);
}

void print(const Expr& e, int level, std::string& out) {
    if (natural_level(e) < level) {
        out += "(";
        print(e, kExpr, out);
        out += ")";
        return;
    }
    std::visit(
        overloaded{
            [&](const Const& c) { out += const_to_string(c.v); },
            [&](const VarRef& v) { out += v.name; },
            [&](const DynVarRef& v) { out += "~" + v.name; },
            [&](const GoalVarRef& v) { out += "?" + v.name; },
            [&](const FactExpr& f) { out += ":" + datalog::to_string(f.atom); },
            [&](const Fun& f) {
                if (f.self.empty()) {
                    out += "fn " + f.param + " => ";
                    print(*f.body, kExpr, out);
                } else {
                    out += "fun " + f.self + "(" + f.param + ") = ";
                    print(*f.body, kExpr, out);
                    out += " in " + f.self;
                }
            },
            [&](const Prim& p) {
                out += p.name;
                for (const auto& a : p.args) {
                    out += " ";
                    print(*a, kPrimary, out);
                }
            },
            [&](const BehVariation& b) {
                out += "(" + b.param + ")";
                print_cases(b.cases, out);
            },
            [&](const App& a) {
                print(*a.fn, kJuxt, out);
                out += " ";
                print(*a.arg, kVaApp, out);
            },
            [&](const Let& l) {
                // Re-sugar `let f = <recursive fun named f> in e`.
                if (const auto* f = std::get_if<Fun>(&l.bound->node); f && f->self == l.name) {
                    out += "fun " + f->self + "(" + f->param + ") = ";
                    print(*f->body, kExpr, out);
                    out += " in ";
                    print(*l.body, kExpr, out);
                    return;
                }
                out += "let " + l.name + " = ";
                print(*l.bound, kExpr, out);
                out += " in ";
                print(*l.body, kExpr, out);
            },
            [&](const Dlet& d) {
                out += "dlet ~" + d.param + " = ";
                print(*d.bound, kExpr, out);
                if (!d.guard.empty()) out += " when " + datalog::to_string(d.guard);
                out += " in ";
                print(*d.body, kExpr, out);
            },
            [&](const If& i) {
                out += "if ";
                print(*i.cond, kExpr, out);
                out += " then ";
                print(*i.then_branch, kExpr, out);
                out += " else ";
                print(*i.else_branch, kExpr, out);
            },
            [&](const Tell& t) {
                out += "tell ";
                print(*t.arg, kPrimary, out);
            },
            [&](const Retract& r) {
                out += "retract ";
                print(*r.arg, kPrimary, out);
            },
            [&](const Append& a) {
                print(*a.lhs, kAppend, out);
                out += " ++ ";
                print(*a.rhs, kJuxt, out);
            },
            [&](const VaApp& v) {
                print(*v.fn, kVaApp, out);
                out += " # ";
                print(*v.arg, kPrimary, out);
            },
            [&](const Checkpointed& c) {
                print(*c.inner, kPrimary, out);
                out += "^{" + datalog::to_string(c.ann->goal) + "}";
            },
            [&](const Overlined& o) {
                out += "{~" + o.param + "| ";
                print(*o.body, kExpr, out);
                out += "}";
            },
        },
        e.node);
}

}  // namespace

std::string pretty(const Expr& e) {
    std::string out;
    print(e, kExpr, out);
    return out;
}

std::string pretty(const ExprPtr& e) { return pretty(*e); }

}  // namespace coda
