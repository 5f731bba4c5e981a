#include "coda/interp.hpp"

namespace coda {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

std::string note_text(const StepNote& n) {
    switch (n.kind) {
        case StepNoteKind::plain:
        case StepNoteKind::tell:
        case StepNoteKind::retract: return "";
        case StepNoteKind::dispatch: {
            std::string out = "dispatch(";
            if (!n.param.empty()) out += "~" + n.param + ", ";
            return out + "case=" + std::to_string(n.case_index) + ")";
        }
        case StepNoteKind::restore: return "restore";
        case StepNoteKind::dlet_push: return "push(~" + n.param + ")";
        case StepNoteKind::dlet_pop: return "pop(~" + n.param + ")";
        case StepNoteKind::unwrap: return "unwrap";
    }
    return "";
}

std::optional<Dispatch> dsp(const datalog::Context& ctx, const Va& va) {
    for (std::size_t i = 0; i < va.size(); ++i) {
        auto theta = datalog::solve(ctx, va[i].guard);
        if (!theta) continue;
        Dispatch d;
        d.body = apply_goal_subst(va[i].body, *theta);
        d.goal = datalog::apply(*theta, va[i].guard);
        d.index = i;
        d.theta = std::move(*theta);
        return d;
    }
    return std::nullopt;
}

namespace {

// One-step reducer. `go` returns the replacement for the subtree it was given
// (status stepped), or null with `status` set to failed/stuck. Environment and
// context changes thread through the object; `crossed` records whether the
// step traversed a checkpoint while the context was event-marked.
struct Stepper {
    PEnv env;
    datalog::Context ctx;
    StepNote note;
    SlaveStatus status = SlaveStatus::stepped;
    std::string stuck_reason;
    bool crossed = false;

    ExprPtr stuck(std::string reason) {
        status = SlaveStatus::stuck;
        stuck_reason = std::move(reason);
        return nullptr;
    }

    ExprPtr failed() {
        status = SlaveStatus::failed;
        return nullptr;
    }

    // Steps a non-value subexpression.
    ExprPtr go(const ExprPtr& e) {
        return std::visit(
            overloaded{
                [&](const Const&) -> ExprPtr { return stuck("internal: stepping a value"); },
                [&](const Fun&) -> ExprPtr { return stuck("internal: stepping a value"); },
                [&](const Prim&) -> ExprPtr { return stuck("internal: stepping a value"); },
                [&](const VarRef& v) -> ExprPtr { return stuck("unbound variable " + v.name); },
                [&](const GoalVarRef& g) -> ExprPtr {
                    return stuck("unresolved goal variable ?" + g.name);
                },
                [&](const FactExpr&) -> ExprPtr {
                    return stuck("fact with an unresolved goal variable");
                },
                [&](const DynVarRef& v) -> ExprPtr {
                    auto it = env.find(v.name);
                    if (it == env.end() || it->second.empty())
                        return stuck("unbound dynamic parameter ~" + v.name);
                    auto d = dsp(ctx, it->second);
                    if (!d) return failed();
                    auto ann = std::make_shared<const Checkpoint>(Checkpoint{d->goal, env, e});
                    note.kind = StepNoteKind::dispatch;
                    note.case_index = d->index;
                    note.goal = d->goal;
                    note.param = v.name;
                    return mk(Checkpointed{d->body, std::move(ann)});
                },
                [&](const BehVariation&) -> ExprPtr {
                    return stuck("internal: stepping a value");
                },
                [&](const App& a) -> ExprPtr {
                    if (!is_value(a.fn)) return rebuild1(e, a.fn, [&](ExprPtr f) {
                        return mk(App{std::move(f), a.arg});
                    });
                    if (!is_value(a.arg)) return rebuild1(e, a.arg, [&](ExprPtr x) {
                        return mk(App{a.fn, std::move(x)});
                    });
                    if (const auto* f = std::get_if<Fun>(&a.fn->node)) {
                        ExprPtr body = substitute(f->body, f->param, a.arg);
                        if (!f->self.empty() && f->self != f->param)
                            body = substitute(body, f->self, a.fn);
                        return body;
                    }
                    if (const auto* p = std::get_if<Prim>(&a.fn->node)) {
                        std::vector<ExprPtr> args = p->args;
                        args.push_back(a.arg);
                        if (args.size() == p->arity) return mk(Const{p->result});
                        return mk(Prim{p->name, p->arity, p->result, std::move(args)});
                    }
                    return stuck("application of a non-function");
                },
                [&](const Let& l) -> ExprPtr {
                    if (!is_value(l.bound)) return rebuild1(e, l.bound, [&](ExprPtr b) {
                        return mk(Let{l.name, std::move(b), l.body});
                    });
                    return substitute(l.body, l.name, l.bound);
                },
                [&](const If& i) -> ExprPtr {
                    if (!is_value(i.cond)) return rebuild1(e, i.cond, [&](ExprPtr c) {
                        return mk(If{std::move(c), i.then_branch, i.else_branch});
                    });
                    if (const auto* c = std::get_if<Const>(&i.cond->node))
                        if (const bool* b = std::get_if<bool>(&c->v))
                            return *b ? i.then_branch : i.else_branch;
                    return stuck("if condition is not a boolean");
                },
                [&](const Tell& t) -> ExprPtr {
                    if (!is_value(t.arg)) return rebuild1(e, t.arg, [&](ExprPtr a) {
                        return mk(Tell{std::move(a)});
                    });
                    const auto* f = std::get_if<FactExpr>(&t.arg->node);
                    if (!f) return stuck("tell of a non-fact");
                    datalog::Fact fact = f->atom.to_fact();
                    note.kind = StepNoteKind::tell;
                    note.fact = fact;
                    note.changed = !ctx.has_fact(fact);
                    ctx = datalog::tell_fact(ctx, fact);
                    return unit_expr();
                },
                [&](const Retract& r) -> ExprPtr {
                    if (!is_value(r.arg)) return rebuild1(e, r.arg, [&](ExprPtr a) {
                        return mk(Retract{std::move(a)});
                    });
                    const auto* f = std::get_if<FactExpr>(&r.arg->node);
                    if (!f) return stuck("retract of a non-fact");
                    datalog::Fact fact = f->atom.to_fact();
                    note.kind = StepNoteKind::retract;
                    note.fact = fact;
                    note.changed = ctx.has_fact(fact);
                    ctx = datalog::retract_fact(ctx, fact);
                    return unit_expr();
                },
                [&](const Dlet& d) -> ExprPtr {
                    env[d.param].insert(env[d.param].begin(), VaCase{d.guard, d.bound});
                    note.kind = StepNoteKind::dlet_push;
                    note.param = d.param;
                    return mk(Overlined{d.param, d.body});
                },
                [&](const Overlined& o) -> ExprPtr {
                    if (!is_value(o.body)) return rebuild1(e, o.body, [&](ExprPtr b) {
                        return mk(Overlined{o.param, std::move(b)});
                    });
                    auto it = env.find(o.param);
                    if (it == env.end() || it->second.empty())
                        return stuck("internal: unbalanced dynamic scope for ~" + o.param);
                    it->second.erase(it->second.begin());
                    if (it->second.empty()) env.erase(it);
                    note.kind = StepNoteKind::dlet_pop;
                    note.param = o.param;
                    return o.body;
                },
                [&](const Append& a) -> ExprPtr {
                    if (!is_value(a.lhs)) return rebuild1(e, a.lhs, [&](ExprPtr l) {
                        return mk(Append{std::move(l), a.rhs});
                    });
                    if (!is_value(a.rhs)) return rebuild1(e, a.rhs, [&](ExprPtr r) {
                        return mk(Append{a.lhs, std::move(r)});
                    });
                    const auto* l = std::get_if<BehVariation>(&a.lhs->node);
                    const auto* r = std::get_if<BehVariation>(&a.rhs->node);
                    if (!l || !r) return stuck("union of a non-variation");
                    std::set<std::string> avoid = free_vars(*a.lhs);
                    auto rf = free_vars(*a.rhs);
                    avoid.insert(rf.begin(), rf.end());
                    avoid.insert(l->param);
                    avoid.insert(r->param);
                    std::string z = fresh_var("z", avoid);
                    Va cases;
                    ExprPtr zref = mk(VarRef{z});
                    for (const auto& c : l->cases)
                        cases.push_back(VaCase{c.guard, substitute(c.body, l->param, zref)});
                    for (const auto& c : r->cases)
                        cases.push_back(VaCase{c.guard, substitute(c.body, r->param, zref)});
                    return mk(BehVariation{std::move(z), std::move(cases)});
                },
                [&](const VaApp& v) -> ExprPtr {
                    if (!is_value(v.fn)) return rebuild1(e, v.fn, [&](ExprPtr f) {
                        return mk(VaApp{std::move(f), v.arg});
                    });
                    if (!is_value(v.arg)) return rebuild1(e, v.arg, [&](ExprPtr a) {
                        return mk(VaApp{v.fn, std::move(a)});
                    });
                    const auto* bv = std::get_if<BehVariation>(&v.fn->node);
                    if (!bv) return stuck("variation application of a non-variation");
                    auto d = dsp(ctx, bv->cases);
                    if (!d) return failed();
                    ExprPtr body = substitute(d->body, bv->param, v.arg);
                    auto ann = std::make_shared<const Checkpoint>(Checkpoint{d->goal, env, e});
                    note.kind = StepNoteKind::dispatch;
                    note.case_index = d->index;
                    note.goal = d->goal;
                    return mk(Checkpointed{std::move(body), std::move(ann)});
                },
                [&](const Checkpointed& c) -> ExprPtr {
                    if (ctx.mark == datalog::Mark::ev) {
                        crossed = true;
                        if (!datalog::solve(ctx, c.ann->goal)) {
                            env = c.ann->env;
                            note.kind = StepNoteKind::restore;
                            return c.ann->resume;
                        }
                    }
                    if (is_value(c.inner)) {
                        note.kind = StepNoteKind::unwrap;
                        return c.inner;
                    }
                    return rebuild1(e, c.inner, [&](ExprPtr i) {
                        return mk(Checkpointed{std::move(i), c.ann});
                    });
                },
            },
            e->node);
    }

    // Steps `child` and rebuilds the parent around the result.
    template <typename F>
    ExprPtr rebuild1(const ExprPtr&, const ExprPtr& child, F make) {
        ExprPtr nc = go(child);
        if (!nc) return nullptr;
        return make(std::move(nc));
    }
};

}  // namespace

SlaveResult step_slave(const PEnv& env, const datalog::Context& ctx, const ExprPtr& e) {
    SlaveResult out;
    if (is_value(e)) {
        out.status = SlaveStatus::value;
        out.expr = e;
        out.env = env;
        out.ctx = ctx;
        return out;
    }
    Stepper st{env, ctx};
    ExprPtr ne = st.go(e);
    out.status = st.status;
    out.env = std::move(st.env);
    out.ctx = std::move(st.ctx);
    out.note = std::move(st.note);
    out.stuck_reason = std::move(st.stuck_reason);
    if (st.status == SlaveStatus::stepped) {
        out.expr = std::move(ne);
        if (out.ctx.mark == datalog::Mark::ev && st.crossed)
            out.ctx.mark = datalog::Mark::plain;
    } else {
        out.expr = e;
        out.env = env;  // failed / stuck steps leave the configuration as it was
        out.ctx = ctx;
    }
    return out;
}

SlaveRun run_slave(PEnv env, datalog::Context ctx, ExprPtr e, std::size_t max_steps) {
    SlaveRun run;
    for (std::size_t k = 0;; ++k) {
        if (is_value(e)) {
            run.status = SlaveStatus::value;
            break;
        }
        if (k >= max_steps) {
            run.status = SlaveStatus::stuck;
            run.budget_exceeded = true;
            run.stuck_reason = "step budget exceeded";
            break;
        }
        SlaveResult r = step_slave(env, ctx, e);
        if (r.status != SlaveStatus::stepped) {
            run.status = r.status;
            run.stuck_reason = r.stuck_reason;
            break;
        }
        e = std::move(r.expr);
        env = std::move(r.env);
        ctx = std::move(r.ctx);
        ++run.steps;
    }
    run.expr = std::move(e);
    run.env = std::move(env);
    run.ctx = std::move(ctx);
    return run;
}

}  // namespace coda
