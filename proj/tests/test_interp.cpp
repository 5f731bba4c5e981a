#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <string>

#include "coda/ast.hpp"
#include "coda/interp.hpp"
#include "coda/parser.hpp"

using namespace coda;
namespace dl = coda::datalog;

namespace {

dl::Context ctx_of(const std::string& text) { return dl::load_context(text, "mem.ctx"); }

// One step that must succeed.
SlaveResult step1(const PEnv& env, const dl::Context& ctx, const ExprPtr& e) {
    SlaveResult r = step_slave(env, ctx, e);
    REQUIRE(r.status == SlaveStatus::stepped);
    return r;
}

ExprPtr run_to_value(const std::string& src, const dl::Context& ctx = {}) {
    SlaveRun r = run_slave({}, ctx, parse_expr(src));
    REQUIRE(r.status == SlaveStatus::value);
    return r.expr;
}

dl::Goal guard1(const std::string& pred, std::vector<dl::Term> args = {}) {
    return dl::Goal{dl::Literal::pos(dl::Atom{pred, std::move(args)})};
}

}  // namespace

// ---------------------------------------------------------------------------
// Dispatch

TEST_CASE("dsp picks the first satisfiable case") {
    dl::Context ctx = ctx_of("payByText.");
    ExprPtr e = parse_expr("(x){ <- payByWeb . x, <- payByText . tell x }");
    const Va& va = std::get<BehVariation>(e->node).cases;
    auto d = dsp(ctx, va);
    REQUIRE(d.has_value());
    CHECK(d->index == 1);
    CHECK(d->goal == guard1("payByText"));
    CHECK(equal(d->body, parse_expr("tell x")));
}

TEST_CASE("the empty goal always holds") {
    ExprPtr e = parse_expr("(x){ <- . x }");
    auto d = dsp({}, std::get<BehVariation>(e->node).cases);
    REQUIRE(d.has_value());
    CHECK(d->index == 0);
    CHECK(d->goal.empty());
    CHECK(d->theta.empty());
}

TEST_CASE("dsp reports failure when no guard holds") {
    ExprPtr e = parse_expr("(x){ <- phone_on . x }");
    CHECK(!dsp({}, std::get<BehVariation>(e->node).cases).has_value());
}

TEST_CASE("dsp applies the substitution to body and stored goal") {
    dl::Context ctx = ctx_of("ticket(reduced). ticket(free).");
    ExprPtr e = parse_expr("(x){ <- ticket(?k) . pay ?k }");
    auto d = dsp(ctx, std::get<BehVariation>(e->node).cases);
    REQUIRE(d.has_value());
    CHECK(d->theta.at("k") == dl::Term::symbol("reduced"));
    CHECK(equal(d->body, parse_expr("pay \"reduced\"")));
    // Stored goal is the instantiated one, not the pattern.
    CHECK(d->goal == guard1("ticket", {dl::Term::symbol("reduced")}));
}

// ---------------------------------------------------------------------------
// Functions and control flow

TEST_CASE("beta reduction substitutes the argument") {
    SlaveResult r = step1({}, {}, parse_expr("(fn x => x) 5"));
    CHECK(equal(r.expr, int_expr(5)));
    CHECK(r.note.kind == StepNoteKind::plain);
}

TEST_CASE("application evaluates the function, then the argument") {
    SlaveResult r = step1({}, {}, parse_expr("(let f = fn x => x in f) 3"));
    CHECK(equal(r.expr, parse_expr("(fn x => x) 3")));
    SlaveResult s = step1({}, {}, parse_expr("(fn x => x) (let y = 1 in y)"));
    CHECK(equal(s.expr, parse_expr("(fn x => x) 1")));
}

TEST_CASE("recursive functions unfold at application") {
    CHECK(equal(run_to_value("fun f(x) = if x then 1 else f true in f false"), int_expr(1)));
    CHECK(equal(run_to_value("fun sum(n) = if n then sum false else 7 in sum true"),
                int_expr(7)));
}

TEST_CASE("stub applications collect arguments and finish with the constant") {
    PEnv env;
    ExprPtr prim = mk(Prim{"sendText", 2, ConstValue{std::string("sent")}, {}});
    ExprPtr app1 = mk(App{prim, int_expr(1)});
    SlaveResult r1 = step1(env, {}, app1);
    const auto& p1 = std::get<Prim>(r1.expr->node);
    CHECK(p1.args.size() == 1);
    ExprPtr app2 = mk(App{r1.expr, int_expr(2)});
    SlaveResult r2 = step1(env, {}, app2);
    CHECK(equal(r2.expr, string_expr("sent")));
}

TEST_CASE("let reduces its binding before substituting") {
    SlaveResult r = step1({}, {}, parse_expr("let x = (fn y => y) 1 in x"));
    CHECK(equal(r.expr, parse_expr("let x = 1 in x")));
    SlaveResult s = step1({}, {}, parse_expr("let x = 1 in x"));
    CHECK(equal(s.expr, int_expr(1)));
}

TEST_CASE("if selects a branch on booleans and rejects other values") {
    CHECK(equal(run_to_value("if true then 1 else 2"), int_expr(1)));
    CHECK(equal(run_to_value("if false then 1 else 2"), int_expr(2)));
    SlaveResult r = step_slave({}, {}, parse_expr("if 3 then 1 else 2"));
    CHECK(r.status == SlaveStatus::stuck);
    CHECK(r.stuck_reason == "if condition is not a boolean");
}

TEST_CASE("ill-typed applications get stuck with a reason") {
    SlaveResult r = step_slave({}, {}, parse_expr("1 2"));
    CHECK(r.status == SlaveStatus::stuck);
    CHECK(r.stuck_reason == "application of a non-function");
    SlaveResult v = step_slave({}, {}, parse_expr("x"));
    CHECK(v.status == SlaveStatus::stuck);
    CHECK(v.stuck_reason == "unbound variable x");
}

TEST_CASE("stuck and failed steps leave the configuration untouched") {
    dl::Context ctx = ctx_of("a.");
    PEnv env;
    env["p"] = {VaCase{guard1("missing"), int_expr(1)}};
    ExprPtr e = parse_expr("~p");
    SlaveResult r = step_slave(env, ctx, e);
    CHECK(r.status == SlaveStatus::failed);
    CHECK(r.expr.get() == e.get());
    CHECK(penv_equal(r.env, env));
    CHECK(r.ctx.facts == ctx.facts);
}

// ---------------------------------------------------------------------------
// Context updates

TEST_CASE("tell adds the fact and yields unit") {
    SlaveResult r = step1({}, {}, parse_expr("tell :p(a)"));
    CHECK(is_unit(*r.expr));
    CHECK(r.ctx.has_fact(dl::Fact{"p", {dl::Term::symbol("a")}}));
    CHECK(r.note.kind == StepNoteKind::tell);
    CHECK(r.note.changed);
    // Telling a fact already present is visible in the note.
    SlaveResult again = step1({}, r.ctx, parse_expr("tell :p(a)"));
    CHECK(!again.note.changed);
    CHECK(again.ctx.facts == r.ctx.facts);
}

TEST_CASE("retract removes the fact and yields unit") {
    dl::Context ctx = ctx_of("p(a). q.");
    SlaveResult r = step1({}, ctx, parse_expr("retract :p(a)"));
    CHECK(is_unit(*r.expr));
    CHECK(!r.ctx.has_fact(dl::Fact{"p", {dl::Term::symbol("a")}}));
    CHECK(r.ctx.has_fact(dl::Fact{"q", {}}));
    CHECK(r.note.kind == StepNoteKind::retract);
    CHECK(r.note.changed);
    SlaveResult absent = step1({}, ctx, parse_expr("retract :zz"));
    CHECK(!absent.note.changed);
}

TEST_CASE("tell of a non-fact value is stuck") {
    SlaveResult r = step_slave({}, {}, parse_expr("tell 3"));
    CHECK(r.status == SlaveStatus::stuck);
    CHECK(r.stuck_reason == "tell of a non-fact");
    SlaveResult s = step_slave({}, {}, parse_expr("retract (fn x => x)"));
    CHECK(s.status == SlaveStatus::stuck);
}

TEST_CASE("tell evaluates its argument first") {
    SlaveResult r = step1({}, {}, parse_expr("tell (let x = :p(a) in x)"));
    CHECK(equal(r.expr, parse_expr("tell :p(a)")));
    CHECK(r.ctx.facts.empty());
}

// ---------------------------------------------------------------------------
// Dynamic binding

TEST_CASE("dlet pushes a case and overlines its body") {
    SlaveResult r = step1({}, {}, parse_expr("dlet ~p = 1 when g in ~p"));
    const auto& o = std::get<Overlined>(r.expr->node);
    CHECK(o.param == "p");
    REQUIRE(r.env.count("p") == 1);
    REQUIRE(r.env.at("p").size() == 1);
    CHECK(r.env.at("p")[0].guard == guard1("g"));
    CHECK(equal(r.env.at("p")[0].body, int_expr(1)));
    CHECK(r.note.kind == StepNoteKind::dlet_push);
    CHECK(r.note.param == "p");
}

TEST_CASE("nested dlets for one parameter stack innermost first") {
    PEnv env;
    dl::Context ctx;
    ExprPtr e = parse_expr("dlet ~p = 1 in dlet ~p = 2 in ~p");
    SlaveResult r1 = step1(env, ctx, e);
    SlaveResult r2 = step1(r1.env, ctx, r1.expr);
    REQUIRE(r2.env.at("p").size() == 2);
    CHECK(equal(r2.env.at("p")[0].body, int_expr(2)));  // innermost shadows
    CHECK(equal(r2.env.at("p")[1].body, int_expr(1)));
}

TEST_CASE("overlined bodies pop their binding when they finish") {
    PEnv env;
    env["p"] = {VaCase{{}, int_expr(1)}};
    ExprPtr e = mk(Overlined{"p", int_expr(9)});
    SlaveResult r = step1(env, {}, e);
    CHECK(equal(r.expr, int_expr(9)));
    CHECK(r.env.empty());  // the emptied key disappears entirely
    CHECK(r.note.kind == StepNoteKind::dlet_pop);
    CHECK(r.note.param == "p");
}

TEST_CASE("dynamic binding runs push, dispatch, pop and restores the env") {
    SlaveRun r = run_slave({}, {}, parse_expr("dlet ~p = 41 in ~p"));
    REQUIRE(r.status == SlaveStatus::value);
    CHECK(equal(r.expr, int_expr(41)));
    CHECK(r.env.empty());
}

TEST_CASE("interleaved dlets of different parameters unwind correctly") {
    SlaveRun r = run_slave(
        {}, {}, parse_expr("dlet ~a = 1 in dlet ~b = 2 in let x = ~a in dlet ~a = 3 in ~a"));
    REQUIRE(r.status == SlaveStatus::value);
    CHECK(equal(r.expr, int_expr(3)));
    CHECK(r.env.empty());
}

TEST_CASE("dynamic references dispatch over the parameter's case stack") {
    dl::Context ctx = ctx_of("roaming.");
    PEnv env;
    env["mode"] = {VaCase{guard1("wifi"), string_expr("fast")},
                   VaCase{guard1("roaming"), string_expr("slow")}};
    ExprPtr e = parse_expr("~mode");
    SlaveResult r = step1(env, ctx, e);
    const auto& cp = std::get<Checkpointed>(r.expr->node);
    CHECK(equal(cp.inner, string_expr("slow")));
    CHECK(cp.ann->goal == guard1("roaming"));
    CHECK(cp.ann->resume.get() == e.get());  // the reference itself resumes
    CHECK(r.note.kind == StepNoteKind::dispatch);
    CHECK(r.note.case_index == 1);
    CHECK(r.note.param == "mode");
}

TEST_CASE("dlet guards bind goal variables in the bound expression") {
    dl::Context ctx = ctx_of("quality(low).");
    SlaveRun r = run_slave({}, ctx, parse_expr("dlet ~q = ?x when quality(?x) in ~q"));
    REQUIRE(r.status == SlaveStatus::value);
    CHECK(equal(r.expr, string_expr("low")));
}

TEST_CASE("unbound dynamic parameters are stuck, unsatisfiable ones fail") {
    SlaveResult r = step_slave({}, {}, parse_expr("~nav"));
    CHECK(r.status == SlaveStatus::stuck);
    CHECK(r.stuck_reason == "unbound dynamic parameter ~nav");

    PEnv env;
    env["nav"] = {VaCase{guard1("gps"), int_expr(1)}};
    SlaveResult f = step_slave(env, {}, parse_expr("~nav"));
    CHECK(f.status == SlaveStatus::failed);
}

// ---------------------------------------------------------------------------
// Variation application and union

TEST_CASE("variation application dispatches and checkpoints") {
    dl::Context ctx = ctx_of("payByText.");
    ExprPtr e = parse_expr("(x){ <- payByWeb . web x, <- payByText . text x } # 7");
    SlaveResult r = step1({}, ctx, e);
    const auto& cp = std::get<Checkpointed>(r.expr->node);
    CHECK(equal(cp.inner, parse_expr("text 7")));  // param substituted
    CHECK(cp.ann->goal == guard1("payByText"));
    CHECK(cp.ann->resume.get() == e.get());  // the whole application resumes
    CHECK(r.note.kind == StepNoteKind::dispatch);
    CHECK(r.note.case_index == 1);
    CHECK(r.note.param.empty());
}

TEST_CASE("goal variables reach the dispatched body instantiated") {
    dl::Context ctx = ctx_of("ticket(free).");
    ExprPtr e = parse_expr("(x){ <- ticket(?k) . pay ?k x } # 9");
    SlaveResult r = step1({}, ctx, e);
    const auto& cp = std::get<Checkpointed>(r.expr->node);
    CHECK(equal(cp.inner, parse_expr("pay \"free\" 9")));
}

TEST_CASE("variation application failures and type errors") {
    ExprPtr noCase = parse_expr("(x){ <- phone_on . x } # 1");
    CHECK(step_slave({}, {}, noCase).status == SlaveStatus::failed);
    SlaveResult r = step_slave({}, {}, parse_expr("3 # 1"));
    CHECK(r.status == SlaveStatus::stuck);
    CHECK(r.stuck_reason == "variation application of a non-variation");
}

TEST_CASE("union concatenates cases under one fresh parameter") {
    ExprPtr e = parse_expr("(x){ <- a . f x } ++ (y){ <- b . g y, <- . y }");
    SlaveResult r = step1({}, {}, e);
    const auto& bv = std::get<BehVariation>(r.expr->node);
    CHECK(bv.param == "z");
    REQUIRE(bv.cases.size() == 3);
    CHECK(bv.cases[0].guard == guard1("a"));
    CHECK(equal(bv.cases[0].body, parse_expr("f z")));
    CHECK(bv.cases[1].guard == guard1("b"));
    CHECK(equal(bv.cases[1].body, parse_expr("g z")));
    CHECK(equal(bv.cases[2].body, parse_expr("z")));
}

TEST_CASE("union avoids capturing free variables when renaming") {
    // `z` occurs free in a case body, so the united parameter must move on.
    ExprPtr lhs = parse_expr("(x){ <- . z x }");
    ExprPtr rhs = parse_expr("(y){ <- . y }");
    SlaveResult r = step1({}, {}, mk(Append{lhs, rhs}));
    const auto& bv = std::get<BehVariation>(r.expr->node);
    CHECK(bv.param == "z1");
    CHECK(equal(bv.cases[0].body, parse_expr("z z1")));
    CHECK(equal(bv.cases[1].body, parse_expr("z1")));
}

TEST_CASE("union evaluates its operands first and rejects non-variations") {
    SlaveResult r = step1({}, {}, parse_expr("(let v = (x){ <- . x } in v) ++ (y){ <- . y }"));
    CHECK(std::holds_alternative<Append>(r.expr->node));
    SlaveResult bad = step_slave({}, {}, parse_expr("1 ++ (y){ <- . y }"));
    CHECK(bad.status == SlaveStatus::stuck);
    CHECK(bad.stuck_reason == "union of a non-variation");
}

TEST_CASE("united variations dispatch like sequential first-match") {
    dl::Context ctx = ctx_of("b.");
    ExprPtr e = parse_expr("((x){ <- a . 1 } ++ (y){ <- b . 2 }) # 0");
    SlaveRun r = run_slave({}, ctx, e);
    REQUIRE(r.status == SlaveStatus::value);
    CHECK(equal(r.expr, int_expr(2)));
}

// ---------------------------------------------------------------------------
// Checkpoints and the event mark

TEST_CASE("checkpoints are transparent while the mark is plain") {
    auto ann = std::make_shared<const Checkpoint>(
        Checkpoint{guard1("never"), {}, parse_expr("resume")});
    // The guard is false, but without the ev mark nobody looks at it.
    ExprPtr e = mk(Checkpointed{parse_expr("let x = 1 in x"), ann});
    SlaveResult r = step1({}, {}, e);
    const auto& cp = std::get<Checkpointed>(r.expr->node);
    CHECK(equal(cp.inner, int_expr(1)));
    CHECK(r.ctx.mark == dl::Mark::plain);
}

TEST_CASE("a finished checkpoint unwraps to its value") {
    auto ann = std::make_shared<const Checkpoint>(Checkpoint{{}, {}, unit_expr()});
    SlaveResult r = step1({}, {}, mk(Checkpointed{int_expr(5), ann}));
    CHECK(equal(r.expr, int_expr(5)));
    CHECK(r.note.kind == StepNoteKind::unwrap);
}

TEST_CASE("under the ev mark a holding checkpoint is re-validated and cleared") {
    dl::Context ctx = ctx_of("payByText.").with_mark(dl::Mark::ev);
    auto ann = std::make_shared<const Checkpoint>(
        Checkpoint{guard1("payByText"), {}, parse_expr("resume")});
    ExprPtr e = mk(Checkpointed{parse_expr("let x = 1 in x"), ann});
    SlaveResult r = step1({}, ctx, e);
    const auto& cp = std::get<Checkpointed>(r.expr->node);
    CHECK(equal(cp.inner, int_expr(1)));  // computation continued
    CHECK(r.ctx.mark == dl::Mark::plain);  // event judged harmless
    CHECK(r.note.kind == StepNoteKind::plain);
}

TEST_CASE("under the ev mark a broken checkpoint restores expression and env") {
    PEnv snapshot;
    snapshot["p"] = {VaCase{{}, int_expr(1)}};
    auto ann = std::make_shared<const Checkpoint>(
        Checkpoint{guard1("gone"), snapshot, parse_expr("resume")});
    ExprPtr e = mk(Checkpointed{parse_expr("let x = 1 in x"), ann});
    PEnv current;  // differs from the snapshot
    dl::Context ctx = ctx_of("other.").with_mark(dl::Mark::ev);
    SlaveResult r = step1(current, ctx, e);
    CHECK(equal(r.expr, parse_expr("resume")));
    CHECK(penv_equal(r.env, snapshot));
    CHECK(r.ctx.mark == dl::Mark::plain);
    CHECK(r.note.kind == StepNoteKind::restore);
}

TEST_CASE("checkpoint-free steps preserve the ev mark") {
    dl::Context ctx = ctx_of("a.").with_mark(dl::Mark::ev);
    SlaveResult r = step1({}, ctx, parse_expr("let x = 1 in x"));
    CHECK(r.ctx.mark == dl::Mark::ev);
    SlaveResult t = step1({}, ctx, parse_expr("tell :b"));
    CHECK(t.ctx.mark == dl::Mark::ev);
}

TEST_CASE("the ev-marked unwrap of a finished checkpoint clears the mark") {
    dl::Context ctx = ctx_of("ok.").with_mark(dl::Mark::ev);
    auto ann = std::make_shared<const Checkpoint>(Checkpoint{guard1("ok"), {}, unit_expr()});
    SlaveResult r = step1({}, ctx, mk(Checkpointed{int_expr(5), ann}));
    CHECK(equal(r.expr, int_expr(5)));
    CHECK(r.note.kind == StepNoteKind::unwrap);
    CHECK(r.ctx.mark == dl::Mark::plain);
}

TEST_CASE("nested checkpoints are validated outside-in") {
    dl::Context ctx = ctx_of("outer_ok.").with_mark(dl::Mark::ev);
    auto inner_ann = std::make_shared<const Checkpoint>(
        Checkpoint{guard1("inner_gone"), {}, parse_expr("inner_resume")});
    auto outer_ann = std::make_shared<const Checkpoint>(
        Checkpoint{guard1("outer_ok"), {}, parse_expr("outer_resume")});
    ExprPtr inner = mk(Checkpointed{parse_expr("let x = 1 in x"), inner_ann});
    ExprPtr e = mk(Checkpointed{inner, outer_ann});

    // Outer holds, inner is broken: only the inner region rolls back.
    SlaveResult r = step1({}, ctx, e);
    const auto& outer_after = std::get<Checkpointed>(r.expr->node);
    CHECK(equal(outer_after.inner, parse_expr("inner_resume")));
    CHECK(outer_after.ann->goal == guard1("outer_ok"));
    CHECK(r.ctx.mark == dl::Mark::plain);
    CHECK(r.note.kind == StepNoteKind::restore);

    // Outer broken: the whole expression rolls back, inner never consulted.
    dl::Context ctx2 = ctx_of("inner_gone.").with_mark(dl::Mark::ev);
    SlaveResult r2 = step1({}, ctx2, e);
    CHECK(equal(r2.expr, parse_expr("outer_resume")));
    CHECK(r2.note.kind == StepNoteKind::restore);
}

TEST_CASE("recovery dispatches the resumed application against the new context") {
    // Dispatch under text, lose the signal, re-dispatch under web.
    dl::Context c0 = ctx_of(
        "phone_on. gateway_up.\n"
        "payByText <- phone_on.\n"
        "payByWeb <- gateway_up, not phone_on.\n");
    ExprPtr e = parse_expr("(x){ <- payByWeb . \"web\" x, <- payByText . \"text\" x } # 0");
    SlaveResult d1 = step1({}, c0, e);
    CHECK(d1.note.case_index == 1);

    // The event retracts phone_on and marks the context.
    dl::Context c1 = dl::retract_fact(d1.ctx, dl::Fact{"phone_on", {}}).with_mark(dl::Mark::ev);
    SlaveResult broken = step1({}, c1, d1.expr);
    CHECK(equal(broken.expr, e));
    CHECK(broken.note.kind == StepNoteKind::restore);
    CHECK(broken.ctx.mark == dl::Mark::plain);

    SlaveResult d2 = step1({}, broken.ctx, broken.expr);
    CHECK(d2.note.kind == StepNoteKind::dispatch);
    CHECK(d2.note.case_index == 0);
}

// ---------------------------------------------------------------------------
// Whole-expression runs

TEST_CASE("run_slave finishes small programs") {
    dl::Context ctx = ctx_of("payByText.");
    ExprPtr e = parse_expr(
        "let pay = (x){ <- payByWeb . \"web\", <- payByText . \"text\" } in pay # 0");
    SlaveRun r = run_slave({}, ctx, e);
    REQUIRE(r.status == SlaveStatus::value);
    CHECK(equal(r.expr, string_expr("text")));
}

TEST_CASE("run_slave reports adaptation failure") {
    SlaveRun r = run_slave({}, {}, parse_expr("(x){ <- impossible . x } # 1"));
    CHECK(r.status == SlaveStatus::failed);
    CHECK(!r.budget_exceeded);
}

TEST_CASE("run_slave stops divergence at the step budget") {
    SlaveRun r = run_slave({}, {}, parse_expr("fun f(x) = f x in f 1"), 100);
    CHECK(r.status == SlaveStatus::stuck);
    CHECK(r.budget_exceeded);
    CHECK(r.stuck_reason == "step budget exceeded");
    CHECK(r.steps == 100);
}

TEST_CASE("note_text renders the step notes") {
    StepNote n;
    CHECK(note_text(n).empty());
    n.kind = StepNoteKind::dispatch;
    n.case_index = 2;
    CHECK(note_text(n) == "dispatch(case=2)");
    n.param = "nav";
    CHECK(note_text(n) == "dispatch(~nav, case=2)");
    StepNote p;
    p.kind = StepNoteKind::dlet_push;
    p.param = "x";
    CHECK(note_text(p) == "push(~x)");
    p.kind = StepNoteKind::dlet_pop;
    CHECK(note_text(p) == "pop(~x)");
    StepNote u;
    u.kind = StepNoteKind::unwrap;
    CHECK(note_text(u) == "unwrap");
    u.kind = StepNoteKind::restore;
    CHECK(note_text(u) == "restore");
    StepNote t;
    t.kind = StepNoteKind::tell;
    CHECK(note_text(t).empty());
}
