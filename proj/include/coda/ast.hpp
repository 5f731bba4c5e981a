#ifndef CODA_AST_HPP
#define CODA_AST_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "coda/datalog.hpp"
#include "coda/errors.hpp"

namespace coda {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Constants: unit, booleans, integers, strings.
using ConstValue = std::variant<std::monostate, bool, std::int64_t, std::string>;

// One guarded alternative of a behavioural variation.
struct VaCase {
    datalog::Goal guard;
    ExprPtr body;
};

// A behavioural variation body: alternatives in declaration order. Dispatch
// scans front to back, so entries pushed later shadow earlier ones.
using Va = std::vector<VaCase>;

// Parameter environment: dynamic (context-dependent) parameter -> variation.
using PEnv = std::map<std::string, Va>;

// Recovery annotation attached to a dispatched expression: the instantiated
// guard that justified the dispatch, the environment at that moment, and the
// expression to re-evaluate if the guard later stops holding.
struct Checkpoint {
    datalog::Goal goal;
    PEnv env;
    ExprPtr resume;
};

// --- expression nodes -------------------------------------------------------

struct Const {
    ConstValue v;
};

struct VarRef {
    std::string name;
};

// Reference to a dynamic parameter, written ~x.
struct DynVarRef {
    std::string name;
};

// Reference to a goal variable, written ?x; replaced by dispatch.
struct GoalVarRef {
    std::string name;
};

// Recursive function value; `self` is empty for anonymous functions.
struct Fun {
    std::string self;
    std::string param;
    ExprPtr body;
};

// External stub: applying it `arity` times yields the declared constant.
// `args` holds the values collected so far (always fewer than `arity`).
struct Prim {
    std::string name;
    std::size_t arity = 0;
    ConstValue result;
    std::vector<ExprPtr> args;
};

// (x){ <- G1. e1, ... } — a first-class variation value.
struct BehVariation {
    std::string param;
    Va cases;
};

// A fact used as an expression, written :pred(args). It is a value once all
// its arguments are ground.
struct FactExpr {
    datalog::Atom atom;
};

struct App {
    ExprPtr fn;
    ExprPtr arg;
};

struct Let {
    std::string name;
    ExprPtr bound;
    ExprPtr body;
};

// dlet ~x = e1 when G in e2
struct Dlet {
    std::string param;
    datalog::Goal guard;
    ExprPtr bound;
    ExprPtr body;
};

struct If {
    ExprPtr cond;
    ExprPtr then_branch;
    ExprPtr else_branch;
};

struct Tell {
    ExprPtr arg;
};

struct Retract {
    ExprPtr arg;
};

// e1 ++ e2 (variation union)
struct Append {
    ExprPtr lhs;
    ExprPtr rhs;
};

// e1 # e2 (variation application)
struct VaApp {
    ExprPtr fn;
    ExprPtr arg;
};

// Reduction-only: a running expression carrying its recovery annotation.
struct Checkpointed {
    ExprPtr inner;
    std::shared_ptr<const Checkpoint> ann;
};

// Reduction-only: marks the body of an active dlet; when it reaches a value
// the binding for `param` is popped.
struct Overlined {
    std::string param;
    ExprPtr body;
};

using ExprNode =
    std::variant<Const, VarRef, DynVarRef, GoalVarRef, Fun, Prim, BehVariation, FactExpr, App,
                 Let, Dlet, If, Tell, Retract, Append, VaApp, Checkpointed, Overlined>;

struct Expr {
    ExprNode node;
};

template <typename T>
ExprPtr mk(T node) {
    return std::make_shared<Expr>(Expr{ExprNode{std::move(node)}});
}

ExprPtr unit_expr();
ExprPtr bool_expr(bool b);
ExprPtr int_expr(std::int64_t v);
ExprPtr string_expr(std::string s);

// Event name -> handler body.
using HandlerTable = std::map<std::string, ExprPtr>;

// --- predicates and comparisons --------------------------------------------

bool is_value(const Expr& e);
bool is_value(const ExprPtr& e);
bool is_unit(const Expr& e);

bool equal(const Expr& a, const Expr& b);
bool equal(const ExprPtr& a, const ExprPtr& b);
bool penv_equal(const PEnv& a, const PEnv& b);

std::string const_to_string(const ConstValue& v);

// --- variables and substitution --------------------------------------------

// Free ordinary (lambda/let-bound) variables.
std::set<std::string> free_vars(const Expr& e);

// Free dynamic parameters: ~x references not enclosed by a dlet for x.
// A dlet binds its parameter both in its bound expression and in its body.
std::set<std::string> free_dyn_vars(const Expr& e);

// Throws FreeVarError if `e` has a free ordinary variable; otherwise returns
// the free dynamic parameters (empty for a complete program, possibly
// non-empty for handlers, which run inside the program's dlet scopes).
std::set<std::string> closed_check(const Expr& e);

// `hint` if unused, else hint1, hint2, ...
std::string fresh_var(const std::string& hint, const std::set<std::string>& avoid);

// Capture-avoiding substitution of ordinary variable `name`.
ExprPtr substitute(const ExprPtr& e, const std::string& name, const ExprPtr& replacement);

// Applies a goal-variable substitution everywhere it can show up: ?x
// references, fact arguments, and the guards of nested variations / dlets.
ExprPtr apply_goal_subst(const ExprPtr& e, const datalog::Substitution& s);

ExprPtr term_to_expr(const datalog::Term& t);

// Checks that every ?x reference (in expressions, fact arguments, and nested
// guards) is introduced by a positive atom of an enclosing guard, and that
// each guard itself is range-restricted given the variables already in
// scope. Throws RangeRestrictionError.
void validate_goal_scope(const Expr& e, const std::set<std::string>& bound = {});

// --- printing ---------------------------------------------------------------

// Deterministic text form. Source-writable expressions print in concrete
// syntax; the reduction-only forms print as e^{G} and {~x| e}.
std::string pretty(const Expr& e);
std::string pretty(const ExprPtr& e);

}  // namespace coda

#endif  // CODA_AST_HPP
