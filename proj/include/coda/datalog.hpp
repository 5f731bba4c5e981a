#ifndef CODA_DATALOG_HPP
#define CODA_DATALOG_HPP

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "coda/errors.hpp"

namespace coda::datalog {

// ---------------------------------------------------------------------------
// Terms, facts, rules

struct Term {
    enum class Kind { integer, symbol, variable };

    Kind kind = Kind::symbol;
    std::int64_t ival = 0;  // Kind::integer
    std::string name;       // Kind::symbol / Kind::variable

    static Term integer(std::int64_t v) {
        Term t;
        t.kind = Kind::integer;
        t.ival = v;
        return t;
    }
    static Term symbol(std::string s) {
        Term t;
        t.kind = Kind::symbol;
        t.name = std::move(s);
        return t;
    }
    static Term variable(std::string s) {
        Term t;
        t.kind = Kind::variable;
        t.name = std::move(s);
        return t;
    }

    bool is_ground() const { return kind != Kind::variable; }

    friend bool operator==(const Term& a, const Term& b) {
        if (a.kind != b.kind) return false;
        if (a.kind == Kind::integer) return a.ival == b.ival;
        return a.name == b.name;
    }
    friend bool operator!=(const Term& a, const Term& b) { return !(a == b); }
};

std::string to_string(const Term& t);

// A ground atom. All args are constants.
struct Fact {
    std::string pred;
    std::vector<Term> args;

    friend bool operator==(const Fact& a, const Fact& b) {
        return a.pred == b.pred && a.args == b.args;
    }
};

std::string to_string(const Fact& f);
std::string fact_key(const Fact& f);  // canonical text form, usable as a hash key

// An atom that may still contain variables.
struct Atom {
    std::string pred;
    std::vector<Term> args;

    bool is_ground() const {
        for (const auto& a : args)
            if (!a.is_ground()) return false;
        return true;
    }
    Fact to_fact() const { return Fact{pred, args}; }

    friend bool operator==(const Atom& a, const Atom& b) {
        return a.pred == b.pred && a.args == b.args;
    }
};

std::string to_string(const Atom& a);

enum class CmpOp { lt, le, gt, ge, eq, ne };

const char* to_string(CmpOp op);

// Built-in comparison between two terms. Ordering ops are defined on
// integers; `=`/`!=` compare any constants structurally.
struct Constraint {
    CmpOp op = CmpOp::eq;
    Term lhs;
    Term rhs;

    friend bool operator==(const Constraint& a, const Constraint& b) {
        return a.op == b.op && a.lhs == b.lhs && a.rhs == b.rhs;
    }
};

std::string to_string(const Constraint& c);

// One element of a rule body or of a goal.
struct Literal {
    enum class Kind { positive, negative, constraint };

    Kind kind = Kind::positive;
    Atom atom;       // positive / negative
    Constraint cmp;  // constraint

    static Literal pos(Atom a) { return Literal{Kind::positive, std::move(a), {}}; }
    static Literal neg(Atom a) { return Literal{Kind::negative, std::move(a), {}}; }
    static Literal constr(Constraint c) { return Literal{Kind::constraint, {}, std::move(c)}; }

    friend bool operator==(const Literal& a, const Literal& b) {
        return a.kind == b.kind && a.atom == b.atom && a.cmp == b.cmp;
    }
};

std::string to_string(const Literal& l);

struct Rule {
    Atom head;
    std::vector<Literal> body;
};

std::string to_string(const Rule& r);

// A goal is a conjunction, same shape as a rule body.
using Goal = std::vector<Literal>;

std::string to_string(const Goal& g);

// Finite map from variable names to constants.
using Substitution = std::map<std::string, Term>;

Atom apply(const Substitution& s, const Atom& a);
Goal apply(const Substitution& s, const Goal& g);

// ---------------------------------------------------------------------------
// Context

// Rules plus their stratification, shared across the contexts produced by
// tell/retract (rules never change at runtime).
struct RuleSet {
    std::vector<Rule> rules;
    std::vector<std::vector<Rule>> strata;  // ascending, program order within

    static std::shared_ptr<const RuleSet> make(std::vector<Rule> rules);
};

enum class Mark { plain, ev };

// The knowledge base: ground facts in insertion order (no duplicates), a
// stratified rule program, and the one-bit event mark.
struct Context {
    std::vector<Fact> facts;
    std::shared_ptr<const RuleSet> rule_set = empty_rules();
    Mark mark = Mark::plain;

    const std::vector<Rule>& rules() const { return rule_set->rules; }
    bool has_fact(const Fact& f) const;
    Context with_mark(Mark m) const;

    static std::shared_ptr<const RuleSet> empty_rules();
};

Context tell_fact(const Context& ctx, const Fact& f);
Context retract_fact(const Context& ctx, const Fact& f);

// ---------------------------------------------------------------------------
// Parsing

// Parses `head <- body.` / `head.` clauses (`<-` may be written `:-`,
// comments start with `%`, variables are written `?x`).
struct ParsedProgram {
    std::vector<Fact> facts;
    std::vector<Rule> rules;
};

ParsedProgram parse_datalog(const std::string& text, const std::string& filename = "");

Context load_context(const std::string& text, const std::string& filename = "");

// Checks that every variable of the head and of each constraint / negated
// atom occurs in a positive body atom. `prebound` names variables supplied
// by an enclosing scope (used for goals nested inside already-guarded code).
void check_range_restriction(const Atom* head, const std::vector<Literal>& body,
                             const std::unordered_set<std::string>& prebound = {});

// ---------------------------------------------------------------------------
// Evaluation

// Partitions rules so every negated dependency crosses strictly downward.
// Throws CyclicNegationError when no such partition exists.
std::vector<std::vector<Rule>> stratify(const std::vector<Rule>& rules);

// The stratified model: facts in derivation order plus lookup indexes.
struct Model {
    std::vector<Fact> facts;
    std::unordered_set<std::string> index;                        // fact_key
    std::unordered_map<std::string, std::vector<size_t>> by_pred;

    bool contains(const Fact& f) const { return index.count(fact_key(f)) != 0; }
    void add(Fact f);
};

Model compute_model(const Context& ctx);

// First substitution (under the fixed deterministic search order) that
// grounds `goal` into the stratified model of `ctx`; nullopt if none.
std::optional<Substitution> solve(const Context& ctx, const Goal& goal);

// Evaluates a ground constraint.
bool eval_constraint(const Constraint& c);

}  // namespace coda::datalog

#endif  // CODA_DATALOG_HPP
