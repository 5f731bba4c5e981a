#include "coda/datalog.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <sstream>

namespace coda::datalog {

// ---------------------------------------------------------------------------
// Printing

std::string to_string(const Term& t) {
    switch (t.kind) {
        case Term::Kind::integer: return std::to_string(t.ival);
        case Term::Kind::symbol: return t.name;
        case Term::Kind::variable: return "?" + t.name;
    }
    return "?";
}

static std::string args_to_string(const std::vector<Term>& args) {
    if (args.empty()) return "";
    std::string out = "(";
    for (size_t i = 0; i < args.size(); ++i) {
        if (i) out += ",";
        out += to_string(args[i]);
    }
    out += ")";
    return out;
}

std::string to_string(const Fact& f) { return f.pred + args_to_string(f.args); }
std::string fact_key(const Fact& f) {
    // Kind tags + length prefixes keep e.g. p(1) and p(symbol "1") distinct.
    std::string key = std::to_string(f.pred.size()) + ':' + f.pred;
    for (const auto& a : f.args) {
        if (a.kind == Term::Kind::integer) {
            key += "|i" + std::to_string(a.ival);
        } else {
            key += "|s" + std::to_string(a.name.size()) + ':' + a.name;
        }
    }
    return key;
}
std::string to_string(const Atom& a) { return a.pred + args_to_string(a.args); }

const char* to_string(CmpOp op) {
    switch (op) {
        case CmpOp::lt: return "<";
        case CmpOp::le: return "<=";
        case CmpOp::gt: return ">";
        case CmpOp::ge: return ">=";
        case CmpOp::eq: return "=";
        case CmpOp::ne: return "!=";
    }
    return "?";
}

std::string to_string(const Constraint& c) {
    return to_string(c.lhs) + " " + to_string(c.op) + " " + to_string(c.rhs);
}

std::string to_string(const Literal& l) {
    switch (l.kind) {
        case Literal::Kind::positive: return to_string(l.atom);
        case Literal::Kind::negative: return "not " + to_string(l.atom);
        case Literal::Kind::constraint: return to_string(l.cmp);
    }
    return "?";
}

std::string to_string(const Rule& r) {
    std::string out = to_string(r.head);
    if (!r.body.empty()) {
        out += " :- ";
        for (size_t i = 0; i < r.body.size(); ++i) {
            if (i) out += ", ";
            out += to_string(r.body[i]);
        }
    }
    return out + ".";
}

std::string to_string(const Goal& g) {
    std::string out;
    for (size_t i = 0; i < g.size(); ++i) {
        if (i) out += ", ";
        out += to_string(g[i]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Substitution application

static Term apply(const Substitution& s, const Term& t) {
    if (t.kind == Term::Kind::variable) {
        auto it = s.find(t.name);
        if (it != s.end()) return it->second;
    }
    return t;
}

Atom apply(const Substitution& s, const Atom& a) {
    Atom out{a.pred, {}};
    out.args.reserve(a.args.size());
    for (const auto& t : a.args) out.args.push_back(coda::datalog::apply(s, t));
    return out;
}

Goal apply(const Substitution& s, const Goal& g) {
    Goal out;
    out.reserve(g.size());
    for (const auto& l : g) {
        Literal nl = l;
        if (l.kind == Literal::Kind::constraint) {
            nl.cmp.lhs = coda::datalog::apply(s, l.cmp.lhs);
            nl.cmp.rhs = coda::datalog::apply(s, l.cmp.rhs);
        } else {
            nl.atom = coda::datalog::apply(s, l.atom);
        }
        out.push_back(std::move(nl));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Context

std::shared_ptr<const RuleSet> RuleSet::make(std::vector<Rule> rules) {
    auto rs = std::make_shared<RuleSet>();
    rs->strata = stratify(rules);
    rs->rules = std::move(rules);
    return rs;
}

std::shared_ptr<const RuleSet> Context::empty_rules() {
    static const std::shared_ptr<const RuleSet> empty = std::make_shared<RuleSet>();
    return empty;
}

bool Context::has_fact(const Fact& f) const {
    return std::find(facts.begin(), facts.end(), f) != facts.end();
}

Context Context::with_mark(Mark m) const {
    Context out = *this;
    out.mark = m;
    return out;
}

Context tell_fact(const Context& ctx, const Fact& f) {
    if (ctx.has_fact(f)) return ctx;
    Context out = ctx;
    out.facts.push_back(f);
    return out;
}

Context retract_fact(const Context& ctx, const Fact& f) {
    Context out = ctx;
    out.facts.erase(std::remove(out.facts.begin(), out.facts.end(), f), out.facts.end());
    return out;
}

// ---------------------------------------------------------------------------
// Range restriction

void check_range_restriction(const Atom* head, const std::vector<Literal>& body,
                             const std::unordered_set<std::string>& prebound) {
    std::unordered_set<std::string> bound = prebound;
    for (const auto& l : body) {
        if (l.kind != Literal::Kind::positive) continue;
        for (const auto& t : l.atom.args)
            if (t.kind == Term::Kind::variable) bound.insert(t.name);
    }
    auto require = [&](const Term& t) {
        if (t.kind == Term::Kind::variable && !bound.count(t.name))
            throw RangeRestrictionError(t.name);
    };
    if (head != nullptr)
        for (const auto& t : head->args) require(t);
    for (const auto& l : body) {
        if (l.kind == Literal::Kind::negative) {
            for (const auto& t : l.atom.args) require(t);
        } else if (l.kind == Literal::Kind::constraint) {
            require(l.cmp.lhs);
            require(l.cmp.rhs);
        }
    }
}

// ---------------------------------------------------------------------------
// Clause parser

namespace {

struct ClauseLexer {
    const std::string& text;
    std::string filename;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    explicit ClauseLexer(const std::string& t, std::string f) : text(t), filename(std::move(f)) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(msg, line, col, filename);
    }

    void advance() {
        if (pos >= text.size()) return;
        if (text[pos] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
        ++pos;
    }

    void skip_ws() {
        while (pos < text.size()) {
            char c = text[pos];
            if (c == '%') {
                while (pos < text.size() && text[pos] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    bool eof() {
        skip_ws();
        return pos >= text.size();
    }

    char peek() const { return pos < text.size() ? text[pos] : '\0'; }

    bool try_consume(const std::string& s) {
        skip_ws();
        if (text.compare(pos, s.size(), s) == 0) {
            for (size_t i = 0; i < s.size(); ++i) advance();
            return true;
        }
        return false;
    }

    // ":-", "<-", or a UTF-8 left arrow
    bool try_arrow() {
        return try_consume(":-") || try_consume("<-") || try_consume("\xe2\x86\x90");
    }

    void expect(const std::string& s) {
        if (!try_consume(s)) fail("expected '" + s + "'");
    }

    bool ident_start(char c) const {
        return std::islower(static_cast<unsigned char>(c)) || c == '_';
    }
    bool ident_char(char c) const {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    std::string ident() {
        skip_ws();
        if (pos >= text.size() || !ident_start(text[pos])) fail("expected identifier");
        std::string out;
        while (pos < text.size() && ident_char(text[pos])) {
            out += text[pos];
            advance();
        }
        return out;
    }

    std::int64_t integer() {
        skip_ws();
        bool negative = false;
        if (pos < text.size() && text[pos] == '-') {
            negative = true;
            advance();
        }
        if (pos >= text.size() || !std::isdigit(static_cast<unsigned char>(text[pos]))) {
            fail("expected integer");
        }
        std::int64_t v = 0;
        while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) {
            v = v * 10 + (text[pos] - '0');
            advance();
        }
        return negative ? -v : v;
    }

    Term term() {
        skip_ws();
        char c = peek();
        if (c == '?') {
            advance();
            return Term::variable(ident());
        }
        if (c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
            return Term::integer(integer());
        }
        return Term::symbol(ident());
    }

    Atom atom() {
        Atom a;
        a.pred = ident();
        if (try_consume("(")) {
            a.args.push_back(term());
            while (try_consume(",")) a.args.push_back(term());
            expect(")");
        }
        return a;
    }

    std::optional<CmpOp> try_cmp() {
        if (try_consume("<=")) return CmpOp::le;
        if (try_consume(">=")) return CmpOp::ge;
        if (try_consume("<")) return CmpOp::lt;
        if (try_consume(">")) return CmpOp::gt;
        if (try_consume("!=") || try_consume("\xe2\x89\xa0")) return CmpOp::ne;
        if (try_consume("=")) return CmpOp::eq;
        return std::nullopt;
    }

    Literal literal() {
        skip_ws();
        // `not` prefix
        size_t save_pos = pos;
        int save_line = line, save_col = col;
        if (ident_start(peek())) {
            std::string word = ident();
            if (word == "not") return Literal::neg(atom());
            // roll back, re-parse as atom/term below
            pos = save_pos;
            line = save_line;
            col = save_col;
        }
        skip_ws();
        char c = peek();
        if (c == '?' || c == '-' || std::isdigit(static_cast<unsigned char>(c))) {
            Term lhs = term();
            auto op = try_cmp();
            if (!op) fail("expected comparison operator after term");
            return Literal::constr(Constraint{*op, lhs, term()});
        }
        // identifier: atom, unless a comparison operator follows a bare name
        Atom a = atom();
        if (a.args.empty()) {
            if (auto op = try_cmp()) {
                return Literal::constr(Constraint{*op, Term::symbol(a.pred), term()});
            }
        }
        return Literal::pos(a);
    }

    std::vector<Literal> body_until_dot() {
        std::vector<Literal> body;
        body.push_back(literal());
        while (try_consume(",")) body.push_back(literal());
        expect(".");
        return body;
    }
};

}  // namespace

ParsedProgram parse_datalog(const std::string& text, const std::string& filename) {
    ClauseLexer lx(text, filename);
    ParsedProgram out;
    while (!lx.eof()) {
        Atom head = lx.atom();
        if (lx.try_arrow()) {
            Rule r{head, lx.body_until_dot()};
            check_range_restriction(&r.head, r.body);
            out.rules.push_back(std::move(r));
        } else {
            lx.expect(".");
            if (!head.is_ground()) {
                for (const auto& t : head.args)
                    if (t.kind == Term::Kind::variable) throw RangeRestrictionError(t.name);
            }
            Fact f = head.to_fact();
            if (std::find(out.facts.begin(), out.facts.end(), f) == out.facts.end())
                out.facts.push_back(std::move(f));
        }
    }
    return out;
}

Context load_context(const std::string& text, const std::string& filename) {
    ParsedProgram p = parse_datalog(text, filename);
    Context ctx;
    ctx.facts = std::move(p.facts);
    ctx.rule_set = RuleSet::make(std::move(p.rules));
    return ctx;
}

// ---------------------------------------------------------------------------
// Stratification

std::vector<std::vector<Rule>> stratify(const std::vector<Rule>& rules) {
    // Collect predicates; relax stratum numbers until fixpoint. A stratum
    // exceeding the predicate count witnesses a negation cycle.
    std::vector<std::string> preds;
    std::unordered_map<std::string, int> stratum;
    auto touch = [&](const std::string& p) {
        if (!stratum.count(p)) {
            stratum[p] = 0;
            preds.push_back(p);
        }
    };
    for (const auto& r : rules) {
        touch(r.head.pred);
        for (const auto& l : r.body)
            if (l.kind != Literal::Kind::constraint) touch(l.atom.pred);
    }

    const int limit = static_cast<int>(preds.size());
    std::unordered_map<std::string, std::string> bumped_by;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& r : rules) {
            int& h = stratum[r.head.pred];
            for (const auto& l : r.body) {
                if (l.kind == Literal::Kind::constraint) continue;
                int need = stratum[l.atom.pred] + (l.kind == Literal::Kind::negative ? 1 : 0);
                if (need > h) {
                    h = need;
                    bumped_by[r.head.pred] = l.atom.pred;
                    changed = true;
                    if (h > limit) {
                        // Walk the bump chain back to recover a cycle.
                        std::vector<std::string> chain;
                        std::unordered_set<std::string> seen;
                        std::string cur = r.head.pred;
                        while (!seen.count(cur)) {
                            seen.insert(cur);
                            chain.push_back(cur);
                            auto it = bumped_by.find(cur);
                            if (it == bumped_by.end()) break;
                            cur = it->second;
                        }
                        auto start = std::find(chain.begin(), chain.end(), cur);
                        std::vector<std::string> cycle(start != chain.end() ? start
                                                                            : chain.begin(),
                                                       chain.end());
                        std::sort(cycle.begin(), cycle.end());
                        throw CyclicNegationError(cycle);
                    }
                }
            }
        }
    }

    int max_stratum = 0;
    for (const auto& r : rules) max_stratum = std::max(max_stratum, stratum[r.head.pred]);

    std::vector<std::vector<Rule>> strata(rules.empty() ? 0 : max_stratum + 1);
    for (const auto& r : rules) strata[stratum[r.head.pred]].push_back(r);
    // Drop empty layers (possible when extensional-only predicates take slot 0).
    std::vector<std::vector<Rule>> out;
    for (auto& s : strata)
        if (!s.empty()) out.push_back(std::move(s));
    return out;
}

// ---------------------------------------------------------------------------
// Model computation (bottom-up, semi-naive per stratum)

void Model::add(Fact f) {
    std::string key = fact_key(f);
    if (index.count(key)) return;
    index.insert(std::move(key));
    by_pred[f.pred].push_back(facts.size());
    facts.push_back(std::move(f));
}

bool eval_constraint(const Constraint& c) {
    const Term& a = c.lhs;
    const Term& b = c.rhs;
    if (c.op == CmpOp::eq) return a == b;
    if (c.op == CmpOp::ne) return !(a == b);
    if (a.kind != Term::Kind::integer || b.kind != Term::Kind::integer) return false;
    switch (c.op) {
        case CmpOp::lt: return a.ival < b.ival;
        case CmpOp::le: return a.ival <= b.ival;
        case CmpOp::gt: return a.ival > b.ival;
        case CmpOp::ge: return a.ival >= b.ival;
        default: return false;
    }
}

namespace {

// Evaluation order for a body: positives stay in writing order; negatives and
// constraints are delayed until every variable they mention has been bound by
// an earlier positive (range restriction guarantees this terminates).
std::vector<size_t> schedule_literals(const std::vector<Literal>& body,
                                      const std::unordered_set<std::string>& prebound) {
    std::unordered_set<std::string> bound = prebound;
    std::vector<bool> done(body.size(), false);
    std::vector<size_t> order;
    auto ready = [&](const Literal& l) {
        auto ok = [&](const Term& t) {
            return t.kind != Term::Kind::variable || bound.count(t.name) != 0;
        };
        if (l.kind == Literal::Kind::constraint) return ok(l.cmp.lhs) && ok(l.cmp.rhs);
        for (const auto& t : l.atom.args)
            if (!ok(t)) return false;
        return true;
    };
    while (order.size() < body.size()) {
        bool progressed = false;
        for (size_t i = 0; i < body.size(); ++i) {
            if (done[i]) continue;
            if (body[i].kind == Literal::Kind::positive || ready(body[i])) {
                done[i] = true;
                order.push_back(i);
                if (body[i].kind == Literal::Kind::positive)
                    for (const auto& t : body[i].atom.args)
                        if (t.kind == Term::Kind::variable) bound.insert(t.name);
                progressed = true;
                break;
            }
        }
        if (!progressed) {
            // Unreachable for range-restricted bodies; schedule the rest as-is
            // so the evaluator reports the unbound variable.
            for (size_t i = 0; i < body.size(); ++i)
                if (!done[i]) order.push_back(i);
            break;
        }
    }
    return order;
}

bool unify_args(const std::vector<Term>& pattern, const std::vector<Term>& ground,
                Substitution& binding, std::vector<std::string>& bound_here) {
    if (pattern.size() != ground.size()) return false;
    for (size_t i = 0; i < pattern.size(); ++i) {
        const Term& p = pattern[i];
        if (p.kind == Term::Kind::variable) {
            auto it = binding.find(p.name);
            if (it == binding.end()) {
                binding[p.name] = ground[i];
                bound_here.push_back(p.name);
            } else if (!(it->second == ground[i])) {
                return false;
            }
        } else if (!(p == ground[i])) {
            return false;
        }
    }
    return true;
}

// Enumerates bindings for the scheduled literals order[i..] over the model in
// the fixed search order (facts by model position ascending). `delta_start`
// enables semi-naive pruning: a complete match is reported with a flag
// telling whether it touched any fact added at or after that position.
// Returns true when the callback asks to stop.
bool enumerate_matches(const Model& m, const std::vector<Literal>& body,
                       const std::vector<size_t>& order, size_t i, Substitution& binding,
                       bool used_delta, size_t delta_start,
                       const std::function<bool(const Substitution&, bool)>& cb) {
    if (i == order.size()) return cb(binding, used_delta);
    const Literal& lit = body[order[i]];
    switch (lit.kind) {
        case Literal::Kind::positive: {
            auto it = m.by_pred.find(lit.atom.pred);
            if (it == m.by_pred.end()) return false;
            for (size_t idx : it->second) {
                std::vector<std::string> bound_here;
                if (unify_args(lit.atom.args, m.facts[idx].args, binding, bound_here)) {
                    if (enumerate_matches(m, body, order, i + 1, binding,
                                          used_delta || idx >= delta_start, delta_start, cb)) {
                        return true;
                    }
                }
                for (const auto& v : bound_here) binding.erase(v);
            }
            return false;
        }
        case Literal::Kind::negative: {
            Atom g = coda::datalog::apply(binding, lit.atom);
            for (const auto& t : g.args)
                if (!t.is_ground()) throw UnboundConstraintError(t.name);
            if (m.contains(g.to_fact())) return false;
            return enumerate_matches(m, body, order, i + 1, binding, used_delta, delta_start, cb);
        }
        case Literal::Kind::constraint: {
            Constraint c = lit.cmp;
            if (c.lhs.kind == Term::Kind::variable) {
                auto it = binding.find(c.lhs.name);
                if (it == binding.end()) throw UnboundConstraintError(c.lhs.name);
                c.lhs = it->second;
            }
            if (c.rhs.kind == Term::Kind::variable) {
                auto it = binding.find(c.rhs.name);
                if (it == binding.end()) throw UnboundConstraintError(c.rhs.name);
                c.rhs = it->second;
            }
            if (!eval_constraint(c)) return false;
            return enumerate_matches(m, body, order, i + 1, binding, used_delta, delta_start, cb);
        }
    }
    return false;
}

}  // namespace

Model compute_model(const Context& ctx) {
    Model m;
    for (const auto& f : ctx.facts) m.add(f);

    for (const auto& stratum : ctx.rule_set->strata) {
        size_t delta_start = 0;  // first round considers every fact new
        bool grew = true;
        while (grew) {
            grew = false;
            size_t round_start = m.facts.size();
            for (const auto& r : stratum) {
                std::vector<Fact> derived;
                Substitution binding;
                std::vector<size_t> order = schedule_literals(r.body, {});
                enumerate_matches(m, r.body, order, 0, binding, false, delta_start,
                                  [&](const Substitution& b, bool fresh) {
                                      if (fresh || delta_start == 0) {
                                          Atom h = coda::datalog::apply(b, r.head);
                                          derived.push_back(h.to_fact());
                                      }
                                      return false;  // keep enumerating
                                  });
                for (auto& f : derived) {
                    if (!m.contains(f)) {
                        m.add(std::move(f));
                        grew = true;
                    }
                }
            }
            delta_start = round_start;
        }
    }
    return m;
}

std::optional<Substitution> solve(const Context& ctx, const Goal& goal) {
    Model m = compute_model(ctx);
    Substitution binding;
    Substitution result;
    std::vector<size_t> order = schedule_literals(goal, {});
    bool found = enumerate_matches(m, goal, order, 0, binding, false, 0,
                                   [&](const Substitution& b, bool) {
                                       result = b;
                                       return true;  // first solution wins
                                   });
    if (found) return result;
    return std::nullopt;
}

}  // namespace coda::datalog
