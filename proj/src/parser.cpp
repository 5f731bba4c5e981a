#include "coda/parser.hpp"

#include <cctype>
#include <optional>
#include <unordered_map>

namespace coda {

namespace {

enum class Tok {
    ident,
    integer,
    string,
    goalvar,  // ?name
    dynvar,   // ~name
    kw_let,
    kw_dlet,
    kw_in,
    kw_when,
    kw_if,
    kw_then,
    kw_else,
    kw_fun,
    kw_fn,
    kw_tell,
    kw_retract,
    kw_true,
    kw_false,
    kw_not,
    kw_stub,
    kw_on,
    kw_event,
    kw_at,
    kw_inject,
    lparen,
    rparen,
    lbrace,
    rbrace,
    comma,
    dot,
    semi,
    slash,
    eq,      // =
    assign,  // :=
    darrow,  // =>
    larrow,  // <-
    append_op,
    hash,
    colon,
    caret,
    lt,
    le,
    gt,
    ge,
    ne,
    eof,
};

struct Token {
    Tok kind = Tok::eof;
    std::string text;
    std::int64_t ival = 0;
    int line = 1;
    int col = 1;
};

const std::unordered_map<std::string, Tok>& keywords() {
    static const std::unordered_map<std::string, Tok> kw = {
        {"let", Tok::kw_let},   {"dlet", Tok::kw_dlet},       {"in", Tok::kw_in},
        {"when", Tok::kw_when}, {"if", Tok::kw_if},           {"then", Tok::kw_then},
        {"else", Tok::kw_else}, {"fun", Tok::kw_fun},         {"fn", Tok::kw_fn},
        {"tell", Tok::kw_tell}, {"retract", Tok::kw_retract}, {"true", Tok::kw_true},
        {"false", Tok::kw_false}, {"not", Tok::kw_not},       {"stub", Tok::kw_stub},
        {"on", Tok::kw_on},     {"event", Tok::kw_event},     {"at", Tok::kw_at},
        {"inject", Tok::kw_inject},
    };
    return kw;
}

struct Lexer {
    const std::string& text;
    std::string filename;
    size_t pos = 0;
    int line = 1;
    int col = 1;

    Lexer(const std::string& t, std::string f) : text(t), filename(std::move(f)) {}

    [[noreturn]] void fail(const std::string& msg) const {
        throw SyntaxError(msg, line, col, filename);
    }

    char peek(size_t k = 0) const { return pos + k < text.size() ? text[pos + k] : '\0'; }

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
        for (;;) {
            char c = peek();
            if (c == '%') {
                while (pos < text.size() && peek() != '\n') advance();
            } else if (c != '\0' && std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                return;
            }
        }
    }

    static bool ident_start(char c) {
        return std::isalpha(static_cast<unsigned char>(c)) || c == '_';
    }
    static bool ident_char(char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    }

    std::string ident() {
        std::string out;
        while (ident_char(peek())) {
            out += peek();
            advance();
        }
        return out;
    }

    bool try_utf8(const char* seq) {
        size_t n = std::char_traits<char>::length(seq);
        if (text.compare(pos, n, seq) == 0) {
            for (size_t i = 0; i < n; ++i) advance();
            return true;
        }
        return false;
    }

    std::vector<Token> run() {
        std::vector<Token> out;
        for (;;) {
            skip_ws();
            Token t;
            t.line = line;
            t.col = col;
            char c = peek();
            if (c == '\0') {
                t.kind = Tok::eof;
                out.push_back(t);
                return out;
            }
            if (ident_start(c)) {
                t.text = ident();
                auto it = keywords().find(t.text);
                t.kind = it == keywords().end() ? Tok::ident : it->second;
            } else if (std::isdigit(static_cast<unsigned char>(c)) ||
                       (c == '-' && std::isdigit(static_cast<unsigned char>(peek(1))))) {
                t.kind = Tok::integer;
                bool negative = c == '-';
                if (negative) {
                    t.text += peek();
                    advance();
                }
                while (std::isdigit(static_cast<unsigned char>(peek()))) {
                    t.ival = t.ival * 10 + (peek() - '0');
                    t.text += peek();
                    advance();
                }
                if (negative) t.ival = -t.ival;
            } else if (c == '"') {
                t.kind = Tok::string;
                advance();
                for (;;) {
                    char d = peek();
                    if (d == '\0') fail("unterminated string literal");
                    if (d == '"') {
                        advance();
                        break;
                    }
                    if (d == '\\') {
                        advance();
                        char e = peek();
                        switch (e) {
                            case 'n': t.text += '\n'; break;
                            case 't': t.text += '\t'; break;
                            case 'r': t.text += '\r'; break;
                            case '\\': t.text += '\\'; break;
                            case '"': t.text += '"'; break;
                            default: fail("unknown escape in string literal");
                        }
                        advance();
                    } else {
                        t.text += d;
                        advance();
                    }
                }
            } else if (c == '?') {
                advance();
                if (!ident_start(peek())) fail("expected a name after '?'");
                t.kind = Tok::goalvar;
                t.text = ident();
            } else if (c == '~') {
                advance();
                if (!ident_start(peek())) fail("expected a name after '~'");
                t.kind = Tok::dynvar;
                t.text = ident();
            } else if (try_utf8("\xe2\x86\x90")) {
                t.kind = Tok::larrow;
            } else if (try_utf8("\xe2\x88\xaa")) {
                t.kind = Tok::append_op;
            } else if (try_utf8("\xe2\x89\xa0")) {
                t.kind = Tok::ne;
            } else {
                auto two = [&](char a, char b) { return c == a && peek(1) == b; };
                if (two('+', '+')) {
                    t.kind = Tok::append_op;
                    advance();
                    advance();
                } else if (two('=', '>')) {
                    t.kind = Tok::darrow;
                    advance();
                    advance();
                } else if (two('<', '-')) {
                    t.kind = Tok::larrow;
                    advance();
                    advance();
                } else if (two('<', '=')) {
                    t.kind = Tok::le;
                    advance();
                    advance();
                } else if (two('>', '=')) {
                    t.kind = Tok::ge;
                    advance();
                    advance();
                } else if (two('!', '=')) {
                    t.kind = Tok::ne;
                    advance();
                    advance();
                } else if (two(':', '=')) {
                    t.kind = Tok::assign;
                    advance();
                    advance();
                } else {
                    switch (c) {
                        case '(': t.kind = Tok::lparen; break;
                        case ')': t.kind = Tok::rparen; break;
                        case '{': t.kind = Tok::lbrace; break;
                        case '}': t.kind = Tok::rbrace; break;
                        case ',': t.kind = Tok::comma; break;
                        case '.': t.kind = Tok::dot; break;
                        case ';': t.kind = Tok::semi; break;
                        case '/': t.kind = Tok::slash; break;
                        case '=': t.kind = Tok::eq; break;
                        case '#': t.kind = Tok::hash; break;
                        case ':': t.kind = Tok::colon; break;
                        case '^': t.kind = Tok::caret; break;
                        case '<': t.kind = Tok::lt; break;
                        case '>': t.kind = Tok::gt; break;
                        default: fail(std::string("unexpected character '") + c + "'");
                    }
                    advance();
                }
            }
            out.push_back(std::move(t));
        }
    }
};

std::optional<datalog::CmpOp> cmp_of(Tok t) {
    switch (t) {
        case Tok::lt: return datalog::CmpOp::lt;
        case Tok::le: return datalog::CmpOp::le;
        case Tok::gt: return datalog::CmpOp::gt;
        case Tok::ge: return datalog::CmpOp::ge;
        case Tok::eq: return datalog::CmpOp::eq;
        case Tok::ne: return datalog::CmpOp::ne;
        default: return std::nullopt;
    }
}

struct Parser {
    std::vector<Token> toks;
    size_t pos = 0;
    std::string filename;

    Parser(const std::string& text, std::string file)
        : toks(Lexer(text, file).run()), filename(std::move(file)) {}

    const Token& peek(size_t k = 0) const {
        size_t i = pos + k;
        return i < toks.size() ? toks[i] : toks.back();
    }
    bool at(Tok t) const { return peek().kind == t; }
    Token next() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
    bool accept(Tok t) {
        if (at(t)) {
            next();
            return true;
        }
        return false;
    }

    [[noreturn]] void fail(const std::string& msg) const {
        const Token& t = peek();
        throw SyntaxError(msg, t.line, t.col, filename);
    }

    Token expect(Tok t, const char* what) {
        if (!at(t)) fail(std::string("expected ") + what);
        return next();
    }

    [[noreturn]] void aux_form() const {
        const Token& t = peek();
        throw AuxFormError(t.line, t.col);
    }

    // --- goals --------------------------------------------------------------

    datalog::Term term() {
        if (at(Tok::goalvar)) return datalog::Term::variable(next().text);
        if (at(Tok::integer)) return datalog::Term::integer(next().ival);
        if (at(Tok::ident)) return datalog::Term::symbol(next().text);
        fail("expected a goal term");
    }

    datalog::Atom goal_atom() {
        datalog::Atom a;
        a.pred = expect(Tok::ident, "a predicate name").text;
        if (accept(Tok::lparen)) {
            a.args.push_back(term());
            while (accept(Tok::comma)) a.args.push_back(term());
            expect(Tok::rparen, "')'");
        }
        return a;
    }

    datalog::Literal literal() {
        if (accept(Tok::kw_not)) return datalog::Literal::neg(goal_atom());
        if (at(Tok::goalvar) || at(Tok::integer)) {
            datalog::Term lhs = term();
            auto op = cmp_of(peek().kind);
            if (!op) fail("expected a comparison operator");
            next();
            return datalog::Literal::constr({*op, lhs, term()});
        }
        datalog::Atom a = goal_atom();
        if (a.args.empty()) {
            if (auto op = cmp_of(peek().kind)) {
                next();
                return datalog::Literal::constr({*op, datalog::Term::symbol(a.pred), term()});
            }
        }
        return datalog::Literal::pos(std::move(a));
    }

    datalog::Goal goal_literals() {
        datalog::Goal g;
        g.push_back(literal());
        while (accept(Tok::comma)) g.push_back(literal());
        return g;
    }

    // --- expressions ---------------------------------------------------------

    static bool starts_primary(Tok t) {
        switch (t) {
            case Tok::integer:
            case Tok::string:
            case Tok::kw_true:
            case Tok::kw_false:
            case Tok::ident:
            case Tok::dynvar:
            case Tok::goalvar:
            case Tok::colon:
            case Tok::lparen: return true;
            default: return false;
        }
    }

    Va cases() {
        expect(Tok::lbrace, "'{'");
        Va out;
        for (;;) {
            expect(Tok::larrow, "'<-'");
            datalog::Goal g;
            if (!at(Tok::dot)) g = goal_literals();
            expect(Tok::dot, "'.' after the guard");
            out.push_back(VaCase{std::move(g), expr()});
            if (!accept(Tok::comma)) break;
        }
        expect(Tok::rbrace, "'}'");
        return out;
    }

    ExprPtr primary() {
        const Token& t = peek();
        switch (t.kind) {
            case Tok::integer: return int_expr(next().ival);
            case Tok::string: return string_expr(next().text);
            case Tok::kw_true: next(); return bool_expr(true);
            case Tok::kw_false: next(); return bool_expr(false);
            case Tok::ident: return mk(VarRef{next().text});
            case Tok::dynvar: return mk(DynVarRef{next().text});
            case Tok::goalvar: return mk(GoalVarRef{next().text});
            case Tok::colon: next(); return mk(FactExpr{goal_atom()});
            case Tok::hash: {
                // Prefix form `#f(e)`; after a primary, `#` is the infix operator instead.
                next();
                ExprPtr fn = primary();
                expect(Tok::lparen, "'(' in variation application");
                ExprPtr arg = expr();
                expect(Tok::rparen, "')'");
                return mk(VaApp{std::move(fn), std::move(arg)});
            }
            case Tok::caret: aux_form();
            case Tok::lparen: {
                next();
                if (accept(Tok::rparen)) {
                    if (at(Tok::lbrace)) fail("variation parameter must be a name");
                    return unit_expr();
                }
                ExprPtr e = expr();
                expect(Tok::rparen, "')'");
                if (at(Tok::lbrace)) {
                    const auto* v = std::get_if<VarRef>(&e->node);
                    if (!v) fail("variation parameter must be a name");
                    return mk(BehVariation{v->name, cases()});
                }
                return e;
            }
            default: fail("expected an expression");
        }
    }

    ExprPtr vaapp() {
        ExprPtr e = primary();
        while (accept(Tok::hash)) e = mk(VaApp{std::move(e), primary()});
        return e;
    }

    ExprPtr juxt() {
        ExprPtr e = vaapp();
        for (;;) {
            if (at(Tok::caret)) aux_form();
            if (!starts_primary(peek().kind)) return e;
            e = mk(App{std::move(e), vaapp()});
        }
    }

    ExprPtr append_chain() {
        ExprPtr e = juxt();
        while (accept(Tok::append_op)) e = mk(Append{std::move(e), juxt()});
        return e;
    }

    ExprPtr make_fun(const std::string& self, const std::vector<std::string>& params,
                     ExprPtr body) {
        for (size_t i = params.size(); i-- > 1;)
            body = mk(Fun{"", params[i], std::move(body)});
        return mk(Fun{self, params[0], std::move(body)});
    }

    // `fun name(params) = body` with the leading keyword already consumed.
    std::pair<std::string, ExprPtr> fun_decl() {
        std::string name = expect(Tok::ident, "a function name").text;
        expect(Tok::lparen, "'('");
        std::vector<std::string> params;
        params.push_back(expect(Tok::ident, "a parameter name").text);
        while (accept(Tok::comma)) params.push_back(expect(Tok::ident, "a parameter name").text);
        expect(Tok::rparen, "')'");
        expect(Tok::eq, "'='");
        return {name, make_fun(name, params, expr())};
    }

    ExprPtr expr() {
        switch (peek().kind) {
            case Tok::kw_let: {
                next();
                std::string name = expect(Tok::ident, "a name").text;
                expect(Tok::eq, "'='");
                ExprPtr bound = expr();
                expect(Tok::kw_in, "'in'");
                return mk(Let{std::move(name), std::move(bound), expr()});
            }
            case Tok::kw_dlet: {
                next();
                std::string param = expect(Tok::dynvar, "a dynamic parameter (~name)").text;
                expect(Tok::eq, "'='");
                ExprPtr bound = expr();
                datalog::Goal guard;
                if (accept(Tok::kw_when)) guard = goal_literals();
                expect(Tok::kw_in, "'in'");
                return mk(Dlet{std::move(param), std::move(guard), std::move(bound), expr()});
            }
            case Tok::kw_if: {
                next();
                ExprPtr c = expr();
                expect(Tok::kw_then, "'then'");
                ExprPtr a = expr();
                expect(Tok::kw_else, "'else'");
                return mk(If{std::move(c), std::move(a), expr()});
            }
            case Tok::kw_fun: {
                next();
                auto [name, fun] = fun_decl();
                expect(Tok::kw_in, "'in'");
                return mk(Let{std::move(name), std::move(fun), expr()});
            }
            case Tok::kw_fn: {
                next();
                std::vector<std::string> params;
                params.push_back(expect(Tok::ident, "a parameter name").text);
                while (at(Tok::ident)) params.push_back(next().text);
                expect(Tok::darrow, "'=>'");
                return make_fun("", params, expr());
            }
            case Tok::kw_tell: next(); return mk(Tell{primary()});
            case Tok::kw_retract: next(); return mk(Retract{primary()});
            default: return append_chain();
        }
    }

    // --- files ---------------------------------------------------------------

    ConstValue const_value() {
        switch (peek().kind) {
            case Tok::integer: return ConstValue{next().ival};
            case Tok::string: return ConstValue{next().text};
            case Tok::kw_true: next(); return ConstValue{true};
            case Tok::kw_false: next(); return ConstValue{false};
            case Tok::lparen:
                next();
                expect(Tok::rparen, "')'");
                return ConstValue{std::monostate{}};
            default: fail("expected a constant");
        }
    }

    ParsedUnit program() {
        ParsedUnit unit;
        while (at(Tok::kw_stub)) {
            Token kw = next();
            StubDecl s;
            s.line = kw.line;
            s.col = kw.col;
            s.name = expect(Tok::ident, "a stub name").text;
            expect(Tok::slash, "'/'");
            s.arity = static_cast<std::size_t>(expect(Tok::integer, "an arity").ival);
            expect(Tok::eq, "'='");
            s.value = const_value();
            unit.stubs.push_back(std::move(s));
        }
        if (at(Tok::eof)) fail("expected a main expression");
        unit.expr = expr();
        expect(Tok::eof, "end of file");
        return unit;
    }

    HandlerTable handlers() {
        HandlerTable table;
        while (!at(Tok::eof)) {
            expect(Tok::kw_on, "'on'");
            std::string name = expect(Tok::ident, "an event name").text;
            expect(Tok::darrow, "'=>'");
            ExprPtr body = expr();
            if (table.count(name)) throw LinkError("duplicate handler for event " + name);
            table.emplace(std::move(name), std::move(body));
        }
        return table;
    }

    datalog::Fact ground_fact() {
        datalog::Fact f;
        f.pred = expect(Tok::ident, "a predicate name").text;
        if (accept(Tok::lparen)) {
            for (;;) {
                if (at(Tok::goalvar)) fail("scenario facts must be ground");
                if (at(Tok::integer))
                    f.args.push_back(datalog::Term::integer(next().ival));
                else
                    f.args.push_back(datalog::Term::symbol(expect(Tok::ident, "a constant").text));
                if (!accept(Tok::comma)) break;
            }
            expect(Tok::rparen, "')'");
        }
        return f;
    }

    ScenarioFile scenario() {
        ScenarioFile file;
        while (!at(Tok::eof)) {
            if (accept(Tok::kw_event)) {
                ScenarioEvent ev;
                ev.name = expect(Tok::ident, "an event name").text;
                expect(Tok::assign, "':='");
                while (at(Tok::kw_tell) || at(Tok::kw_retract)) {
                    bool is_tell = next().kind == Tok::kw_tell;
                    ev.effects.push_back(ScenarioEffect{is_tell, ground_fact()});
                    expect(Tok::semi, "';'");
                }
                for (const auto& seen : file.events)
                    if (seen.name == ev.name)
                        throw LinkError("duplicate event definition: " + ev.name);
                file.events.push_back(std::move(ev));
            } else if (accept(Tok::kw_at)) {
                ScenarioInjection inj;
                inj.at = static_cast<std::size_t>(expect(Tok::integer, "a step number").ival);
                expect(Tok::kw_inject, "'inject'");
                inj.event = expect(Tok::ident, "an event name").text;
                file.injections.push_back(std::move(inj));
            } else {
                fail("expected 'event' or 'at'");
            }
        }
        return file;
    }
};

}  // namespace

ParsedUnit parse_program(const std::string& text, const std::string& filename) {
    return Parser(text, filename).program();
}

HandlerTable parse_handlers(const std::string& text, const std::string& filename) {
    return Parser(text, filename).handlers();
}

ScenarioFile parse_scenario(const std::string& text, const std::string& filename) {
    return Parser(text, filename).scenario();
}

ExprPtr parse_expr(const std::string& text, const std::string& filename) {
    Parser p(text, filename);
    ExprPtr e = p.expr();
    p.expect(Tok::eof, "end of file");
    return e;
}

}  // namespace coda
