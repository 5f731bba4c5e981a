#ifndef CODA_PARSER_HPP
#define CODA_PARSER_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "coda/ast.hpp"

namespace coda {

// `stub name/arity = const` — an external function that the interpreter
// models as a constant-valued primitive.
struct StubDecl {
    std::string name;
    std::size_t arity = 0;
    ConstValue value;
    int line = 0;
    int col = 0;
};

// A parsed program file: stub declarations plus the main expression (with
// top-level `fun` declarations already folded into nested lets).
struct ParsedUnit {
    std::vector<StubDecl> stubs;
    ExprPtr expr;
};

ParsedUnit parse_program(const std::string& text, const std::string& filename = "");

// `on eventName => expr` records. Duplicate events raise LinkError.
HandlerTable parse_handlers(const std::string& text, const std::string& filename = "");

// Scenario files: event definitions and timed injections.
//   event lowSignal := retract phone_on; tell roaming;
//   at 4 inject lowSignal
struct ScenarioEffect {
    bool is_tell = true;
    datalog::Fact fact;
};

struct ScenarioEvent {
    std::string name;
    std::vector<ScenarioEffect> effects;
};

struct ScenarioInjection {
    std::size_t at = 0;
    std::string event;
};

struct ScenarioFile {
    std::vector<ScenarioEvent> events;
    std::vector<ScenarioInjection> injections;
};

ScenarioFile parse_scenario(const std::string& text, const std::string& filename = "");

// Parses a single expression (the whole text). Test convenience.
ExprPtr parse_expr(const std::string& text, const std::string& filename = "");

}  // namespace coda

#endif  // CODA_PARSER_HPP
