#ifndef CODA_ERRORS_HPP
#define CODA_ERRORS_HPP

#include <stdexcept>
#include <string>
#include <vector>

namespace coda {

// Parse-time failure with a source position. `line`/`col` are 1-based;
// 0 means "unknown" (e.g. end of input of an in-memory string).
struct SyntaxError : std::runtime_error {
    SyntaxError(std::string msg, int line, int col, std::string file = "")
        : std::runtime_error(format(msg, line, col, file)),
          line(line),
          col(col),
          file(std::move(file)) {}

    int line;
    int col;
    std::string file;

    static std::string format(const std::string& msg, int line, int col, const std::string& file) {
        std::string where = file.empty() ? "" : file + ":";
        return where + std::to_string(line) + ":" + std::to_string(col) + ": " + msg;
    }
};

// A clause or goal uses a variable outside any positive body atom.
struct RangeRestrictionError : std::runtime_error {
    explicit RangeRestrictionError(std::string variable)
        : std::runtime_error("variable ?" + variable +
                             " does not occur in any positive body atom"),
          variable(std::move(variable)) {}
    std::string variable;
};

// Negation cycles make the rule set non-stratifiable.
struct CyclicNegationError : std::runtime_error {
    explicit CyclicNegationError(std::vector<std::string> cycle)
        : std::runtime_error("negation cycle through: " + join(cycle)), cycle(std::move(cycle)) {}
    std::vector<std::string> cycle;

    static std::string join(const std::vector<std::string>& preds) {
        std::string out;
        for (const auto& p : preds) {
            if (!out.empty()) out += " -> ";
            out += p;
        }
        return out;
    }
};

// Internal guard: a constraint or negated atom was reached with an unbound
// side. Range restriction is checked up front, so hitting this is a bug.
struct UnboundConstraintError : std::logic_error {
    explicit UnboundConstraintError(std::string variable)
        : std::logic_error("constraint reached with unbound variable ?" + variable),
          variable(std::move(variable)) {}
    std::string variable;
};

// A free ordinary variable survived to a closed-check.
struct FreeVarError : std::runtime_error {
    explicit FreeVarError(std::string variable)
        : std::runtime_error("free variable: " + variable), variable(std::move(variable)) {}
    std::string variable;
};

// Source text tried to spell a reduction-only form (checkpoint/overline).
struct AuxFormError : std::runtime_error {
    AuxFormError(int line, int col)
        : std::runtime_error(SyntaxError::format(
              "checkpoint/overline forms cannot be written in source", line, col, "")),
          line(line),
          col(col) {}
    int line;
    int col;
};

// Cross-file validation failure while assembling a bundle.
struct LinkError : std::runtime_error {
    explicit LinkError(std::string msg) : std::runtime_error(std::move(msg)) {}
};

}  // namespace coda

#endif  // CODA_ERRORS_HPP
