#ifndef CODA_BUNDLE_HPP
#define CODA_BUNDLE_HPP

#include <optional>
#include <string>

#include "coda/parser.hpp"
#include "coda/runtime.hpp"

namespace coda {

// A fully linked, validated application: program (stubs substituted), initial
// context, handlers, scenario.
struct Bundle {
    ExprPtr program;
    datalog::Context ctx;
    HandlerTable handlers;
    Scenario scenario;
};

// Raw file contents; `*_file` names are used in error positions only.
struct BundleSources {
    std::string program_text;
    std::string program_file;
    std::optional<std::string> context_text;
    std::string context_file;
    std::optional<std::string> handlers_text;
    std::string handlers_file;
    std::optional<std::string> scenario_text;
    std::string scenario_file;
};

// Parses, substitutes stubs, and validates. Throws SyntaxError,
// RangeRestrictionError, CyclicNegationError, FreeVarError, AuxFormError, or
// LinkError.
Bundle load_bundle(const BundleSources& src);

// Reads program.cml (required), context.ctx, handlers.hdl, scenario.scn.
BundleSources bundle_sources_from_dir(const std::string& dir);

std::string read_file(const std::string& path);

// Converts a parsed scenario, checking every injected event is defined.
Scenario link_scenario(const ScenarioFile& file);

}  // namespace coda

#endif  // CODA_BUNDLE_HPP
