#ifndef CODA_RUNTIME_HPP
#define CODA_RUNTIME_HPP

#include <deque>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "coda/interp.hpp"

namespace coda {

struct EventEffect {
    bool is_tell = true;
    datalog::Fact fact;
};

struct EventDef {
    std::string name;
    std::vector<EventEffect> effects;
};

struct Injection {
    std::size_t at = 0;
    std::string event;
};

struct Scenario {
    std::map<std::string, EventDef> defs;
    std::vector<Injection> injections;  // sorted by `at`, file order preserved within a step
};

// The program component of a machine configuration: the application
// expression plus, while an event is being handled, the handler expression.
struct Program {
    ExprPtr expr;
    ExprPtr handler;  // null when no handler is running

    bool suspended() const { return handler != nullptr; }
    const ExprPtr& active() const { return suspended() ? handler : expr; }
};

struct MasterConfig {
    std::deque<std::string> queue;
    PEnv env;
    datalog::Context ctx;
    Program prog;
};

// Every transition appends one record; all fields are snapshots taken before
// the step fired, except `delta`, which lists the facts the step added (+)
// or removed (-).
struct TraceRecord {
    std::size_t step = 0;
    std::string rule;  // Enew | Eman | Ehdr1 | Ehdr2 | Eexpr
    std::vector<std::string> queue;
    datalog::Mark mark = datalog::Mark::plain;
    std::vector<std::pair<char, datalog::Fact>> delta;
    ExprPtr expr;  // the active expression (handler while suspended)
    bool suspended = false;
    StepNote note;      // Eexpr / Ehdr1 step detail
    std::string event;  // Enew / Eman
};

// Applies an event's effects and sets the event mark. Returns the new
// context and the actual delta (no-op tells/retracts are dropped).
std::pair<datalog::Context, std::vector<std::pair<char, datalog::Fact>>> apply_event(
    const datalog::Context& ctx, const EventDef& def);

std::string render_note(const TraceRecord& r);

enum class TraceLevel { steps, deltas, full };
enum class TraceFormat { text, structured };

// CODA_TRACE_LEVEL = steps | deltas | full (default full).
TraceLevel trace_level_from_env();

std::string render_trace(const std::vector<TraceRecord>& trace, TraceLevel level,
                         TraceFormat format);

struct RunResult {
    enum class Status { value, adaptation_failure, stuck, budget_exceeded };

    Status status = Status::value;
    ExprPtr value;  // set when status == value
    MasterConfig config;
    std::vector<TraceRecord> trace;
    std::string stuck_reason;
    std::size_t steps = 0;
};

RunResult run_master(ExprPtr program, datalog::Context ctx, const HandlerTable& handlers,
                     const Scenario& scenario, std::size_t max_steps = 10000);

}  // namespace coda

#endif  // CODA_RUNTIME_HPP
