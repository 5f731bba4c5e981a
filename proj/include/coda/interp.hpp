#ifndef CODA_INTERP_HPP
#define CODA_INTERP_HPP

#include <optional>
#include <string>

#include "coda/ast.hpp"

namespace coda {

// What a single reduction step did, for traces and tests.
enum class StepNoteKind { plain, dispatch, restore, tell, retract, dlet_push, dlet_pop, unwrap };

struct StepNote {
    StepNoteKind kind = StepNoteKind::plain;
    std::size_t case_index = 0;  // dispatch
    datalog::Goal goal;          // dispatch: the instantiated guard
    std::string param;           // dispatch via ~x / dlet_push / dlet_pop
    datalog::Fact fact;          // tell / retract
    bool changed = false;        // tell: fact was new; retract: fact was present
};

// Rendered note, e.g. "dispatch(case=1)", "restore", "push(~x)"; empty for
// plain steps and for tell/retract (the context delta reports those).
std::string note_text(const StepNote& n);

enum class SlaveStatus { stepped, value, failed, stuck };

struct SlaveResult {
    SlaveStatus status = SlaveStatus::stepped;
    ExprPtr expr;  // stepped: the successor; value: the value itself
    PEnv env;
    datalog::Context ctx;
    StepNote note;
    std::string stuck_reason;
};

// A successful dispatch: the chosen case with its substitution applied.
struct Dispatch {
    ExprPtr body;        // case body with the goal substitution applied
    datalog::Goal goal;  // guard with the goal substitution applied
    std::size_t index;
    datalog::Substitution theta;
};

// Scans the variation front to back; first case whose guard is solvable wins.
std::optional<Dispatch> dsp(const datalog::Context& ctx, const Va& va);

// One reduction step. When the context is event-marked, the checkpoints along
// the evaluation path are re-validated outside-in first: the first broken one
// rolls the expression back to its recovery annotation. The mark is cleared
// exactly when the step traverses (or rolls back at) a checkpoint.
SlaveResult step_slave(const PEnv& env, const datalog::Context& ctx, const ExprPtr& e);

struct SlaveRun {
    SlaveStatus status = SlaveStatus::value;  // value | failed | stuck
    ExprPtr expr;
    PEnv env;
    datalog::Context ctx;
    std::size_t steps = 0;
    bool budget_exceeded = false;
    std::string stuck_reason;
};

// Iterates step_slave without any events. Used by tests and generators.
SlaveRun run_slave(PEnv env, datalog::Context ctx, ExprPtr e, std::size_t max_steps = 10000);

}  // namespace coda

#endif  // CODA_INTERP_HPP
