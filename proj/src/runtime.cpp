#include "coda/runtime.hpp"

#include <cstdlib>

#include <json.hpp>

namespace coda {

std::pair<datalog::Context, std::vector<std::pair<char, datalog::Fact>>> apply_event(
    const datalog::Context& ctx, const EventDef& def) {
    datalog::Context out = ctx;
    std::vector<std::pair<char, datalog::Fact>> delta;
    for (const auto& eff : def.effects) {
        if (eff.is_tell) {
            if (!out.has_fact(eff.fact)) {
                delta.emplace_back('+', eff.fact);
                out = datalog::tell_fact(out, eff.fact);
            }
        } else {
            if (out.has_fact(eff.fact)) {
                delta.emplace_back('-', eff.fact);
                out = datalog::retract_fact(out, eff.fact);
            }
        }
    }
    out.mark = datalog::Mark::ev;
    return {std::move(out), std::move(delta)};
}

std::string render_note(const TraceRecord& r) {
    if (r.rule == "Enew") return "inject(" + r.event + ")";
    if (r.rule == "Eman") return "handle(" + r.event + ")";
    return note_text(r.note);
}

TraceLevel trace_level_from_env() {
    const char* v = std::getenv("CODA_TRACE_LEVEL");
    if (v == nullptr) return TraceLevel::full;
    std::string s = v;
    if (s == "steps") return TraceLevel::steps;
    if (s == "deltas") return TraceLevel::deltas;
    return TraceLevel::full;
}

namespace {

std::string delta_entry(const std::pair<char, datalog::Fact>& d) {
    return std::string(1, d.first) + datalog::to_string(d.second);
}

std::string render_text(const TraceRecord& r, TraceLevel level) {
    std::string line = "step=" + std::to_string(r.step) + " rule=" + r.rule;
    if (level >= TraceLevel::deltas) {
        line += " queue=[";
        for (size_t i = 0; i < r.queue.size(); ++i) {
            if (i) line += ",";
            line += r.queue[i];
        }
        line += "] mark=";
        line += r.mark == datalog::Mark::ev ? "ev" : "-";
        line += " delta=[";
        for (size_t i = 0; i < r.delta.size(); ++i) {
            if (i) line += ",";
            line += delta_entry(r.delta[i]);
        }
        line += "]";
    }
    if (level >= TraceLevel::full) line += " expr=" + pretty(r.expr);
    std::string note = render_note(r);
    if (!note.empty()) line += " note=" + note;
    return line;
}

std::string render_structured(const TraceRecord& r, TraceLevel level) {
    nlohmann::ordered_json j;
    j["step"] = r.step;
    j["rule"] = r.rule;
    if (level >= TraceLevel::deltas) {
        j["queue"] = r.queue;
        j["mark"] = r.mark == datalog::Mark::ev ? "ev" : "-";
        auto deltas = nlohmann::ordered_json::array();
        for (const auto& d : r.delta) deltas.push_back(delta_entry(d));
        j["delta"] = std::move(deltas);
    }
    if (level >= TraceLevel::full) j["expr"] = pretty(r.expr);
    j["note"] = render_note(r);
    return j.dump();
}

}  // namespace

std::string render_trace(const std::vector<TraceRecord>& trace, TraceLevel level,
                         TraceFormat format) {
    std::string out;
    for (const auto& r : trace) {
        out += format == TraceFormat::text ? render_text(r, level) : render_structured(r, level);
        out += "\n";
    }
    return out;
}

namespace {

TraceRecord snapshot(std::size_t step, const char* rule, const MasterConfig& m) {
    TraceRecord r;
    r.step = step;
    r.rule = rule;
    r.queue.assign(m.queue.begin(), m.queue.end());
    r.mark = m.ctx.mark;
    r.expr = m.prog.active();
    r.suspended = m.prog.suspended();
    return r;
}

}  // namespace

RunResult run_master(ExprPtr program, datalog::Context ctx, const HandlerTable& handlers,
                     const Scenario& scenario, std::size_t max_steps) {
    RunResult result;
    MasterConfig m;
    m.ctx = std::move(ctx);
    m.prog.expr = std::move(program);

    const auto& injections = scenario.injections;
    std::size_t inj = 0;
    std::size_t k = 0;

    auto finish = [&](RunResult::Status s) {
        result.status = s;
        result.config = m;
        result.steps = k;
    };

    for (;;) {
        // Queue growth has priority over everything at its scheduled step.
        if (inj < injections.size() && injections[inj].at <= k) {
            if (k >= max_steps) {
                finish(RunResult::Status::budget_exceeded);
                return result;
            }
            TraceRecord r = snapshot(k, "Enew", m);
            r.event = injections[inj].event;
            result.trace.push_back(std::move(r));
            m.queue.push_back(injections[inj].event);
            ++inj;
            ++k;
            continue;
        }

        if (!m.prog.suspended() && m.queue.empty() && is_value(m.prog.expr)) {
            if (inj < injections.size()) {
                // Nothing left to do until the next injection is due.
                k = std::max(k, injections[inj].at);
                continue;
            }
            finish(RunResult::Status::value);
            result.value = m.prog.expr;
            return result;
        }

        if (k >= max_steps) {
            finish(RunResult::Status::budget_exceeded);
            return result;
        }

        if (m.prog.suspended()) {
            if (is_value(m.prog.handler)) {
                if (!is_unit(*m.prog.handler)) {
                    finish(RunResult::Status::stuck);
                    result.stuck_reason = "handler finished with a non-unit value";
                    return result;
                }
                result.trace.push_back(snapshot(k, "Ehdr2", m));
                m.prog.handler = nullptr;
                ++k;
                continue;
            }
            SlaveResult s = step_slave(m.env, m.ctx, m.prog.handler);
            TraceRecord r = snapshot(k, "Ehdr1", m);
            r.note = s.note;
            if (s.note.kind == StepNoteKind::tell && s.note.changed)
                r.delta.emplace_back('+', s.note.fact);
            if (s.note.kind == StepNoteKind::retract && s.note.changed)
                r.delta.emplace_back('-', s.note.fact);
            result.trace.push_back(std::move(r));
            if (s.status == SlaveStatus::failed) {
                finish(RunResult::Status::adaptation_failure);
                return result;
            }
            if (s.status == SlaveStatus::stuck) {
                finish(RunResult::Status::stuck);
                result.stuck_reason = s.stuck_reason;
                return result;
            }
            m.prog.handler = std::move(s.expr);
            m.env = std::move(s.env);
            m.ctx = std::move(s.ctx);
            ++k;
            continue;
        }

        if (!m.queue.empty()) {
            std::string name = m.queue.front();
            TraceRecord r = snapshot(k, "Eman", m);
            r.event = name;
            auto it = scenario.defs.find(name);
            static const EventDef no_effects{};
            auto [nctx, delta] = apply_event(m.ctx, it != scenario.defs.end() ? it->second
                                                                              : no_effects);
            r.delta = std::move(delta);
            result.trace.push_back(std::move(r));
            m.queue.pop_front();
            m.ctx = std::move(nctx);
            auto h = handlers.find(name);
            m.prog.handler = h != handlers.end() ? h->second : unit_expr();
            ++k;
            continue;
        }

        // Queue empty, program running: one application step.
        SlaveResult s = step_slave(m.env, m.ctx, m.prog.expr);
        TraceRecord r = snapshot(k, "Eexpr", m);
        r.note = s.note;
        if (s.note.kind == StepNoteKind::tell && s.note.changed)
            r.delta.emplace_back('+', s.note.fact);
        if (s.note.kind == StepNoteKind::retract && s.note.changed)
            r.delta.emplace_back('-', s.note.fact);
        result.trace.push_back(std::move(r));
        if (s.status == SlaveStatus::failed) {
            finish(RunResult::Status::adaptation_failure);
            return result;
        }
        if (s.status == SlaveStatus::stuck) {
            finish(RunResult::Status::stuck);
            result.stuck_reason = s.stuck_reason;
            return result;
        }
        m.prog.expr = std::move(s.expr);
        m.env = std::move(s.env);
        m.ctx = std::move(s.ctx);
        ++k;
    }
}

}  // namespace coda
