#include "coda/bundle.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace coda {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw LinkError("cannot read " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

BundleSources bundle_sources_from_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    BundleSources src;
    fs::path base(dir);
    fs::path program = base / "program.cml";
    if (!fs::exists(program)) throw LinkError("no program.cml in " + dir);
    src.program_file = program.string();
    src.program_text = read_file(src.program_file);
    if (fs::path p = base / "context.ctx"; fs::exists(p)) {
        src.context_file = p.string();
        src.context_text = read_file(src.context_file);
    }
    if (fs::path p = base / "handlers.hdl"; fs::exists(p)) {
        src.handlers_file = p.string();
        src.handlers_text = read_file(src.handlers_file);
    }
    if (fs::path p = base / "scenario.scn"; fs::exists(p)) {
        src.scenario_file = p.string();
        src.scenario_text = read_file(src.scenario_file);
    }
    return src;
}

Scenario link_scenario(const ScenarioFile& file) {
    Scenario s;
    for (const auto& ev : file.events) s.defs[ev.name] = EventDef{ev.name, {}};
    for (const auto& ev : file.events) {
        auto& def = s.defs[ev.name];
        for (const auto& eff : ev.effects) def.effects.push_back({eff.is_tell, eff.fact});
    }
    for (const auto& inj : file.injections) {
        if (!s.defs.count(inj.event))
            throw LinkError("scenario injects undefined event " + inj.event);
        s.injections.push_back({inj.at, inj.event});
    }
    std::stable_sort(s.injections.begin(), s.injections.end(),
                     [](const Injection& a, const Injection& b) { return a.at < b.at; });
    return s;
}

Bundle load_bundle(const BundleSources& src) {
    Bundle b;

    ParsedUnit unit = parse_program(src.program_text, src.program_file);
    if (src.handlers_text)
        b.handlers = parse_handlers(*src.handlers_text, src.handlers_file);

    // Stubs become constant-valued primitives, substituted for their free
    // occurrences in the program and every handler.
    std::set<std::string> stub_names;
    for (const auto& s : unit.stubs) {
        if (!stub_names.insert(s.name).second)
            throw LinkError("duplicate stub declaration: " + s.name);
        ExprPtr repl = s.arity == 0 ? mk(Const{s.value})
                                    : mk(Prim{s.name, s.arity, s.value, {}});
        unit.expr = substitute(unit.expr, s.name, repl);
        for (auto& [name, body] : b.handlers) body = substitute(body, s.name, repl);
    }

    auto program_params = closed_check(*unit.expr);
    if (!program_params.empty()) throw FreeVarError("~" + *program_params.begin());
    validate_goal_scope(*unit.expr);
    for (const auto& [name, body] : b.handlers) {
        closed_check(*body);  // handlers may use dynamic parameters freely
        validate_goal_scope(*body);
    }
    b.program = std::move(unit.expr);

    if (src.context_text)
        b.ctx = datalog::load_context(*src.context_text, src.context_file);

    if (src.scenario_text)
        b.scenario = link_scenario(parse_scenario(*src.scenario_text, src.scenario_file));

    return b;
}

}  // namespace coda
