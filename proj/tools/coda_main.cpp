#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coda/bundle.hpp"

namespace {

namespace fs = std::filesystem;

coda::BundleSources sources_from_paths(const std::vector<std::string>& paths) {
    if (paths.size() == 1 && fs::is_directory(paths[0]))
        return coda::bundle_sources_from_dir(paths[0]);
    coda::BundleSources src;
    bool have_program = false;
    for (const auto& p : paths) {
        std::string ext = fs::path(p).extension().string();
        if (ext == ".cml") {
            if (have_program) throw coda::LinkError("more than one program file given");
            have_program = true;
            src.program_file = p;
            src.program_text = coda::read_file(p);
        } else if (ext == ".ctx") {
            src.context_file = p;
            src.context_text = coda::read_file(p);
        } else if (ext == ".hdl") {
            src.handlers_file = p;
            src.handlers_text = coda::read_file(p);
        } else if (ext == ".scn") {
            src.scenario_file = p;
            src.scenario_text = coda::read_file(p);
        } else {
            throw coda::LinkError("unrecognized file type: " + p);
        }
    }
    if (!have_program) throw coda::LinkError("no program (.cml) file given");
    return src;
}

int write_trace(const coda::RunResult& result, const std::string& trace_file,
                const std::string& format) {
    if (trace_file.empty()) return 0;
    std::string rendered = coda::render_trace(
        result.trace, coda::trace_level_from_env(),
        format == "structured" ? coda::TraceFormat::structured : coda::TraceFormat::text);
    if (trace_file == "-") {
        std::cout << rendered;
        return 0;
    }
    std::ofstream out(trace_file, std::ios::binary);
    if (!out) {
        std::cerr << "cannot write trace to " << trace_file << "\n";
        return 1;
    }
    out << rendered;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"interpreter for context-aware programs with event-driven adaptation"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "load a bundle and run it");
    std::vector<std::string> paths;
    std::string scenario_opt;
    std::string trace_file;
    std::string format = "text";
    std::size_t max_steps = 10000;
    run->add_option("paths", paths,
                    "bundle directory, or individual .cml/.ctx/.hdl/.scn files")
        ->required();
    run->add_option("--scenario", scenario_opt, "scenario file, or 'none' to ignore the bundle's");
    run->add_option("--max-steps", max_steps, "step budget (default 10000)");
    run->add_option("--trace", trace_file, "write the transition trace here ('-' for stdout)");
    run->add_option("--format", format, "trace format")
        ->check(CLI::IsMember({"text", "structured"}));

    CLI11_PARSE(app, argc, argv);

    try {
        coda::BundleSources src = sources_from_paths(paths);
        if (scenario_opt == "none") {
            src.scenario_text.reset();
        } else if (!scenario_opt.empty()) {
            src.scenario_file = scenario_opt;
            src.scenario_text = coda::read_file(scenario_opt);
        }
        coda::Bundle bundle = coda::load_bundle(src);

        coda::RunResult result = coda::run_master(bundle.program, bundle.ctx, bundle.handlers,
                                                  bundle.scenario, max_steps);
        if (write_trace(result, trace_file, format) != 0) return 1;

        switch (result.status) {
            case coda::RunResult::Status::value:
                std::cout << "result: " << coda::pretty(result.value) << "\n";
                return 0;
            case coda::RunResult::Status::adaptation_failure:
                std::cerr << "adaptation failure: no variation case applies\n";
                return 2;
            case coda::RunResult::Status::stuck:
                std::cerr << "stuck: " << result.stuck_reason << "\n";
                return 3;
            case coda::RunResult::Status::budget_exceeded:
                std::cerr << "step budget exceeded (" << max_steps << ")\n";
                return 4;
        }
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "load error: " << e.what() << "\n";
        return 1;
    }
}
