#include "scherk/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

using namespace scherk;

namespace {

int threads_from_env() {
    const char* v = std::getenv("SCHERK_LAB_THREADS");
    if (!v || !*v) return 1;
    char* end = nullptr;
    long n = std::strtol(v, &end, 10);
    if (*end != '\0' || n < 0) throw Error(ErrorCode::InvalidArgument, "SCHERK_LAB_THREADS must be a count >= 0");
    return static_cast<int>(n);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ideal Scherk graphs in the hyperbolic plane: admissibility, construction, flux, barriers."};
    app.require_subcommand(1, 1);
    std::string config_path, out_dir, field_path, mode;
    bool dump = false;
    const char* names[] = {"admissible", "solve", "flux", "barrier", "halfspace"};
    const char* help[] = {"certify admissibility of the polygon", "construct the Scherk graph",
                          "audit fluxes of a solved field", "compute the barrier family",
                          "translation sweep against a test surface"};
    for (int i = 0; i < 5; ++i) {
        auto* sub = app.add_subcommand(names[i], help[i]);
        sub->add_option("--config", config_path, "JSON experiment config")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", out_dir, "output directory (overrides the config)");
        sub->add_flag("--dump-config", dump, "print the resolved config and exit");
        if (std::string(names[i]) == "flux") sub->add_option("--field", field_path, "field file (default: solve output)");
        if (std::string(names[i]) == "halfspace") {
            sub->add_option("--mode", mode, "touch | asymptotic (overrides the config)");
        }
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_code::ok : exit_code::config;
    }
    std::string cmd = app.get_subcommands().front()->get_name();
    try {
        auto cfg = load_config(config_path);
        if (!out_dir.empty()) cfg.output_dir = fs::absolute(out_dir);
        if (!mode.empty()) cfg.halfspace.mode = mode;
        cfg.validate();
        if (dump) {
            std::cout << dump_config(cfg);
            return exit_code::ok;
        }
        int threads = threads_from_env();
        OutputSet out;
        CommandResult r;
        if (cmd == "admissible") {
            r = cmd_admissible(cfg, out);
        } else if (cmd == "solve") {
            r = cmd_solve(cfg, out);
        } else if (cmd == "flux") {
            r = cmd_flux(cfg, out, field_path.empty() ? std::optional<fs::path>{} : fs::path(field_path));
        } else if (cmd == "barrier") {
            r = cmd_barrier(cfg, out, threads);
        } else {
            r = cmd_halfspace(cfg, out);
        }
        out.commit(cfg.output_dir);
        std::cout << cmd << ": " << r.summary << "\n";
        return r.exit_code;
    } catch (const Error& e) {
        std::cerr << cmd << ": error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const fs::filesystem_error& e) {
        std::cerr << cmd << ": error: " << e.what() << "\n";
        return exit_code::config;
    } catch (const std::exception& e) {
        std::cerr << cmd << ": error: " << e.what() << "\n";
        return exit_code::solver;
    }
}
