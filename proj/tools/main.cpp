#include "commands.hpp"

#include "cavityq/error.hpp"
#include "cavityq/io.hpp"

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
    using namespace cavityq;
    using cli::GlobalOptions;

    CLI::App app{"Cavity qudit simulator: device estimators, circuits, pulse control, bosonic codes, state transfer"};
    app.set_version_flag("--version", std::string(io::kToolName) + " " + std::string(io::kToolVersion));
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    std::string out_dir = ".";
    std::string format = "csv";
    auto* out_opt = app.add_option("--out", out_dir, "Output directory");
    app.add_option("--seed", g.seed, "Random seed");
    app.add_option("--threads", g.threads, "Worker threads for sweeps")->check(CLI::PositiveNumber);
    app.add_option("--format", format, "Table output format")->check(CLI::IsMember({"csv", "json"}));

    std::string file;
    std::string initial = "0";

    auto* device = app.add_subcommand("device", "Dispersive estimators for a device parameter file");
    device->add_option("params", file, "Device parameter JSON")->required();
    auto* run = app.add_subcommand("run", "Apply a circuit and write basis-state probabilities");
    run->add_option("circuit", file, "Circuit JSON")->required();
    run->add_option("--initial", initial, "Initial basis state: flat index or per-subsystem levels such as 1:3");
    auto* qst = app.add_subcommand("qst", "Pitch-and-catch state transfer and detuning sweep");
    qst->add_option("config", file, "Config JSON")->required();
    auto* grape = app.add_subcommand("grape", "Pulse optimization, SNAP synthesis and gate sequences");
    grape->add_option("config", file, "Config JSON")->required();
    auto* code = app.add_subcommand("code", "Bosonic code and photon loss experiments");
    code->add_option("config", file, "Config JSON")->required();
    auto* trotter = app.add_subcommand("trotter", "Trotter convergence against exact evolution");
    trotter->add_option("config", file, "Config JSON")->required();
    auto* otoc = app.add_subcommand("otoc", "Out-of-time-order correlator series");
    otoc->add_option("config", file, "Config JSON")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code_ = app.exit(e);
        return code_ == 0 ? 0 : exit_code(ErrorKind::Usage);
    }

    g.out = out_dir;
    g.out_given = out_opt->count() > 0;
    g.format = format == "json" ? cli::TableFormat::Json : cli::TableFormat::Csv;

    try {
        if (*device) return cli::cmd_device(g, file);
        if (*run) return cli::cmd_run(g, file, initial);
        if (*qst) return cli::cmd_qst(g, file);
        if (*grape) return cli::cmd_grape(g, file);
        if (*code) return cli::cmd_code(g, file);
        if (*trotter) return cli::cmd_trotter(g, file);
        if (*otoc) return cli::cmd_otoc(g, file);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code(ErrorKind::Numeric);
    }
    return exit_code(ErrorKind::Usage);
}
