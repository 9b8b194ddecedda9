#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
    using namespace dmft_sgd::cli;
    CLI::App app{"DMFT predictions and finite-size simulations of SGD and its SME"};
    app.name("dmft-sgd");
    app.require_subcommand(1);

    CommandOptions opts;
    std::string config, output_dir, scale, compare_out;
    int threads = 0;
    std::vector<std::string> traces;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("config", config, "experiment file (YAML, version 1)")->required();
        sub->add_option("-o,--output-dir", output_dir, "overrides run.output_dir");
        sub->add_option("--scale", scale, "desk | paper; overrides run.scale")->check(CLI::IsMember({"desk", "paper"}));
        sub->add_option("--threads", threads, "worker threads (DMFT_SGD_THREADS wins when set)");
        sub->add_flag("-q,--quiet", opts.quiet, "no progress messages");
    };
    auto* sim = app.add_subcommand("simulate", "run the engines listed in run.engines");
    add_common(sim);
    auto* dmft = app.add_subcommand("dmft", "solve the DMFT fixed point and predict observables");
    add_common(dmft);
    auto* cmp = app.add_subcommand("compare", "differences and z-scores of traces against the first one");
    cmp->add_option("traces", traces, "trace CSV files")->required();
    cmp->add_option("-o,--output", compare_out, "write the table here instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (!output_dir.empty()) opts.output_dir = output_dir;
    if (!scale.empty()) opts.scale = scale;
    if (threads > 0) opts.threads = threads;
    try {
        if (*sim) {
            for (const auto& f : cmd_simulate(config, opts))
                if (!opts.quiet) std::cout << f << '\n';
        } else if (*dmft) {
            for (const auto& f : cmd_dmft(config, opts))
                if (!opts.quiet) std::cout << f << '\n';
        } else if (*cmp) {
            double max_z = 0.0;
            if (compare_out.empty()) {
                max_z = cmd_compare(traces, std::cout);
            } else {
                std::ofstream os(compare_out, std::ios::binary);
                if (!os) throw std::invalid_argument("cannot write '" + compare_out + "'");
                max_z = cmd_compare(traces, os);
            }
            std::cerr << "max |z| = " << max_z << '\n';
        }
    } catch (const std::exception& e) {
        std::cerr << "dmft-sgd: " << e.what() << '\n';
        return exit_code_for(e);
    }
    return 0;
}
