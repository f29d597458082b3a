// Command-line front end: synth, run, verify.
#include <iostream>

#include <CLI11.hpp>

#include "ctxens/cli.hpp"

int main(int argc, char** argv) {
    using namespace ctxens::cli;
    CLI::App app{"Context-aware ensemble forecasting toolkit"};
    app.set_version_flag("--version", std::string(kVersion));
    app.require_subcommand(1);

    SynthOptions synth;
    auto* s = app.add_subcommand("synth", "generate the synthetic mixed series as CSV");
    s->add_option("--mix", synth.mix, "a, b or c (default: all three)");
    s->add_option("--length", synth.length, "rows per dataset")->capture_default_str();
    s->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
    s->add_option("--noise-sigma", synth.noise_sigma, "std of the driving noise")->capture_default_str();
    s->add_option("--out", synth.out, "output directory")->capture_default_str();

    RunOptions run;
    auto* r = app.add_subcommand("run", "run an experiment config (or every *.cfg in a directory)");
    r->add_option("config", run.config, "config file or directory")->required();
    r->add_option("--out", run.out, "output directory override");

    std::string suite;
    std::uint64_t verify_seed = 0;
    auto* v = app.add_subcommand("verify", "run a property suite: grad, oracle or order");
    v->add_option("suite", suite, "grad | oracle | order")->required();
    v->add_option("--seed", verify_seed, "random seed")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsageError;
    }

    if (s->parsed()) return cmd_synth(synth, std::cout, std::cerr);
    if (r->parsed()) return cmd_run(run, std::cout, std::cerr);
    return cmd_verify(suite, verify_seed, std::cout, std::cerr);
}
