// Command-line front end: one subcommand per pipeline.

#include "chaospde/error.hpp"
#include "chaospde/harness.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::string eps;
    std::optional<double> p;
    std::optional<unsigned> m;
    std::optional<std::size_t> k;
    std::optional<std::size_t> order;
    std::optional<std::size_t> workers;
};

void add_flags(CLI::App* sub, Overrides& o) {
    sub->add_option("--config", o.config, "flat key=value configuration file");
    sub->add_option("--out", o.out, "output directory (output.dir)");
    sub->add_option("--seed", o.seed, "random seed (run.seed)");
    sub->add_option("--eps", o.eps, "comma-separated decreasing eps list (run.eps)");
    sub->add_option("--p", o.p, "Kondratiev exponent (run.p)");
    sub->add_option("--m", o.m, "splitting parameter m >= 2 (run.m)");
    sub->add_option("--k", o.k, "truncation width K (truncation.K)");
    sub->add_option("--order", o.order, "truncation order P (truncation.P)");
    sub->add_option("--workers", o.workers, "worker threads, 0 for all cores (run.workers)");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Chaos-expansion solver for Wick-type stochastic heat equations with singular "
                 "potentials"};
    app.require_subcommand(1);
    Overrides o;
    const std::vector<std::pair<std::string, std::string>> commands{
        {"solve", "propagate a problem with a bounded potential"},
        {"vws", "very weak solution over an eps net"},
        {"consistency", "compare mollified and exact bounded-potential solutions"},
        {"negligibility", "compare two regularizations of the same singular potential"},
        {"moderate", "moderateness fit of the regularized potential net"},
        {"sample", "solve, then draw realizations of the solution"},
        {"section6", "worked example bundle"},
    };
    for (const auto& [name, help] : commands)
        add_flags(app.add_subcommand(name, help), o);
    CLI11_PARSE(app, argc, argv);

    const std::string name = app.get_subcommands().front()->get_name();
    try {
        const auto command = chaospde::parse_command(name);
        chaospde::Config config;
        const bool from_file = !o.config.empty();
        if (from_file)
            config = chaospde::Config::load(o.config);
        if (!o.out.empty())
            config.set("output.dir", o.out);
        if (o.seed)
            config.set("run.seed", std::to_string(*o.seed));
        if (!o.eps.empty())
            config.set("run.eps", o.eps);
        if (o.p)
            config.set("run.p", chaospde::format_double(*o.p));
        if (o.m)
            config.set("run.m", std::to_string(*o.m));
        if (o.k)
            config.set("truncation.K", std::to_string(*o.k));
        if (o.order)
            config.set("truncation.P", std::to_string(*o.order));
        if (o.workers)
            config.set("run.workers", std::to_string(*o.workers));
        return chaospde::execute(command, config, from_file, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return 1;
    }
}
