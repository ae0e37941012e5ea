// bench <experiment> --config <file> --out <dir>

#include "dualtpd/bench.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"p-Laplacian dual solver benchmarks"};
    std::string experiment;
    std::string config_path;
    std::string out_dir;
    bool parallel = false;
    app.add_option("experiment", experiment, "error-table | iteration-table | solver-compare | time-growth")
        ->required()
        ->check(CLI::IsMember({"error-table", "iteration-table", "solver-compare", "time-growth"}));
    app.add_option("--config", config_path, "flat key = value config file")->required()->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory")->required();
    app.add_flag("--parallel", parallel, "run independent cells concurrently");
    CLI11_PARSE(app, argc, argv);

    try {
        auto cfg = dualtpd::KeyValueConfig::load(config_path);
        if (parallel) {
            cfg.set("parallel", "true");
        }
        const auto exp = dualtpd::parse_experiment(experiment);
        const auto out = dualtpd::run_experiment(exp, cfg);
        for (const auto& path : dualtpd::write_outputs(out, cfg, out_dir)) {
            std::cout << "wrote " << path.string() << '\n';
        }
        std::cout << out.csv;
        if (exp == dualtpd::Experiment::time_growth) {
            std::cout << "slope=" << out.slope << '\n';
        }
        if (!out.all_converged()) {
            std::cerr << "bench: some cells did not converge\n";
            return 1;
        }
        return 0;
    } catch (const dualtpd::ConfigError& e) {
        std::cerr << "bench: config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "bench: " << e.what() << '\n';
        return 2;
    }
}
