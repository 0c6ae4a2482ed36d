#include "morphlearn/error.hpp"
#include "morphlearn/experiment.hpp"
#include "morphlearn/external_env.hpp"
#include "morphlearn/metrics.hpp"
#include "morphlearn/morphology.hpp"
#include "morphlearn/records.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace morphlearn;

namespace {

void write_text(const fs::path& path, const std::string& text)
{
    std::ofstream f(path);
    if (!f)
        throw Error("cannot write " + path.string());
    f << text;
}

std::map<std::string, std::map<std::string, std::size_t>> counts_for(const std::vector<std::string>& frameworks,
                                                                     const std::vector<MorphologyTree>& robots)
{
    std::map<std::string, std::map<std::string, std::size_t>> out;
    for (const auto& fw : frameworks)
        for (const auto& r : robots)
            out[fw][r.name()] = controller_param_count(fw, r);
    return out;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Controller and learner comparison on modular robot morphologies"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "Run an experiment and write records, report and plot data");
    std::string config_path;
    std::vector<std::string> frameworks, robots;
    std::size_t reps = 0, budget = 0, jobs = 0;
    std::uint64_t seed = 0;
    std::string out_dir, env;
    run->add_option("--config", config_path, "JSON config mirroring the flags")->check(CLI::ExistingFile);
    auto* o_fw = run->add_option("--framework", frameworks, "cpg+revde, ann+revde, drl+ppo (repeatable)");
    auto* o_robots = run->add_option("--robots", robots, "robot directory, files, bundled names or random:<seed>");
    auto* o_reps = run->add_option("--reps", reps, "repetitions per robot");
    auto* o_budget = run->add_option("--budget", budget, "evaluations per run");
    auto* o_seed = run->add_option("--seed", seed, "master seed");
    auto* o_out = run->add_option("--out", out_dir, "output directory");
    auto* o_env = run->add_option("--env", env, "surrogate or external:<command>");
    auto* o_jobs = run->add_option("--jobs", jobs, "worker threads");

    // metrics
    auto* metrics = app.add_subcommand("metrics", "Compute the report from a records file");
    std::string records_path;
    std::vector<std::string> metric_robots;
    std::string metrics_out;
    metrics->add_option("--records", records_path, "records.csv")->required()->check(CLI::ExistingFile);
    metrics->add_option("--robots", metric_robots, "robots, for the parameter-count regression");
    metrics->add_option("--out", metrics_out, "write report.txt here instead of stdout");

    // plot-data
    auto* plot = app.add_subcommand("plot-data", "Write plot-ready series from a records file");
    std::string plot_records, plot_out = "plots";
    plot->add_option("--records", plot_records, "records.csv")->required()->check(CLI::ExistingFile);
    plot->add_option("--out", plot_out, "output directory");

    // gen-robots
    auto* gen = app.add_subcommand("gen-robots", "Generate random robot morphologies");
    std::size_t gen_count = 10, gen_max = 15;
    std::uint64_t gen_seed = 0;
    std::string gen_out = "robots";
    gen->add_option("--count", gen_count, "number of robots");
    gen->add_option("--max-modules", gen_max, "largest module count, core included");
    gen->add_option("--seed", gen_seed, "generator seed");
    gen->add_option("--out", gen_out, "output directory");

    app.add_subcommand("serve-surrogate", "Serve the built-in surrogate over stdin/stdout");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_experiment_config(config_path);
            if (o_fw->count())
                cfg.frameworks = frameworks;
            if (o_robots->count())
                cfg.robots = robots;
            if (o_reps->count())
                cfg.repetitions = reps;
            if (o_budget->count())
                cfg.budget = budget;
            if (o_seed->count())
                cfg.seed = seed;
            if (o_out->count())
                cfg.output = out_dir;
            if (o_env->count())
                cfg.env = env;
            if (o_jobs->count())
                cfg.jobs = jobs;

            const ExperimentResult res = run_experiment(cfg);
            fs::create_directories(cfg.output);
            write_records_csv(cfg.output / "records.csv", res.records);
            write_text(cfg.output / "config.json", to_json(cfg).dump(2) + "\n");
            std::string report = res.records.empty() ? std::string("no completed cells\n")
                                                     : metrics_report(res.records, res.param_counts);
            if (!res.failures.empty()) {
                report += "\n[failed cells]\n";
                for (const auto& f : res.failures)
                    report += f.framework + " " + f.robot + " " + std::to_string(f.repetition) + ": " + f.error + "\n";
            }
            write_text(cfg.output / "report.txt", report);
            if (!res.records.empty())
                write_plot_data(res.records, cfg.output / "plots");
            std::cout << "wrote " << res.records.size() << " records to " << (cfg.output / "records.csv").string()
                      << "\n";
            for (const auto& f : res.failures)
                std::cerr << "failed: " << f.framework << " " << f.robot << " rep " << f.repetition << ": " << f.error
                          << "\n";
            return res.failures.empty() ? 0 : 3;
        }
        if (metrics->parsed()) {
            const auto records = read_records_csv(fs::path(records_path));
            std::map<std::string, std::map<std::string, std::size_t>> counts;
            if (!metric_robots.empty())
                counts = counts_for(frameworks_in(records), resolve_robots(metric_robots, 15));
            const std::string report = metrics_report(records, counts);
            if (metrics_out.empty()) {
                std::cout << report;
            } else {
                fs::create_directories(metrics_out);
                write_text(fs::path(metrics_out) / "report.txt", report);
            }
            return 0;
        }
        if (plot->parsed()) {
            const auto records = read_records_csv(fs::path(plot_records));
            const auto files = write_plot_data(records, plot_out);
            std::cout << "wrote " << files.size() << " plot files to " << plot_out << "\n";
            return 0;
        }
        if (gen->parsed()) {
            fs::create_directories(gen_out);
            RngStream rng(mix64(gen_seed));
            for (std::size_t i = 0; i < gen_count; ++i) {
                const std::string name = "random" + std::to_string(i + 1);
                RngStream child = rng.split(i);
                save_morphology(generate_random_morphology(child, gen_max, name), fs::path(gen_out) / (name + ".json"));
            }
            std::cout << "wrote " << gen_count << " robots to " << gen_out << "\n";
            return 0;
        }
        return serve_surrogate(std::cin, std::cout);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
