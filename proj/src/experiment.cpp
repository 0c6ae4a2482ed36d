#include "morphlearn/experiment.hpp"

#include "morphlearn/cpg.hpp"
#include "morphlearn/error.hpp"
#include "morphlearn/external_env.hpp"
#include "morphlearn/nn.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

namespace morphlearn {

namespace {

constexpr std::string_view kRandomPrefix = "random:";
constexpr std::string_view kExternalPrefix = "external:";

bool known_framework(const std::string& name)
{
    const auto all = all_frameworks();
    return std::find(all.begin(), all.end(), name) != all.end();
}

nlohmann::json ppo_to_json(const PpoConfig& c)
{
    return {{"gamma", c.gamma},
            {"clip", c.clip},
            {"entropy_coef", c.entropy_coef},
            {"value_coef", c.value_coef},
            {"gae_lambda", c.gae_lambda},
            {"agents", c.agents},
            {"steps_per_rollout", c.steps_per_rollout},
            {"epochs", c.epochs},
            {"minibatch", c.minibatch},
            {"learning_rate", c.learning_rate},
            {"normalize_advantages", c.normalize_advantages}};
}

PpoConfig ppo_from_json(const nlohmann::json& doc)
{
    PpoConfig c;
    c.gamma = doc.value("gamma", c.gamma);
    c.clip = doc.value("clip", c.clip);
    c.entropy_coef = doc.value("entropy_coef", c.entropy_coef);
    c.value_coef = doc.value("value_coef", c.value_coef);
    c.gae_lambda = doc.value("gae_lambda", c.gae_lambda);
    c.agents = doc.value("agents", c.agents);
    c.steps_per_rollout = doc.value("steps_per_rollout", c.steps_per_rollout);
    c.epochs = doc.value("epochs", c.epochs);
    c.minibatch = doc.value("minibatch", c.minibatch);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.normalize_advantages = doc.value("normalize_advantages", c.normalize_advantages);
    return c;
}

void add_robot_file(const std::filesystem::path& path, std::vector<MorphologyTree>& out)
{
    out.push_back(load_morphology(path));
}

} // namespace

std::vector<std::string> all_frameworks() { return {kCpgRevde, kAnnRevde, kDrlPpo}; }

void ExperimentConfig::validate() const
{
    if (frameworks.empty())
        throw ConfigError("no frameworks selected");
    for (const auto& f : frameworks)
        if (!known_framework(f))
            throw ConfigError("unknown framework '" + f + "' (expected cpg+revde, ann+revde or drl+ppo)");
    if (robots.empty())
        throw ConfigError("no robots selected");
    if (repetitions < 1)
        throw ConfigError("repetitions must be at least 1");
    if (budget < 1)
        throw ConfigError("budget must be at least 1");
    if (jobs < 1)
        throw ConfigError("jobs must be at least 1");
    if (env != "surrogate" && env.rfind(kExternalPrefix, 0) != 0)
        throw ConfigError("env must be 'surrogate' or 'external:<command>'");
    if (env.rfind(kExternalPrefix, 0) == 0 && env.size() == kExternalPrefix.size())
        throw ConfigError("external env needs a command");
    env_config.validate();
    for (const auto& f : frameworks) {
        if (f == kDrlPpo)
            (void)ppo_config_for(ppo, budget);
        else
            revde_config_for(f, budget).validate();
    }
}

nlohmann::json to_json(const ExperimentConfig& c)
{
    return {{"frameworks", c.frameworks},
            {"robots", c.robots},
            {"repetitions", c.repetitions},
            {"budget", c.budget},
            {"seed", c.seed},
            {"env", c.env},
            {"jobs", c.jobs},
            {"output", c.output.string()},
            {"random_max_modules", c.random_max_modules},
            {"env_config", to_json(c.env_config)},
            {"ppo", ppo_to_json(c.ppo)}};
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& doc)
{
    if (!doc.is_object())
        throw ConfigError("experiment config must be a JSON object");
    static const std::set<std::string> keys = {"frameworks", "robots", "repetitions", "budget",
                                               "seed",       "env",    "jobs",        "output",
                                               "random_max_modules", "env_config", "ppo"};
    for (const auto& [key, value] : doc.items())
        if (!keys.count(key))
            throw ConfigError("unknown config key '" + key + "'");
    ExperimentConfig c;
    try {
        c.frameworks = doc.value("frameworks", c.frameworks);
        c.robots = doc.value("robots", c.robots);
        c.repetitions = doc.value("repetitions", c.repetitions);
        c.budget = doc.value("budget", c.budget);
        c.seed = doc.value("seed", c.seed);
        c.env = doc.value("env", c.env);
        c.jobs = doc.value("jobs", c.jobs);
        c.output = doc.value("output", c.output.string());
        c.random_max_modules = doc.value("random_max_modules", c.random_max_modules);
        if (doc.contains("env_config"))
            c.env_config = env_config_from_json(doc.at("env_config"));
        if (doc.contains("ppo"))
            c.ppo = ppo_from_json(doc.at("ppo"));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
    return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open config " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("config " + path.string() + " is not valid JSON: " + e.what());
    }
    return experiment_config_from_json(doc);
}

std::vector<MorphologyTree> resolve_robots(const std::vector<std::string>& tokens, std::size_t random_max_modules)
{
    std::vector<MorphologyTree> out;
    for (const auto& token : tokens) {
        if (token.rfind(kRandomPrefix, 0) == 0) {
            const std::string digits = token.substr(kRandomPrefix.size());
            std::uint64_t seed = 0;
            try {
                std::size_t used = 0;
                seed = std::stoull(digits, &used);
                if (used != digits.size())
                    throw std::invalid_argument(digits);
            } catch (const std::exception&) {
                throw ConfigError("bad random robot token '" + token + "'");
            }
            RngStream rng(mix64(seed ^ 0x524f424fULL));
            out.push_back(generate_random_morphology(rng, random_max_modules, "random-" + digits));
            continue;
        }
        const std::filesystem::path path(token);
        if (std::filesystem::is_directory(path)) {
            std::vector<std::filesystem::path> files;
            for (const auto& entry : std::filesystem::directory_iterator(path))
                if (entry.is_regular_file() && entry.path().extension() == ".json")
                    files.push_back(entry.path());
            std::sort(files.begin(), files.end());
            if (files.empty())
                throw ConfigError("no robot files in " + token);
            for (const auto& f : files)
                add_robot_file(f, out);
        } else if (std::filesystem::is_regular_file(path)) {
            add_robot_file(path, out);
        } else {
            out.push_back(load_bundled_robot(token));
        }
    }
    std::set<std::string> names;
    for (const auto& t : out)
        if (!names.insert(t.name()).second)
            throw ConfigError("robot name '" + t.name() + "' appears twice");
    return out;
}

EnvironmentFactory make_environment_factory(const std::string& env, const EnvConfig& config)
{
    if (env == "surrogate")
        return surrogate_factory(config);
    if (env.rfind(kExternalPrefix, 0) == 0)
        return external_factory(env.substr(kExternalPrefix.size()), config);
    throw ConfigError("unknown env '" + env + "'");
}

RevdeConfig revde_config_for(const std::string& framework, std::size_t budget)
{
    RevdeConfig c = framework == kAnnRevde ? RevdeConfig::ann_defaults() : RevdeConfig::cpg_defaults();
    if (budget > c.population) {
        const std::size_t extra = budget - c.population;
        c.iterations = 1 + (extra + c.new_candidates - 1) / c.new_candidates;
    } else {
        c.iterations = 1;
    }
    c.budget = budget;
    return c;
}

PpoConfig ppo_config_for(const PpoConfig& base, std::size_t budget)
{
    PpoConfig c = base;
    if (c.agents == 0 || budget % c.agents != 0)
        throw ConfigError("drl+ppo budget " + std::to_string(budget) + " is not a multiple of the agent count "
                          + std::to_string(c.agents));
    c.episodes = budget / c.agents;
    c.validate();
    return c;
}

std::size_t controller_param_count(const std::string& framework, const MorphologyTree& tree)
{
    if (framework == kCpgRevde)
        return cpg_param_count(tree);
    if (framework == kAnnRevde)
        return ann_param_count(tree);
    if (framework == kDrlPpo)
        return drl_param_count(tree);
    throw ConfigError("unknown framework '" + framework + "'");
}

std::vector<EvaluationRecord> run_cell(const std::string& framework, const MorphologyTree& robot,
                                       std::size_t repetition, const ExperimentConfig& config,
                                       const EnvironmentFactory& factory)
{
    RngStream rng = keyed_stream(config.seed, robot.name(), framework, repetition);
    const RecordLabel label{framework, robot.name(), repetition};

    if (framework == kDrlPpo) {
        PpoResult r = run_ppo(factory, robot, ppo_config_for(config.ppo, config.budget), rng, label);
        if (r.aborted)
            throw Error(r.error);
        return std::move(r.history);
    }

    std::unique_ptr<Environment> env = factory(robot);
    RevdeConfig rc = revde_config_for(framework, config.budget);
    std::size_t dimension = 0;
    Objective objective;
    if (framework == kCpgRevde) {
        dimension = cpg_param_count(robot);
        objective = [&](std::span<const double> g) {
            CpgPolicy policy(build_cpg(robot, Genome{{g.begin(), g.end()}, "cpg"}), env->config().control_dt);
            return evaluate_fitness(*env, policy);
        };
    } else if (framework == kAnnRevde) {
        dimension = ann_structural_param_count(robot.hinge_count());
        objective = [&](std::span<const double> g) {
            AnnPolicy policy(genome_decode(robot, Genome{{g.begin(), g.end()}, "ann"}));
            return evaluate_fitness(*env, policy);
        };
    } else {
        throw ConfigError("unknown framework '" + framework + "'");
    }
    RevdeResult r = run_revde(objective, dimension, rc, rng, label);
    for (const auto& rec : r.history)
        if (rec.flagged)
            throw NumericError("objective produced a non-finite fitness at evaluation "
                               + std::to_string(rec.evaluation));
    return std::move(r.history);
}

ExperimentResult run_experiment(const ExperimentConfig& config)
{
    config.validate();
    const std::vector<MorphologyTree> robots = resolve_robots(config.robots, config.random_max_modules);
    const EnvironmentFactory factory = make_environment_factory(config.env, config.env_config);

    struct Cell {
        const std::string* framework;
        const MorphologyTree* robot;
        std::size_t repetition;
        std::vector<EvaluationRecord> records;
        std::string error;
        bool failed = false;
    };
    std::vector<Cell> cells;
    for (const auto& fw : config.frameworks)
        for (const auto& robot : robots)
            for (std::size_t rep = 1; rep <= config.repetitions; ++rep)
                cells.push_back(Cell{&fw, &robot, rep, {}, {}, false});

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            Cell& c = cells[i];
            try {
                c.records = run_cell(*c.framework, *c.robot, c.repetition, config, factory);
            } catch (const std::exception& e) {
                c.failed = true;
                c.error = e.what();
                c.records.clear();
            }
        }
    };
    const std::size_t threads = std::min(config.jobs, cells.size());
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < threads; ++t)
            pool.emplace_back(worker);
    }

    ExperimentResult result;
    for (auto& c : cells) {
        if (c.failed)
            result.failures.push_back(CellFailure{*c.framework, c.robot->name(), c.repetition, c.error});
        else
            result.records.insert(result.records.end(), std::make_move_iterator(c.records.begin()),
                                  std::make_move_iterator(c.records.end()));
    }
    sort_records(result.records);
    std::sort(result.failures.begin(), result.failures.end(), [](const CellFailure& a, const CellFailure& b) {
        return std::tie(a.framework, a.robot, a.repetition) < std::tie(b.framework, b.robot, b.repetition);
    });
    for (const auto& fw : config.frameworks)
        for (const auto& robot : robots)
            result.param_counts[fw][robot.name()] = controller_param_count(fw, robot);
    return result;
}

} // namespace morphlearn
