#pragma once

#include "morphlearn/environment.hpp"
#include "morphlearn/morphology.hpp"
#include "morphlearn/ppo.hpp"
#include "morphlearn/records.hpp"
#include "morphlearn/revde.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

namespace morphlearn {

inline constexpr const char* kCpgRevde = "cpg+revde";
inline constexpr const char* kAnnRevde = "ann+revde";
inline constexpr const char* kDrlPpo = "drl+ppo";

std::vector<std::string> all_frameworks();

struct ExperimentConfig {
    std::vector<std::string> frameworks = all_frameworks();
    // Each token is a directory of *.json robots, a robot file, a bundled
    // robot name, or random:<seed> for a generated robot.
    std::vector<std::string> robots = {"spider"};
    std::size_t repetitions = 20;
    std::size_t budget = 1000;
    std::uint64_t seed = 0;
    std::string env = "surrogate"; // or external:<command>
    std::size_t jobs = 1;
    std::filesystem::path output = "results";
    std::size_t random_max_modules = 15;
    EnvConfig env_config;
    PpoConfig ppo;

    void validate() const;
};

nlohmann::json to_json(const ExperimentConfig& config);
// Keys absent from the document keep their defaults; unknown keys throw.
ExperimentConfig experiment_config_from_json(const nlohmann::json& doc);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

std::vector<MorphologyTree> resolve_robots(const std::vector<std::string>& tokens, std::size_t random_max_modules);

EnvironmentFactory make_environment_factory(const std::string& env, const EnvConfig& config);

// Learner schedules stretched or capped to hit `budget` evaluations exactly.
RevdeConfig revde_config_for(const std::string& framework, std::size_t budget);
PpoConfig ppo_config_for(const PpoConfig& base, std::size_t budget);

// Controller parameter count of a framework on a robot.
std::size_t controller_param_count(const std::string& framework, const MorphologyTree& tree);

// Runs one (framework, robot, repetition) cell to the budget and returns its
// records. Throws on any failure.
std::vector<EvaluationRecord> run_cell(const std::string& framework, const MorphologyTree& robot,
                                       std::size_t repetition, const ExperimentConfig& config,
                                       const EnvironmentFactory& factory);

struct CellFailure {
    std::string framework;
    std::string robot;
    std::size_t repetition = 0;
    std::string error;
};

struct ExperimentResult {
    std::vector<EvaluationRecord> records; // sorted
    std::vector<CellFailure> failures;     // sorted by cell
    std::map<std::string, std::map<std::string, std::size_t>> param_counts;
};

// Cells run on `jobs` worker threads; output does not depend on the count.
ExperimentResult run_experiment(const ExperimentConfig& config);

} // namespace morphlearn
