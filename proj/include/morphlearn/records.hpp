#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace morphlearn {

// One fitness measurement; the unit every metric is computed from.
struct EvaluationRecord {
    std::string framework;
    std::string robot;
    std::size_t repetition = 0; // 1-based
    std::size_t evaluation = 0; // 1-based, dense within a (framework, robot, repetition) cell
    double fitness = 0.0;       // cm/s
    bool flagged = false;       // objective returned a non-finite value (stored as 0); not serialized

    friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

// Labels stamped on records emitted by a learner.
struct RecordLabel {
    std::string framework;
    std::string robot;
    std::size_t repetition = 1;
};

inline constexpr const char* kRecordsHeader = "framework,robot,repetition,evaluation,fitness";

// Fitness is written with 17 significant digits so that reading the file
// back reproduces every value exactly.
void write_records_csv(std::ostream& out, const std::vector<EvaluationRecord>& records);
void write_records_csv(const std::filesystem::path& path, const std::vector<EvaluationRecord>& records);
std::vector<EvaluationRecord> read_records_csv(std::istream& in);
std::vector<EvaluationRecord> read_records_csv(const std::filesystem::path& path);

// Sorts by (framework, robot, repetition, evaluation).
void sort_records(std::vector<EvaluationRecord>& records);

} // namespace morphlearn
