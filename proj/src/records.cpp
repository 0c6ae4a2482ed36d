#include "morphlearn/records.hpp"

#include "morphlearn/error.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <tuple>

namespace morphlearn {

void write_records_csv(std::ostream& out, const std::vector<EvaluationRecord>& records)
{
    out << kRecordsHeader << "\n";
    char buf[64];
    for (const auto& r : records) {
        std::snprintf(buf, sizeof buf, "%.17g", r.fitness);
        out << r.framework << ',' << r.robot << ',' << r.repetition << ',' << r.evaluation << ',' << buf << "\n";
    }
}

void write_records_csv(const std::filesystem::path& path, const std::vector<EvaluationRecord>& records)
{
    std::ofstream out(path);
    if (!out)
        throw ConfigError("cannot write " + path.string());
    write_records_csv(out, records);
}

std::vector<EvaluationRecord> read_records_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line) || line != kRecordsHeader)
        throw ConfigError(std::string("records file must start with header '") + kRecordsHeader + "'");
    std::vector<EvaluationRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ','))
            cells.push_back(cell);
        if (cells.size() != 5)
            throw ConfigError("records line " + std::to_string(line_no) + ": expected 5 fields");
        try {
            EvaluationRecord r;
            r.framework = cells[0];
            r.robot = cells[1];
            r.repetition = std::stoul(cells[2]);
            r.evaluation = std::stoul(cells[3]);
            r.fitness = std::stod(cells[4]);
            records.push_back(std::move(r));
        } catch (const std::logic_error&) {
            throw ConfigError("records line " + std::to_string(line_no) + ": malformed number");
        }
    }
    return records;
}

std::vector<EvaluationRecord> read_records_csv(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError("cannot open " + path.string());
    return read_records_csv(in);
}

void sort_records(std::vector<EvaluationRecord>& records)
{
    std::stable_sort(records.begin(), records.end(), [](const EvaluationRecord& a, const EvaluationRecord& b) {
        return std::tie(a.framework, a.robot, a.repetition, a.evaluation)
               < std::tie(b.framework, b.robot, b.repetition, b.evaluation);
    });
}

} // namespace morphlearn
