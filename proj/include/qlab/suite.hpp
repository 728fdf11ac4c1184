#pragma once

#include "json.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace qlab {

// Pinned tolerances of the acceptance criteria.
namespace tol {
inline constexpr double kL2SlopeTarget = 1.5;
inline constexpr double kL2SlopeWidth = 0.12;
inline constexpr double kUniversalSlopeTarget = 13.0 / 12.0;
inline constexpr double kUniversalSlopeWidth = 0.15;
inline constexpr double kP2SlopeMax = 0.1;
inline constexpr double kClusterSlopeMax = 3.0 / 7.0 + 0.15;
inline constexpr double kClusterTrivialBound = 4.0 / 7.0 - 0.05;
inline constexpr double kEigenTol = 1e-10;
inline constexpr double kC1Seconds = 1;
inline constexpr double kC2Seconds = 30;
inline constexpr double kC6Seconds = 600;
inline constexpr double kC7Seconds = 1200;
inline constexpr double kC12Seconds = 1800;
} // namespace tol

struct SuiteOptions {
    std::string out_dir = "qlab-suite";
    bool quick = false;
    std::uint64_t seed = 42;
};

struct CriterionVerdict {
    int id = 0;
    std::string name;
    std::string measured;
    std::string target;
    bool pass = false;
    std::vector<std::string> artifacts;
};

struct CommandStatus {
    std::string id;
    std::string status; // "ok", "degenerate", "failed"
    int exit_code = 0;
    double seconds = 0;
    std::vector<std::string> artifacts;
    std::string verdict; // from the emitted JSON, when there is one
};

struct RunReport {
    std::vector<CommandStatus> commands;
    std::vector<CriterionVerdict> verdicts;
    bool non_certifying = false;
    std::string status = "ok";

    bool all_pass() const;
};

nlohmann::json to_json(const RunReport& r);
std::string summary_table(const RunReport& r);

inline constexpr int kCriteria = 13;

/// Writes the artifacts of one criterion into dir (13 writes two quick
/// reruns of every CSV-producing step, under different thread counts).
/// Returns the wall time.
double generate_criterion(int id, const SuiteOptions& opt);

/// Verdict from the files in dir alone.
CriterionVerdict evaluate_criterion(int id, const std::string& dir);

/// Generates and evaluates every criterion; writes report.json.
RunReport paper_suite(const SuiteOptions& opt);

/// Byte comparison of the CSV files of two directories (same names, same
/// bytes, at least one file).
bool same_csv_bytes(const std::string& a, const std::string& b, std::string* detail = nullptr);

} // namespace qlab
