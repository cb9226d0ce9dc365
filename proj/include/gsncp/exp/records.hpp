#pragma once

#include "gsncp/core/types.hpp"

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace gsncp {

/// One row of measurements.csv: (epoch, sensor_index, x, y, z).
struct MeasurementRecord {
    int epoch = 1;
    std::size_t sensor_index = 0;
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
};

/// One row of associations.csv: (epoch, sensor_index, point_index, target_id),
/// target_id = -1 for clutter. point_index counts within the scan.
struct AssociationRecord {
    int epoch = 1;
    std::size_t sensor_index = 0;
    std::size_t point_index = 0;
    int target_id = -1;
};

/// One row of truth.csv: (epoch, target_id, cx, cy, cz, e1..e6).
struct TruthRecord {
    int epoch = 1;
    std::size_t target_id = 0;
    TargetState state;
};

/// One row of estimates_<method>.csv: (epoch, method, target_id, cx, cy, cz, e1..e6).
struct EstimateRecord {
    int epoch = 1;
    std::string method;
    std::size_t target_id = 0;
    TargetState state;
};

/// One row of diagnostics_mcmc.csv:
/// (epoch, iteration, log_posterior, L, lambda, lambda_c, accept_kind).
struct DiagnosticRecord {
    int epoch = 1;
    std::size_t iteration = 0;
    double log_posterior = 0.0;
    std::size_t targets = 0;
    double lambda = 0.0;
    double lambda_c = 0.0;
    std::string accept_kind;
};

/// One row of ospa.csv: (replication, epoch, method, ospa).
struct OspaRecord {
    std::size_t replication = 0;
    int epoch = 1;
    std::string method;
    double ospa = 0.0;
};

/// Shortest decimal form that parses back to the same double.
std::string format_double(double value);

void write_measurements(const std::filesystem::path& path, const std::vector<MeasurementRecord>& rows);
std::vector<MeasurementRecord> read_measurements(const std::filesystem::path& path);

void write_associations(const std::filesystem::path& path, const std::vector<AssociationRecord>& rows);
std::vector<AssociationRecord> read_associations(const std::filesystem::path& path);

void write_truth(const std::filesystem::path& path, const std::vector<TruthRecord>& rows);
std::vector<TruthRecord> read_truth(const std::filesystem::path& path);

void write_estimates(const std::filesystem::path& path, const std::vector<EstimateRecord>& rows);
std::vector<EstimateRecord> read_estimates(const std::filesystem::path& path);

void write_diagnostics(const std::filesystem::path& path, const std::vector<DiagnosticRecord>& rows);
std::vector<DiagnosticRecord> read_diagnostics(const std::filesystem::path& path);

void write_ospa(const std::filesystem::path& path, const std::vector<OspaRecord>& rows);
std::vector<OspaRecord> read_ospa(const std::filesystem::path& path);

/// Groups target states by epoch.
std::map<int, std::vector<TargetState>> by_epoch(const std::vector<TruthRecord>& rows);
std::map<int, std::vector<TargetState>> by_epoch(const std::vector<EstimateRecord>& rows);

/// Reads a delimited table with a header row; throws on malformed input.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header);

}  // namespace gsncp
