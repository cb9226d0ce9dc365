#include "gsncp/exp/records.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace gsncp {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string where(const std::filesystem::path& path, std::size_t line) {
    return path.string() + ":" + std::to_string(line);
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error(where(path, line) + ": not a number: '" + s + "'");
    }
    return value;
}

template <typename Int>
Int parse_int(const std::string& s, const std::filesystem::path& path, std::size_t line) {
    Int value{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw std::runtime_error(where(path, line) + ": not an integer: '" + s + "'");
    }
    return value;
}

std::ofstream open_out(const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
    out.flush();
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

const std::vector<std::string> kStateColumns{"cx", "cy", "cz", "e1", "e2", "e3", "e4", "e5", "e6"};

std::vector<std::string> with_state(std::vector<std::string> head) {
    head.insert(head.end(), kStateColumns.begin(), kStateColumns.end());
    return head;
}

void write_header(std::ostream& out, const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << '\n';
}

void write_state(std::ostream& out, const TargetState& s) {
    for (int j = 0; j < 3; ++j) out << ',' << format_double(s.center(j));
    for (int j = 0; j < 6; ++j) out << ',' << format_double(s.extent.e(j));
}

TargetState parse_state(const std::vector<std::string>& row, std::size_t first, const std::filesystem::path& path,
                        std::size_t line) {
    TargetState s;
    for (int j = 0; j < 3; ++j) s.center(j) = parse_double(row[first + j], path, line);
    for (int j = 0; j < 6; ++j) s.extent.e(j) = parse_double(row[first + 3 + j], path, line);
    return s;
}

const std::vector<std::string> kMeasurementHeader{"epoch", "sensor_index", "x", "y", "z"};
const std::vector<std::string> kAssociationHeader{"epoch", "sensor_index", "point_index", "target_id"};
const std::vector<std::string> kTruthHeader = with_state({"epoch", "target_id"});
const std::vector<std::string> kEstimateHeader = with_state({"epoch", "method", "target_id"});
const std::vector<std::string> kDiagnosticHeader{"epoch",  "iteration", "log_posterior", "L",
                                                 "lambda", "lambda_c",  "accept_kind"};
const std::vector<std::string> kOspaHeader{"replication", "epoch", "method", "ospa"};

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    if (ec != std::errc{}) throw std::runtime_error("format_double: conversion failed");
    return {buf, ptr};
}

CsvTable read_csv(const std::filesystem::path& path, const std::vector<std::string>& expected_header) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": empty file");
    table.header = split_line(line);
    if (table.header != expected_header) throw std::runtime_error(path.string() + ": unexpected header '" + line + "'");
    std::size_t number = 1;
    while (std::getline(in, line)) {
        ++number;
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != expected_header.size()) {
            throw std::runtime_error(where(path, number) + ": expected " + std::to_string(expected_header.size()) +
                                     " columns, got " + std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
    }
    return table;
}

void write_measurements(const std::filesystem::path& path, const std::vector<MeasurementRecord>& rows) {
    auto out = open_out(path);
    write_header(out, kMeasurementHeader);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.sensor_index;
        for (int j = 0; j < 3; ++j) out << ',' << format_double(r.point(j));
        out << '\n';
    }
    finish(out, path);
}

std::vector<MeasurementRecord> read_measurements(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, kMeasurementHeader);
    std::vector<MeasurementRecord> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        MeasurementRecord r;
        r.epoch = parse_int<int>(c[0], path, i + 2);
        r.sensor_index = parse_int<std::size_t>(c[1], path, i + 2);
        for (int j = 0; j < 3; ++j) r.point(j) = parse_double(c[2 + j], path, i + 2);
        rows.push_back(r);
    }
    return rows;
}

void write_associations(const std::filesystem::path& path, const std::vector<AssociationRecord>& rows) {
    auto out = open_out(path);
    write_header(out, kAssociationHeader);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.sensor_index << ',' << r.point_index << ',' << r.target_id << '\n';
    }
    finish(out, path);
}

std::vector<AssociationRecord> read_associations(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, kAssociationHeader);
    std::vector<AssociationRecord> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        rows.push_back({parse_int<int>(c[0], path, i + 2), parse_int<std::size_t>(c[1], path, i + 2),
                        parse_int<std::size_t>(c[2], path, i + 2), parse_int<int>(c[3], path, i + 2)});
    }
    return rows;
}

void write_truth(const std::filesystem::path& path, const std::vector<TruthRecord>& rows) {
    auto out = open_out(path);
    write_header(out, kTruthHeader);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.target_id;
        write_state(out, r.state);
        out << '\n';
    }
    finish(out, path);
}

std::vector<TruthRecord> read_truth(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, kTruthHeader);
    std::vector<TruthRecord> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        rows.push_back({parse_int<int>(c[0], path, i + 2), parse_int<std::size_t>(c[1], path, i + 2),
                        parse_state(c, 2, path, i + 2)});
    }
    return rows;
}

void write_estimates(const std::filesystem::path& path, const std::vector<EstimateRecord>& rows) {
    auto out = open_out(path);
    write_header(out, kEstimateHeader);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.method << ',' << r.target_id;
        write_state(out, r.state);
        out << '\n';
    }
    finish(out, path);
}

std::vector<EstimateRecord> read_estimates(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, kEstimateHeader);
    std::vector<EstimateRecord> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        rows.push_back({parse_int<int>(c[0], path, i + 2), c[1], parse_int<std::size_t>(c[2], path, i + 2),
                        parse_state(c, 3, path, i + 2)});
    }
    return rows;
}

void write_diagnostics(const std::filesystem::path& path, const std::vector<DiagnosticRecord>& rows) {
    auto out = open_out(path);
    write_header(out, kDiagnosticHeader);
    for (const auto& r : rows) {
        out << r.epoch << ',' << r.iteration << ',' << format_double(r.log_posterior) << ',' << r.targets << ','
            << format_double(r.lambda) << ',' << format_double(r.lambda_c) << ',' << r.accept_kind << '\n';
    }
    finish(out, path);
}

std::vector<DiagnosticRecord> read_diagnostics(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, kDiagnosticHeader);
    std::vector<DiagnosticRecord> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        const std::size_t n = i + 2;
        rows.push_back({parse_int<int>(c[0], path, n), parse_int<std::size_t>(c[1], path, n),
                        parse_double(c[2], path, n), parse_int<std::size_t>(c[3], path, n),
                        parse_double(c[4], path, n), parse_double(c[5], path, n), c[6]});
    }
    return rows;
}

void write_ospa(const std::filesystem::path& path, const std::vector<OspaRecord>& rows) {
    auto out = open_out(path);
    write_header(out, kOspaHeader);
    for (const auto& r : rows) {
        out << r.replication << ',' << r.epoch << ',' << r.method << ',' << format_double(r.ospa) << '\n';
    }
    finish(out, path);
}

std::vector<OspaRecord> read_ospa(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path, kOspaHeader);
    std::vector<OspaRecord> rows;
    rows.reserve(t.rows.size());
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& c = t.rows[i];
        rows.push_back({parse_int<std::size_t>(c[0], path, i + 2), parse_int<int>(c[1], path, i + 2), c[2],
                        parse_double(c[3], path, i + 2)});
    }
    return rows;
}

std::map<int, std::vector<TargetState>> by_epoch(const std::vector<TruthRecord>& rows) {
    std::map<int, std::vector<TargetState>> out;
    for (const auto& r : rows) out[r.epoch].push_back(r.state);
    return out;
}

std::map<int, std::vector<TargetState>> by_epoch(const std::vector<EstimateRecord>& rows) {
    std::map<int, std::vector<TargetState>> out;
    for (const auto& r : rows) out[r.epoch].push_back(r.state);
    return out;
}

}  // namespace gsncp
