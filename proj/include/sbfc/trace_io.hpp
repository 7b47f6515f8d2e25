#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "sbfc/jaya.hpp"
#include "sbfc/metrics.hpp"
#include "sbfc/simulation.hpp"

namespace sbfc {

/// Column names in TraceRecord order. Per-joint columns are numbered from 1:
/// t, q_1..q_n, qd_*, x_d_*, xd_dot_*, e1_*, e2_*, T_c_*, S_T_*, epsilon_*, phi1_hat, phi2_hat, cost_window
[[nodiscard]] std::vector<std::string> trace_header(std::size_t dof);

// Header plus one line per record, 9 significant digits.
void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace);

// Numeric CSV held column-wise.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;

    [[nodiscard]] std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
    // Throws ValidationError naming the column when it is absent.
    [[nodiscard]] const std::vector<double>& column(const std::string& name) const;
};

// Throws ParseError (with the 1-based line) on ragged rows or non-numeric cells.
[[nodiscard]] CsvTable read_csv(std::istream& in);

/// Rebuilds the metric series from a trace table. Needs t, e1_*, e2_* and S_T_* columns
/// for `dof` joints; the dof is inferred from the q_* columns when zero.
[[nodiscard]] RunSeries series_from_trace(const CsvTable& table, std::size_t dof = 0);

// Flat key=value lines; absent optionals are written as "none".
void write_metrics(std::ostream& out, const RunMetrics& metrics);
[[nodiscard]] std::map<std::string, std::string> read_key_values(std::istream& in);

// iteration,best_cost,worst_cost,<gain names>
void write_cost_history(std::ostream& out, const std::vector<HistoryRow>& history,
                        const std::vector<std::string>& names);

// t_start,t_end,iteration,candidate,cost,accepted,best_cost,<gain names>
void write_gain_trace(std::ostream& out, const std::vector<GainSlot>& slots);

// 64-bit FNV-1a as 16 lowercase hex digits.
[[nodiscard]] std::string content_hash(const std::string& bytes);

} // namespace sbfc
