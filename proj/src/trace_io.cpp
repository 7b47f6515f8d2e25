#include "sbfc/trace_io.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "sbfc/errors.hpp"

namespace sbfc {

namespace {

const char* const kVectorFields[] = {"q", "qd", "x_d", "xd_dot", "e1", "e2", "T_c", "S_T", "epsilon"};

std::string number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

void put_vector(std::ostream& out, const Vector& v)
{
    for (Eigen::Index i = 0; i < v.size(); ++i)
        out << ',' << number(v[i]);
}

std::string optional_number(const std::optional<double>& v)
{
    return v ? number(*v) : "none";
}

std::vector<std::string> split(const std::string& line, char sep)
{
    std::vector<std::string> out;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, sep))
        out.push_back(cell);
    if (!line.empty() && line.back() == sep)
        out.emplace_back();
    return out;
}

} // namespace

std::vector<std::string> trace_header(std::size_t dof)
{
    std::vector<std::string> h{"t"};
    for (const char* field : kVectorFields)
        for (std::size_t i = 1; i <= dof; ++i)
            h.push_back(std::string(field) + "_" + std::to_string(i));
    h.insert(h.end(), {"phi1_hat", "phi2_hat", "cost_window"});
    return h;
}

void write_trace_csv(std::ostream& out, const std::vector<TraceRecord>& trace)
{
    const std::size_t n = trace.empty() ? 0 : static_cast<std::size_t>(trace.front().q.size());
    const auto header = trace_header(n);
    for (std::size_t i = 0; i < header.size(); ++i)
        out << (i ? "," : "") << header[i];
    out << '\n';
    for (const TraceRecord& r : trace) {
        out << number(r.t);
        for (const Vector* v : {&r.q, &r.qd, &r.x_d, &r.xd_dot, &r.e1, &r.e2, &r.t_c, &r.s_t, &r.epsilon})
            put_vector(out, *v);
        out << ',' << number(r.phi1_hat) << ',' << number(r.phi2_hat) << ',' << number(r.cost_window) << '\n';
    }
}

const std::vector<double>& CsvTable::column(const std::string& name) const
{
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name)
            return columns[i];
    throw ValidationError("missing column '" + name + "'");
}

CsvTable read_csv(std::istream& in)
{
    CsvTable table;
    std::string line;
    if (!std::getline(in, line) || line.empty())
        throw ParseError("", 1, "missing CSV header");
    if (line.back() == '\r')
        line.pop_back();
    table.header = split(line, ',');
    table.columns.resize(table.header.size());
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty())
            continue;
        const auto cells = split(line, ',');
        if (cells.size() != table.header.size())
            throw ParseError("", line_no,
                             "expected " + std::to_string(table.header.size()) + " cells, found " +
                                 std::to_string(cells.size()));
        for (std::size_t i = 0; i < cells.size(); ++i) {
            char* end = nullptr;
            const double v = std::strtod(cells[i].c_str(), &end);
            if (cells[i].empty() || end != cells[i].c_str() + cells[i].size())
                throw ParseError(table.header[i], line_no, "not a number: '" + cells[i] + "'");
            table.columns[i].push_back(v);
        }
    }
    return table;
}

RunSeries series_from_trace(const CsvTable& table, std::size_t dof)
{
    if (dof == 0)
        while (std::find(table.header.begin(), table.header.end(), "q_" + std::to_string(dof + 1)) != table.header.end())
            ++dof;
    if (dof == 0)
        throw ValidationError("missing column 'q_1'");
    const auto& t = table.column("t");
    std::vector<const std::vector<double>*> e1, e2, st;
    for (std::size_t i = 1; i <= dof; ++i) {
        const std::string idx = std::to_string(i);
        e1.push_back(&table.column("e1_" + idx));
        e2.push_back(&table.column("e2_" + idx));
        st.push_back(&table.column("S_T_" + idx));
    }
    RunSeries s;
    for (std::size_t k = 0; k < t.size(); ++k) {
        double e1_inf = 0.0, sq = 0.0, torque = 0.0;
        for (std::size_t i = 0; i < dof; ++i) {
            const double a = (*e1[i])[k];
            const double b = (*e2[i])[k];
            e1_inf = std::max(e1_inf, std::abs(a));
            sq += a * a + b * b;
            torque = std::max(torque, std::abs((*st[i])[k]));
        }
        s.t.push_back(t[k]);
        s.e1_inf.push_back(e1_inf);
        s.e_norm.push_back(std::sqrt(sq));
        s.ebar.push_back(std::sqrt(sq));
        s.torque_inf.push_back(torque);
    }
    return s;
}

void write_metrics(std::ostream& out, const RunMetrics& m)
{
    out << "steady_tracking_error=" << number(m.steady_tracking_error) << '\n'
        << "converged=" << (m.converged() ? "true" : "false") << '\n'
        << "convergence_time=" << optional_number(m.convergence_time) << '\n'
        << "convergence_band=" << number(m.convergence_band) << '\n'
        << "max_torque=" << number(m.max_torque) << '\n'
        << "envelope_valid=" << (m.envelope.valid ? "true" : "false") << '\n'
        << "envelope_alpha=" << number(m.envelope.alpha) << '\n'
        << "envelope_beta=" << number(m.envelope.beta) << '\n'
        << "envelope_mu=" << number(m.envelope.mu) << '\n'
        << "floor_clamps=" << m.floor_clamps << '\n'
        << "regime_count=" << m.regimes.size() << '\n';
    for (std::size_t i = 0; i < m.regimes.size(); ++i) {
        const RegimeMetrics& r = m.regimes[i];
        const std::string p = "regime_" + std::to_string(i) + "_";
        out << p << "start=" << number(r.start) << '\n'
            << p << "end=" << number(r.end) << '\n'
            << p << "steady_error=" << number(r.steady_error) << '\n'
            << p << "peak_error=" << number(r.peak_error) << '\n'
            << p << "convergence_time=" << optional_number(r.convergence_time) << '\n';
    }
}

std::map<std::string, std::string> read_key_values(std::istream& in)
{
    std::map<std::string, std::string> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw ParseError("", line_no, "expected key=value");
        out[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return out;
}

void write_cost_history(std::ostream& out, const std::vector<HistoryRow>& history,
                        const std::vector<std::string>& names)
{
    out << "iteration,best_cost,worst_cost";
    for (const auto& n : names)
        out << ',' << n;
    out << '\n';
    for (const HistoryRow& row : history) {
        out << row.iteration << ',' << number(row.best_cost) << ',' << number(row.worst_cost);
        for (double v : row.best)
            out << ',' << number(v);
        out << '\n';
    }
}

void write_gain_trace(std::ostream& out, const std::vector<GainSlot>& slots)
{
    out << "t_start,t_end,iteration,candidate,cost,accepted,best_cost";
    for (auto name : ControllerGains::kNames)
        out << ',' << name;
    out << '\n';
    for (const GainSlot& s : slots) {
        out << number(s.t_start) << ',' << number(s.t_end) << ',' << s.iteration << ',' << s.candidate << ','
            << number(s.cost) << ',' << (s.accepted ? 1 : 0) << ',' << number(s.best_cost);
        for (double v : s.gains.to_array())
            out << ',' << number(v);
        out << '\n';
    }
}

std::string content_hash(const std::string& bytes)
{
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
    return buf;
}

} // namespace sbfc
