#pragma once

// Value-table artifact and CSV exports.
//
// Artifact layout (text, one record per line, numbers in shortest
// round-trip form):
//
//   capdeploy-value-table 1
//   moic_hurdle <x>
//   exit_years <x>
//   n_capital <N>
//   n_times <K+1>
//   capital <f_0> ... <f_{N-1}>
//   times <t_0> ... <t_K>
//   step_arrivals <dLambda_0> ... <dLambda_{K-1}>
//   values
//   <V[0][0]> ... <V[0][N-1]>
//   ...
//   <V[K][0]> ... <V[K][N-1]>

#include "capdeploy/error.hpp"
#include "capdeploy/format.hpp"
#include "capdeploy/solver.hpp"

#include <filesystem>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace capdeploy {

inline constexpr std::string_view kTableMagic = "capdeploy-value-table";
inline constexpr int kTableVersion = 1;

namespace detail {

inline void append_row(std::string& out, std::string_view label, std::span<const double> xs) {
    out += label;
    for (double x : xs) {
        if (!out.empty() && out.back() != '\n') out += ' ';
        out += format_double(x);
    }
    out += '\n';
}

class LineReader {
public:
    explicit LineReader(std::string_view text) : text_(text) {}

    std::string_view next() {
        if (pos_ >= text_.size()) throw MissingArtifact("value table truncated");
        const auto end = text_.find('\n', pos_);
        const auto line = text_.substr(pos_, end == std::string_view::npos ? std::string_view::npos : end - pos_);
        pos_ = end == std::string_view::npos ? text_.size() : end + 1;
        ++line_;
        return line;
    }

    /// Line "<label> <values...>" with exactly `count` numbers.
    std::vector<double> numbers(std::string_view label, std::size_t count) {
        auto line = next();
        if (!label.empty()) {
            if (line.substr(0, label.size()) != label)
                throw MissingArtifact("value table line " + std::to_string(line_) + ": expected '" +
                                      std::string(label) + "'");
            line.remove_prefix(label.size());
        }
        std::vector<double> xs;
        xs.reserve(count);
        for (auto tok : split(trim(line), ' ')) {
            if (tok.empty()) continue;
            const auto x = parse_double(tok);
            if (!x) throw MissingArtifact("value table line " + std::to_string(line_) + ": bad number");
            xs.push_back(*x);
        }
        if (xs.size() != count)
            throw MissingArtifact("value table line " + std::to_string(line_) + ": expected " +
                                  std::to_string(count) + " numbers");
        return xs;
    }

    double scalar(std::string_view label) { return numbers(label, 1).front(); }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 0;
};

}  // namespace detail

inline std::string serialize_table(const ValueTable& table) {
    std::string out;
    out += std::string(kTableMagic) + ' ' + std::to_string(kTableVersion) + '\n';
    out += "moic_hurdle " + format_double(table.moic_hurdle) + '\n';
    out += "exit_years " + format_double(table.exit_years) + '\n';
    out += "n_capital " + std::to_string(table.n_capital()) + '\n';
    out += "n_times " + std::to_string(table.n_times()) + '\n';
    detail::append_row(out, "capital", table.grid.points());
    detail::append_row(out, "times", table.time_grid.times);
    detail::append_row(out, "step_arrivals", table.time_grid.step_arrivals);
    out += "values\n";
    for (std::size_t k = 0; k < table.n_times(); ++k) detail::append_row(out, "", table.row(k));
    return out;
}

inline ValueTable parse_table(std::string_view text) {
    detail::LineReader in(text);
    const auto header = in.next();
    if (header != std::string(kTableMagic) + ' ' + std::to_string(kTableVersion))
        throw MissingArtifact("not a version " + std::to_string(kTableVersion) + " value table");
    ValueTable table;
    table.moic_hurdle = in.scalar("moic_hurdle");
    table.exit_years = in.scalar("exit_years");
    const double n_cap = in.scalar("n_capital");
    const double n_times = in.scalar("n_times");
    if (!(n_cap >= 2) || !(n_times >= 2)) throw MissingArtifact("value table has degenerate dimensions");
    const auto nc = static_cast<std::size_t>(n_cap);
    const auto nt = static_cast<std::size_t>(n_times);
    try {
        table.grid = CapitalGrid(in.numbers("capital", nc));
    } catch (const DomainError& e) {
        throw MissingArtifact(std::string("value table capital grid invalid: ") + e.what());
    }
    table.time_grid.times = in.numbers("times", nt);
    table.time_grid.step_arrivals = in.numbers("step_arrivals", nt - 1);
    if (in.next() != "values") throw MissingArtifact("value table: expected 'values'");
    table.values.reserve(nc * nt);
    for (std::size_t k = 0; k < nt; ++k) {
        const auto row = in.numbers("", nc);
        table.values.insert(table.values.end(), row.begin(), row.end());
    }
    return table;
}

inline void save_table(const ValueTable& table, const std::filesystem::path& path) {
    write_file_atomic(path, serialize_table(table));
}

inline ValueTable load_table(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw MissingArtifact("value table not found: " + path.string());
    return parse_table(read_file(path));
}

/// Columns t, f, V; one row per (time, capital) node.
inline std::string value_table_csv(const ValueTable& table) {
    std::string out = "t,f,V\n";
    for (std::size_t k = 0; k < table.n_times(); ++k)
        for (std::size_t i = 0; i < table.n_capital(); ++i)
            out += format_double(table.time_grid.times[k]) + ',' + format_double(table.grid[i]) + ',' +
                   format_double(table.at(k, i)) + '\n';
    return out;
}

/// Columns k, t_k, dt_k, dLambda_k.
inline std::string time_grid_csv(const TimeGrid& grid) {
    std::string out = "k,t_k,dt_k,dLambda_k\n";
    for (std::size_t k = 0; k < grid.steps(); ++k)
        out += std::to_string(k) + ',' + format_double(grid.times[k]) + ',' + format_double(grid.dt(k)) + ',' +
               format_double(grid.step_arrivals[k]) + '\n';
    return out;
}

}  // namespace capdeploy
