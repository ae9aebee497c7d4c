#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cvarlearn/analysis.hpp"
#include "cvarlearn/trace.hpp"

namespace cvarlearn {

/// Shortest decimal string that parses back to the same double ('.' separator).
std::string format_real(double value);

/// Trace CSV header: t, x<i> (x<i>_<k> for vector blocks), sq_error, nu<i>, nu_star<i>.
/// Optional columns appear only when the trace carries them.
std::string trace_header(const RunTrace& trace);
void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path);

/// Reads back the per-episode records written by write_trace_csv. Run metadata
/// (game, algorithm, alphas, eta, seed) is not stored in the CSV and is left
/// for the caller to fill.
RunTrace read_trace_csv(const std::filesystem::path& path);

/// Long format: algorithm,t,mean_sq_error,std_sq_error,mean_time_avg_error,std_time_avg_error
void write_aggregate_csv(std::span<const AggregateTrace> sq_error, std::span<const AggregateTrace> time_avg,
                         const std::filesystem::path& path);

/// bound,subject,empirical,theoretical,pass
void write_bound_report_csv(std::span<const BoundReport> reports, const std::filesystem::path& path);

/// Self-contained SVG: episodes on x, log-scaled error on y, one labeled mean
/// line per series with a translucent +-1 std band, and a legend.
/// Throws DomainError on empty input.
void emit_plot(std::span<const AggregateTrace> aggregates, const std::filesystem::path& path,
               const std::string& title = "Error to the Nash equilibrium");
std::string render_plot_svg(std::span<const AggregateTrace> aggregates, const std::string& title);

}  // namespace cvarlearn
