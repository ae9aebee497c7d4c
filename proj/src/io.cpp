#include "cvarlearn/io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "cvarlearn/errors.hpp"

namespace cvarlearn {

namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_real(const std::string& text, const std::filesystem::path& path) {
  double v = 0.0;
  auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || p != text.data() + text.size()) {
    throw std::runtime_error(path.string() + ": malformed number '" + text + "'");
  }
  return v;
}

std::string fixed(double v) {
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "%.2f", v);
  return buf.data();
}

}  // namespace

std::string format_real(double value) {
  std::array<char, 64> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), p);
}

std::string trace_header(const RunTrace& trace) {
  std::string h = "t";
  if (trace.records.empty()) return h;
  const auto& first = trace.records.front();
  for (std::size_t i = 0; i < first.x.num_agents(); ++i) {
    const auto& block = first.x.blocks[i];
    if (block.size() == 1) {
      h += ",x" + std::to_string(i + 1);
    } else {
      for (std::size_t k = 0; k < block.size(); ++k) h += ",x" + std::to_string(i + 1) + "_" + std::to_string(k + 1);
    }
  }
  if (trace.has_error()) h += ",sq_error";
  for (std::size_t i = 0; i < first.var_estimate.size(); ++i) h += ",nu" + std::to_string(i + 1);
  for (std::size_t i = 0; i < first.true_var.size(); ++i) h += ",nu_star" + std::to_string(i + 1);
  return h;
}

void write_trace_csv(const RunTrace& trace, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << trace_header(trace) << '\n';
  for (const auto& r : trace.records) {
    out << r.t;
    for (const auto& block : r.x.blocks) {
      for (double v : block) out << ',' << format_real(v);
    }
    if (r.sq_error) out << ',' << format_real(*r.sq_error);
    for (double v : r.var_estimate) out << ',' << format_real(v);
    for (double v : r.true_var) out << ',' << format_real(v);
    out << '\n';
  }
}

RunTrace read_trace_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path.string() + ": missing header");
  const auto header = split_csv_line(line);
  if (header.empty() || header[0] != "t") throw std::runtime_error(path.string() + ": header must start with t");

  // Column roles from the header.
  enum class Role { action, sq_error, nu, nu_star };
  struct Column {
    Role role;
    std::size_t agent;
  };
  std::vector<Column> columns;
  std::size_t agents = 0;
  std::vector<std::size_t> block_dims;
  for (std::size_t c = 1; c < header.size(); ++c) {
    const auto& name = header[c];
    if (name == "sq_error") {
      columns.push_back({Role::sq_error, 0});
    } else if (name.rfind("nu_star", 0) == 0) {
      columns.push_back({Role::nu_star, std::stoul(name.substr(7)) - 1});
    } else if (name.rfind("nu", 0) == 0) {
      columns.push_back({Role::nu, std::stoul(name.substr(2)) - 1});
    } else if (name.rfind("x", 0) == 0) {
      const std::size_t agent = std::stoul(name.substr(1)) - 1;
      if (agent >= block_dims.size()) block_dims.resize(agent + 1, 0);
      ++block_dims[agent];
      agents = std::max(agents, agent + 1);
      columns.push_back({Role::action, agent});
    } else {
      throw std::runtime_error(path.string() + ": unknown column '" + name + "'");
    }
  }

  RunTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw std::runtime_error(path.string() + ": ragged row");
    EpisodeRecord r;
    r.t = std::stoul(cells[0]);
    r.x.blocks.resize(agents);
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const double v = parse_real(cells[c], path);
      const auto& col = columns[c - 1];
      switch (col.role) {
        case Role::action: r.x.blocks[col.agent].push_back(v); break;
        case Role::sq_error: r.sq_error = v; break;
        case Role::nu: r.var_estimate.push_back(v); break;
        case Role::nu_star: r.true_var.push_back(v); break;
      }
    }
    trace.records.push_back(std::move(r));
  }
  return trace;
}

void write_aggregate_csv(std::span<const AggregateTrace> sq_error, std::span<const AggregateTrace> time_avg,
                         const std::filesystem::path& path) {
  if (sq_error.size() != time_avg.size()) throw DomainError("write_aggregate_csv: series lists differ in length");
  auto out = open_output(path);
  out << "algorithm,t,mean_sq_error,std_sq_error,mean_time_avg_error,std_time_avg_error\n";
  for (std::size_t a = 0; a < sq_error.size(); ++a) {
    const auto& e = sq_error[a];
    const auto& avg = time_avg[a];
    for (std::size_t t = 0; t < e.mean.size(); ++t) {
      out << e.label << ',' << (t + 1) << ',' << format_real(e.mean[t]) << ',' << format_real(e.stddev[t]) << ','
          << format_real(avg.mean[t]) << ',' << format_real(avg.stddev[t]) << '\n';
    }
  }
}

void write_bound_report_csv(std::span<const BoundReport> reports, const std::filesystem::path& path) {
  auto out = open_output(path);
  out << "bound,subject,empirical,theoretical,pass\n";
  for (const auto& r : reports) {
    out << r.name << ',' << r.subject << ',' << format_real(r.empirical) << ',' << format_real(r.theoretical) << ','
        << (r.pass ? "true" : "false") << '\n';
  }
}

std::string render_plot_svg(std::span<const AggregateTrace> aggregates, const std::string& title) {
  if (aggregates.empty()) throw DomainError("emit_plot: no series");
  std::size_t episodes = 0;
  for (const auto& a : aggregates) {
    if (a.mean.empty() || a.mean.size() != a.stddev.size()) throw DomainError("emit_plot: empty or ragged series");
    episodes = std::max(episodes, a.mean.size());
  }

  // y range over means and upper bands; lower bands are clipped to it.
  double y_min = std::numeric_limits<double>::infinity();
  double y_max = 0.0;
  for (const auto& a : aggregates) {
    for (std::size_t t = 0; t < a.mean.size(); ++t) {
      if (a.mean[t] > 0.0) y_min = std::min(y_min, a.mean[t]);
      y_max = std::max(y_max, a.mean[t] + a.stddev[t]);
    }
  }
  if (!std::isfinite(y_min) || y_max <= 0.0) {
    y_min = 1e-6;
    y_max = 1.0;
  }
  double lo_dec = std::floor(std::log10(y_min));
  double hi_dec = std::ceil(std::log10(y_max));
  if (hi_dec <= lo_dec) hi_dec = lo_dec + 1.0;
  const double floor_value = std::pow(10.0, lo_dec);

  constexpr double width = 720, height = 440, left = 80, right = 190, top = 40, bottom = 60;
  const double plot_w = width - left - right;
  const double plot_h = height - top - bottom;
  const double x_den = episodes > 1 ? static_cast<double>(episodes - 1) : 1.0;
  auto px = [&](std::size_t t) { return left + plot_w * static_cast<double>(t) / x_den; };
  auto py = [&](double v) {
    const double lv = std::log10(std::max(v, floor_value));
    return top + plot_h * (hi_dec - lv) / (hi_dec - lo_dec);
  };

  // At most ~500 vertices per path.
  auto stride_for = [](std::size_t n) { return std::max<std::size_t>(1, n / 500); };
  auto indices = [&](std::size_t n) {
    std::vector<std::size_t> idx;
    for (std::size_t t = 0; t < n; t += stride_for(n)) idx.push_back(t);
    if (idx.back() != n - 1) idx.push_back(n - 1);
    return idx;
  };

  static constexpr std::array<const char*, 6> colors{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
      << "font-size=\"16\">" << title << "</text>\n";

  // Axes, decade grid and labels.
  svg << "<g font-family=\"sans-serif\" font-size=\"11\">\n";
  for (double dec = lo_dec; dec <= hi_dec; dec += 1.0) {
    const double y = top + plot_h * (hi_dec - dec) / (hi_dec - lo_dec);
    svg << "<line x1=\"" << fixed(left) << "\" y1=\"" << fixed(y) << "\" x2=\"" << fixed(left + plot_w) << "\" y2=\""
        << fixed(y) << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fixed(left - 6) << "\" y=\"" << fixed(y + 4) << "\" text-anchor=\"end\">1e"
        << static_cast<int>(dec) << "</text>\n";
  }
  for (int k = 0; k <= 5; ++k) {
    const auto t = static_cast<std::size_t>(std::llround(x_den * k / 5.0));
    svg << "<text x=\"" << fixed(px(t)) << "\" y=\"" << fixed(top + plot_h + 18) << "\" text-anchor=\"middle\">"
        << (t + 1) << "</text>\n";
  }
  svg << "<rect x=\"" << fixed(left) << "\" y=\"" << fixed(top) << "\" width=\"" << fixed(plot_w) << "\" height=\""
      << fixed(plot_h) << "\" fill=\"none\" stroke=\"black\"/>\n";
  svg << "<text x=\"" << fixed(left + plot_w / 2) << "\" y=\"" << fixed(height - 16)
      << "\" text-anchor=\"middle\">episode t</text>\n";
  svg << "<text transform=\"translate(20 " << fixed(top + plot_h / 2)
      << ") rotate(-90)\" text-anchor=\"middle\">squared error (log scale)</text>\n";
  svg << "</g>\n";

  for (std::size_t s = 0; s < aggregates.size(); ++s) {
    const auto& a = aggregates[s];
    const char* color = colors[s % colors.size()];
    const auto idx = indices(a.mean.size());

    svg << "<polygon class=\"band\" fill=\"" << color << "\" fill-opacity=\"0.2\" stroke=\"none\" points=\"";
    for (auto t : idx) svg << fixed(px(t)) << ',' << fixed(py(a.mean[t] + a.stddev[t])) << ' ';
    for (auto it = idx.rbegin(); it != idx.rend(); ++it) {
      svg << fixed(px(*it)) << ',' << fixed(py(a.mean[*it] - a.stddev[*it])) << ' ';
    }
    svg << "\"/>\n";

    svg << "<polyline class=\"mean\" fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (auto t : idx) svg << fixed(px(t)) << ',' << fixed(py(a.mean[t])) << ' ';
    svg << "\"/>\n";

    const double ly = top + 16 + 20 * static_cast<double>(s);
    svg << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\"><line x1=\"" << fixed(left + plot_w + 12)
        << "\" y1=\"" << fixed(ly) << "\" x2=\"" << fixed(left + plot_w + 36) << "\" y2=\"" << fixed(ly)
        << "\" stroke=\"" << color << "\" stroke-width=\"2\"/><text x=\"" << fixed(left + plot_w + 42) << "\" y=\""
        << fixed(ly + 4) << "\">" << a.label << "</text></g>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_plot(std::span<const AggregateTrace> aggregates, const std::filesystem::path& path,
               const std::string& title) {
  const auto svg = render_plot_svg(aggregates, title);
  auto out = open_output(path);
  out << svg;
}

}  // namespace cvarlearn
