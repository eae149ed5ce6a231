#include "spoofguard/errors.hpp"
#include "spoofguard/sim.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

namespace spoofguard {

namespace {

std::string fmt9(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

void add_block(std::vector<std::string>& cols, const std::string& prefix, Index count) {
  for (Index i = 0; i < count; ++i) cols.push_back(prefix + "_" + std::to_string(i));
}

std::vector<std::string> trace_columns(const ScenarioTrace& t) {
  std::vector<std::string> c{"k"};
  add_block(c, "x", t.n);
  add_block(c, "xhat1", t.n);
  add_block(c, "xhat2", t.n);
  add_block(c, "yG", t.m_G);
  add_block(c, "yI", t.m_I);
  add_block(c, "yS", t.m_S);
  add_block(c, "dhat", t.m_G);
  c.insert(c.end(), {"S", "threshold", "mode"});
  add_block(c, "u", t.m_u);
  c.push_back("in_range");
  add_block(c, "atttrue", t.n_pos);
  add_block(c, "att", t.n_pos);
  c.push_back("att_eta");
  add_block(c, "attvar", t.n_pos);
  c.push_back("attvar_eta");
  c.insert(c.end(), {"trP1", "trP2", "solver_iter", "solver_grad", "solver_viol", "solver_feasible"});
  return c;
}

void put(std::string& line, const Vec& v, Index expected) {
  for (Index i = 0; i < expected; ++i) {
    line += ',';
    line += i < v.size() ? fmt9(v(i)) : "nan";
  }
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::filesystem::path& path, std::size_t line) {
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size())
    throw IoError(path.string() + ":" + std::to_string(line) + ": bad number '" + s + "'");
  return v;
}

Index count_prefix(const std::vector<std::string>& cols, const std::string& prefix) {
  Index n = 0;
  while (std::find(cols.begin(), cols.end(), prefix + "_" + std::to_string(n)) != cols.end()) ++n;
  return n;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string trace_header(const ScenarioTrace& trace) {
  std::string h;
  for (const auto& c : trace_columns(trace)) {
    if (!h.empty()) h += ',';
    h += c;
  }
  return h;
}

std::filesystem::path events_path_for(const std::filesystem::path& trace_path) {
  auto p = trace_path;
  return p.replace_filename(trace_path.stem().string() + ".events.csv");
}

void export_trace(const ScenarioTrace& trace, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << trace_header(trace) << '\n';
  std::string line;
  for (const auto& r : trace.records) {
    line = std::to_string(r.k);
    put(line, r.x, trace.n);
    put(line, r.x_hat1, trace.n);
    put(line, r.x_hat2, trace.n);
    put(line, r.y_G, trace.m_G);
    put(line, r.y_I, trace.m_I);
    put(line, r.y_S, trace.m_S);
    put(line, r.d_hat, trace.m_G);
    line += ',' + fmt9(r.S) + ',' + fmt9(r.threshold) + ',' +
            (r.mode == ControlMode::Emergency ? "1" : "0");
    put(line, r.u, trace.m_u);
    line += r.in_range ? ",1" : ",0";
    put(line, r.attacker_true, trace.n_pos);
    put(line, r.attacker_hat, trace.n_pos + 1);
    put(line, r.attacker_var, trace.n_pos + 1);
    line += ',' + fmt9(r.trace_P1) + ',' + fmt9(r.trace_P2) + ',' + std::to_string(r.solver_iterations) +
            ',' + fmt9(r.solver_grad) + ',' + fmt9(r.solver_violation) + ',' +
            std::to_string(r.solver_feasible);
    out << line << '\n';
  }
  finish(out, path);

  const auto ev_path = events_path_for(path);
  auto ev = open_out(ev_path);
  ev << "event,k,value\n";
  for (const auto& e : trace.events) ev << e.name << ',' << e.k << ',' << fmt9(e.value) << '\n';
  if (!trace.error.empty()) ev << "error," << (trace.records.empty() ? 0 : trace.records.back().k) << ",nan\n";
  finish(ev, ev_path);
}

ScenarioTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open trace " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError(path.string() + ": missing header");
  const auto cols = split(line);

  ScenarioTrace t;
  t.n = count_prefix(cols, "x");
  t.m_G = count_prefix(cols, "yG");
  t.m_I = count_prefix(cols, "yI");
  t.m_S = count_prefix(cols, "yS");
  t.m_u = count_prefix(cols, "u");
  t.n_pos = count_prefix(cols, "atttrue");
  if (trace_header(t) != line) throw IoError(path.string() + ": header does not match the trace schema");

  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != cols.size())
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected " +
                    std::to_string(cols.size()) + " fields");
    std::size_t pos = 0;
    auto next = [&] { return parse_double(cells[pos++], path, lineno); };
    auto vec = [&](Index count) {
      Vec v(count);
      for (Index i = 0; i < count; ++i) v(i) = next();
      return v;
    };
    StepRecord r;
    r.k = static_cast<long>(next());
    r.x = vec(t.n);
    r.x_hat1 = vec(t.n);
    r.x_hat2 = vec(t.n);
    r.y_G = vec(t.m_G);
    r.y_I = vec(t.m_I);
    r.y_S = vec(t.m_S);
    r.d_hat = vec(t.m_G);
    r.S = next();
    r.threshold = next();
    r.mode = next() != 0.0 ? ControlMode::Emergency : ControlMode::Robust;
    r.u = vec(t.m_u);
    r.in_range = next() != 0.0;
    r.attacker_true = vec(t.n_pos);
    r.attacker_hat = vec(t.n_pos + 1);
    r.attacker_var = vec(t.n_pos + 1);
    r.trace_P1 = next();
    r.trace_P2 = next();
    r.solver_iterations = static_cast<int>(next());
    r.solver_grad = next();
    r.solver_violation = next();
    r.solver_feasible = static_cast<int>(next());
    t.records.push_back(std::move(r));
  }

  const auto ev_path = events_path_for(path);
  std::ifstream ev(ev_path, std::ios::binary);
  if (ev) {
    std::getline(ev, line);
    lineno = 1;
    while (std::getline(ev, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto cells = split(line);
      if (cells.size() != 3) throw IoError(ev_path.string() + ":" + std::to_string(lineno) + ": expected 3 fields");
      if (cells[0] == "error") {
        t.error = "aborted";
        continue;
      }
      t.events.push_back(Event{cells[0], static_cast<long>(parse_double(cells[1], ev_path, lineno)),
                               parse_double(cells[2], ev_path, lineno)});
    }
  }
  return t;
}

void export_batch_summary(const BatchSummary& s, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());

  const auto runs_path = dir / "runs.csv";
  auto runs = open_out(runs_path);
  runs << "seed,steps,failed,range_entry,detection,detection_latency,k_esc,exit_step,"
          "exit_within_deadline,max_error_attack,error_within_zeta,alt_error,goal_reached,"
          "false_alarm_steps,clean_steps,velocity_violations,input_violations,error\n";
  for (const auto& r : s.runs) {
    std::string err = r.error;
    std::replace(err.begin(), err.end(), ',', ';');
    std::replace(err.begin(), err.end(), '\n', ' ');
    runs << r.seed << ',' << r.steps << ',' << int(r.failed) << ',' << r.range_entry << ','
         << r.detection << ',' << r.detection_latency << ',' << r.k_esc << ',' << r.exit_step << ','
         << int(r.exit_within_deadline) << ',' << fmt9(r.max_error_attack) << ','
         << int(r.error_within_zeta) << ',' << fmt9(r.alt_error) << ',' << int(r.goal_reached) << ','
         << r.false_alarm_steps << ',' << r.clean_steps << ',' << r.velocity_violations << ','
         << r.input_violations << ',' << err << '\n';
  }
  finish(runs, runs_path);

  const auto sum_path = dir / "summary.csv";
  auto sum = open_out(sum_path);
  sum << "metric,value\n";
  const std::pair<const char*, double> rows[] = {
      {"runs", static_cast<double>(s.runs.size())},
      {"failed_runs", static_cast<double>(s.failed_runs)},
      {"detection_rate", s.detection_rate},
      {"mean_detection_latency", s.mean_detection_latency},
      {"escape_success_rate", s.escape_success_rate},
      {"error_within_zeta_rate", s.error_within_zeta_rate},
      {"goal_rate", s.goal_rate},
      {"false_alarm_rate", s.false_alarm_rate},
      {"p50_max_error", s.p50_max_error},
      {"p90_max_error", s.p90_max_error},
  };
  for (const auto& [name, value] : rows) sum << name << ',' << fmt9(value) << '\n';
  finish(sum, sum_path);
}

}  // namespace spoofguard
