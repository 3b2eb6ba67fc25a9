#pragma once

// Result files: trajectory and diagnostics tables, policy (solution) files and
// key-value reports. Every file starts with "# schema <name>/<version>".

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "config.hpp"

namespace qpmp::cli {

inline std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// Ordered key = value document.
class Report {
 public:
  explicit Report(std::string schema) : schema_(std::move(schema)) {}

  void add(const std::string& key, const std::string& value) { rows_.emplace_back(key, value); }
  void add(const std::string& key, const char* value) { rows_.emplace_back(key, value); }
  void add(const std::string& key, double value) { rows_.emplace_back(key, num(value)); }
  void add(const std::string& key, int value) { rows_.emplace_back(key, std::to_string(value)); }
  void add(const std::string& key, long long value) { rows_.emplace_back(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { rows_.emplace_back(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { rows_.emplace_back(key, value ? "true" : "false"); }

  std::string str() const {
    std::string out = "# schema " + schema_ + "\n";
    for (const auto& [k, v] : rows_) {
      std::string clean = v;
      std::replace(clean.begin(), clean.end(), '\n', ' ');
      out += k + " = " + clean + "\n";
    }
    return out;
  }

  void write(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorCode::Format, "cannot write " + path);
    f << str();
  }

 private:
  std::string schema_;
  std::vector<std::pair<std::string, std::string>> rows_;
};

inline std::string arc_labels_at(const ArcSegmentation& seg, int interval) {
  std::string s;
  for (std::size_t k = 0; k < seg.labels.size(); ++k) {
    if (k) s += '|';
    s += to_string(seg.labels[k][static_cast<std::size_t>(interval)]);
  }
  return s;
}

/// Columns t, u_1..u_K, K, K_u1..K_uK, arc_label, rho_1..rho_{N^2}; one row per
/// node, with the controls of the interval that starts there (the last node
/// repeats the last interval).
inline void write_trajectory_csv(const std::string& path, const ExtremalSolution& sol, const ArcSegmentation& seg) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Format, "cannot write " + path);
  const int K = sol.policy.channels(), M = sol.policy.intervals();
  const auto n2 = sol.trajectory.states.front().size();
  f << "# schema qpmp-trajectory/1\n";
  f << "t";
  for (int k = 1; k <= K; ++k) f << ",u_" << k;
  f << ",K";
  for (int k = 1; k <= K; ++k) f << ",K_u" << k;
  f << ",arc_label";
  for (Eigen::Index i = 1; i <= n2; ++i) f << ",rho_" << i;
  f << "\n";
  const auto& d = sol.diagnostics;
  for (int m = 0; m <= M; ++m) {
    const int iv = std::min(m, M - 1);
    const auto row = static_cast<std::size_t>(m);
    f << num(sol.policy.node(m));
    for (int k = 0; k < K; ++k) f << ',' << num(sol.policy.value(k, iv));
    f << ',' << num(d.pontryagin[row]);
    for (int k = 0; k < K; ++k) f << ',' << num(d.switching_node[static_cast<std::size_t>(k)][row]);
    f << ',' << arc_labels_at(seg, iv);
    for (Eigen::Index i = 0; i < n2; ++i) f << ',' << num(sol.trajectory.states[row](i));
    f << "\n";
  }
}

/// Columns t, K, then per channel the interval-averaged switching function,
/// its time derivative and the drift/control terms of the second derivative,
/// then the degeneracy measure (closed models) and psi_1..psi_{N^2}.
inline void write_diagnostics_csv(const std::string& path, const ExtremalSolution& sol) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Format, "cannot write " + path);
  const int K = sol.policy.channels(), M = sol.policy.intervals();
  const auto n2 = sol.trajectory.costates.front().size();
  const auto& d = sol.diagnostics;
  f << "# schema qpmp-diagnostics/1\n";
  f << "t,K";
  for (int k = 1; k <= K; ++k) f << ",Kbar_u" << k << ",dK_u" << k << ",A_u" << k << ",B_u" << k;
  if (!d.degeneracy.empty()) f << ",degeneracy";
  for (Eigen::Index i = 1; i <= n2; ++i) f << ",psi_" << i;
  f << "\n";
  for (int m = 0; m <= M; ++m) {
    const auto row = static_cast<std::size_t>(m);
    f << num(sol.policy.node(m)) << ',' << num(d.pontryagin[row]);
    for (int k = 0; k < K; ++k) {
      const auto ks = static_cast<std::size_t>(k);
      f << ',' << num(d.switching[ks][row]) << ',' << num(d.switching_rate[ks][row]) << ',' << num(d.drift_term[ks][row]) << ','
        << num(d.control_term[ks][row]);
    }
    if (!d.degeneracy.empty()) f << ',' << num(d.degeneracy[row]);
    for (Eigen::Index i = 0; i < n2; ++i) f << ',' << num(sol.trajectory.costates[row](i));
    f << "\n";
  }
}

/// Solution file: the embedded config rebuilds the problem, the rows give the
/// piecewise-constant controls exactly.
inline void write_policy_file(const std::string& path, const RunConfig& cfg, const ControlPolicy& p, double horizon) {
  std::ofstream f(path, std::ios::binary);
  if (!f) fail(ErrorCode::Format, "cannot write " + path);
  json doc = cfg.doc;
  doc["problem"]["horizon"] = horizon;
  doc["problem"]["free_horizon"] = false;
  doc["problem"].erase("horizon_range");
  f << "# schema qpmp-policy/1\n";
  f << "# config " << doc.dump() << "\n";
  f << "# channels " << p.channels() << " intervals " << p.intervals() << "\n";
  f << "# bounds";
  for (const auto& b : p.bounds()) f << ' ' << num(b.lower) << ' ' << num(b.upper);
  f << "\n";
  f << "t_start,t_end";
  for (int k = 1; k <= p.channels(); ++k) f << ",u_" << k;
  f << "\n";
  for (int m = 0; m < p.intervals(); ++m) {
    f << num(p.node(m)) << ',' << num(p.node(m + 1));
    for (int k = 0; k < p.channels(); ++k) f << ',' << num(p.value(k, m));
    f << "\n";
  }
  f << "# end\n";
}

struct PolicyFile {
  RunConfig config;
  ControlPolicy policy;
};

namespace detail {

inline double parse_double(const std::string& s, std::size_t offset, const std::string& what) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) fail(ErrorCode::Format, "byte " + std::to_string(offset) + ": bad number '" + s + "' in " + what);
  return v;
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

}  // namespace detail

/// Parses a policy file; format problems raise ErrorCode::Format with the byte offset.
inline PolicyFile read_policy_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Format, "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  std::vector<std::pair<std::size_t, std::string>> lines;
  for (std::size_t pos = 0; pos < text.size();) {
    const auto nl = text.find('\n', pos);
    if (nl == std::string::npos) {
      lines.emplace_back(pos, text.substr(pos));
      break;
    }
    lines.emplace_back(pos, text.substr(pos, nl - pos));
    pos = nl + 1;
  }
  auto expect_prefix = [&](std::size_t i, const std::string& prefix) -> const std::string& {
    if (i >= lines.size()) fail(ErrorCode::Format, "byte " + std::to_string(text.size()) + ": file truncated (expected '" + prefix + "')");
    if (lines[i].second.rfind(prefix, 0) != 0)
      fail(ErrorCode::Format, "byte " + std::to_string(lines[i].first) + ": expected '" + prefix + "'");
    return lines[i].second;
  };
  if (expect_prefix(0, "# schema ") != "# schema qpmp-policy/1") fail(ErrorCode::Format, "byte 0: unsupported schema");
  const std::string cfg_text = expect_prefix(1, "# config ").substr(9);
  RunConfig cfg;
  try {
    cfg = parse_config_text(cfg_text, path + " (embedded config)");
  } catch (const ConfigError& e) {
    fail(ErrorCode::Format, "byte " + std::to_string(lines[1].first) + ": embedded config: " + e.what());
  }
  int channels = 0, intervals = 0;
  {
    const auto& l = expect_prefix(2, "# channels ");
    if (std::sscanf(l.c_str(), "# channels %d intervals %d", &channels, &intervals) != 2 || channels < 0 || intervals < 1)
      fail(ErrorCode::Format, "byte " + std::to_string(lines[2].first) + ": bad channel/interval line");
  }
  std::vector<ChannelBounds> bounds;
  {
    const auto parts = detail::split(expect_prefix(3, "# bounds").substr(8), ' ');
    std::vector<double> vals;
    for (const auto& p : parts)
      if (!p.empty()) vals.push_back(detail::parse_double(p, lines[3].first, "bounds"));
    if (vals.size() != static_cast<std::size_t>(2 * channels)) fail(ErrorCode::Format, "byte " + std::to_string(lines[3].first) + ": expected 2 bounds per channel");
    for (int k = 0; k < channels; ++k) bounds.push_back({vals[static_cast<std::size_t>(2 * k)], vals[static_cast<std::size_t>(2 * k + 1)]});
  }
  expect_prefix(4, "t_start,t_end");
  std::vector<double> nodes;
  RealMatrix values(channels, intervals);
  for (int m = 0; m < intervals; ++m) {
    const std::size_t li = 5 + static_cast<std::size_t>(m);
    if (li >= lines.size() || lines[li].second.rfind('#', 0) == 0)
      fail(ErrorCode::Format, "byte " + std::to_string(li < lines.size() ? lines[li].first : text.size()) + ": file truncated after " +
                                  std::to_string(m) + " of " + std::to_string(intervals) + " intervals");
    const auto cells = detail::split(lines[li].second, ',');
    if (cells.size() != static_cast<std::size_t>(2 + channels))
      fail(ErrorCode::Format, "byte " + std::to_string(lines[li].first) + ": expected " + std::to_string(2 + channels) + " columns");
    const double t0 = detail::parse_double(cells[0], lines[li].first, "t_start");
    const double t1 = detail::parse_double(cells[1], lines[li].first, "t_end");
    if (m == 0) nodes.push_back(t0);
    if (t0 != nodes.back()) fail(ErrorCode::Format, "byte " + std::to_string(lines[li].first) + ": intervals are not contiguous");
    nodes.push_back(t1);
    for (int k = 0; k < channels; ++k) values(k, m) = detail::parse_double(cells[static_cast<std::size_t>(2 + k)], lines[li].first, "control value");
  }
  const std::size_t end_line = 5 + static_cast<std::size_t>(intervals);
  if (end_line >= lines.size() || lines[end_line].second != "# end")
    fail(ErrorCode::Format, "byte " + std::to_string(end_line < lines.size() ? lines[end_line].first : text.size()) + ": file truncated (missing '# end')");
  try {
    return {std::move(cfg), ControlPolicy(std::move(nodes), std::move(values), std::move(bounds))};
  } catch (const Error& e) {
    fail(ErrorCode::Format, std::string("policy rows: ") + e.what());
  }
}

}  // namespace qpmp::cli
