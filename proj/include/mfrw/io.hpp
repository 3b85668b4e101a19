#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfrw/cascade.hpp"
#include "mfrw/errors.hpp"
#include "mfrw/paths.hpp"
#include "mfrw/scaling.hpp"
#include "mfrw/variations.hpp"

namespace mfrw {

using json = nlohmann::json;

/// All reals are printed with 17 significant digits; round-trips doubles.
inline std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw io_error("write failed: " + path);
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open for reading: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------- measures

inline std::string measure_to_csv(const MeasureGrid& m) {
  std::ostringstream os;
  os << "cell_index,t_left,mass\n";
  const double dt = m.config.step();
  for (std::size_t j = 0; j < m.masses.size(); ++j)
    os << j << ',' << format_real(static_cast<double>(j) * dt) << ','
       << format_real(m.masses[j]) << '\n';
  return os.str();
}

// ------------------------------------------------------------------- paths

inline std::string path_to_csv(const PathSample& p, double domain_length = 1.0) {
  std::ostringstream os;
  os << "j,t,increment,cumulative\n";
  const std::size_t m = p.increments.size();
  const double dt = domain_length / static_cast<double>(m);
  for (std::size_t j = 1; j <= m; ++j)
    os << j << ',' << format_real(static_cast<double>(j) * dt) << ','
       << format_real(p.increments[j - 1]) << ',' << format_real(p.cumulative[j]) << '\n';
  return os.str();
}

inline json scaling_model_to_json(const ScalingModel& m) {
  return json{{"lambda2", m.lambda2}, {"drift", m.drift}};
}

inline json cascade_config_to_json(const CascadeConfig& c) {
  return json{{"T", c.T}, {"l", c.l}, {"domain_length", c.domain_length}, {"n_cells", c.n_cells}};
}

inline json condition_report_to_json(const ConditionReport& rep) {
  auto entry = [](const ConditionEntry& e) { return json{{"pass", e.pass}, {"margin", e.margin}}; };
  json j;
  j["a1"] = entry(rep.a1);
  j["a_q"] = entry(rep.a_q);
  j["a_2q"] = entry(rep.a_2q);
  j["h1"] = entry(rep.h1);
  j["h_half"] = entry(rep.h_half);
  j["lemma26"] = entry(rep.lemma26);
  j["a_p"] = entry(rep.a_p);
  j["h_range"] = entry(rep.h_range);
  j["conjectural_2pH_1_psi2p"] = rep.conjectural_margin;
  j["a1_epsilon_grid"] = ConditionReport::a1_grid;
  j["H"] = rep.H;
  j["p"] = rep.p;
  return j;
}

// ------------------------------------------------------- structure tables

inline std::string table_to_csv(const StructureFunctionTable& t) {
  std::ostringstream os;
  os << "level,tau,p,raw_mean,count\n";
  for (const auto& r : t.rows)
    os << r.level << ',' << format_real(r.tau) << ',' << format_real(r.p) << ','
       << format_real(r.raw_mean) << ',' << r.count << '\n';
  return os.str();
}

inline StructureFunctionTable table_from_csv(const std::string& text) {
  StructureFunctionTable t;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "level,tau,p,raw_mean,count")
        throw data_error("structure table: bad header at line 1");
      header_seen = true;
      continue;
    }
    StructureRow r;
    char comma = 0;
    std::istringstream ls(line);
    if (!(ls >> r.level >> comma >> r.tau >> comma >> r.p >> comma >> r.raw_mean >> comma >>
          r.count)) {
      std::ostringstream os;
      os << "structure table: malformed row at line " << lineno;
      throw data_error(os.str());
    }
    t.rows.push_back(r);
  }
  if (!header_seen) throw data_error("structure table: missing header");
  return t;
}

inline json zeta_to_json(const ZetaEstimate& z) {
  return json{{"p", z.p},         {"slope", z.slope},     {"intercept", z.intercept},
              {"ci_low", z.ci_low}, {"ci_high", z.ci_high}, {"levels", z.levels},
              {"method", z.method}};
}

// ----------------------------------------------------------- series input

/// Reads either a path CSV (columns j,t,increment,cumulative) or a
/// single-column increment series. Returns the increment sequence.
/// Throws data_error with a line number on malformed input.
inline std::vector<double> read_series_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  std::vector<double> increments;
  std::size_t lineno = 0;
  bool path_format = false;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line == "j,t,increment,cumulative") {
        path_format = true;
        continue;
      }
      if (line == "value" || line == "increment") continue;  // optional 1-col header
    }
    std::istringstream ls(line);
    if (path_format) {
      long j;
      double t, inc, cum;
      char c1, c2, c3;
      if (!(ls >> j >> c1 >> t >> c2 >> inc >> c3 >> cum) || c1 != ',' || c2 != ',' || c3 != ',') {
        std::ostringstream os;
        os << "series: malformed path row at line " << lineno;
        throw data_error(os.str());
      }
      increments.push_back(inc);
    } else {
      double v;
      if (!(ls >> v)) {
        std::ostringstream os;
        os << "series: malformed value at line " << lineno;
        throw data_error(os.str());
      }
      std::string rest;
      if (ls >> rest) {
        std::ostringstream os;
        os << "series: unexpected extra column at line " << lineno;
        throw data_error(os.str());
      }
      increments.push_back(v);
    }
  }
  if (increments.empty()) throw data_error("series: no data rows");
  return increments;
}

// ------------------------------------------------------------ run config

/// Flat key-path configuration: one `section.key = value` per line, `#`
/// comments. Unknown keys are hard errors so manifests stay exact.
struct RunConfig {
  double lambda2 = 0.1;
  double T = 1.0;
  double l = 0.0;  // 0 means grid step
  double domain_length = 1.0;
  std::size_t n_cells = 4096;
  double H = 0.7;
  std::size_t m_n = 512;
  std::size_t refine = 8;
  std::vector<double> p_list{2.0};
  std::vector<int> levels{2, 3, 4, 5, 6, 7, 8};
  int r_max = 8;
  std::uint64_t seed = 1;
  std::size_t replicas = 200;
  std::string output_dir = ".";

  ScalingModel model() const { return ScalingModel::log_normal(lambda2); }

  CascadeConfig cascade() const {
    CascadeConfig c;
    c.T = T;
    c.domain_length = domain_length;
    c.n_cells = n_cells;
    c.l = (l > 0.0) ? l : c.step();
    c.validate();
    return c;
  }

  json to_json() const {
    return json{{"model", {{"lambda2", lambda2}}},
                {"cascade",
                 {{"T", T}, {"l", l}, {"domain_length", domain_length}, {"n_cells", n_cells}}},
                {"process", {{"H", H}, {"m_n", m_n}, {"refine", refine}}},
                {"statistics", {{"p_list", p_list}, {"levels", levels}, {"r_max", r_max}}},
                {"run", {{"seed", seed}, {"replicas", replicas}, {"output_dir", output_dir}}}};
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  std::size_t e = s.find_last_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  std::istringstream is(v);
  T out;
  if (!(is >> out)) throw data_error("config: bad numeric value for " + key);
  std::string rest;
  if (is >> rest) throw data_error("config: trailing characters in value for " + key);
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& v, const std::string& key) {
  std::vector<T> out;
  std::string item;
  std::istringstream is(v);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    out.push_back(parse_number<T>(item, key));
  }
  if (out.empty()) throw data_error("config: empty list for " + key);
  return out;
}

}  // namespace detail

inline RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream is(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      std::ostringstream os;
      os << "config: missing '=' at line " << lineno;
      throw data_error(os.str());
    }
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "model.lambda2")
      cfg.lambda2 = detail::parse_number<double>(value, key);
    else if (key == "cascade.T")
      cfg.T = detail::parse_number<double>(value, key);
    else if (key == "cascade.l")
      cfg.l = detail::parse_number<double>(value, key);
    else if (key == "cascade.domain_length")
      cfg.domain_length = detail::parse_number<double>(value, key);
    else if (key == "cascade.n_cells")
      cfg.n_cells = detail::parse_number<std::size_t>(value, key);
    else if (key == "process.H")
      cfg.H = detail::parse_number<double>(value, key);
    else if (key == "process.m_n")
      cfg.m_n = detail::parse_number<std::size_t>(value, key);
    else if (key == "process.refine")
      cfg.refine = detail::parse_number<std::size_t>(value, key);
    else if (key == "statistics.p_list")
      cfg.p_list = detail::parse_list<double>(value, key);
    else if (key == "statistics.levels")
      cfg.levels = detail::parse_list<int>(value, key);
    else if (key == "statistics.r_max")
      cfg.r_max = detail::parse_number<int>(value, key);
    else if (key == "run.seed")
      cfg.seed = detail::parse_number<std::uint64_t>(value, key);
    else if (key == "run.replicas")
      cfg.replicas = detail::parse_number<std::size_t>(value, key);
    else if (key == "run.output_dir")
      cfg.output_dir = value;
    else
      throw data_error("config: unknown key '" + key + "'");
  }
  return cfg;
}

}  // namespace mfrw
