// Command-line front end: synthesis, structure functions, scaling-exponent
// estimation, the named Monte Carlo experiments and report pretty-printing.
//
// Exit codes: 0 success / all checks pass, 1 experiment check failed,
// 2 admissibility refusal, 3 I/O failure, 4 usage or malformed data.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mfrw/mfrw.hpp"

namespace fs = std::filesystem;
using mfrw::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitCheckFailed = 1;
constexpr int kExitRefused = 2;
constexpr int kExitIo = 3;
constexpr int kExitUsage = 4;

mfrw::RunConfig load_config(const std::string& path) {
  mfrw::RunConfig cfg;
  if (!path.empty()) cfg = mfrw::parse_run_config(mfrw::read_text_file(path));
  if (const char* env = std::getenv("MFRW_SEED")) {
    cfg.seed = std::strtoull(env, nullptr, 10);  // env override beats the file
  }
  return cfg;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw mfrw::io_error("cannot create output directory: " + dir);
}

json synth_provenance(const mfrw::RunConfig& cfg) {
  return json{{"model", mfrw::scaling_model_to_json(cfg.model())},
              {"config", mfrw::cascade_config_to_json(cfg.cascade())},
              {"H", cfg.H},
              {"m_n", cfg.m_n},
              {"refine", cfg.refine},
              {"seed", cfg.seed}};
}

int cmd_synth(const mfrw::RunConfig& cfg, const std::string& kind, std::size_t n_paths,
              double beta, const std::string& out_dir) {
  ensure_dir(out_dir);
  const mfrw::ScalingModel model = cfg.model();
  if (kind == "measure") {
    const mfrw::LogField field = mfrw::synth_log_field(model, cfg.cascade(), cfg.seed);
    const mfrw::MeasureGrid measure = mfrw::field_to_measure(field, beta);
    mfrw::write_text_file(out_dir + "/measure.csv", mfrw::measure_to_csv(measure));
    json prov = synth_provenance(cfg);
    prov["beta"] = beta;
    mfrw::write_text_file(out_dir + "/measure_provenance.json", prov.dump(2) + "\n");
    return kExitOk;
  }
  if (kind == "path") {
    mfrw::CascadeConfig cc = cfg.cascade();
    if (cc.n_cells != cfg.m_n * cfg.refine)
      throw mfrw::data_error("synth path: cascade.n_cells must equal process.m_n * process.refine");
    const mfrw::MfrwSample sample =
        mfrw::synth_mfrw(model, cc, cfg.H, cfg.m_n, cfg.refine, cfg.seed, n_paths);
    for (std::size_t r = 0; r < sample.paths.size(); ++r) {
      char name[64];
      std::snprintf(name, sizeof(name), "/path_%04zu.csv", r);
      mfrw::write_text_file(out_dir + name,
                            mfrw::path_to_csv(sample.paths[r], cc.domain_length));
    }
    mfrw::write_text_file(out_dir + "/path_provenance.json",
                          synth_provenance(cfg).dump(2) + "\n");
    return kExitOk;
  }
  if (kind == "fgn") {
    const mfrw::PathSample path = mfrw::synth_fgn_exact(cfg.H, cfg.m_n, cfg.seed);
    mfrw::write_text_file(out_dir + "/fgn.csv", mfrw::path_to_csv(path, 1.0));
    mfrw::write_text_file(out_dir + "/fgn_provenance.json",
                          synth_provenance(cfg).dump(2) + "\n");
    return kExitOk;
  }
  if (kind == "subordinated") {
    const mfrw::LogField field = mfrw::synth_log_field(model, cfg.cascade(), cfg.seed);
    const mfrw::MeasureGrid measure = mfrw::field_to_measure(field, 1.0);
    const mfrw::PathSample path =
        mfrw::synth_subordinated(measure, cfg.H, mfrw::mix64(cfg.seed, 0x5b0dULL));
    mfrw::write_text_file(out_dir + "/subordinated.csv",
                          mfrw::path_to_csv(path, cfg.cascade().domain_length));
    mfrw::write_text_file(out_dir + "/subordinated_provenance.json",
                          synth_provenance(cfg).dump(2) + "\n");
    return kExitOk;
  }
  throw mfrw::data_error("synth: unknown kind '" + kind + "'");
}

int cmd_structure(const std::string& input, const std::vector<double>& p_list,
                  const std::vector<int>& levels, const std::string& out_file,
                  double domain_length) {
  const std::vector<double> increments = mfrw::read_series_csv(mfrw::read_text_file(input));
  if (!mfrw::is_power_of_two(increments.size()))
    throw mfrw::data_error("structure: series length must be a power of two, got " +
                           std::to_string(increments.size()));
  bool all_zero = true;
  for (double x : increments)
    if (x != 0.0) all_zero = false;
  if (all_zero) throw mfrw::data_error("structure: degenerate (constant) series");
  const mfrw::PathSample path = mfrw::PathSample::from_increments(increments, 0);
  std::vector<int> usable;
  const auto max_level = static_cast<int>(std::log2(static_cast<double>(increments.size())));
  for (int lv : levels)
    if (lv <= max_level) usable.push_back(lv);
  if (usable.empty()) throw mfrw::data_error("structure: no usable levels for this series");
  const mfrw::StructureFunctionTable table =
      mfrw::structure_function(std::span(&path, 1), p_list, usable, domain_length);
  const std::string csv = mfrw::table_to_csv(table);
  if (out_file.empty())
    std::cout << csv;
  else
    mfrw::write_text_file(out_file, csv);
  return kExitOk;
}

int cmd_estimate(const std::string& table_file, double p, int level_lo, int level_hi,
                 const std::string& out_file) {
  const mfrw::StructureFunctionTable table =
      mfrw::table_from_csv(mfrw::read_text_file(table_file));
  const mfrw::ZetaEstimate est = mfrw::estimate_zeta(table, p, {level_lo, level_hi});
  const std::string text = mfrw::zeta_to_json(est).dump(2) + "\n";
  std::cout << text;
  if (!out_file.empty()) mfrw::write_text_file(out_file, text);
  return kExitOk;
}

int cmd_experiment(const std::string& name, const mfrw::RunConfig& cfg,
                   const std::string& out_dir) {
  const mfrw::ScalingModel model = cfg.model();
  mfrw::ExperimentReport rep;
  if (name == "measure-scaling") {
    const mfrw::CascadeConfig cc = cfg.cascade();
    const std::vector<double> t_list{cc.T / 8.0, cc.T / 4.0, cc.T / 2.0};
    rep = mfrw::exp_measure_scaling(model, cc, {1.0, 2.0}, t_list, cfg.replicas, cfg.seed);
  } else if (name == "degenerate-limit") {
    std::vector<double> l_list;
    for (int k = 4; k <= 14; ++k) l_list.push_back(std::pow(2.0, -k));
    rep = mfrw::exp_degenerate_limit(model, cfg.H, 1.0, 1.0, l_list);
  } else if (name == "conditional-clt") {
    int p = 2;
    for (double q : cfg.p_list)
      if (q >= 2.0 && std::fmod(q, 2.0) == 0.0) {
        p = static_cast<int>(q);
        break;
      }
    rep = mfrw::exp_conditional_clt(model, cfg.H, p, cfg.m_n, cfg.seed, cfg.replicas,
                                    mfrw::mix64(cfg.seed, 1), cfg.refine);
  } else if (name == "bias") {
    int p = 2;
    for (double q : cfg.p_list)
      if (q >= 2.0 && std::fmod(q, 2.0) == 0.0) {
        p = static_cast<int>(q);
        break;
      }
    rep = mfrw::exp_bias(model, cfg.H, p, cfg.levels, cfg.replicas, cfg.seed, cfg.refine);
  } else if (name == "linearization") {
    rep = mfrw::exp_linearization(model, cfg.H, cfg.p_list, cfg.levels, cfg.replicas, cfg.seed,
                                  cfg.refine);
  } else {
    throw mfrw::data_error("experiment: unknown name '" + name + "'");
  }
  rep.params["resolved_config"] = cfg.to_json();
  ensure_dir(out_dir);
  mfrw::write_report(rep, out_dir);
  std::cerr << "experiment " << name << ": " << (rep.refused ? "REFUSED" : "")
            << (rep.all_pass() ? "all checks pass" : "") << " wall " << rep.wall_seconds
            << " s\n";
  if (rep.refused) {
    std::cerr << rep.to_json()["conditions"].dump(2) << "\n";
    return kExitRefused;
  }
  return rep.all_pass() ? kExitOk : kExitCheckFailed;
}

int cmd_report(const std::string& file) {
  json j;
  try {
    j = json::parse(mfrw::read_text_file(file));
  } catch (const json::parse_error& e) {
    throw mfrw::data_error(std::string("report: malformed JSON: ") + e.what());
  }
  std::cout << "experiment: " << j.value("experiment", std::string("?")) << "\n";
  if (j.contains("refused") && j["refused"].get<bool>()) {
    std::cout << "REFUSED: " << j.value("refusal_reason", std::string()) << "\n";
    return kExitOk;
  }
  if (j.contains("checks")) {
    for (const auto& c : j["checks"]) {
      std::cout << (c.value("pass", false) ? "  [pass] " : "  [FAIL] ") << c.value("name", "")
                << ": statistic " << c.value("statistic", 0.0) << ", target "
                << c.value("target", 0.0) << ", tolerance " << c.value("tolerance", 0.0);
      const std::string note = c.value("note", std::string());
      if (!note.empty()) std::cout << " (" << note << ")";
      std::cout << "\n";
    }
  }
  if (j.contains("artifacts"))
    for (const auto& a : j["artifacts"]) std::cout << "  artifact: " << a.get<std::string>() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multifractal fractional random walk toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out", out_file, input_file, kind = "measure";
  std::string experiment_name, report_file, table_file;
  std::vector<double> p_list{2.0};
  std::vector<int> levels{2, 3, 4, 5, 6, 7, 8};
  double p_single = 2.0, beta = 1.0, domain_length = 1.0;
  int level_lo = 2, level_hi = 8;
  std::size_t n_paths = 1;

  CLI::App* synth = app.add_subcommand("synth", "synthesize measures and paths");
  synth->add_option("--config", config_path, "run configuration file");
  synth->add_option("--kind", kind, "measure | path | fgn | subordinated");
  synth->add_option("--paths", n_paths, "number of paths for --kind path");
  synth->add_option("--beta", beta, "measure exponent variant (1 or 0.5)");
  synth->add_option("--out", out_dir, "output directory");

  CLI::App* structure = app.add_subcommand("structure", "structure functions of a series");
  structure->add_option("--input", input_file, "path CSV or single-column increment series")
      ->required();
  structure->add_option("--p", p_list, "moment orders")->delimiter(',');
  structure->add_option("--levels", levels, "dyadic levels")->delimiter(',');
  structure->add_option("--domain", domain_length, "physical length of the series window");
  structure->add_option("--out", out_file, "output CSV (default stdout)");

  CLI::App* estimate = app.add_subcommand("estimate", "scaling exponent from a table");
  estimate->add_option("--table", table_file, "structure-function table CSV")->required();
  estimate->add_option("--p", p_single, "moment order");
  estimate->add_option("--level-lo", level_lo, "lowest level of the fit range");
  estimate->add_option("--level-hi", level_hi, "highest level of the fit range");
  estimate->add_option("--out", out_file, "also write the JSON here");

  CLI::App* experiment = app.add_subcommand("experiment", "run a named experiment");
  experiment
      ->add_option("name", experiment_name,
                   "measure-scaling | degenerate-limit | conditional-clt | bias | linearization")
      ->required();
  experiment->add_option("--config", config_path, "run configuration file");
  experiment->add_option("--out", out_dir, "output directory");

  CLI::App* report = app.add_subcommand("report", "pretty-print a report JSON");
  report->add_option("file", report_file, "report JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      mfrw::RunConfig cfg = load_config(config_path);
      if (out_dir.empty()) out_dir = cfg.output_dir;
      return cmd_synth(cfg, kind, n_paths, beta, out_dir);
    }
    if (structure->parsed())
      return cmd_structure(input_file, p_list, levels, out_file, domain_length);
    if (estimate->parsed())
      return cmd_estimate(table_file, p_single, level_lo, level_hi, out_file);
    if (experiment->parsed()) {
      mfrw::RunConfig cfg = load_config(config_path);
      if (out_dir.empty()) out_dir = cfg.output_dir;
      return cmd_experiment(experiment_name, cfg, out_dir);
    }
    if (report->parsed()) return cmd_report(report_file);
  } catch (const mfrw::condition_error& e) {
    std::cerr << "refused: " << e.what() << "\n";
    std::cerr << mfrw::condition_report_to_json(e.report()).dump(2) << "\n";
    return kExitRefused;
  } catch (const mfrw::io_error& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const mfrw::data_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mfrw::config_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const mfrw::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
