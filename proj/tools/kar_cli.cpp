// command line front end for the anchor regression toolkit

#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "kar/kar.hpp"

namespace {

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  return buf;
}

std::string join_command(int argc, char** argv) {
  std::string cmd;
  for (int i = 0; i < argc; ++i) {
    if (i) cmd += ' ';
    cmd += argv[i];
  }
  return cmd;
}

// campaign flags shared by benchmark, gamma-sweep, and shift
struct CampaignOpts {
  std::string design = "main";
  std::string csv;
  std::string schema;
  double group_value = 1.0;
  bool fixed_subsample = false;
  long long sample_size = 700;
  std::vector<long long> splits{250, 250, 200};
  std::vector<std::string> methods;
  double gamma = 2.0;
  double alpha_constant = 1.5;
  double xi_constant = 1.5;
  int trials = 50;
  std::uint64_t seed = 0;
  int jobs = 1;
  std::string out_dir = ".";
};

void add_campaign_flags(CLI::App* cmd, CampaignOpts& o, bool dataset_flags) {
  cmd->add_option("--design", o.design,
                  "synthetic design: main, kiv, or variant")
      ->capture_default_str();
  if (dataset_flags) {
    cmd->add_option("--csv", o.csv, "fit a csv dataset instead of a design");
    cmd->add_option("--schema", o.schema, "column schema (json) for --csv");
    cmd->add_option("--group-value", o.group_value,
                    "group level the fits train on (csv mode)")
        ->capture_default_str();
    cmd->add_flag("--fixed-subsample", o.fixed_subsample,
                  "reuse the first subsample in every trial (csv mode)");
  }
  cmd->add_option("-n,--sample-size", o.sample_size, "rows per trial")
      ->capture_default_str();
  cmd->add_option("--splits", o.splits,
                  "stage sizes n1,n2,m (must sum to the sample size)")
      ->delimiter(',')
      ->expected(3);
  cmd->add_option("--methods", o.methods,
                  "methods to fit (default: all)")
      ->delimiter(',');
  cmd->add_option("--gamma", o.gamma, "anchor strength")
      ->capture_default_str();
  cmd->add_option("--alpha-constant", o.alpha_constant,
                  "projection ridge constant c, alpha = c / sqrt(stage size)")
      ->capture_default_str();
  cmd->add_option("--xi-constant", o.xi_constant,
                  "regression ridge constant c, xi = c / sqrt(m)")
      ->capture_default_str();
  cmd->add_option("--trials", o.trials, "number of trials")
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "base seed; trial t draws with seed + t")
      ->capture_default_str();
  cmd->add_option("--jobs", o.jobs, "worker threads across trials")
      ->capture_default_str();
  cmd->add_option("-o,--out", o.out_dir, "output directory")
      ->capture_default_str();
}

kar::TrialConfig build_config(const CampaignOpts& o) {
  kar::TrialConfig cfg;
  if (!o.csv.empty()) {
    if (o.schema.empty()) {
      throw kar::InvalidInput("--csv needs --schema");
    }
    const kar::ColumnSchema schema = kar::load_schema(o.schema);
    kar::LoadedCsv loaded = kar::load_csv(o.csv, schema);
    std::cerr << "loaded " << loaded.stats.ingested << " of "
              << loaded.stats.file_rows << " rows ("
              << loaded.stats.dropped_missing << " missing, "
              << loaded.stats.dropped_nonpositive
              << " nonpositive under log)\n";
    cfg.dataset = std::make_shared<const kar::Dataset>(std::move(loaded.data));
    cfg.group_value = o.group_value;
    cfg.fixed_subsample = o.fixed_subsample;
  } else {
    cfg.design = kar::design_by_name(o.design);
  }
  cfg.sample_size = static_cast<Eigen::Index>(o.sample_size);
  cfg.splits = kar::KarSplit{static_cast<Eigen::Index>(o.splits.at(0)),
                             static_cast<Eigen::Index>(o.splits.at(1)),
                             static_cast<Eigen::Index>(o.splits.at(2))};
  cfg.methods = o.methods;
  cfg.gamma = o.gamma;
  cfg.alpha_constant = o.alpha_constant;
  cfg.xi_constant = o.xi_constant;
  cfg.trials = o.trials;
  cfg.base_seed = o.seed;
  cfg.jobs = o.jobs;
  return cfg;
}

void write_manifest(const kar::TrialReport& report, const std::string& out_dir,
                    const std::string& command, std::uint64_t seed) {
  nlohmann::json manifest;
  manifest["command"] = command;
  manifest["version"] = kar::kVersion;
  manifest["timestamp"] = iso_timestamp();
  manifest["seed"] = seed;
  manifest["metric"] = report.metric;
  manifest["trials"] = report.trials;
  manifest["campaign_ok"] = report.campaign_ok;
  manifest["config"] = report.config_json.empty()
                           ? nlohmann::json::object()
                           : nlohmann::json::parse(report.config_json);
  std::ofstream out(out_dir + "/manifest.json");
  if (!out) throw kar::IoError("cannot open manifest file in " + out_dir);
  out << manifest.dump(2) << "\n";
}

int emit_campaign(const kar::TrialReport& report, const std::string& out_dir,
                  const std::string& command, std::uint64_t seed) {
  std::filesystem::create_directories(out_dir);
  kar::emit_report(report, out_dir + "/results.csv", kar::ReportFormat::csv);
  kar::emit_report(report, out_dir + "/summary.json", kar::ReportFormat::json);
  write_manifest(report, out_dir, command, seed);

  std::ifstream in(out_dir + "/summary.json");
  std::cout << in.rdbuf();
  if (report.campaign_ok) {
    std::cerr << "campaign ok\n";
    return 0;
  }
  std::cerr << "campaign failed: a method lost more than 10% of its trials\n";
  return 1;
}

kar::IdentCase parse_ident_case(const std::string& name) {
  if (name == "i" || name == "no-confounding") {
    return kar::IdentCase::no_confounding;
  }
  if (name == "ii" || name == "valid-anchor") {
    return kar::IdentCase::valid_anchor;
  }
  if (name == "iii" || name == "doubly-clean") {
    return kar::IdentCase::doubly_clean;
  }
  if (name == "iv" || name == "balanced-bias") {
    return kar::IdentCase::balanced_bias;
  }
  throw kar::InvalidInput("unknown identifiability case: " + name);
}

const char* ident_case_name(kar::IdentCase c) {
  switch (c) {
    case kar::IdentCase::no_confounding: return "no-confounding";
    case kar::IdentCase::valid_anchor: return "valid-anchor";
    case kar::IdentCase::doubly_clean: return "doubly-clean";
    case kar::IdentCase::balanced_bias: return "balanced-bias";
  }
  return "?";
}

nlohmann::json matrix_to_json(const Eigen::MatrixXd& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kernel anchor regression toolkit"};
  app.require_subcommand(1);
  const std::string command = join_command(argc, argv);

  // generate
  auto* gen = app.add_subcommand("generate", "draw a dataset and write it as csv");
  std::string gen_design = "main";
  std::string gen_sem;
  long long gen_n = 700;
  std::uint64_t gen_seed = 0;
  std::string gen_out = "data.csv";
  gen->add_option("--design", gen_design, "synthetic design: main, kiv, or variant")
      ->capture_default_str();
  gen->add_option("--sem", gen_sem, "linear structural model spec (json) instead of a design");
  gen->add_option("-n,--sample-size", gen_n, "rows to draw")->capture_default_str();
  gen->add_option("--seed", gen_seed, "rng seed")->capture_default_str();
  gen->add_option("-o,--out", gen_out, "output csv path")->capture_default_str();

  // benchmark
  auto* bench = app.add_subcommand(
      "benchmark", "interventional-error campaign across methods");
  CampaignOpts bench_opts;
  add_campaign_flags(bench, bench_opts, true);

  // gamma-sweep
  auto* sweep = app.add_subcommand(
      "gamma-sweep", "tune the projection ridge per gamma and compare to the instrumental fit");
  CampaignOpts sweep_opts;
  sweep_opts.design = "kiv";
  sweep_opts.sample_size = 1000;
  sweep_opts.splits = {200, 200, 600};
  sweep_opts.xi_constant = 1.0;
  add_campaign_flags(sweep, sweep_opts, false);
  std::vector<double> sweep_gammas{2.0};
  std::vector<double> sweep_alpha_grid = kar::SweepConfig::default_alpha_grid();
  sweep->add_option("--gammas", sweep_gammas, "anchor strengths to sweep")
      ->delimiter(',')
      ->capture_default_str();
  sweep->add_option("--c-alpha-grid", sweep_alpha_grid,
                    "candidate projection ridge constants")
      ->delimiter(',')
      ->capture_default_str();

  // shift
  auto* shift = app.add_subcommand(
      "shift", "train on one side of an anchor threshold, score on the other");
  CampaignOpts shift_opts;
  add_campaign_flags(shift, shift_opts, false);
  double shift_threshold = 0.0;
  shift->add_option("--threshold", shift_threshold, "anchor threshold")
      ->capture_default_str();

  // identifiability
  auto* ident = app.add_subcommand(
      "identifiability", "population bias of the anchor solution in a linear structural model");
  std::string ident_case;
  std::string ident_sem;
  double ident_gamma = 2.0;
  int ident_count = 20;
  std::uint64_t ident_seed = 0;
  std::string ident_out;
  ident->add_option("--case", ident_case,
                    "i|no-confounding, ii|valid-anchor, iii|doubly-clean, iv|balanced-bias");
  ident->add_option("--sem", ident_sem, "explicit structural model spec (json)");
  ident->add_option("--gamma", ident_gamma, "anchor strength for --sem mode")
      ->capture_default_str();
  ident->add_option("--count", ident_count, "instances to draw in --case mode")
      ->capture_default_str();
  ident->add_option("--seed", ident_seed, "rng seed")->capture_default_str();
  ident->add_option("-o,--out", ident_out, "also write the json report here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      kar::Dataset data;
      if (!gen_sem.empty()) {
        data = kar::generate_sem(kar::load_sem_spec(gen_sem),
                                 static_cast<Eigen::Index>(gen_n), gen_seed);
      } else {
        data = kar::generate(kar::design_by_name(gen_design),
                             static_cast<Eigen::Index>(gen_n), gen_seed);
      }
      kar::write_dataset_csv(data, gen_out);
      std::cerr << "wrote " << data.size() << " rows to " << gen_out << "\n";
      return 0;
    }

    if (bench->parsed()) {
      const kar::TrialConfig cfg = build_config(bench_opts);
      std::cerr << "running " << cfg.trials << " trials\n";
      const kar::TrialReport report = kar::run_benchmark(cfg);
      return emit_campaign(report, bench_opts.out_dir, command, cfg.base_seed);
    }

    if (sweep->parsed()) {
      kar::SweepConfig cfg;
      cfg.base = build_config(sweep_opts);
      cfg.gammas = sweep_gammas;
      cfg.alpha_grid = sweep_alpha_grid;
      std::cerr << "sweeping " << cfg.gammas.size() << " gammas over "
                << cfg.alpha_grid.size() << " ridge candidates\n";
      const kar::TrialReport report = kar::gamma_sweep(cfg);
      return emit_campaign(report, sweep_opts.out_dir, command,
                           cfg.base.base_seed);
    }

    if (shift->parsed()) {
      const kar::TrialConfig cfg = build_config(shift_opts);
      std::cerr << "running " << cfg.trials << " trials at threshold "
                << shift_threshold << "\n";
      const kar::TrialReport report = kar::shift_eval(cfg, shift_threshold);
      return emit_campaign(report, shift_opts.out_dir, command, cfg.base_seed);
    }

    if (ident->parsed()) {
      nlohmann::json doc;
      if (!ident_sem.empty()) {
        const kar::SemSpec spec = kar::load_sem_spec(ident_sem);
        doc["gamma"] = ident_gamma;
        doc["h_gamma"] = matrix_to_json(kar::population_h_gamma(spec, ident_gamma));
        doc["bias"] = matrix_to_json(kar::bias_operator(spec, ident_gamma));
      } else if (!ident_case.empty()) {
        const kar::IdentCase c = parse_ident_case(ident_case);
        doc["case"] = ident_case_name(c);
        nlohmann::json rows = nlohmann::json::array();
        for (int k = 0; k < ident_count; ++k) {
          const kar::IdentInstance inst =
              kar::make_ident_instance(c, ident_seed + static_cast<std::uint64_t>(k));
          nlohmann::json row;
          row["seed"] = ident_seed + static_cast<std::uint64_t>(k);
          row["gamma"] = inst.gamma;
          row["max_abs_bias"] =
              kar::bias_operator(inst.spec, inst.gamma).cwiseAbs().maxCoeff();
          rows.push_back(std::move(row));
        }
        doc["instances"] = std::move(rows);
      } else {
        throw kar::InvalidInput("identifiability needs --case or --sem");
      }
      doc["version"] = kar::kVersion;
      const std::string text = doc.dump(2);
      std::cout << text << "\n";
      if (!ident_out.empty()) {
        std::ofstream out(ident_out);
        if (!out) throw kar::IoError("cannot open output file: " + ident_out);
        out << text << "\n";
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
