// Copyright (c) 2026, skewgrad authors
// SPDX-License-Identifier: Apache-2.0

#include "skewgrad/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "skewgrad/config.hpp"
#include "skewgrad/experiments.hpp"

namespace skewgrad {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Invocation {
  std::string command;
  std::string config_path;
  std::string run_dir;
  std::vector<std::string> extras;
};

ExperimentConfig resolve_config(const Invocation& inv) {
  ExperimentConfig cfg = inv.config_path.empty() ? ExperimentConfig{} : load_experiment_config(inv.config_path);
  if (const char* env = std::getenv("SKEWGRAD_SEED"); env && *env) {
    apply_override(cfg, "seed", env);
  }
  for (std::size_t i = 0; i < inv.extras.size(); ++i) {
    std::string key = inv.extras[i];
    if (key.rfind("--", 0) != 0) throw ConfigError(key, "expected --key value");
    key = key.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    } else if (i + 1 < inv.extras.size() && inv.extras[i + 1].rfind("--", 0) != 0) {
      value = inv.extras[++i];
    } else {
      value = "true";
    }
    apply_override(cfg, key, value);
  }
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json eval_json(const EvalResult& e) {
  return {{"accuracy", e.accuracy}, {"per_class_accuracy", e.per_class_accuracy}, {"confusion", e.confusion}};
}

json run_summary(const std::string& command, const ExperimentConfig& cfg, const TwoStageResult& r) {
  return {{"command", command},
          {"seed", cfg.train.seed},
          {"selection_mode", selection_mode_name(cfg.train.selection_mode)},
          {"steps", cfg.train.steps_stage1 + cfg.train.steps_stage2},
          {"source_accuracy", r.source_eval.accuracy},
          {"target_accuracy_stage1", r.target_eval_stage1.accuracy},
          {"target_accuracy", r.target_eval.accuracy},
          {"source", eval_json(r.source_eval)},
          {"target", eval_json(r.target_eval)}};
}

fs::path prepare_output(const ExperimentConfig& cfg) {
  const fs::path dir = cfg.output_dir;
  fs::create_directories(dir);
  write_json(dir / "config.json", to_json(cfg));
  return dir;
}

void write_run_files(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                     const TwoStageResult& r) {
  write_training_log(r.log, dir / "train_log.jsonl");
  save_checkpoint(r.stage1_state, dir / "checkpoint_stage1.json");
  save_checkpoint(r.final_state, dir / "checkpoint.json");
  write_json(dir / "summary.json", run_summary(command, cfg, r));
}

std::string pct(Real v) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(2) << 100.0 * v;
  return os.str();
}

int cmd_gen_data(const ExperimentConfig& cfg, std::ostream& out) {
  ExperimentConfig gen = cfg;
  const fs::path dir = gen.benchmark.data_dir.empty() ? fs::path(cfg.output_dir) / "data" : fs::path(gen.benchmark.data_dir);
  gen.benchmark.data_dir.clear();
  const Benchmark b = build_benchmark(gen.benchmark);
  const fs::path manifest = save_dataset_files(b.source, b.target, dir);
  out << "wrote " << b.source.size() << " source and " << b.target.size() << " target clouds; manifest "
      << manifest.string() << "\n";
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  const fs::path dir = prepare_output(cfg);
  const Benchmark b = build_benchmark(cfg.benchmark);
  const TwoStageResult r = train_two_stage(cfg.train, b.source, b.target);
  write_run_files(dir, "train", cfg, r);
  out << "source accuracy " << pct(r.source_eval.accuracy) << "%, target accuracy " << pct(r.target_eval.accuracy)
      << "% (after stage 1: " << pct(r.target_eval_stage1.accuracy) << "%)\n";
  return kExitOk;
}

int cmd_sweep(const ExperimentConfig& cfg, std::ostream& out) {
  if (cfg.beta_grid.empty() && cfg.alpha_grid.empty()) {
    throw ConfigError("beta_grid", "sweep needs a nonempty beta_grid or alpha_grid");
  }
  const fs::path dir = prepare_output(cfg);
  const Benchmark b = build_benchmark(cfg.benchmark);
  const auto rows = run_sweep(cfg, b);
  write_sweep_csv(rows, dir / "sweep.csv");
  const auto summary = summarize_sweep(rows);
  out << "beta,alpha,mean_target_accuracy,std,seeds\n";
  for (const auto& s : summary) {
    out << format_real(s.beta) << "," << format_real(s.alpha) << "," << pct(s.target_accuracy.mean) << ","
        << pct(s.target_accuracy.std) << "," << s.target_accuracy.count << "\n";
  }
  out << "spread " << pct(accuracy_spread(summary)) << " points\n";
  return kExitOk;
}

int cmd_pilot(const ExperimentConfig& cfg, std::ostream& out) {
  const fs::path dir = prepare_output(cfg);
  const Benchmark b = build_benchmark(cfg.benchmark);
  const PilotResult p = pilot_random_freeze(cfg, b);
  write_pilot_csv(p.rows, dir / "pilot.csv");
  out << "mode,mean_target_accuracy,std,seeds\n";
  for (const auto& s : p.summary) {
    out << selection_mode_name(s.mode) << "," << pct(s.target_accuracy.mean) << "," << pct(s.target_accuracy.std)
        << "," << s.target_accuracy.count << "\n";
  }
  return kExitOk;
}

json correlation_json(const std::optional<Correlation>& c) {
  if (!c) return nullptr;
  return {{"pearson", c->pearson}, {"spearman", c->spearman}};
}

int cmd_diagnose(const ExperimentConfig& cfg, std::ostream& out) {
  const fs::path dir = prepare_output(cfg);
  const Benchmark b = build_benchmark(cfg.benchmark);
  const DiagnoseResult d = diagnose(cfg, b);
  write_run_files(dir, "diagnose", cfg, d.run);
  write_conflict_csv(d.run.log.conflicts, dir / "conflicts.csv");
  if (cfg.train.diag_per_sample) write_sample_conflict_csv(d.run.log.sample_conflicts, dir / "sample_conflicts.csv");

  json j{{"records", d.run.log.conflicts.size()},
         {"batch_correlation", correlation_json(d.batch_correlation)},
         {"sample_correlation", correlation_json(d.sample_correlation)},
         {"anm", nullptr}};
  if (d.run.log.conflicts.empty()) {
    out << "no audited steps: diag_stride exceeds the run length; conflicts.csv has only a header\n";
  } else {
    out << d.run.log.conflicts.size() << " audited steps\n";
  }
  if (d.batch_correlation) {
    out << "mean skewness vs sim(G_ssl, G_oracle): pearson " << d.batch_correlation->pearson << ", spearman "
        << d.batch_correlation->spearman << "\n";
  }
  if (d.sample_correlation) {
    out << "per-sample skewness vs sim: pearson " << d.sample_correlation->pearson << ", spearman "
        << d.sample_correlation->spearman << "\n";
  }
  if (d.anm) {
    j["anm"] = {{"score_skewness_to_conflict", d.anm->score_x_to_y},
                {"score_conflict_to_skewness", d.anm->score_y_to_x},
                {"verdict", d.anm->x_causes_y ? "skewness->conflict" : "conflict->skewness"}};
    out << "ANM scores: skewness->conflict " << d.anm->score_x_to_y << ", conflict->skewness " << d.anm->score_y_to_x
        << " (" << j["anm"]["verdict"].get<std::string>() << ")\n";
  } else {
    out << "ANM test skipped: needs at least 30 audited steps\n";
  }
  write_json(dir / "diagnose.json", j);
  return kExitOk;
}

int cmd_report(const fs::path& dir, std::ostream& out) {
  const bool has_summary = fs::exists(dir / "summary.json");
  const bool has_log = fs::exists(dir / "train_log.jsonl");
  const bool has_conflicts = fs::exists(dir / "conflicts.csv");
  const bool has_sweep = fs::exists(dir / "sweep.csv");
  const bool has_pilot = fs::exists(dir / "pilot.csv");
  std::vector<std::string> missing;
  if (has_summary != has_log) missing.push_back(has_summary ? "train_log.jsonl" : "summary.json");
  if (!has_summary && !has_log && !has_conflicts && !has_sweep && !has_pilot) {
    missing = {"summary.json", "train_log.jsonl", "conflicts.csv", "sweep.csv", "pilot.csv"};
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw FormatError("run directory " + dir.string() + " is missing: " + list);
  }

  const fs::path rep = dir / "report";
  fs::create_directories(rep);
  std::ostringstream text;

  if (has_summary) {
    const json s = read_json(dir / "summary.json");
    text << "source accuracy " << pct(s.at("source_accuracy").get<Real>()) << "%\n"
         << "target accuracy " << pct(s.at("target_accuracy").get<Real>()) << "% (after stage 1 "
         << pct(s.at("target_accuracy_stage1").get<Real>()) << "%)\n";
    CsvTable confusion{{"true_class", "predicted_class", "count", "row_fraction"}, {}};
    const auto m = s.at("target").at("confusion").get<std::vector<std::vector<std::size_t>>>();
    for (std::size_t t = 0; t < m.size(); ++t) {
      std::size_t row = 0;
      for (std::size_t c : m[t]) row += c;
      for (std::size_t p = 0; p < m[t].size(); ++p) {
        confusion.rows.push_back({std::to_string(t), std::to_string(p), std::to_string(m[t][p]),
                                  format_real(row ? static_cast<Real>(m[t][p]) / static_cast<Real>(row) : 0.0)});
      }
    }
    write_csv(rep / "confusion.csv", confusion);

    CsvTable losses{{"step", "stage", "L_total", "L_c_s", "L_c_t", "L_ssl_s", "L_ssl_t", "retained_count"}, {}};
    std::ifstream in(dir / "train_log.jsonl");
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      try {
        const json r = json::parse(line);
        losses.rows.push_back({std::to_string(r.at("step").get<std::size_t>()), std::to_string(r.at("stage").get<int>()),
                               format_real(r.at("L_total").get<Real>()), format_real(r.at("L_c_s").get<Real>()),
                               format_real(r.at("L_c_t").get<Real>()), format_real(r.at("L_ssl_s").get<Real>()),
                               format_real(r.at("L_ssl_t").get<Real>()),
                               std::to_string(r.at("retained_count").get<std::size_t>())});
      } catch (const json::exception& e) {
        throw FormatError("train_log.jsonl line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    write_csv(rep / "loss_curve.csv", losses);
    text << line_no << " logged steps\n";
  }

  if (has_conflicts) {
    const auto records = read_conflict_csv(dir / "conflicts.csv");
    write_conflict_csv(records, rep / "conflict_curves.csv");
    text << records.size() << " conflict records\n";
    if (records.size() >= 3) {
      std::vector<Real> sk, sim, ssl_cls, sum_oracle;
      for (const auto& r : records) {
        sk.push_back(r.mean_skewness);
        sim.push_back(r.sim_ssl_oracle);
        ssl_cls.push_back(r.sim_ssl_cls);
        sum_oracle.push_back(r.sim_sum_oracle);
      }
      const auto c = correlation(sk, sim);
      const auto k = correlation(ssl_cls, sum_oracle);
      text << "skewness vs sim(G_ssl, G_oracle): spearman " << c.spearman << "\n"
           << "sim(G_ssl, G_cls) vs sim(G_sum, G_oracle): spearman " << k.spearman << "\n";
    }
  }

  if (has_sweep) {
    const auto rows = read_sweep_csv(dir / "sweep.csv");
    // Mean over seeds at every (beta, alpha, step).
    std::map<std::tuple<Real, Real, std::size_t>, std::vector<Real>> curves;
    for (const auto& r : rows) curves[{r.beta, r.alpha, r.step}].push_back(r.target_accuracy);
    CsvTable t{{"beta", "alpha", "step", "mean_target_accuracy", "std_target_accuracy", "seeds"}, {}};
    for (const auto& [key, v] : curves) {
      const MeanStd m = mean_std(v);
      t.rows.push_back({format_real(std::get<0>(key)), format_real(std::get<1>(key)), std::to_string(std::get<2>(key)),
                        format_real(m.mean), format_real(m.std), std::to_string(m.count)});
    }
    write_csv(rep / "sweep_curves.csv", t);
    const auto summary = summarize_sweep(rows);
    for (const auto& s : summary) {
      text << "beta " << format_real(s.beta) << " alpha " << format_real(s.alpha) << ": target "
           << pct(s.target_accuracy.mean) << "% +- " << pct(s.target_accuracy.std) << "\n";
    }
  }

  if (has_pilot) {
    const auto rows = read_pilot_csv(dir / "pilot.csv");
    CsvTable t{{"mode", "mean_target_accuracy", "std_target_accuracy", "seeds"}, {}};
    for (const auto& s : summarize_pilot(rows)) {
      t.rows.push_back({selection_mode_name(s.mode), format_real(s.target_accuracy.mean),
                        format_real(s.target_accuracy.std), std::to_string(s.target_accuracy.count)});
      text << selection_mode_name(s.mode) << ": target " << pct(s.target_accuracy.mean) << "% +- "
           << pct(s.target_accuracy.std) << "\n";
    }
    write_csv(rep / "pilot_summary.csv", t);
  }

  std::ofstream(rep / "summary.txt") << text.str();
  out << text.str();
  return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Saliency-skewness sample selection for multi-task point-cloud domain adaptation"};
  app.require_subcommand(1);
  Invocation inv;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"gen-data", "write the synthetic benchmark as XYZ files plus manifest.json"},
      {"train", "two-stage training; writes logs, checkpoints and summary.json"},
      {"sweep", "target accuracy over beta_grid x alpha_grid x seeds (sweep.csv)"},
      {"pilot", "All vs RandomFreeze vs SmDsb over seeds (pilot.csv)"},
      {"diagnose", "training with gradient audits; conflicts.csv, correlations and ANM verdict"},
      {"report", "aggregate a run directory into plot-ready CSVs"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->allow_extras();
    sub->add_option("--config", inv.config_path, "JSON config file");
    if (name == "report") sub->add_option("--run-dir", inv.run_dir, "run directory (default: output_dir)");
    sub->callback([&inv, name = name, sub] {
      inv.command = name;
      inv.extras = sub->remaining();
    });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o, eo;
    const int code = app.exit(e, o, eo);
    out << o.str();
    err << eo.str();
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const ExperimentConfig cfg = resolve_config(inv);
    if (inv.command == "gen-data") return cmd_gen_data(cfg, out);
    if (inv.command == "train") return cmd_train(cfg, out);
    if (inv.command == "sweep") return cmd_sweep(cfg, out);
    if (inv.command == "pilot") return cmd_pilot(cfg, out);
    if (inv.command == "diagnose") return cmd_diagnose(cfg, out);
    return cmd_report(inv.run_dir.empty() ? fs::path(cfg.output_dir) : fs::path(inv.run_dir), out);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DivergenceError& e) {
    err << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace skewgrad
