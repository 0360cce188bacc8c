// Command-line front end: dataset generation, exact decoding, network
// training and evaluation, and the config-driven experiment suite. Every
// experiment subcommand reads one JSON config, writes CSVs plus a manifest
// into --out, and is bit-reproducible from the config alone.
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "mipt/exact_decoder.hpp"
#include "mipt/experiments.hpp"
#include "mipt/nn.hpp"
#include "mipt/trajectory.hpp"
#include "mipt/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mipt;

namespace {

json load_json(const std::string& path) {
  std::ifstream is(path);
  if (!is) {
    throw std::runtime_error("cannot open config: " + path);
  }
  json j;
  is >> j;
  return j;
}

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

InitKind init_from(const std::string& name) {
  if (name == "product") {
    return InitKind::kProduct;
  }
  if (name == "scrambled") {
    return InitKind::kScrambled;
  }
  throw std::runtime_error("init must be 'product' or 'scrambled', got '" + name + "'");
}

WindowMode window_from(const std::string& name) {
  if (name == "lightcone") {
    return WindowMode::kLightcone;
  }
  if (name == "whole") {
    return WindowMode::kWhole;
  }
  throw std::runtime_error("window must be 'lightcone' or 'whole', got '" + name + "'");
}

// Circuit family block: L, T, p required; circuit_seed, init, ref_site, and
// final_measurement_round optional.
CircuitSpec family_from(const json& j) {
  CircuitSpec spec = CircuitSpec::make(j.at("L").get<size_t>(), j.at("T").get<size_t>(),
                                       j.at("p").get<double>(),
                                       get_or<uint64_t>(j, "circuit_seed", 0),
                                       init_from(get_or<std::string>(j, "init", "product")));
  if (j.contains("ref_site")) {
    spec.ref_site = j.at("ref_site").get<size_t>();
    spec.validate();
  }
  spec.final_measurement_round = get_or(j, "final_measurement_round", true);
  return spec;
}

void apply_training_keys(const json& j, nn::MinSamplesOptions& so) {
  so.epsilon = get_or(j, "epsilon", so.epsilon);
  so.n_test = get_or(j, "n_test", so.n_test);
  so.test_first_seed = get_or(j, "test_first_seed", so.test_first_seed);
  so.train.learning_rate = get_or(j, "learning_rate", so.train.learning_rate);
  so.train.batch = get_or(j, "batch", so.train.batch);
  so.train.max_epochs = get_or(j, "max_epochs", so.train.max_epochs);
  so.train.patience = get_or(j, "patience", so.train.patience);
  so.train.dropout = get_or(j, "dropout", so.train.dropout);
  so.train.val_fraction = get_or(j, "val_fraction", so.train.val_fraction);
}

void write_text(const fs::path& path, const std::string& body) {
  std::ofstream os(path, std::ios::binary);
  if (!os) {
    throw std::runtime_error("cannot open for writing: " + path.string());
  }
  os << body;
  if (!os) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

template <class Result>
void write_csv_file(const fs::path& path, const Result& result) {
  std::ostringstream os;
  write_csv(os, result);
  write_text(path, os.str());
}

void write_manifest(const fs::path& dir, const std::string& command, const json& config) {
  json m;
  m["command"] = command;
  m["config"] = config;
  m["version"] = kVersion;
  write_text(dir / "manifest.json", m.dump(2) + "\n");
}

// --- experiment subcommands -------------------------------------------------

void run_purification_hist(const json& cfg, const fs::path& out) {
  CircuitSpec family = family_from(cfg);
  size_t n = cfg.at("n_circuits").get<size_t>();
  uint64_t base_seed = get_or<uint64_t>(cfg, "base_seed", 1);
  PurificationHistogram hist = purification_histogram(family, n, base_seed);
  std::ostringstream os;
  write_csv(os, hist, family);
  write_text(out / "purification_hist.csv", os.str());
}

ComplexityOptions complexity_options_from(const json& cfg) {
  ComplexityOptions opts;
  opts.family = family_from(cfg);
  opts.t_p_values = cfg.at("t_p").get<std::vector<size_t>>();
  opts.n_circuits = get_or(cfg, "n_circuits", opts.n_circuits);
  opts.window = window_from(get_or<std::string>(cfg, "window", "lightcone"));
  opts.delta = get_or(cfg, "delta", opts.delta);
  opts.base_seed = get_or<uint64_t>(cfg, "base_seed", opts.base_seed);
  opts.generation_cap = get_or(cfg, "generation_cap", opts.generation_cap);
  if (cfg.contains("grid")) {
    opts.samples.grid = cfg.at("grid").get<std::vector<size_t>>();
  } else if (cfg.contains("max_samples")) {
    opts.samples.grid = nn::sample_grid(cfg.at("max_samples").get<size_t>());
  }
  apply_training_keys(cfg, opts.samples);
  return opts;
}

void run_complexity(const json& cfg, const fs::path& out) {
  write_csv_file(out / "complexity.csv", complexity_experiment(complexity_options_from(cfg)));
}

void run_learnability(const json& cfg, const fs::path& out) {
  LearnabilityOptions opts;
  opts.family = family_from(cfg);
  opts.budgets = cfg.at("budgets").get<std::vector<size_t>>();
  opts.n_circuits = get_or(cfg, "n_circuits", opts.n_circuits);
  opts.window = window_from(get_or<std::string>(cfg, "window", "lightcone"));
  opts.base_seed = get_or<uint64_t>(cfg, "base_seed", opts.base_seed);
  apply_training_keys(cfg, opts.samples);
  write_csv_file(out / "learnability.csv", learnability_experiment(opts));
}

CoherentInfoOptions coherent_options_from(const json& cfg) {
  CoherentInfoOptions opts;
  opts.T = cfg.at("T").get<size_t>();
  opts.n_circuits = get_or(cfg, "n_circuits", opts.n_circuits);
  opts.base_seed = get_or<uint64_t>(cfg, "base_seed", opts.base_seed);
  opts.budget = get_or(cfg, "budget", opts.budget);
  opts.window = window_from(get_or<std::string>(cfg, "window", "lightcone"));
  opts.init = init_from(get_or<std::string>(cfg, "init", "product"));
  opts.final_measurement_round = get_or(cfg, "final_measurement_round", true);
  apply_training_keys(cfg, opts.samples);
  return opts;
}

void run_coherent_info(const json& cfg, const fs::path& out) {
  CoherentInfoOptions opts = coherent_options_from(cfg);
  auto series = coherent_info_experiment(cfg.at("p").get<std::vector<double>>(),
                                         cfg.at("L").get<std::vector<size_t>>(), opts);
  write_csv_file(out / "coherent_info.csv", series);
}

void run_crossing(const json& cfg, const fs::path& out) {
  double tau_d = cfg.at("tau_d").get<double>();
  auto p_values = cfg.at("p").get<std::vector<double>>();
  auto L_values = cfg.at("L").get<std::vector<size_t>>();
  json base = cfg;
  std::vector<CoherentInfoSeries> series;
  for (double p : p_values) {
    for (size_t L : L_values) {
      // Exact series only; the default depth just covers the stencil at t_d.
      size_t t_d = static_cast<size_t>(std::llround(tau_d * static_cast<double>(L)));
      base["T"] = get_or(cfg, "T", t_d + 1);
      CoherentInfoOptions opts = coherent_options_from(base);
      opts.budget = 0;
      series.push_back(coherent_info_series(p, L, opts));
    }
  }
  CrossingResult res = crossing_analysis(series, tau_d);
  for (const std::string& w : res.warnings) {
    std::cerr << "warning: " << w << "\n";
  }
  write_csv_file(out / "coherent_info.csv", series);
  write_csv_file(out / "crossing.csv", res);
  std::ostringstream os;
  write_interval_csv(os, res);
  write_text(out / "crossing_interval.csv", os.str());
}

void run_scalability(const json& cfg, const fs::path& out) {
  ScalabilityOptions opts;
  opts.family = family_from(cfg);
  opts.strip_widths = cfg.at("strips").get<std::vector<size_t>>();
  opts.n_circuits = get_or(cfg, "n_circuits", opts.n_circuits);
  opts.budget = get_or(cfg, "budget", opts.budget);
  opts.base_seed = get_or<uint64_t>(cfg, "base_seed", opts.base_seed);
  opts.generation_cap = get_or(cfg, "generation_cap", opts.generation_cap);
  apply_training_keys(cfg, opts.samples);
  write_csv_file(out / "scalability.csv", scalability_experiment(opts));
}

void run_reconstruction(const json& cfg, const fs::path& out) {
  CircuitSpec family = family_from(cfg);
  uint64_t base_seed = get_or<uint64_t>(cfg, "base_seed", 1);
  size_t hist_n = cfg.at("hist_circuits").get<size_t>();
  PurificationHistogram hist = purification_histogram(family, hist_n, base_seed);
  std::ostringstream hos;
  write_csv(hos, hist, family);
  write_text(out / "purification_hist.csv", hos.str());

  auto cres = complexity_experiment(complexity_options_from(cfg));
  write_csv_file(out / "complexity.csv", cres);

  std::vector<std::pair<size_t, double>> table;
  for (const ComplexityResult& r : cres) {
    if (std::isnan(r.m_bar)) {
      std::cerr << "warning: no circuit reached the criterion at t_p=" << r.t_p
                << "; knot dropped\n";
      continue;
    }
    table.push_back({r.t_p, r.m_bar});
  }
  auto budgets = get_or(cfg, "budgets", nn::sample_grid(16000));
  ReconstructionResult rec = reconstruct_learnability(hist, table, budgets);
  if (rec.monotonized) {
    std::cerr << "warning: complexity table was not monotone; isotonic fit applied\n";
  }
  write_csv_file(out / "predicted_learnability.csv", rec);
}

// --- single-file subcommands ------------------------------------------------

struct CircuitFlags {
  size_t L = 16;
  size_t T = 16;
  double p = 0.3;
  uint64_t seed = 0;
  std::string init = "product";
  bool final_round = true;
  bool validate = false;
};

CircuitSpec spec_from_flags(const CircuitFlags& f) {
  CircuitSpec spec = CircuitSpec::make(f.L, f.T, f.p, f.seed, init_from(f.init));
  spec.final_measurement_round = f.final_round;
  return spec;
}

void add_circuit_flags(CLI::App* cmd, CircuitFlags& f) {
  cmd->add_option("--L", f.L, "sites (even)");
  cmd->add_option("--T", f.T, "layers");
  cmd->add_option("--p", f.p, "measurement rate");
  cmd->add_option("--seed", f.seed, "circuit seed");
  cmd->add_option("--init", f.init, "initial state")
      ->check(CLI::IsMember({"product", "scrambled"}));
  cmd->add_flag("--final-measurement-round,!--no-final-measurement-round", f.final_round,
                "measurement round after the last layer");
  cmd->add_flag("--validate-tableau", f.validate, "check tableau invariants while running");
}

int run_gen_dataset(const CircuitFlags& flags, size_t n, uint64_t first_seed,
                    bool force_random, bool lightcone, size_t wcenter, size_t wwidth,
                    size_t wdepth, const std::string& out) {
  CircuitSpec spec = spec_from_flags(flags);
  CircuitInstance inst = build_circuit(spec);
  std::optional<WindowSpec> window;
  if (lightcone) {
    TrajectoryRecord probe = run_trajectory(inst, first_seed, {.min_layers = 1});
    if (!probe.purified()) {
      throw std::runtime_error("circuit not decodable at depth T");
    }
    window = lightcone_window(inst, probe.t_p);
  } else if (wwidth != 0 || wdepth != 0) {
    WindowSpec w;
    w.center = wcenter != static_cast<size_t>(-1) ? wcenter : inst.ref_site;
    w.width = wwidth != 0 ? wwidth : spec.L;
    w.depth = wdepth != 0 ? wdepth : spec.T;
    window = w;
  }
  GenerateOptions gen;
  gen.first_trajectory_seed = first_seed;
  gen.force_random_labels = force_random;
  gen.validate_tableau = flags.validate;
  Dataset ds = generate_dataset(inst, n, window, gen);
  write_dataset(out, ds);
  json summary;
  summary["records"] = ds.records.size();
  summary["rows"] = ds.record_rows();
  summary["cols"] = ds.record_cols();
  summary["axis"] = std::string(1, axis_letter(ds.axis));
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_exact_decode(const std::string& circuit_config, bool validate, const std::string& out) {
  json cj = load_json(circuit_config);
  CircuitSpec spec = family_from(cj);
  CircuitInstance inst = build_circuit(spec);
  KeyMeasurementReport rep = analyze_circuit(inst, {.validate_tableau = validate});
  json r;
  r["L"] = spec.L;
  r["T"] = spec.T;
  r["p"] = spec.p;
  r["circuit_seed"] = spec.circuit_seed;
  r["ref_site"] = spec.ref_site;
  r["t_p"] = rep.t_p;
  r["axis"] = std::string(1, axis_letter(rep.axis));
  r["c"] = rep.c();
  json keys = json::array();
  for (size_t slot : rep.key_slots) {
    keys.push_back({rep.slots[slot].layer + 1, rep.slots[slot].site});
  }
  r["key_measurements"] = keys;  // [layer (1-based), site (0-based)]
  r["n_measurements"] = rep.slots.size();
  size_t determined = 0;
  for (uint8_t d : rep.determined) {
    determined += d;
  }
  r["n_determined"] = determined;
  r["n_constraints"] = rep.constraints.size();
  write_text(out, r.dump(2) + "\n");
  std::cout << r.dump() << "\n";
  return 0;
}

int run_train(const std::string& dataset, size_t epochs, size_t batch, uint64_t seed,
              const std::string& out) {
  Dataset ds = read_dataset(dataset);
  auto images = nn::images_of<float>(ds);
  auto targets = nn::targets_of<float>(ds);
  nn::Cnn<float> model =
      nn::build_model<float>(ds.record_rows(), ds.record_cols(), images.size(), seed);
  nn::TrainConfig tc;
  tc.max_epochs = epochs;
  tc.batch = batch;
  tc.seed = hash_u64s({seed, tag::kShuffle});
  nn::TrainResult tr = nn::train(model, images, targets, tc);
  save_model(out, model);
  json summary;
  summary["n_train"] = images.size();
  summary["epochs"] = tr.epochs;
  summary["best_val_loss"] = tr.best_val_loss;
  summary["parameters"] = model.num_params();
  std::cout << summary.dump() << "\n";
  return 0;
}

int run_eval(const std::string& model_path, const std::string& dataset, double epsilon) {
  nn::Cnn<float> model = nn::load_model(model_path);
  Dataset ds = read_dataset(dataset);
  if (model.cfg.rows != ds.record_rows() || model.cfg.cols != ds.record_cols()) {
    throw std::runtime_error("model and dataset shapes do not match");
  }
  auto images = nn::images_of<float>(ds);
  nn::EvalReport rep = nn::evaluate(model, images, nn::labels_of(ds), epsilon);
  json summary;
  summary["n_test"] = rep.n_test;
  summary["misclassified"] = rep.misclassified;
  summary["error"] = rep.error;
  summary["epsilon"] = rep.epsilon;
  summary["learned"] = rep.learned;
  std::cout << summary.dump() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"measurement-induced phase transition laboratory"};
  app.require_subcommand(1);

  CircuitFlags gen_flags;
  size_t gen_n = 1000;
  uint64_t gen_first_seed = 0;
  bool gen_force = false;
  bool gen_lightcone = false;
  size_t gen_wcenter = static_cast<size_t>(-1);
  size_t gen_wwidth = 0;
  size_t gen_wdepth = 0;
  std::string gen_out = "dataset.bin";
  CLI::App* gen = app.add_subcommand("gen-dataset", "sample labeled trajectories");
  add_circuit_flags(gen, gen_flags);
  gen->add_option("--n", gen_n, "records");
  gen->add_option("--first-seed", gen_first_seed, "first trajectory seed");
  gen->add_flag("--force-random-labels", gen_force, "keep unpurified runs, coin labels");
  gen->add_flag("--lightcone", gen_lightcone, "crop to the purification light cone");
  gen->add_option("--window-center", gen_wcenter, "crop center site");
  gen->add_option("--window-width", gen_wwidth, "crop width in sites");
  gen->add_option("--window-depth", gen_wdepth, "crop depth in layers");
  gen->add_option("--out", gen_out, "output dataset path");

  std::string dec_circuit;
  std::string dec_out = "report.json";
  bool dec_validate = false;
  CLI::App* dec = app.add_subcommand("exact-decode", "key measurements of one circuit");
  dec->add_option("--circuit", dec_circuit, "circuit config (JSON)")->required();
  dec->add_option("--out", dec_out, "report path");
  dec->add_flag("--validate-tableau", dec_validate, "check tableau invariants while running");

  std::string train_dataset;
  size_t train_epochs = 200;
  size_t train_batch = 32;
  uint64_t train_seed = 0;
  std::string train_out = "model.bin";
  CLI::App* trn = app.add_subcommand("train", "train a decoder on a dataset");
  trn->add_option("--dataset", train_dataset, "training dataset")->required();
  trn->add_option("--epochs", train_epochs, "epoch cap");
  trn->add_option("--batch", train_batch, "minibatch size");
  trn->add_option("--seed", train_seed, "initialization seed");
  trn->add_option("--out", train_out, "checkpoint path");

  std::string eval_model;
  std::string eval_dataset;
  double eval_epsilon = 0.02;
  CLI::App* evl = app.add_subcommand("eval", "score a checkpoint on a dataset");
  evl->add_option("--model", eval_model, "checkpoint path")->required();
  evl->add_option("--dataset", eval_dataset, "test dataset")->required();
  evl->add_option("--epsilon", eval_epsilon, "error threshold");

  struct ExperimentCmd {
    const char* name;
    const char* help;
    void (*run)(const json&, const fs::path&);
    CLI::App* cmd = nullptr;
    std::string config;
    std::string out;
  };
  ExperimentCmd experiments[] = {
      {"purification-hist", "purification-time distribution", run_purification_hist},
      {"complexity", "training-sample complexity vs purification time", run_complexity},
      {"learnability", "fraction of circuits learned vs budget", run_learnability},
      {"coherent-info", "reference entropy vs depth, exact and learned", run_coherent_info},
      {"crossing", "finite-size crossing of the scaled decay rate", run_crossing},
      {"scalability", "decode the parent from strip-trained models", run_scalability},
      {"appendix-b", "learnability reconstructed from complexity data", run_reconstruction},
  };
  for (ExperimentCmd& e : experiments) {
    e.cmd = app.add_subcommand(e.name, e.help);
    e.cmd->add_option("--config", e.config, "experiment config (JSON)")->required();
    e.cmd->add_option("--out", e.out, "output directory")->required();
  }

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) {
      return run_gen_dataset(gen_flags, gen_n, gen_first_seed, gen_force, gen_lightcone,
                             gen_wcenter, gen_wwidth, gen_wdepth, gen_out);
    }
    if (dec->parsed()) {
      return run_exact_decode(dec_circuit, dec_validate, dec_out);
    }
    if (trn->parsed()) {
      return run_train(train_dataset, train_epochs, train_batch, train_seed, train_out);
    }
    if (evl->parsed()) {
      return run_eval(eval_model, eval_dataset, eval_epsilon);
    }
    for (ExperimentCmd& e : experiments) {
      if (e.cmd->parsed()) {
        json cfg = load_json(e.config);
        fs::path out(e.out);
        fs::create_directories(out);
        e.run(cfg, out);
        write_manifest(out, e.name, cfg);
        return 0;
      }
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 1;
  }
  return 0;
}
