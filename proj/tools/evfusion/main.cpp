#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "evfusion/checkpoint.hpp"
#include "evfusion/dst.hpp"
#include "evfusion/dst_json.hpp"
#include "evfusion/error.hpp"
#include "evfusion/evaluate.hpp"
#include "evfusion/gradcheck.hpp"
#include "evfusion/slices.hpp"
#include "evfusion/synth.hpp"
#include "evfusion/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace evfusion;

namespace {

enum ExitCode : int { kOk = 0, kConfig = 2, kNumerical = 3, kIo = 4 };

bool g_json = false;

void emit(const json& j, const std::string& text) {
  if (g_json) {
    std::cout << j.dump(2) << '\n';
  } else {
    std::cout << text;
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    json j;
    in >> j;
    return j;
  } catch (const json::exception& e) {
    throw ConfigError(path.string() + " is not valid JSON: " + e.what());
  }
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
}

struct SynthArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int run_synth(const SynthArgs& a) {
  SceneConfig scene = load_scene(a.config);
  if (a.seed) scene.seed = *a.seed;
  const auto manifest = generate_dataset(scene, scene.cases, scene.split, a.out);
  const auto counts = split_counts(scene.cases, scene.split);
  const json summary = {{"manifest", (fs::path(a.out) / "manifest.json").string()},
                        {"cases", manifest.cases.size()},
                        {"train", counts[0]},
                        {"val", counts[1]},
                        {"test", counts[2]}};
  emit(summary, "wrote " + std::to_string(manifest.cases.size()) + " cases (" + std::to_string(counts[0]) +
                    " train, " + std::to_string(counts[1]) + " val, " + std::to_string(counts[2]) + " test) to " +
                    a.out + "\n");
  return kOk;
}

struct TrainArgs {
  std::string data;
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> modality;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> threads;
  bool baseline_softmax = false;
  bool init_only = false;
  bool quiet = false;
};

int run_train(const TrainArgs& a) {
  TrainConfig config = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  if (a.seed) config.seed = *a.seed;
  if (a.modality) config.modality = *a.modality;
  if (a.epochs) config.epochs = *a.epochs;
  if (a.threads) config.threads = *a.threads;
  if (a.baseline_softmax) config.baseline_softmax = true;
  config.validate();

  const Dataset dataset = load_dataset(load_manifest(a.data));
  ensure_dir(a.out);
  const Checkpoint ck = a.init_only ? initial_checkpoint(dataset, config)
                                    : train(dataset, config, [&](const EpochRecord& r) {
                                        if (a.quiet) return;
                                        std::fprintf(stderr, "epoch %zu  loss %.6f  val_dice %.4f\n", r.epoch,
                                                     r.train_loss, r.val_dice);
                                      });
  const fs::path path = fs::path(a.out) / "checkpoint.evck";
  save_checkpoint(ck, path);

  json history = json::array();
  for (const auto& r : ck.history) {
    history.push_back({{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"val_dice", r.val_dice}});
  }
  write_json(fs::path(a.out) / "history.json", history);
  const json summary = {{"checkpoint", path.string()}, {"best_epoch", ck.epoch}, {"epochs_run", ck.history.size()}};
  emit(summary, "wrote " + path.string() + " (best epoch " + std::to_string(ck.epoch) + ")\n");
  return kOk;
}

struct EvalArgs {
  std::string data;
  std::string checkpoint;
  std::string split = "test";
  std::string out;
  std::optional<std::size_t> threads;
};

int run_eval(const EvalArgs& a) {
  const Checkpoint ck = load_checkpoint(a.checkpoint);
  const Dataset dataset = load_dataset(load_manifest(a.data));
  const auto report = evaluate(ck, dataset, a.split, a.threads.value_or(ck.config.threads));
  const json j = report_to_json(report);
  if (!a.out.empty()) {
    ensure_dir(a.out);
    write_json(fs::path(a.out) / "metrics.json", j);
  }
  emit(j, report_to_table(report));
  return kOk;
}

int run_report_beta(const std::string& checkpoint) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  emit(reliability_to_json(ck), reliability_to_table(ck));
  return kOk;
}

struct GradArgs {
  std::uint64_t seed = 0;
  std::size_t count = 50;
  double step = 1e-5;
  double tolerance = 1e-4;
  double abs_floor = 1e-10;
};

int run_gradcheck(const GradArgs& a) {
  const auto sweep = gradcheck_sweep(a.seed, a.count, a.step, a.abs_floor);
  double worst = 0.0;
  std::size_t worst_case = 0;
  for (std::size_t i = 0; i < sweep.size(); ++i) {
    if (sweep[i].result.max_relative_error > worst) {
      worst = sweep[i].result.max_relative_error;
      worst_case = i;
    }
  }
  const bool pass = worst < a.tolerance;
  json j = {{"configurations", sweep.size()},
            {"step", a.step},
            {"tolerance", a.tolerance},
            {"abs_floor", a.abs_floor},
            {"max_relative_error", worst},
            {"pass", pass}};
  std::string text = "checked " + std::to_string(sweep.size()) + " configurations\n";
  char line[160];
  std::snprintf(line, sizeof line, "max relative error %.3e (tolerance %.1e)\n", worst, a.tolerance);
  text += line;
  if (!sweep.empty()) {
    const auto& s = sweep[worst_case].shape;
    j["worst"] = {{"classes", s.classes}, {"sources", s.sources}, {"prototypes", s.prototypes}, {"dim", s.dim},
                  {"seed", sweep[worst_case].seed}};
    std::snprintf(line, sizeof line, "worst: K=%zu H=%zu I=%zu d=%zu\n", s.classes, s.sources, s.prototypes, s.dim);
    text += line;
  }
  emit(j, text);
  return pass ? kOk : kNumerical;
}

int run_combine(const std::string& input) {
  const json j = read_json(input);
  const json& list = j.is_array() ? j : j.at("masses");
  if (!list.is_array() || list.empty()) throw ConfigError("combine expects a non-empty list of mass functions");
  std::vector<dst::MassFunction> masses;
  for (const auto& m : list) masses.push_back(dst::mass_from_json(m));
  dst::MassFunction combined = masses.front();
  json conflicts = json::array();
  for (std::size_t i = 1; i < masses.size(); ++i) {
    conflicts.push_back(dst::conflict(combined, masses[i]));
    combined = dst::dempster_combine(combined, masses[i]);
  }
  const json out = {{"combined", dst::mass_to_json(combined)},
                    {"contour", dst::contour_to_json(dst::contour(combined))},
                    {"conflicts", conflicts}};
  std::cout << out.dump(2) << '\n';
  return kOk;
}

struct SliceArgs {
  std::string data;
  std::string checkpoint;
  std::string case_id;
  std::string out;
};

int run_export_slices(const SliceArgs& a) {
  const Dataset dataset = load_dataset(load_manifest(a.data));
  const Case* target = nullptr;
  for (const auto& c : dataset.cases) {
    if ((a.case_id.empty() && c.split == "test") || c.id == a.case_id) {
      target = &c;
      break;
    }
  }
  if (!target) throw ConfigError(a.case_id.empty() ? "dataset has no test case" : "unknown case '" + a.case_id + "'");

  const std::size_t classes = dataset.scene.classes();
  const auto truth = labels_of(target->labels, classes);
  auto predicted = truth;
  if (!a.checkpoint.empty()) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const auto prepared = prepare_case(*target, classes, ck.config.window);
    predicted = predicted_labels(predict_scores(ck.params, prepared.features, ck.config.threads));
  }
  std::size_t files = 0;
  for (std::size_t h = 0; h < target->modalities.size(); ++h) {
    const auto& name = dataset.scene.modality_names[h];
    files += export_pgm_slices(target->modalities[h], fs::path(a.out) / name, name).size();
  }
  files += export_overlay_slices(target->modalities.front(), truth, predicted, fs::path(a.out) / "overlay").size();
  emit({{"case", target->id}, {"files", files}, {"out", a.out}},
       "wrote " + std::to_string(files) + " slice images for " + target->id + " to " + a.out + "\n");
  return kOk;
}

int report_error(const std::string& type, const std::string& message, int code) {
  if (g_json) {
    std::cout << json{{"error", {{"type", type}, {"message", message}, {"exit_code", code}}}}.dump(2) << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Evidential multi-modality segmentation toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("--json", g_json, "Machine-readable JSON output, including errors");

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset from a JSON scene config");
  synth->add_option("--config", synth_args.config, "Scene config JSON")->required();
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->add_option("--seed", synth_args.seed, "Override the scene seed");

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train a model and write the best-validation checkpoint");
  train_cmd->add_option("--data", train_args.data, "Dataset directory or manifest.json")->required();
  train_cmd->add_option("--config", train_args.config, "Training config JSON");
  train_cmd->add_option("--out", train_args.out, "Output directory")->required();
  train_cmd->add_option("--seed", train_args.seed, "Run seed");
  train_cmd->add_option("--modality", train_args.modality, "Train on a single modality (index)");
  train_cmd->add_option("--epochs", train_args.epochs, "Override the epoch count");
  train_cmd->add_option("--threads", train_args.threads, "Worker threads");
  train_cmd->add_flag("--baseline-softmax", train_args.baseline_softmax, "Linear softmax head instead of ES + fusion");
  train_cmd->add_flag("--init-only", train_args.init_only, "Write the initialized, untrained checkpoint");
  train_cmd->add_flag("--quiet", train_args.quiet, "Do not print per-epoch progress");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Score a checkpoint on a dataset split");
  eval_cmd->add_option("--data", eval_args.data, "Dataset directory or manifest.json")->required();
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint file")->required();
  eval_cmd->add_option("--split", eval_args.split, "train, val or test")
      ->check(CLI::IsMember({"train", "val", "test"}));
  eval_cmd->add_option("--out", eval_args.out, "Directory for metrics.json");
  eval_cmd->add_option("--threads", eval_args.threads, "Worker threads");

  std::string beta_checkpoint;
  auto* beta = app.add_subcommand("report-beta", "Print the learned reliability matrix");
  beta->add_option("--checkpoint", beta_checkpoint, "Checkpoint file")->required();

  GradArgs grad_args;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of the loss gradient");
  grad->add_option("--seed", grad_args.seed, "Sweep seed");
  grad->add_option("--count", grad_args.count, "Number of random configurations");
  grad->add_option("--step", grad_args.step, "Central-difference step");
  grad->add_option("--tolerance", grad_args.tolerance, "Maximum relative error");
  grad->add_option("--abs-floor", grad_args.abs_floor, "Absolute differences at or below this count as exact");

  std::string combine_input;
  auto* combine = app.add_subcommand("combine", "Combine mass functions from JSON with Dempster's rule");
  combine->add_option("input", combine_input, "JSON file with a list of mass functions")->required();

  SliceArgs slice_args;
  auto* slices = app.add_subcommand("export-slices", "Write PGM slices and a label overlay for one case");
  slices->add_option("--data", slice_args.data, "Dataset directory or manifest.json")->required();
  slices->add_option("--checkpoint", slice_args.checkpoint, "Checkpoint for the predicted overlay");
  slices->add_option("--case", slice_args.case_id, "Case id (default: first test case)");
  slices->add_option("--out", slice_args.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), kConfig);
  }

  try {
    if (*synth) return run_synth(synth_args);
    if (*train_cmd) return run_train(train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*beta) return run_report_beta(beta_checkpoint);
    if (*grad) return run_gradcheck(grad_args);
    if (*combine) return run_combine(combine_input);
    if (*slices) return run_export_slices(slice_args);
  } catch (const ConfigError& e) {
    return report_error("config", e.what(), kConfig);
  } catch (const InvalidArgument& e) {
    return report_error("invalid_argument", e.what(), kConfig);
  } catch (const NumericalError& e) {
    return report_error("numerical", e.what(), kNumerical);
  } catch (const IoError& e) {
    return report_error("io", e.what(), kIo);
  } catch (const json::exception& e) {
    return report_error("config", e.what(), kConfig);
  } catch (const std::exception& e) {
    return report_error("internal", e.what(), 1);
  }
  return kOk;
}
