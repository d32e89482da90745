// Command-line front end for the weak-to-strong pipeline. Every subcommand
// operates on a run directory; completed steps found there are verified and
// reused, so invoking subcommands out of order or twice is safe.

#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI/CLI.hpp>

#include "w2s/config.hpp"
#include "w2s/errors.hpp"
#include "w2s/evalharness.hpp"
#include "w2s/orchestrator.hpp"
#include "w2s/store.hpp"
#include "w2s/util.hpp"

namespace {

struct GlobalArgs {
  std::string config_path;
  std::string run_dir;
  std::string halt_after;
};

w2s::Runner make_runner(const GlobalArgs& args) {
  if (args.config_path.empty()) throw w2s::UsageError("--config is required");
  if (args.run_dir.empty()) throw w2s::UsageError("--run-dir is required");
  w2s::Runner runner(w2s::RunConfig::load_file(args.config_path), args.run_dir);
  if (!args.halt_after.empty()) runner.set_halt_after(args.halt_after);
  return runner;
}

void print_report(const w2s::EvalReport& report, const std::string& out_path) {
  if (!out_path.empty()) {
    w2s::write_file_atomic(out_path, w2s::canonical_dump(w2s::to_json(report)) + "\n");
  }
  std::cout << "model=" << report.model_id << " label=" << report.variant_label
            << " dataset=" << to_string(report.dataset) << " n=" << report.n_items
            << " correct=" << report.n_correct << " accuracy=" << report.accuracy << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"weak-to-strong supervision pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand name

  GlobalArgs args;
  app.add_option("--config", args.config_path, "run manifest (JSON)");
  app.add_option("--run-dir", args.run_dir, "run directory (artifacts and state)");
  app.add_option("--halt-after", args.halt_after, "stop once the named step completes");

  std::string base_id;
  auto* prepare = app.add_subcommand(
      "prepare-teacher", "build the rejection-sampled corpus and fine-tune the weak teacher(s)");
  prepare->add_option("--base", base_id, "only this configured base model");

  std::string stage_id;
  auto* elicit_cmd =
      app.add_subcommand("elicit", "sample, cluster and summarize teacher uncertainty");
  elicit_cmd->add_option("--stage", stage_id, "stage id")->required();

  auto* proactive_cmd =
      app.add_subcommand("proactive", "refine teacher demos into student supervision");
  proactive_cmd->add_option("--stage", stage_id, "stage id")->required();

  auto* run_stage_cmd =
      app.add_subcommand("run-stage", "run one stage end to end (demos → fine-tuned student)");
  run_stage_cmd->add_option("--stage", stage_id, "stage id")->required();

  auto* run_cascade_cmd = app.add_subcommand("run-cascade", "run every configured stage in order");

  std::string model_ref;
  std::string label;
  std::string eval_file;
  std::string out_path;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "score a model on an evaluation file");
  evaluate_cmd->add_option("--model", model_ref, "model id or @<stage_id>")->required();
  evaluate_cmd->add_option("--label", label, "row label for comparison tables")->required();
  evaluate_cmd->add_option("--eval-file", eval_file, "override the configured evaluation file");
  evaluate_cmd->add_option("--out", out_path, "write the full report (JSON) here");

  auto* resume_cmd =
      app.add_subcommand("resume", "continue an interrupted run from its run directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (resume_cmd->parsed()) {
      if (args.run_dir.empty()) throw w2s::UsageError("--run-dir is required");
      w2s::Runner runner = w2s::Runner::resume(args.run_dir);
      if (!args.halt_after.empty()) runner.set_halt_after(args.halt_after);
      if (runner.config().stages.empty()) {
        runner.prepare_all_teachers();
      } else {
        const w2s::ModelRef last = runner.run_cascade();
        std::cout << "cascade complete; final student: " << last.id << "\n";
      }
      return 0;
    }

    w2s::Runner runner = make_runner(args);

    if (prepare->parsed()) {
      if (base_id.empty()) {
        runner.prepare_all_teachers();
      } else {
        const w2s::ModelRef teacher = runner.ensure_teacher(base_id);
        std::cout << "teacher ready: " << teacher.id << "\n";
      }
    } else if (elicit_cmd->parsed()) {
      const auto demos = runner.ensure_demos(stage_id);
      std::size_t total = 0;
      for (const auto& per_teacher : demos) total += per_teacher.size();
      std::cout << "elicited " << total << " demo(s) across " << demos.size() << " teacher(s)\n";
    } else if (proactive_cmd->parsed()) {
      const auto records = runner.ensure_supervision(stage_id);
      std::cout << "supervision records: " << records.size() << "\n";
    } else if (run_stage_cmd->parsed()) {
      const w2s::ModelRef student = runner.run_stage(stage_id);
      std::cout << "stage " << stage_id << " complete; student: " << student.id << "\n";
    } else if (run_cascade_cmd->parsed()) {
      const w2s::ModelRef last = runner.run_cascade();
      std::cout << "cascade complete; final student: " << last.id << "\n";
    } else if (evaluate_cmd->parsed()) {
      std::filesystem::path path = eval_file.empty()
                                       ? runner.config().dataset.eval_file
                                       : std::filesystem::path(eval_file);
      if (path.empty()) {
        throw w2s::UsageError("no evaluation file: set dataset.eval_file or pass --eval-file");
      }
      const auto eval_set = w2s::load_dataset(runner.config().dataset.name, path);
      print_report(runner.evaluate_model(model_ref, label, eval_set), out_path);
    }
    return 0;
  } catch (const w2s::HaltRequested& halt) {
    std::cout << "halted after step '" << halt.step << "'\n";
    return 0;
  } catch (const w2s::UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
