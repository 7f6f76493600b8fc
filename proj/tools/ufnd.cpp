#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "ufnd/checkpoint.hpp"
#include "ufnd/kv_config.hpp"

using namespace ufnd::cli;

namespace {

void shared_flags(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.configs, "key=value config file (repeatable, later wins)");
  cmd->add_option("--seed", o.seed, "run seed");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--batch-size", o.batch_size, "minibatch size");
  cmd->add_option("--epochs", o.epochs, "training epochs");
  cmd->add_option("--max-seq-len", o.max_seq_len, "encoded sequence length");
  cmd->add_option("--preprocess", o.preprocess, "short-word removal on|off");
  cmd->add_option("--blocks", o.blocks, "encoder blocks to keep, e.g. 1,5,9");
  cmd->add_option("--freeze-encoder", o.freeze_encoder, "on|off");
  cmd->add_option("--threshold", o.threshold, "acceptance threshold");
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  CLI::App app{"ufnd: unified fake-news detector training harness"};
  app.require_subcommand(1);

  Overrides o;
  SynthArgs synth;
  TrainArgs train;
  UnifyArgs unify;
  AblateArgs ablate;
  EvalArgs eval;

  auto* c_synth = app.add_subcommand("synth", "write synthetic toy datasets");
  shared_flags(c_synth, o);
  c_synth->add_option("--docs", synth.docs, "documents per dataset");
  c_synth->add_option("--p-fake", synth.p_fake, "marker probability for fake documents");
  c_synth->add_option("--p-real", synth.p_real, "marker probability for real documents");
  c_synth->add_option("--datasets", synth.datasets, "number of datasets");

  auto* c_prep = app.add_subcommand("prep", "build vocabulary and encoded corpora");
  shared_flags(c_prep, o);

  auto* c_train = app.add_subcommand("train", "train one model on one encoded dataset");
  shared_flags(c_train, o);
  c_train->add_option("--data", train.data_dir, "directory written by prep")->required();
  c_train->add_option("--dataset", train.dataset, "dataset name (default combined)");
  c_train->add_option("--resume", train.resume, "continue from a last.ckpt");

  auto* c_unify = app.add_subcommand("unify", "phase one, phase two and the preprocessing comparison");
  shared_flags(c_unify, o);
  c_unify->add_option("--baselines", unify.baselines, "baseline accuracy file");
  c_unify->add_flag("--force-phase-two", unify.force_phase_two, "run phase two even if phase one is infeasible");

  auto* c_ablate = app.add_subcommand("ablate", "encoder-block ablation grid");
  shared_flags(c_ablate, o);
  c_ablate->add_option("--subsets", ablate.subsets, "block subsets, ';'-separated");
  c_ablate->add_option("--batch-sizes", ablate.batch_sizes, "comma-separated batch sizes");

  auto* c_eval = app.add_subcommand("eval", "evaluate a checkpoint on an encoded corpus");
  shared_flags(c_eval, o);
  c_eval->add_option("--checkpoint", eval.checkpoint, "checkpoint file")->required();
  c_eval->add_option("--data", eval.data_dir, "directory written by prep")->required();
  c_eval->add_option("--set", eval.set, "encoded corpus name, e.g. combined.test")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (c_synth->parsed()) return cmd_synth(o, synth, args);
    if (c_prep->parsed()) return cmd_prep(o, args);
    if (c_train->parsed()) return cmd_train(o, train, args);
    if (c_unify->parsed()) return cmd_unify(o, unify, args);
    if (c_ablate->parsed()) return cmd_ablate(o, ablate, args);
    if (c_eval->parsed()) return cmd_eval(o, eval, args);
  } catch (const InputError& e) {
    std::cerr << "ufnd: error: " << e.what() << "\n";
    return 2;
  } catch (const ufnd::ConfigError& e) {
    std::cerr << "ufnd: error: " << e.what() << "\n";
    return 2;
  } catch (const IncompatibleError& e) {
    std::cerr << "ufnd: error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "ufnd: error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
