#pragma once

#include <string>
#include <vector>

#include "app.hpp"

namespace ufnd::cli {

struct SynthArgs {
  std::size_t docs = 200;
  double p_fake = 0.9;
  double p_real = 0.1;
  std::size_t datasets = 3;
};

struct TrainArgs {
  std::string data_dir;
  std::string dataset = "combined";
  std::string resume;
};

struct UnifyArgs {
  std::string baselines;
  bool force_phase_two = false;
};

struct AblateArgs {
  std::string subsets;      // "1,3,5;1,9;5"
  std::string batch_sizes;  // "16,32"
};

struct EvalArgs {
  std::string checkpoint;
  std::string data_dir;
  std::string set;  // e.g. "combined.test"
};

int cmd_synth(const Overrides& o, const SynthArgs& a, const std::vector<std::string>& argv);
int cmd_prep(const Overrides& o, const std::vector<std::string>& argv);
int cmd_train(const Overrides& o, const TrainArgs& a, const std::vector<std::string>& argv);
int cmd_unify(const Overrides& o, const UnifyArgs& a, const std::vector<std::string>& argv);
int cmd_ablate(const Overrides& o, const AblateArgs& a, const std::vector<std::string>& argv);
int cmd_eval(const Overrides& o, const EvalArgs& a, const std::vector<std::string>& argv);

}  // namespace ufnd::cli
