#pragma once

#include <filesystem>
#include <string>

namespace testing_support {

// A complete pipeline that finishes in seconds: depth-1 nets on 64x64 capsules.
inline std::string tiny_run_config(const std::filesystem::path& output_dir, int seed = 3) {
  return "seed = " + std::to_string(seed) + "\n" +
         "output_dir = " + output_dir.string() + "\n"
         "data.synthetic_count = 14\n"
         "split.s_train = 2\nsplit.s_val = 1\nsplit.u_train = 5\nsplit.u_val = 2\nsplit.test = 3\n"
         "trainee.depth = 1\ntrainee.base_filters = 2\n"
         "reverse.depth = 1\nreverse.base_filters = 2\n"
         "referee.depth = 1\nreferee.base_filters = 2\n"
         "phase.max_epochs = 2\nphase.patience_referee = 1\n"
         "phase.synthetic_train_size = 3\nphase.synthetic_val_size = 2\n"
         "phase.learning_rate = 0.001\n"
         "curriculum.start_fraction = 0.5\ncurriculum.increment = 0.5\ncurriculum.steps = 1\n"
         "eval.seeds = 2\n";
}

}  // namespace testing_support
