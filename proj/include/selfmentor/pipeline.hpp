#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "selfmentor/augment.hpp"
#include "selfmentor/data.hpp"
#include "selfmentor/evaluation.hpp"
#include "selfmentor/synthmask.hpp"
#include "selfmentor/training.hpp"
#include "selfmentor/unet.hpp"

namespace selfmentor {

enum class DataSource { synthetic, directory };

struct RunConfig {
  std::uint64_t seed = 1;
  std::filesystem::path output_dir = "run";

  DataSource source = DataSource::synthetic;
  std::filesystem::path images_dir;
  std::filesystem::path masks_dir;
  bool suppress_background = false;
  int synthetic_count = 170;
  int side = 64;

  SplitCounts split{};
  SplitMode split_mode = SplitMode::iid;

  UNetConfig trainee{3, 5};
  UNetConfig reverse{3, 5};
  UNetConfig referee{3, 30};

  PhaseConfig phase{};
  CurriculumSchedule curriculum{};
  CorruptionConfig corruption = CorruptionConfig::defaults_for(64);
  bool corruption_set = false;
  bool augment_enabled = false;

  int eval_seeds = 5;
  std::int64_t baseline_target_params = 8000000;
  int preview_count = 8;

  // Corruption thickness defaults follow the image side unless set explicitly.
  CorruptionConfig effective_corruption() const;
  void validate() const;
};

// Flat "dotted.key = value" lines; '#' starts a comment. Errors carry the
// 1-based line number.
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::vector<std::string>& overrides = {});
// Applies one "key=value" assignment on top of a parsed config.
void apply_setting(RunConfig& config, std::string_view key, std::string_view value, int line = 0);
std::vector<std::string> config_keys();

// Artifact layout and phase drivers. Per-phase seeds are substreams of the
// master seed, so any phase re-run alone behaves as it does in a full run.
class Pipeline {
 public:
  explicit Pipeline(RunConfig config, std::ostream* progress = nullptr);

  const RunConfig& config() const { return config_; }
  const DatasetBundle& bundle();

  std::filesystem::path referee_path() const;
  std::filesystem::path trainee_pretrained_path(int seed_index) const;
  std::filesystem::path reverse_path(int seed_index) const;
  std::filesystem::path trainee_main_path(int seed_index) const;
  std::filesystem::path metrics_path() const;
  std::filesystem::path report_path(std::string_view name) const;

  std::uint64_t phase_seed(std::string_view phase, int seed_index = 0) const;

  void gen_masks(int count = 16);
  void train_referee();
  void pretrain_trainee();
  void train_reverse();
  void train_main();
  // model: "main" (self-mentored) or "pretrained".
  EvalReport evaluate(std::string_view model = "main");
  EvalReport self_train_baseline();
  EvalReport large_unet_baseline();
  void augment_preview();
  EvalReport full_pipeline();

 private:
  UNet require(const std::filesystem::path& path, const std::string& phase) const;
  EpochCallback logger(int seed_index);
  void note(const std::string& line);
  EvalConfigEcho echo(std::string method) const;

  RunConfig config_;
  std::ostream* progress_;
  std::optional<DatasetBundle> bundle_;
};

enum ExitCode { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitPrerequisite = 3, kExitDivergence = 4 };

std::vector<std::string> command_names();

struct CommandOptions {
  int mask_count = 16;              // gen-masks
  std::string eval_model = "main";  // evaluate: main or pretrained
};

// Runs one command, mapping errors to exit codes and messages to `err`.
int run_command(std::string_view command, const RunConfig& config, std::ostream& out,
                std::ostream& err, const CommandOptions& options = {});

}  // namespace selfmentor
