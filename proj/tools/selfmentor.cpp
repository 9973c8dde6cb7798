#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "selfmentor/errors.hpp"
#include "selfmentor/pipeline.hpp"

int main(int argc, char** argv) {
  using namespace selfmentor;
  CLI::App app{"Few-shot capsule segmentation with a synthetic-mask referee"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  std::string eval_model = "main";
  int mask_count = 16;

  app.add_option("-c,--config", config_path, "run configuration file")->required();
  app.add_option("-s,--set", overrides, "override a config key, e.g. --set seed=7");

  for (const std::string& name : command_names()) app.add_subcommand(name);
  app.get_subcommand("gen-masks")->add_option("--count", mask_count, "number of pairs to write");
  app.get_subcommand("evaluate")
      ->add_option("--model", eval_model, "main or pretrained")
      ->check(CLI::IsMember({"main", "pretrained"}));
  app.get_subcommand("gen-masks")->description("write sample corrupted/clean synthetic mask pairs");
  app.get_subcommand("train-referee")->description("phase 1: referee on synthetic pairs");
  app.get_subcommand("pretrain-trainee")->description("phase 2: trainee on S_tr");
  app.get_subcommand("train-reverse")->description("phase 3: reverse net on S_tr");
  app.get_subcommand("train-main")->description("phase 4: curriculum with consistency and reconstruction losses");
  app.get_subcommand("self-train-baseline")->description("teacher/student pseudo-label baseline");
  app.get_subcommand("evaluate")->description("test-set Jaccard report for trained trainees");
  app.get_subcommand("full-pipeline")->description("phases 1-4 then evaluation");
  app.get_subcommand("augment-preview")->description("write before/after augmentation samples");
  app.get_subcommand("large-unet-baseline")->description("wider U-net trained on S_tr only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  RunConfig config;
  try {
    config = load_run_config(config_path, overrides);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  CommandOptions options{mask_count, eval_model};
  return run_command(app.get_subcommands().front()->get_name(), config, std::cout, std::cerr,
                     options);
}
