#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "selfmentor/data.hpp"
#include "selfmentor/training.hpp"
#include "selfmentor/unet.hpp"

namespace selfmentor {

// Jaccard index in percent between a binary mask and a soft prediction
// thresholded at `threshold` (values equal to it count as positive).
// Two empty masks agree perfectly: 100.
double jaccard(const Mask& y, const Image& y_hat_soft, float threshold = 0.5f);

using Predictor = std::function<Image(const Image&)>;
using ModelFactory = std::function<Predictor(std::uint64_t seed)>;

Predictor unet_predictor(std::shared_ptr<const UNet> net);

struct EvalConfigEcho {
  std::string method = "unet";
  int n_s_tr = 0;
  int n_s_val = 0;
  double lambda_ae = 0.0;
  LossKind loss_kind = LossKind::mse;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::vector<double> per_sample;
  double mean = 0.0;
};

struct EvalReport {
  EvalConfigEcho config;
  std::vector<std::string> sample_names;
  std::vector<SeedResult> seeds;
  double grand_mean = 0.0;
};

std::vector<double> jaccard_per_sample(const Predictor& predictor, const std::vector<Sample>& test);

// One model per seed; per-seed mean test JI and their grand mean.
EvalReport evaluate(const ModelFactory& factory, const DatasetBundle& bundle,
                    const std::vector<std::uint64_t>& seeds, const EvalConfigEcho& echo = {});

// The conventional seed list: n substreams of a master seed.
std::vector<std::uint64_t> seed_list(std::uint64_t master, int n = 5);

// "key: value" lines followed by a per-sample CSV block.
std::string format_report(const EvalReport& report);
void write_report(const EvalReport& report, const std::filesystem::path& path);

struct SelfTrainingResult {
  UNet student;
  int pseudo_labels = 0;
  PhaseResult teacher_phase;
  PhaseResult student_phase;
};

// Teacher on S_tr; its thresholded outputs label U_tr and U_val; a fresh
// student learns from true + pseudo pairs with early stopping on true +
// pseudo validation pairs.
SelfTrainingResult self_training_baseline(const DatasetBundle& bundle, const UNetConfig& config,
                                          const PhaseConfig& phase, std::uint64_t seed,
                                          const EpochCallback& log = {});

// Smallest base width F at the config's depth whose parameter count reaches target.
int select_base_filters(std::int64_t target_params, const UNetConfig& trainee);

struct LargeUNetResult {
  UNet net;
  int base_filters = 0;
  PhaseResult phase;
};

// Standalone pretraining of the widened U-net.
LargeUNetResult large_unet_baseline(const DatasetBundle& bundle, std::int64_t target_params,
                                    const UNetConfig& trainee, const PhaseConfig& phase,
                                    std::uint64_t seed, const EpochCallback& log = {});

}  // namespace selfmentor
