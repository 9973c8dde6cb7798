#include "selfmentor/evaluation.hpp"

#include <cstdio>
#include <numeric>
#include <sstream>

#include "selfmentor/errors.hpp"
#include "selfmentor/io.hpp"

namespace selfmentor {

double jaccard(const Mask& y, const Image& y_hat_soft, float threshold) {
  if (!y.same_size(y_hat_soft)) {
    throw ShapeError("jaccard: mask is " + std::to_string(y.height) + "x" + std::to_string(y.width) +
                     " but prediction is " + std::to_string(y_hat_soft.height) + "x" +
                     std::to_string(y_hat_soft.width));
  }
  std::size_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const bool a = y.pixels[i] >= threshold;
    const bool b = y_hat_soft.pixels[i] >= threshold;
    inter += a && b;
    uni += a || b;
  }
  if (uni == 0) return 100.0;
  return 100.0 * static_cast<double>(inter) / static_cast<double>(uni);
}

Predictor unet_predictor(std::shared_ptr<const UNet> net) {
  return [net = std::move(net)](const Image& x) {
    NoGradGuard guard;
    return to_image(net->forward(to_tensor(x)));
  };
}

std::vector<double> jaccard_per_sample(const Predictor& predictor, const std::vector<Sample>& test) {
  std::vector<double> out;
  out.reserve(test.size());
  for (const Sample& s : test) {
    if (!s.y) throw ContractError("test sample '" + s.name + "' has no mask");
    out.push_back(jaccard(*s.y, predictor(s.x)));
  }
  return out;
}

EvalReport evaluate(const ModelFactory& factory, const DatasetBundle& bundle,
                    const std::vector<std::uint64_t>& seeds, const EvalConfigEcho& echo) {
  if (bundle.test.empty()) throw ContractError("evaluation needs a non-empty test set");
  if (seeds.empty()) throw ContractError("evaluation needs at least one seed");
  EvalReport report;
  report.config = echo;
  for (const Sample& s : bundle.test) report.sample_names.push_back(s.name);
  double sum = 0.0;
  for (std::uint64_t seed : seeds) {
    SeedResult r;
    r.seed = seed;
    r.per_sample = jaccard_per_sample(factory(seed), bundle.test);
    r.mean = std::accumulate(r.per_sample.begin(), r.per_sample.end(), 0.0) /
             static_cast<double>(r.per_sample.size());
    sum += r.mean;
    report.seeds.push_back(std::move(r));
  }
  report.grand_mean = sum / static_cast<double>(seeds.size());
  return report;
}

std::vector<std::uint64_t> seed_list(std::uint64_t master, int n) {
  std::vector<std::uint64_t> out;
  for (int i = 0; i < n; ++i) out.push_back(derive_seed(master, static_cast<std::uint64_t>(i)));
  return out;
}

namespace {

std::string fixed(double v, int digits = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

std::string format_report(const EvalReport& report) {
  std::ostringstream out;
  out << "method: " << report.config.method << "\n";
  out << "n_s_tr: " << report.config.n_s_tr << "\n";
  out << "n_s_val: " << report.config.n_s_val << "\n";
  out << "lambda_ae: " << fixed(report.config.lambda_ae, 4) << "\n";
  out << "loss_kind: " << to_string(report.config.loss_kind) << "\n";
  out << "test_samples: " << report.sample_names.size() << "\n";
  out << "seeds: " << report.seeds.size() << "\n";
  for (std::size_t i = 0; i < report.seeds.size(); ++i) {
    out << "seed." << i << ": " << report.seeds[i].seed << "\n";
    out << "seed." << i << ".mean_ji: " << fixed(report.seeds[i].mean) << "\n";
  }
  out << "grand_mean_ji: " << fixed(report.grand_mean) << "\n";
  out << "\nseed_index,sample,ji\n";
  for (std::size_t i = 0; i < report.seeds.size(); ++i) {
    for (std::size_t j = 0; j < report.seeds[i].per_sample.size(); ++j) {
      out << i << "," << report.sample_names[j] << "," << fixed(report.seeds[i].per_sample[j]) << "\n";
    }
  }
  return out.str();
}

void write_report(const EvalReport& report, const std::filesystem::path& path) {
  write_file_atomic(path, format_report(report));
}

SelfTrainingResult self_training_baseline(const DatasetBundle& bundle, const UNetConfig& config,
                                          const PhaseConfig& phase, std::uint64_t seed,
                                          const EpochCallback& log) {
  UNet teacher = UNet::build(config, derive_seed(seed, "teacher"));
  PhaseResult teacher_phase = pretrain_trainee(teacher, bundle.s_train, bundle.s_val, phase,
                                               derive_seed(seed, "teacher-train"), log);

  auto pseudo = [&teacher](const std::vector<Sample>& unlabeled) {
    NoGradGuard guard;
    std::vector<Sample> out;
    for (const Sample& s : unlabeled) {
      out.push_back({s.name + "#pseudo", s.x, threshold(to_image(teacher.forward(to_tensor(s.x))))});
    }
    return out;
  };
  std::vector<Sample> train = bundle.s_train;
  std::vector<Sample> val = bundle.s_val;
  std::vector<Sample> pseudo_train = pseudo(bundle.u_train);
  std::vector<Sample> pseudo_val = pseudo(bundle.u_val);
  train.insert(train.end(), pseudo_train.begin(), pseudo_train.end());
  val.insert(val.end(), pseudo_val.begin(), pseudo_val.end());

  SelfTrainingResult result{UNet::build(config, derive_seed(seed, "student")),
                            static_cast<int>(pseudo_train.size() + pseudo_val.size()),
                            teacher_phase,
                            {}};
  result.student_phase =
      pretrain_trainee(result.student, train, val, phase, derive_seed(seed, "student-train"), log);
  return result;
}

int select_base_filters(std::int64_t target_params, const UNetConfig& trainee) {
  if (target_params < parameter_count(trainee)) {
    throw ContractError("target parameter count is below the trainee's " +
                        std::to_string(parameter_count(trainee)));
  }
  UNetConfig c = trainee;
  for (c.base_filters = 1;; ++c.base_filters) {
    if (parameter_count(c) >= target_params) return c.base_filters;
  }
}

LargeUNetResult large_unet_baseline(const DatasetBundle& bundle, std::int64_t target_params,
                                    const UNetConfig& trainee, const PhaseConfig& phase,
                                    std::uint64_t seed, const EpochCallback& log) {
  UNetConfig c = trainee;
  c.base_filters = select_base_filters(target_params, trainee);
  LargeUNetResult result{UNet::build(c, derive_seed(seed, "large-unet")), c.base_filters, {}};
  result.phase = pretrain_trainee(result.net, bundle.s_train, bundle.s_val, phase,
                                  derive_seed(seed, "large-unet-train"), log);
  return result;
}

}  // namespace selfmentor
