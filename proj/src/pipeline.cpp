#include "selfmentor/pipeline.hpp"

#include <charconv>
#include <fstream>
#include <map>
#include <sstream>

#include "selfmentor/errors.hpp"
#include "selfmentor/io.hpp"

namespace selfmentor {

namespace fs = std::filesystem;

CorruptionConfig RunConfig::effective_corruption() const {
  if (corruption_set) return corruption;
  CorruptionConfig c = CorruptionConfig::defaults_for(side);
  c.noise_sigma = corruption.noise_sigma;
  return c;
}

void RunConfig::validate() const {
  auto check = [](auto&& fn) {
    try {
      fn();
    } catch (const std::logic_error& e) {
      throw ConfigError(e.what());
    }
  };
  check([&] { trainee.validate(); });
  check([&] { reverse.validate(); });
  check([&] { referee.validate(); });
  check([&] { phase.validate(); });
  check([&] { curriculum.validate(); });
  check([&] { effective_corruption().validate(side); });
  if (side <= 0 || side % trainee.required_divisor() != 0) {
    throw ConfigError("data.side must be a positive multiple of " +
                      std::to_string(trainee.required_divisor()));
  }
  if (eval_seeds < 1) throw ConfigError("eval.seeds must be >= 1");
  if (source == DataSource::directory) {
    if (!fs::is_directory(images_dir)) {
      throw ConfigError("data.images_dir does not exist: " + images_dir.string());
    }
    if (!fs::is_directory(masks_dir)) {
      throw ConfigError("data.masks_dir does not exist: " + masks_dir.string());
    }
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
T parse_number(std::string_view value, std::string_view key, int line) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) {
    throw ConfigError("invalid value '" + std::string(value) + "' for " + std::string(key), line);
  }
  return out;
}

bool parse_bool(std::string_view value, std::string_view key, int line) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  throw ConfigError("invalid boolean '" + std::string(value) + "' for " + std::string(key), line);
}

using Setter = std::function<void(RunConfig&, std::string_view, int)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = [] {
    std::map<std::string, Setter, std::less<>> t;
    auto integer = [&t](const std::string& key, auto member) {
      t[key] = [key, member](RunConfig& c, std::string_view v, int line) {
        member(c) = parse_number<int>(v, key, line);
      };
    };
    auto real = [&t](const std::string& key, auto member) {
      t[key] = [key, member](RunConfig& c, std::string_view v, int line) {
        member(c) = parse_number<double>(v, key, line);
      };
    };
    auto flag = [&t](const std::string& key, auto member) {
      t[key] = [key, member](RunConfig& c, std::string_view v, int line) {
        member(c) = parse_bool(v, key, line);
      };
    };
    t["seed"] = [](RunConfig& c, std::string_view v, int line) {
      c.seed = parse_number<std::uint64_t>(v, "seed", line);
    };
    t["output_dir"] = [](RunConfig& c, std::string_view v, int) { c.output_dir = std::string(v); };
    t["data.source"] = [](RunConfig& c, std::string_view v, int line) {
      if (v == "synthetic") c.source = DataSource::synthetic;
      else if (v == "directory") c.source = DataSource::directory;
      else throw ConfigError("data.source must be synthetic or directory", line);
    };
    t["data.images_dir"] = [](RunConfig& c, std::string_view v, int) { c.images_dir = std::string(v); };
    t["data.masks_dir"] = [](RunConfig& c, std::string_view v, int) { c.masks_dir = std::string(v); };
    flag("data.suppress_background", [](RunConfig& c) -> bool& { return c.suppress_background; });
    integer("data.synthetic_count", [](RunConfig& c) -> int& { return c.synthetic_count; });
    integer("data.side", [](RunConfig& c) -> int& { return c.side; });
    integer("split.s_train", [](RunConfig& c) -> int& { return c.split.s_train; });
    integer("split.s_val", [](RunConfig& c) -> int& { return c.split.s_val; });
    integer("split.u_train", [](RunConfig& c) -> int& { return c.split.u_train; });
    integer("split.u_val", [](RunConfig& c) -> int& { return c.split.u_val; });
    integer("split.test", [](RunConfig& c) -> int& { return c.split.test; });
    t["split.mode"] = [](RunConfig& c, std::string_view v, int line) {
      try {
        c.split_mode = parse_split_mode(v);
      } catch (const std::exception& e) {
        throw ConfigError(e.what(), line);
      }
    };
    for (const char* net : {"trainee", "reverse", "referee"}) {
      const std::string n = net;
      auto pick = [n](RunConfig& c) -> UNetConfig& {
        return n == "trainee" ? c.trainee : n == "reverse" ? c.reverse : c.referee;
      };
      integer(n + ".depth", [pick](RunConfig& c) -> int& { return pick(c).depth; });
      integer(n + ".base_filters", [pick](RunConfig& c) -> int& { return pick(c).base_filters; });
    }
    real("phase.lambda_ae", [](RunConfig& c) -> double& { return c.phase.lambda_ae; });
    integer("phase.patience_pretrain", [](RunConfig& c) -> int& { return c.phase.patience_pretrain; });
    integer("phase.patience_main", [](RunConfig& c) -> int& { return c.phase.patience_main; });
    integer("phase.patience_referee", [](RunConfig& c) -> int& { return c.phase.patience_referee; });
    t["phase.loss"] = [](RunConfig& c, std::string_view v, int line) {
      try {
        c.phase.loss_kind = parse_loss_kind(v);
      } catch (const std::exception& e) {
        throw ConfigError(e.what(), line);
      }
    };
    real("phase.learning_rate", [](RunConfig& c) -> double& { return c.phase.optimizer.learning_rate; });
    real("phase.discount", [](RunConfig& c) -> double& { return c.phase.optimizer.discount; });
    real("phase.epsilon", [](RunConfig& c) -> double& { return c.phase.optimizer.epsilon; });
    integer("phase.synthetic_train_size", [](RunConfig& c) -> int& { return c.phase.synthetic_train_size; });
    integer("phase.synthetic_val_size", [](RunConfig& c) -> int& { return c.phase.synthetic_val_size; });
    integer("phase.max_epochs", [](RunConfig& c) -> int& { return c.phase.max_epochs; });
    integer("phase.max_restarts", [](RunConfig& c) -> int& { return c.phase.max_restarts; });
    flag("phase.select_maximal_validation",
         [](RunConfig& c) -> bool& { return c.phase.select_maximal_validation; });
    real("curriculum.start_fraction", [](RunConfig& c) -> double& { return c.curriculum.start_fraction; });
    real("curriculum.increment", [](RunConfig& c) -> double& { return c.curriculum.increment; });
    integer("curriculum.steps", [](RunConfig& c) -> int& { return c.curriculum.steps; });
    t["corruption.min_thickness"] = [](RunConfig& c, std::string_view v, int line) {
      c.corruption = c.effective_corruption();
      c.corruption.min_thickness = parse_number<int>(v, "corruption.min_thickness", line);
      c.corruption_set = true;
    };
    t["corruption.max_thickness"] = [](RunConfig& c, std::string_view v, int line) {
      c.corruption = c.effective_corruption();
      c.corruption.max_thickness = parse_number<int>(v, "corruption.max_thickness", line);
      c.corruption_set = true;
    };
    real("corruption.noise_sigma", [](RunConfig& c) -> double& { return c.corruption.noise_sigma; });
    flag("augment.enabled", [](RunConfig& c) -> bool& { return c.augment_enabled; });
    t["augment.target"] = [](RunConfig& c, std::string_view v, int line) {
      try {
        c.phase.augment_target = parse_augment_target(v);
      } catch (const std::exception& e) {
        throw ConfigError(e.what(), line);
      }
    };
    auto aug = [](RunConfig& c) -> AugmentConfig& {
      if (!c.phase.augment) c.phase.augment = AugmentConfig{};
      return *c.phase.augment;
    };
    integer("augment.output_set_size", [aug](RunConfig& c) -> int& { return aug(c).output_set_size; });
    real("augment.geometric_probability",
         [aug](RunConfig& c) -> double& { return aug(c).geometric_probability; });
    real("augment.salt_pepper_fraction",
         [aug](RunConfig& c) -> double& { return aug(c).salt_pepper_fraction; });
    real("augment.gaussian_sigma", [aug](RunConfig& c) -> double& { return aug(c).gaussian_sigma; });
    real("augment.uniform_half_width",
         [aug](RunConfig& c) -> double& { return aug(c).uniform_half_width; });
    integer("augment.preview_count", [](RunConfig& c) -> int& { return c.preview_count; });
    integer("eval.seeds", [](RunConfig& c) -> int& { return c.eval_seeds; });
    t["baseline.target_params"] = [](RunConfig& c, std::string_view v, int line) {
      c.baseline_target_params = parse_number<std::int64_t>(v, "baseline.target_params", line);
    };
    return t;
  }();
  return table;
}

}  // namespace

void apply_setting(RunConfig& config, std::string_view key, std::string_view value, int line) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown key '" + std::string(key) + "'", line);
  if (value.empty()) throw ConfigError("missing value for '" + std::string(key) + "'", line);
  it->second(config, value, line);
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [k, _] : setters()) keys.push_back(k);
  return keys;
}

namespace {

void apply_line(RunConfig& config, std::string_view raw, int line, std::map<std::string, int>* seen) {
  std::string text(raw);
  if (const auto hash = text.find('#'); hash != std::string::npos) text.resize(hash);
  text = trim(text);
  if (text.empty()) return;
  const auto eq = text.find('=');
  if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line);
  const std::string key = trim(std::string_view(text).substr(0, eq));
  const std::string value = trim(std::string_view(text).substr(eq + 1));
  if (key.empty()) throw ConfigError("missing key before '='", line);
  if (seen) {
    if (auto [it, fresh] = seen->emplace(key, line); !fresh) {
      throw ConfigError("duplicate key '" + key + "' (first set on line " +
                            std::to_string(it->second) + ")",
                        line);
    }
  }
  apply_setting(config, key, value, line);
}

// augment.* settings are collected even while augmentation is disabled.
RunConfig finish(RunConfig c) {
  if (c.augment_enabled && !c.phase.augment) c.phase.augment = AugmentConfig{};
  if (!c.augment_enabled) c.phase.augment.reset();
  c.validate();
  return c;
}

}  // namespace

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  for (int number = 1; std::getline(in, line); ++number) apply_line(config, line, number, &seen);
  return finish(std::move(config));
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig config;
  std::map<std::string, int> seen;
  std::istringstream lines(buf.str());
  std::string line;
  for (int number = 1; std::getline(lines, line); ++number) apply_line(config, line, number, &seen);
  for (const std::string& o : overrides) {
    try {
      apply_line(config, o, 0, nullptr);
    } catch (const ConfigError& e) {
      throw ConfigError(std::string("override '") + o + "': " + e.what());
    }
  }
  return finish(std::move(config));
}

Pipeline::Pipeline(RunConfig config, std::ostream* progress)
    : config_(std::move(config)), progress_(progress) {
  config_.validate();
}

void Pipeline::note(const std::string& line) {
  if (progress_) *progress_ << line << std::endl;
}

const DatasetBundle& Pipeline::bundle() {
  if (bundle_) return *bundle_;
  std::vector<Sample> samples;
  if (config_.source == DataSource::synthetic) {
    samples = synth_capsule_dataset(config_.synthetic_count, config_.side, phase_seed("data"));
  } else {
    samples = load_directory(config_.images_dir, config_.masks_dir);
    if (config_.suppress_background) {
      std::vector<Image> xs;
      for (const Sample& s : samples) xs.push_back(s.x);
      auto processed = suppress_background(xs).processed;
      for (std::size_t i = 0; i < samples.size(); ++i) samples[i].x = std::move(processed[i]);
    }
    for (const Sample& s : samples) {
      if (s.x.height % config_.trainee.required_divisor() || s.x.width % config_.trainee.required_divisor()) {
        throw ConfigError("image " + s.name + " is not a multiple of " +
                          std::to_string(config_.trainee.required_divisor()) + " pixels per side");
      }
    }
  }
  bundle_ = split(samples, config_.split, config_.split_mode, phase_seed("split"));
  fs::create_directories(config_.output_dir);
  write_manifest(*bundle_, config_.output_dir / "manifest.txt");
  return *bundle_;
}

fs::path Pipeline::referee_path() const { return config_.output_dir / "referee.ckpt"; }
fs::path Pipeline::trainee_pretrained_path(int i) const {
  return config_.output_dir / ("trainee_pretrained_s" + std::to_string(i) + ".ckpt");
}
fs::path Pipeline::reverse_path(int i) const {
  return config_.output_dir / ("reverse_s" + std::to_string(i) + ".ckpt");
}
fs::path Pipeline::trainee_main_path(int i) const {
  return config_.output_dir / ("trainee_main_s" + std::to_string(i) + ".ckpt");
}
fs::path Pipeline::metrics_path() const { return config_.output_dir / "metrics.jsonl"; }
fs::path Pipeline::report_path(std::string_view name) const {
  return config_.output_dir / ("report_" + std::string(name) + ".txt");
}

std::uint64_t Pipeline::phase_seed(std::string_view phase, int seed_index) const {
  return derive_seed(derive_seed(config_.seed, phase), static_cast<std::uint64_t>(seed_index));
}

UNet Pipeline::require(const fs::path& path, const std::string& phase) const {
  if (!fs::exists(path)) {
    throw PrerequisiteError("missing " + path.string() + "; run '" + phase + "' first", phase);
  }
  return load_checkpoint(path);
}

EpochCallback Pipeline::logger(int seed_index) {
  fs::create_directories(config_.output_dir);
  auto out = std::make_shared<std::ofstream>(metrics_path(), std::ios::app);
  return [out, seed_index](const EpochRecord& r) {
    EpochRecord copy = r;
    copy.seed_index = seed_index;
    *out << to_json_line(copy) << '\n';
    out->flush();
  };
}

EvalConfigEcho Pipeline::echo(std::string method) const {
  return {std::move(method), config_.split.s_train, config_.split.s_val, config_.phase.lambda_ae,
          config_.phase.loss_kind};
}

void Pipeline::gen_masks(int count) {
  const fs::path dir = config_.output_dir / "synthetic_masks";
  fs::create_directories(dir);
  const auto pairs = sample_pair_set(count, config_.side, config_.effective_corruption(),
                                     phase_seed("gen-masks"));
  for (int i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "%04d", i);
    write_pgm(dir / (std::string(name) + "_corrupted.pgm"), pairs[static_cast<std::size_t>(i)].corrupted);
    write_pgm(dir / (std::string(name) + "_clean.pgm"), pairs[static_cast<std::size_t>(i)].clean);
  }
  note("wrote " + std::to_string(count) + " synthetic mask pairs to " + dir.string());
}

void Pipeline::train_referee() {
  UNet ref = UNet::build(config_.referee, phase_seed("referee-init"));
  const PhaseResult r = selfmentor::train_referee(ref, config_.side, config_.effective_corruption(),
                                                  config_.phase, phase_seed("referee"), logger(-1));
  save_checkpoint(ref, referee_path());
  note("referee: " + std::to_string(r.epochs) + " epochs, best epoch " +
       std::to_string(r.best_epoch) + ", validation " + std::to_string(r.best_validation));
}

void Pipeline::pretrain_trainee() {
  const DatasetBundle& b = bundle();
  for (int i = 0; i < config_.eval_seeds; ++i) {
    UNet tne = UNet::build(config_.trainee, phase_seed("trainee-init", i));
    const PhaseResult r = selfmentor::pretrain_trainee(tne, b.s_train, b.s_val, config_.phase,
                                                       phase_seed("pretrain", i), logger(i));
    save_checkpoint(tne, trainee_pretrained_path(i));
    note("trainee seed " + std::to_string(i) + ": " + std::to_string(r.epochs) + " epochs, " +
         std::to_string(r.restarts) + " restarts");
  }
}

void Pipeline::train_reverse() {
  const DatasetBundle& b = bundle();
  for (int i = 0; i < config_.eval_seeds; ++i) {
    UNet rev = UNet::build(config_.reverse, phase_seed("reverse-init", i));
    const PhaseResult r = selfmentor::train_reverse(rev, b.s_train, b.s_val, config_.phase,
                                                    phase_seed("reverse", i), logger(i));
    save_checkpoint(rev, reverse_path(i));
    note("reverse seed " + std::to_string(i) + ": " + std::to_string(r.epochs) + " epochs");
  }
}

void Pipeline::train_main() {
  UNet ref = require(referee_path(), "train-referee");
  for (int i = 0; i < config_.eval_seeds; ++i) {
    UNet tne = require(trainee_pretrained_path(i), "pretrain-trainee");
    UNet rev = require(reverse_path(i), "train-reverse");
    const MainPhaseResult r = main_phase(tne, ref, rev, bundle(), config_.phase,
                                         config_.curriculum, phase_seed("main", i), logger(i));
    save_checkpoint(tne, trainee_main_path(i));
    note("main phase seed " + std::to_string(i) + ": best round " + std::to_string(r.best_round) +
         ", L_val " + std::to_string(r.best_validation));
  }
}

namespace {

void write_predictions(const fs::path& dir, const UNet& net, const std::vector<Sample>& test) {
  fs::create_directories(dir);
  NoGradGuard guard;
  for (const Sample& s : test) {
    write_pgm(dir / (s.name + ".pgm"), threshold(to_image(net.forward(to_tensor(s.x)))));
  }
}

}  // namespace

EvalReport Pipeline::evaluate(std::string_view model) {
  const bool main = model == "main";
  if (!main && model != "pretrained") {
    throw ConfigError("evaluate model must be 'main' or 'pretrained'");
  }
  const DatasetBundle& b = bundle();
  std::vector<std::shared_ptr<const UNet>> nets;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config_.eval_seeds; ++i) {
    nets.push_back(std::make_shared<const UNet>(
        main ? require(trainee_main_path(i), "train-main")
             : require(trainee_pretrained_path(i), "pretrain-trainee")));
    seeds.push_back(static_cast<std::uint64_t>(i));
  }
  const std::string method = main ? "self-mentoring" : "pretrained";
  EvalReport report = selfmentor::evaluate(
      [&](std::uint64_t i) { return unet_predictor(nets[i]); }, b, seeds, echo(method));
  for (std::size_t i = 0; i < nets.size(); ++i) {
    write_predictions(config_.output_dir / "predictions" / (method + "_s" + std::to_string(i)),
                      *nets[i], b.test);
  }
  write_report(report, report_path(method));
  note(method + " mean test JI " + std::to_string(report.grand_mean));
  return report;
}

EvalReport Pipeline::self_train_baseline() {
  const DatasetBundle& b = bundle();
  std::vector<std::shared_ptr<const UNet>> nets;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config_.eval_seeds; ++i) {
    auto r = self_training_baseline(b, config_.trainee, config_.phase,
                                    phase_seed("self-training", i), logger(i));
    save_checkpoint(r.student, config_.output_dir / ("self_training_s" + std::to_string(i) + ".ckpt"));
    nets.push_back(std::make_shared<const UNet>(std::move(r.student)));
    seeds.push_back(static_cast<std::uint64_t>(i));
  }
  EvalReport report = selfmentor::evaluate(
      [&](std::uint64_t i) { return unet_predictor(nets[i]); }, b, seeds, echo("self-training"));
  write_report(report, report_path("self-training"));
  note("self-training mean test JI " + std::to_string(report.grand_mean));
  return report;
}

EvalReport Pipeline::large_unet_baseline() {
  const DatasetBundle& b = bundle();
  std::vector<std::shared_ptr<const UNet>> nets;
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < config_.eval_seeds; ++i) {
    auto r = selfmentor::large_unet_baseline(b, config_.baseline_target_params, config_.trainee,
                                             config_.phase, phase_seed("large-unet", i), logger(i));
    note("large U-net seed " + std::to_string(i) + ": F=" + std::to_string(r.base_filters) + ", " +
         std::to_string(r.net.parameter_count()) + " parameters");
    save_checkpoint(r.net, config_.output_dir / ("large_unet_s" + std::to_string(i) + ".ckpt"));
    nets.push_back(std::make_shared<const UNet>(std::move(r.net)));
    seeds.push_back(static_cast<std::uint64_t>(i));
  }
  EvalReport report = selfmentor::evaluate(
      [&](std::uint64_t i) { return unet_predictor(nets[i]); }, b, seeds, echo("large-unet"));
  write_report(report, report_path("large-unet"));
  note("large U-net mean test JI " + std::to_string(report.grand_mean));
  return report;
}

void Pipeline::augment_preview() {
  const DatasetBundle& b = bundle();
  AugmentConfig cfg = config_.phase.augment.value_or(AugmentConfig{});
  cfg.output_set_size = config_.preview_count;
  Rng rng(phase_seed("augment-preview"));
  const auto items = augment_supervised_detailed(b.s_train, cfg, rng);
  const fs::path dir = config_.output_dir / "augment_preview";
  fs::create_directories(dir);
  static const char* kNoise[] = {"none", "salt_pepper", "gaussian", "uniform"};
  std::ostringstream index;
  index << "item,source,transform_code,noise\n";
  for (std::size_t i = 0; i < items.size(); ++i) {
    const auto& a = items[i];
    const Sample& src = b.s_train[a.source];
    const std::string stem = (dir / ("item" + std::to_string(i))).string();
    write_pgm(stem + "_x_before.pgm", src.x);
    write_pgm(stem + "_y_before.pgm", *src.y);
    write_pgm(stem + "_x_after.pgm", a.sample.x);
    write_pgm(stem + "_y_after.pgm", *a.sample.y);
    index << i << "," << src.name << "," << a.transform.code() << ","
          << kNoise[static_cast<int>(a.noise)] << "\n";
  }
  write_file_atomic(dir / "index.csv", index.str());
  note("wrote " + std::to_string(items.size()) + " augmentation previews to " + dir.string());
}

EvalReport Pipeline::full_pipeline() {
  bundle();
  train_referee();
  pretrain_trainee();
  train_reverse();
  evaluate("pretrained");
  train_main();
  return evaluate("main");
}

std::vector<std::string> command_names() {
  return {"gen-masks",      "train-referee",       "pretrain-trainee", "train-reverse",
          "train-main",     "self-train-baseline", "evaluate",         "full-pipeline",
          "augment-preview", "large-unet-baseline"};
}

int run_command(std::string_view command, const RunConfig& config, std::ostream& out,
                std::ostream& err, const CommandOptions& options) {
  try {
    Pipeline p(config, &out);
    if (command == "gen-masks") p.gen_masks(options.mask_count);
    else if (command == "train-referee") p.train_referee();
    else if (command == "pretrain-trainee") p.pretrain_trainee();
    else if (command == "train-reverse") p.train_reverse();
    else if (command == "train-main") p.train_main();
    else if (command == "self-train-baseline") p.self_train_baseline();
    else if (command == "evaluate") p.evaluate(options.eval_model);
    else if (command == "full-pipeline") p.full_pipeline();
    else if (command == "augment-preview") p.augment_preview();
    else if (command == "large-unet-baseline") p.large_unet_baseline();
    else throw ConfigError("unknown command '" + std::string(command) + "'");
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PrerequisiteError& e) {
    err << "prerequisite missing (" << e.missing_phase() << "): " << e.what() << "\n";
    return kExitPrerequisite;
  } catch (const TrainingError& e) {
    err << "numerical divergence: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const CapacityError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace selfmentor
