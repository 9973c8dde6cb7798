#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "selfmentor/errors.hpp"
#include "selfmentor/io.hpp"
#include "selfmentor/pipeline.hpp"
#include "tempdir.hpp"
#include "tiny_run.hpp"

using namespace selfmentor;
namespace fs = std::filesystem;
using testing_support::TempDir;
using testing_support::tiny_run_config;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

int config_error_line(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return -1;
}

std::string config_error_message(const std::string& text) {
  try {
    parse_run_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

int run(std::string_view command, const RunConfig& config, std::string* err_text = nullptr,
        const CommandOptions& options = {}) {
  std::ostringstream out, err;
  const int code = run_command(command, config, out, err, options);
  if (err_text) *err_text = err.str();
  return code;
}

}  // namespace

TEST_CASE("config defaults") {
  RunConfig c = parse_run_config("");
  CHECK(c.seed == 1);
  CHECK(c.trainee == UNetConfig{3, 5});
  CHECK(c.referee == UNetConfig{3, 30});
  CHECK(c.split.s_train == 3);
  CHECK(c.split.u_train == 100);
  CHECK(c.split.test == 50);
  CHECK(c.phase.lambda_ae == 5.0);
  CHECK(c.phase.patience_pretrain == 20);
  CHECK(c.phase.patience_main == 40);
  CHECK(c.phase.patience_referee == 500);
  CHECK(c.phase.optimizer.learning_rate == 1e-4);
  CHECK(c.curriculum.steps == 10);
  CHECK(c.eval_seeds == 5);
  CHECK_FALSE(c.phase.augment.has_value());
}

TEST_CASE("config values, comments and blank lines") {
  RunConfig c = parse_run_config(
      "# header\n\n"
      "seed = 42   # trailing comment\n"
      "phase.loss = dice\n"
      "phase.lambda_ae = 20\n"
      "split.mode = centroid_region\n"
      "augment.enabled = true\n"
      "augment.target = s_train+u_train\n"
      "augment.output_set_size = 50\n"
      "corruption.min_thickness = 3\n"
      "corruption.max_thickness = 4\n");
  CHECK(c.seed == 42);
  CHECK(c.phase.loss_kind == LossKind::dice);
  CHECK(c.phase.lambda_ae == 20.0);
  CHECK(c.split_mode == SplitMode::centroid_region);
  REQUIRE(c.phase.augment.has_value());
  CHECK(c.phase.augment->output_set_size == 50);
  CHECK(c.phase.augment_target == AugmentTarget::s_train_and_u_train);
  CHECK(c.effective_corruption().min_thickness == 3);
  CHECK(c.effective_corruption().max_thickness == 4);
}

TEST_CASE("corruption thickness follows the side unless set") {
  CHECK(parse_run_config("data.side = 128").effective_corruption().max_thickness == 16);
  CHECK(parse_run_config("data.side = 128\ncorruption.max_thickness = 5")
            .effective_corruption()
            .max_thickness == 5);
}

TEST_CASE("config errors cite line numbers") {
  CHECK(config_error_line("seed = 1\n\nbogus.key = 3\n") == 3);
  CHECK(config_error_line("seed = x\n") == 1);
  CHECK(config_error_line("seed = 1\nno equals sign\n") == 2);
  CHECK(config_error_line("seed = 1\nphase.loss = hinge\n") == 2);
  CHECK(config_error_line("phase.lambda_ae =\n") == 1);
  CHECK(config_error_line("seed = 1\nsplit.test = 3\nseed = 2\n") == 3);
  CHECK(config_error_message("seed = 1\nsplit.test = 3\nseed = 2\n").find("first set on line 1") !=
        std::string::npos);
  CHECK(config_error_message("bogus = 1").find("line 1") == 0);
}

TEST_CASE("semantic config errors are config errors") {
  CHECK_THROWS_AS(parse_run_config("phase.lambda_ae = -1"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("curriculum.increment = 0.05"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("data.side = 100"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("eval.seeds = 0"), ConfigError);
  CHECK_THROWS_AS(parse_run_config("data.source = directory\ndata.images_dir = /no/such/dir\n"
                                   "data.masks_dir = /no/such/dir"),
                  ConfigError);
}

TEST_CASE("the shipped example config lists every key and parses") {
  const fs::path example = fs::path(SELFMENTOR_SOURCE_DIR) / "configs" / "example.conf";
  RunConfig c = load_run_config(example);
  CHECK(c.output_dir == "runs/example");
  const std::string text = slurp(example);
  for (const std::string& key : config_keys()) {
    CHECK_MESSAGE(text.find(key + " =") != std::string::npos, key);
  }
}

TEST_CASE("overrides apply after the file and may repeat keys") {
  TempDir dir("overrides");
  { std::ofstream(dir / "c.conf") << "seed = 4\neval.seeds = 2\n"; }
  RunConfig c = load_run_config(dir / "c.conf", {"seed=9", "phase.lambda_ae = 100", "seed=10"});
  CHECK(c.seed == 10);
  CHECK(c.phase.lambda_ae == 100.0);
  CHECK(c.eval_seeds == 2);
  try {
    load_run_config(dir / "c.conf", {"nope=1"});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("override 'nope=1'") == 0);
  }
  CHECK_THROWS_AS(load_run_config(dir / "missing.conf"), ConfigError);
}

TEST_CASE("atomic writes replace files and leave no temporaries") {
  TempDir dir("atomic");
  write_file_atomic(dir / "sub" / "f.bin", "first");
  write_file_atomic(dir / "sub" / "f.bin", "second");
  CHECK(slurp(dir / "sub" / "f.bin") == "second");
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "sub")) files += e.is_regular_file();
  CHECK(files == 1);
}

TEST_CASE("prerequisite errors name the missing phase") {
  TempDir dir("prereq");
  RunConfig c = parse_run_config(tiny_run_config(dir.path()));
  std::string err;
  CHECK(run("train-main", c, &err) == kExitPrerequisite);
  CHECK(err.find("train-referee") != std::string::npos);
  CHECK(run("evaluate", c, &err) == kExitPrerequisite);
  CHECK(err.find("train-main") != std::string::npos);
  CHECK(run("evaluate", c, &err, CommandOptions{16, "pretrained"}) == kExitPrerequisite);
  CHECK(err.find("pretrain-trainee") != std::string::npos);
  CHECK(run("train-referee", c) == kExitOk);
  CHECK(run("train-main", c, &err) == kExitPrerequisite);
  CHECK(err.find("pretrain-trainee") != std::string::npos);
  CHECK(run("dance", c) == kExitConfig);
  CHECK(run("evaluate", c, &err, CommandOptions{16, "best"}) == kExitConfig);
}

TEST_CASE("capacity and divergence exit codes") {
  TempDir dir("codes");
  RunConfig c = parse_run_config(tiny_run_config(dir.path()));
  c.split.test = 30;
  CHECK(run("pretrain-trainee", c) == kExitConfig);
  // A huge step overflows the weights within the first epoch.
  RunConfig wild = parse_run_config(tiny_run_config(dir.path()));
  wild.phase.optimizer.learning_rate = 1e30;
  std::string err;
  CHECK(run("train-referee", wild, &err) == kExitDivergence);
  CHECK(err.find("epoch") != std::string::npos);
}

TEST_CASE("full pipeline emits every artifact and is reproducible") {
  TempDir a("full_a"), b("full_b"), steps("full_steps");
  RunConfig ca = parse_run_config(tiny_run_config(a.path()));
  RunConfig cb = parse_run_config(tiny_run_config(b.path()));
  REQUIRE(run("full-pipeline", ca) == kExitOk);
  REQUIRE(run("full-pipeline", cb) == kExitOk);

  Pipeline p(ca);
  for (const fs::path& f : {p.referee_path(), p.trainee_pretrained_path(1), p.reverse_path(1),
                            p.trainee_main_path(1), p.metrics_path(), p.report_path("self-mentoring"),
                            p.report_path("pretrained"), a / "manifest.txt"}) {
    CHECK_MESSAGE(fs::exists(f), f.string());
  }
  CHECK(fs::exists(a / "predictions" / "self-mentoring_s0"));
  CHECK(slurp(p.report_path("self-mentoring")) == slurp(b / "report_self-mentoring.txt"));
  CHECK(slurp(p.report_path("pretrained")) == slurp(b / "report_pretrained.txt"));
  CHECK(slurp(p.trainee_main_path(0)) == slurp(b / "trainee_main_s0.ckpt"));
  CHECK(slurp(p.report_path("self-mentoring")).find("seeds: 2\n") != std::string::npos);

  std::ifstream metrics(p.metrics_path());
  std::string line;
  int lines = 0;
  std::set<std::string> phases;
  while (std::getline(metrics, line)) {
    auto j = nlohmann::json::parse(line);
    phases.insert(j["phase"].get<std::string>());
    CHECK(j.contains("l_val"));
    ++lines;
  }
  CHECK(lines > 0);
  CHECK(phases == std::set<std::string>{"referee", "pretrain", "reverse", "main"});

  // Phase by phase gives the same artifacts as one chained run.
  RunConfig cs = parse_run_config(tiny_run_config(steps.path()));
  for (const char* cmd : {"train-referee", "pretrain-trainee", "train-reverse", "train-main", "evaluate"}) {
    REQUIRE(run(cmd, cs) == kExitOk);
  }
  CHECK(slurp(steps / "report_self-mentoring.txt") == slurp(p.report_path("self-mentoring")));
  CHECK(slurp(steps / "referee.ckpt") == slurp(p.referee_path()));
}

TEST_CASE("a different master seed gives a different split") {
  TempDir a("seed_a"), b("seed_b");
  Pipeline pa(parse_run_config(tiny_run_config(a.path(), 3)));
  Pipeline pb(parse_run_config(tiny_run_config(b.path(), 4)));
  pa.bundle();
  pb.bundle();
  CHECK(slurp(a / "manifest.txt") != slurp(b / "manifest.txt"));
  CHECK(pa.phase_seed("main", 0) != pa.phase_seed("main", 1));
  CHECK(pa.phase_seed("main", 0) != pa.phase_seed("pretrain", 0));
}

TEST_CASE("auxiliary commands") {
  TempDir dir("aux");
  RunConfig c = parse_run_config(tiny_run_config(dir.path()) + "augment.preview_count = 3\n");
  CHECK(run("gen-masks", c, nullptr, CommandOptions{4, "main"}) == kExitOk);
  int masks = 0;
  for (const auto& e : fs::directory_iterator(dir / "synthetic_masks")) masks += e.path().extension() == ".pgm";
  CHECK(masks == 8);
  CHECK(is_binary(read_pgm(dir / "synthetic_masks" / "0000_clean.pgm")));

  CHECK(run("augment-preview", c) == kExitOk);
  const std::string index = slurp(dir / "augment_preview" / "index.csv");
  CHECK(std::count(index.begin(), index.end(), '\n') == 4);
  CHECK(fs::exists(dir / "augment_preview" / "item2_y_after.pgm"));

  CHECK(run("self-train-baseline", c) == kExitOk);
  CHECK(fs::exists(dir / "report_self-training.txt"));
  RunConfig big = parse_run_config(tiny_run_config(dir.path()) + "baseline.target_params = 2000\n");
  CHECK(run("large-unet-baseline", big) == kExitOk);
  CHECK(load_checkpoint(dir / "large_unet_s0.ckpt").parameter_count() >= 2000);
}

TEST_CASE("directory source with background suppression") {
  TempDir dir("dirsrc");
  fs::create_directories(dir / "img");
  fs::create_directories(dir / "mask");
  auto samples = synth_capsule_dataset(14, 64, 5);
  for (const auto& s : samples) {
    write_pgm(dir / "img" / (s.name + ".pgm"), s.x);
    write_pgm(dir / "mask" / (s.name + ".pgm"), *s.y);
  }
  RunConfig c = parse_run_config(tiny_run_config(dir / "out") + "data.source = directory\n" +
                                 "data.images_dir = " + (dir / "img").string() + "\n" +
                                 "data.masks_dir = " + (dir / "mask").string() + "\n" +
                                 "data.suppress_background = true\n");
  Pipeline p(c);
  const DatasetBundle& b = p.bundle();
  CHECK(b.test.size() == 3);
  CHECK(b.u_train.size() == 5);
}
