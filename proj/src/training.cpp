#include "selfmentor/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "json.hpp"
#include "selfmentor/errors.hpp"

namespace selfmentor {

EarlyStopper::EarlyStopper(int patience)
    : patience_(patience), best_metric_(std::numeric_limits<double>::infinity()) {
  if (patience < 0) throw ContractError("patience must be >= 0");
}

bool EarlyStopper::observe(double metric, const std::function<UNet::Snapshot()>& take_snapshot) {
  ++count_;
  if (count_ == 1 || metric < best_metric_) {
    best_metric_ = metric;
    best_index_ = count_;
    stale_ = 0;
    if (take_snapshot) best_snapshot_ = take_snapshot();
  } else {
    ++stale_;
  }
  return stopped();
}

bool EarlyStopper::observe(double metric, const UNet& net) {
  return observe(metric, [&net] { return net.snapshot(); });
}

AugmentTarget parse_augment_target(std::string_view name) {
  if (name == "s_train") return AugmentTarget::s_train;
  if (name == "s_train+u_train" || name == "full") return AugmentTarget::s_train_and_u_train;
  throw std::invalid_argument("unknown augmentation target '" + std::string(name) +
                              "' (expected s_train or s_train+u_train)");
}

std::string_view to_string(AugmentTarget target) {
  return target == AugmentTarget::s_train ? "s_train" : "s_train+u_train";
}

void PhaseConfig::validate() const {
  if (!(lambda_ae >= 0.0)) throw ContractError("lambda_ae must be >= 0");
  if (patience_pretrain < 0 || patience_main < 0 || patience_referee < 0) {
    throw ContractError("patience values must be >= 0");
  }
  if (synthetic_train_size < 1 || synthetic_val_size < 1) {
    throw ContractError("synthetic set sizes must be >= 1");
  }
  if (max_epochs < 0) throw ContractError("max_epochs must be >= 0");
  if (restart_check_epochs < 1 || max_restarts < 0) {
    throw ContractError("restart settings must be positive");
  }
  optimizer.validate();
  if (augment) augment->validate();
}

void CurriculumSchedule::validate() const {
  if (steps < 0) throw ContractError("curriculum steps must be >= 0");
  if (!(start_fraction > 0.0 && start_fraction <= 1.0) || !(increment >= 0.0)) {
    throw ContractError("curriculum fractions must lie in (0,1]");
  }
  if (std::abs(start_fraction + steps * increment - 1.0) > 1e-9) {
    throw ContractError("curriculum must end at the full set: start + steps*increment = 1");
  }
}

double CurriculumSchedule::fraction(int round) const {
  if (round < 0 || round > steps) throw ContractError("curriculum round out of range");
  if (round == steps) return 1.0;
  return std::round((start_fraction + round * increment) * 1e6) / 1e6;
}

std::size_t CurriculumSchedule::active_count(int round, std::size_t n) const {
  const double f = fraction(round);
  if (round == steps) return n;
  return std::min(n, static_cast<std::size_t>(std::llround(f * static_cast<double>(n))));
}

std::string to_json_line(const EpochRecord& r) {
  nlohmann::json j;
  j["phase"] = r.phase;
  if (r.seed_index >= 0) j["seed_index"] = r.seed_index;
  if (r.round >= 0) j["round"] = r.round;
  j["epoch"] = r.epoch;
  if (r.l_sup) j["l_sup"] = *r.l_sup;
  if (r.l_cons) j["l_cons"] = *r.l_cons;
  if (r.l_ae) j["l_ae"] = *r.l_ae;
  if (r.l_synth) j["l_synth"] = *r.l_synth;
  j["train_total"] = r.train_total;
  j["l_val"] = r.validation;
  j["seconds"] = r.seconds;
  return j.dump();
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Pair {
  Tensor input;
  Tensor target;
};

// One optimisation step per pair, in the given order.
double train_pairs(UNet& net, const std::vector<Pair>& pairs, LossKind kind, Rng& rng,
                   const OptimizerConfig& opt) {
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  double total = 0.0;
  for (std::size_t i : order) {
    Tensor l = loss(net.forward(pairs[i].input), pairs[i].target, kind);
    total += l.item();
    backward(l);
    rmsprop_step(net.parameters(), opt);
  }
  return total;
}

double eval_pairs(const UNet& net, const std::vector<Pair>& pairs, LossKind kind) {
  NoGradGuard guard;
  double total = 0.0;
  for (const Pair& p : pairs) total += loss(net.forward(p.input), p.target, kind).item();
  return total;
}

std::vector<Pair> labeled_pairs(const std::vector<Sample>& samples, bool reverse) {
  std::vector<Pair> out;
  out.reserve(samples.size());
  for (const Sample& s : samples) {
    if (!s.y) throw ContractError("sample '" + s.name + "' has no mask");
    Tensor x = to_tensor(s.x), y = to_tensor(*s.y);
    out.push_back(reverse ? Pair{y, x} : Pair{x, y});
  }
  return out;
}

void check_finite(double value, const std::string& where) {
  if (!std::isfinite(value)) throw TrainingError(where + ": loss is not finite");
}

bool epoch_cap_reached(const PhaseConfig& phase, int epoch) {
  return phase.max_epochs > 0 && epoch >= phase.max_epochs;
}

// Phases 2 and 3 share everything but the direction of the mapping.
PhaseResult train_supervised(UNet& net, const std::vector<Sample>& s_train,
                             const std::vector<Sample>& s_val, const PhaseConfig& phase,
                             std::uint64_t seed, const EpochCallback& log, bool reverse) {
  const char* name = reverse ? "reverse" : "pretrain";
  if (s_train.empty()) throw ContractError(std::string(name) + " needs a non-empty S_tr");
  phase.validate();
  const LossKind kind = reverse ? LossKind::mse : phase.loss_kind;
  const std::vector<Pair> train_set = labeled_pairs(s_train, reverse);
  const std::vector<Pair> val_set = labeled_pairs(s_val.empty() ? s_train : s_val, reverse);
  const bool may_restart = !reverse && kind != LossKind::mse;

  PhaseResult result;
  for (int attempt = 0;; ++attempt) {
    if (attempt > 0) {
      net.reinitialize(derive_seed(seed, "restart" + std::to_string(attempt)));
    }
    net.set_trainable(true);
    net.reset_optimizer_state();
    Rng rng(derive_seed(seed, "shuffle" + std::to_string(attempt)));
    Rng da_rng(derive_seed(seed, "augment" + std::to_string(attempt)));
    const double initial = may_restart ? eval_pairs(net, train_set, kind) : 0.0;

    EarlyStopper stopper(phase.patience_pretrain);
    bool restart = false;
    int epoch = 0;
    while (true) {
      ++epoch;
      const auto start = Clock::now();
      double train_total;
      if (phase.augment) {
        const auto augmented =
            labeled_pairs(augment_supervised(s_train, *phase.augment, da_rng), reverse);
        train_total = train_pairs(net, augmented, kind, rng, phase.optimizer);
      } else {
        train_total = train_pairs(net, train_set, kind, rng, phase.optimizer);
      }
      const double val = eval_pairs(net, val_set, kind);
      check_finite(train_total, std::string(name) + " diverged at epoch " + std::to_string(epoch));
      check_finite(val, std::string(name) + " diverged at epoch " + std::to_string(epoch));
      const bool stop = stopper.observe(val, net);
      if (log) {
        EpochRecord rec;
        rec.phase = name;
        rec.epoch = epoch;
        rec.l_sup = train_total;
        rec.train_total = train_total;
        rec.validation = val;
        rec.seconds = seconds_since(start);
        log(rec);
      }
      if (may_restart && attempt < phase.max_restarts && epoch == phase.restart_check_epochs &&
          !(eval_pairs(net, train_set, kind) < initial)) {
        restart = true;
        break;
      }
      if (stop || epoch_cap_reached(phase, epoch)) break;
    }
    if (restart) continue;
    net.restore(*stopper.best_snapshot());
    result.epochs = epoch;
    result.best_epoch = stopper.best_index();
    result.best_validation = stopper.best_metric();
    result.restarts = attempt;
    return result;
  }
}

}  // namespace

double referee_loss(const UNet& ref, const std::vector<MaskPair>& pairs) {
  NoGradGuard guard;
  double total = 0.0;
  for (const MaskPair& p : pairs) {
    total += loss(ref.forward(to_tensor(p.corrupted)), to_tensor(p.clean), LossKind::mse).item();
  }
  return total;
}

PhaseResult train_referee(UNet& ref, int side, const CorruptionConfig& corruption,
                          const PhaseConfig& phase, std::uint64_t seed, const EpochCallback& log) {
  phase.validate();
  if (ref.config().in_channels != 1 || ref.config().out_channels != 1) {
    throw ContractError("referee must map 1 channel to 1 channel");
  }
  ref.set_trainable(true);
  ref.reset_optimizer_state();
  const auto val_pairs =
      sample_pair_set(phase.synthetic_val_size, side, corruption, derive_seed(seed, "validation"));
  const std::uint64_t train_seed = derive_seed(seed, "train");
  Rng rng(derive_seed(seed, "shuffle"));

  EarlyStopper stopper(phase.patience_referee);
  int epoch = 0;
  while (true) {
    ++epoch;
    const auto start = Clock::now();
    std::vector<Pair> train_set;
    for (auto& p : sample_pair_set(phase.synthetic_train_size, side, corruption,
                                   derive_seed(train_seed, static_cast<std::uint64_t>(epoch)))) {
      train_set.push_back({to_tensor(p.corrupted), to_tensor(p.clean)});
    }
    const double train_total = train_pairs(ref, train_set, LossKind::mse, rng, phase.optimizer);
    const double val = referee_loss(ref, val_pairs);
    check_finite(train_total, "referee diverged at epoch " + std::to_string(epoch));
    check_finite(val, "referee diverged at epoch " + std::to_string(epoch));
    const bool stop = stopper.observe(val, ref);
    if (log) {
      EpochRecord rec;
      rec.phase = "referee";
      rec.epoch = epoch;
      rec.l_synth = train_total;
      rec.train_total = train_total;
      rec.validation = val;
      rec.seconds = seconds_since(start);
      log(rec);
    }
    if (stop || epoch_cap_reached(phase, epoch)) break;
  }
  ref.restore(*stopper.best_snapshot());
  return PhaseResult{epoch, stopper.best_index(), stopper.best_metric(), 0};
}

PhaseResult pretrain_trainee(UNet& tne, const std::vector<Sample>& s_train,
                             const std::vector<Sample>& s_val, const PhaseConfig& phase,
                             std::uint64_t seed, const EpochCallback& log) {
  return train_supervised(tne, s_train, s_val, phase, seed, log, false);
}

PhaseResult train_reverse(UNet& rev, const std::vector<Sample>& s_train,
                          const std::vector<Sample>& s_val, const PhaseConfig& phase,
                          std::uint64_t seed, const EpochCallback& log) {
  return train_supervised(rev, s_train, s_val, phase, seed, log, true);
}

double supervised_loss(const UNet& net, const std::vector<Sample>& samples, LossKind kind,
                       bool reverse) {
  return eval_pairs(net, labeled_pairs(samples, reverse), reverse ? LossKind::mse : kind);
}

namespace {

struct UnsupervisedTerms {
  Tensor cons;
  Tensor ae;
};

UnsupervisedTerms unsupervised_terms(const UNet& tne, const UNet& ref, const UNet& rev,
                                     const Tensor& x, LossKind kind) {
  Tensor p = tne.forward(x);
  Tensor r = ref.forward(p);
  Tensor cons = loss(p, r, kind);
  Tensor ae = loss(rev.forward(r), x, LossKind::mse);
  return {cons, ae};
}

}  // namespace

Phase4Losses phase4_losses(const UNet& tne, const UNet& ref, const UNet& rev, const Image& x,
                           const std::optional<Mask>& y, const PhaseConfig& phase) {
  NoGradGuard guard;
  const Tensor xt = to_tensor(x);
  const auto terms = unsupervised_terms(tne, ref, rev, xt, phase.loss_kind);
  Phase4Losses out;
  out.l_cons = terms.cons.item();
  out.l_ae = terms.ae.item();
  out.total = out.l_cons + phase.lambda_ae * out.l_ae;
  if (y) {
    out.l_sup = loss(tne.forward(xt), to_tensor(*y), phase.loss_kind).item();
    out.total += *out.l_sup;
  }
  return out;
}

double curriculum_score(const UNet& tne, const UNet& ref, const UNet& rev, const Image& x) {
  const double denom = l1_norm(x.pixels);
  if (denom == 0.0) return -std::numeric_limits<double>::infinity();
  NoGradGuard guard;
  const Tensor xt = to_tensor(x);
  const Tensor recon = rev.forward(ref.forward(tne.forward(xt)));
  double num = 0.0;
  auto rv = recon.values();
  for (std::size_t i = 0; i < x.pixels.size(); ++i) {
    num += std::abs(static_cast<double>(rv[i]) - x.pixels[i]);
  }
  return -num / denom;
}

std::vector<std::size_t> select_top_k(const std::vector<double>& scores, std::size_t k) {
  if (k > scores.size()) throw ContractError("top-k larger than the scored set");
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  order.resize(k);
  std::sort(order.begin(), order.end());
  return order;
}

double validation_loss(const UNet& tne, const UNet& ref, const UNet& rev,
                       const DatasetBundle& bundle, const PhaseConfig& phase) {
  NoGradGuard guard;
  double total = supervised_loss(tne, bundle.s_val, phase.loss_kind);
  for (const Sample& s : bundle.u_val) {
    const auto terms = unsupervised_terms(tne, ref, rev, to_tensor(s.x), phase.loss_kind);
    total += terms.cons.item() + terms.ae.item();
  }
  return total;
}

MainPhaseResult main_phase(UNet& tne, UNet& ref, UNet& rev, const DatasetBundle& bundle,
                           const PhaseConfig& phase, const CurriculumSchedule& schedule,
                           std::uint64_t seed, const EpochCallback& log) {
  phase.validate();
  schedule.validate();
  if (bundle.s_train.empty()) throw ContractError("main phase needs a non-empty S_tr");
  ref.set_trainable(false);
  rev.set_trainable(false);
  tne.set_trainable(true);
  tne.reset_optimizer_state();

  const std::vector<Pair> sup_set = labeled_pairs(bundle.s_train, false);
  std::vector<Tensor> u_inputs;
  for (const Sample& s : bundle.u_train) u_inputs.push_back(to_tensor(s.x));
  Rng rng(derive_seed(seed, "shuffle"));
  Rng da_rng(derive_seed(seed, "augment"));
  const bool augment_u =
      phase.augment && phase.augment_target == AugmentTarget::s_train_and_u_train;

  MainPhaseResult result;
  std::optional<UNet::Snapshot> global_best;
  for (int round = 0; round < schedule.rounds(); ++round) {
    RoundSummary summary;
    summary.fraction = schedule.fraction(round);
    for (const Sample& s : bundle.u_train) {
      summary.scores.push_back(curriculum_score(tne, ref, rev, s.x));
    }
    summary.active =
        select_top_k(summary.scores, schedule.active_count(round, bundle.u_train.size()));
    std::vector<Sample> active_samples;
    for (std::size_t i : summary.active) active_samples.push_back(bundle.u_train[i]);

    EarlyStopper stopper(phase.patience_main);
    int epoch = 0;
    while (true) {
      ++epoch;
      const auto start = Clock::now();
      std::vector<Pair> sup = sup_set;
      if (phase.augment) sup = labeled_pairs(augment_supervised(bundle.s_train, *phase.augment, da_rng), false);
      std::vector<Tensor> unsup;
      if (augment_u && !active_samples.empty()) {
        for (const Sample& s : augment_unlabeled(active_samples, *phase.augment, da_rng)) {
          unsup.push_back(to_tensor(s.x));
        }
      } else {
        for (std::size_t i : summary.active) unsup.push_back(u_inputs[i]);
      }

      // Items 0..sup-1 are supervised, the rest unsupervised.
      std::vector<std::size_t> order(sup.size() + unsup.size());
      std::iota(order.begin(), order.end(), 0);
      std::shuffle(order.begin(), order.end(), rng);
      double l_sup = 0.0, l_cons = 0.0, l_ae = 0.0;
      for (std::size_t item : order) {
        Tensor total;
        if (item < sup.size()) {
          total = loss(tne.forward(sup[item].input), sup[item].target, phase.loss_kind);
          l_sup += total.item();
        } else {
          const auto terms =
              unsupervised_terms(tne, ref, rev, unsup[item - sup.size()], phase.loss_kind);
          l_cons += terms.cons.item();
          l_ae += terms.ae.item();
          total = add(terms.cons, scale(terms.ae, static_cast<float>(phase.lambda_ae)));
        }
        backward(total);
        rmsprop_step(tne.parameters(), phase.optimizer);
      }
      const double train_total = l_sup + l_cons + phase.lambda_ae * l_ae;
      const double val = validation_loss(tne, ref, rev, bundle, phase);
      const std::string where =
          "main phase diverged in round " + std::to_string(round) + " at epoch " + std::to_string(epoch);
      check_finite(train_total, where);
      check_finite(val, where);
      const bool stop = stopper.observe(val, tne);
      if (log) {
        EpochRecord rec;
        rec.phase = "main";
        rec.round = round;
        rec.epoch = epoch;
        rec.l_sup = l_sup;
        rec.l_cons = l_cons;
        rec.l_ae = l_ae;
        rec.train_total = train_total;
        rec.validation = val;
        rec.seconds = seconds_since(start);
        log(rec);
      }
      if (stop || epoch_cap_reached(phase, epoch)) break;
    }
    tne.restore(*stopper.best_snapshot());
    summary.epochs = epoch;
    summary.best_validation = stopper.best_metric();

    const bool better = !global_best ||
                        (phase.select_maximal_validation
                             ? summary.best_validation > result.best_validation
                             : summary.best_validation < result.best_validation);
    if (better) {
      global_best = stopper.best_snapshot();
      result.best_round = round;
      result.best_validation = summary.best_validation;
    }
    result.rounds.push_back(std::move(summary));
  }
  tne.restore(*global_best);
  return result;
}

}  // namespace selfmentor
