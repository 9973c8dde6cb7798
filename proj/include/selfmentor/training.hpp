#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "selfmentor/augment.hpp"
#include "selfmentor/data.hpp"
#include "selfmentor/ops.hpp"
#include "selfmentor/optim.hpp"
#include "selfmentor/synthmask.hpp"
#include "selfmentor/unet.hpp"

namespace selfmentor {

// Stops once more than `patience` consecutive measurements failed to
// improve on the best one; keeps the snapshot taken at the best.
class EarlyStopper {
 public:
  explicit EarlyStopper(int patience);

  // Records a measurement. take_snapshot is called only on improvement.
  // Returns true when training should stop.
  bool observe(double metric, const std::function<UNet::Snapshot()>& take_snapshot);
  bool observe(double metric, const UNet& net);

  int patience() const { return patience_; }
  double best_metric() const { return best_metric_; }
  int epochs_since_improvement() const { return stale_; }
  // 1-based index of the best measurement, 0 before the first one.
  int best_index() const { return best_index_; }
  int measurements() const { return count_; }
  bool stopped() const { return stale_ > patience_; }
  const std::optional<UNet::Snapshot>& best_snapshot() const { return best_snapshot_; }

 private:
  int patience_;
  double best_metric_;
  int stale_ = 0;
  int best_index_ = 0;
  int count_ = 0;
  std::optional<UNet::Snapshot> best_snapshot_;
};

enum class AugmentTarget { s_train, s_train_and_u_train };

AugmentTarget parse_augment_target(std::string_view name);
std::string_view to_string(AugmentTarget target);

struct PhaseConfig {
  double lambda_ae = 5.0;
  int patience_pretrain = 20;
  int patience_main = 40;
  int patience_referee = 500;
  // Applies to L_sup and L_cons; the referee, reverse and L_ae terms are always mse.
  LossKind loss_kind = LossKind::mse;
  OptimizerConfig optimizer{};
  int synthetic_train_size = 300;
  int synthetic_val_size = 300;
  // Hard cap per early-stopping loop, 0 for none.
  int max_epochs = 0;
  // Convergence-failure restarts during pretraining (bce and dice only).
  int restart_check_epochs = 5;
  int max_restarts = 3;
  // Literal "maximal validation loss" model selection across rounds.
  bool select_maximal_validation = false;
  std::optional<AugmentConfig> augment;
  AugmentTarget augment_target = AugmentTarget::s_train;

  void validate() const;
};

struct CurriculumSchedule {
  double start_fraction = 0.30;
  double increment = 0.07;
  int steps = 10;

  void validate() const;
  int rounds() const { return steps + 1; }
  double fraction(int round) const;
  // Active subset size for a set of n images; the last round uses all n.
  std::size_t active_count(int round, std::size_t n) const;
};

struct EpochRecord {
  std::string phase;
  int seed_index = -1;
  int round = -1;
  int epoch = 0;
  std::optional<double> l_sup;
  std::optional<double> l_cons;
  std::optional<double> l_ae;
  std::optional<double> l_synth;
  double train_total = 0.0;
  double validation = 0.0;
  double seconds = 0.0;
};

std::string to_json_line(const EpochRecord& record);

using EpochCallback = std::function<void(const EpochRecord&)>;

struct PhaseResult {
  int epochs = 0;
  int best_epoch = 0;
  double best_validation = 0.0;
  int restarts = 0;
};

// Referee: fresh synthetic pairs every epoch, early stopping on a fixed
// synthetic validation set. Leaves the best snapshot in `ref`.
PhaseResult train_referee(UNet& ref, int side, const CorruptionConfig& corruption,
                          const PhaseConfig& phase, std::uint64_t seed,
                          const EpochCallback& log = {});

// Sum of the mse referee loss over a pair set.
double referee_loss(const UNet& ref, const std::vector<MaskPair>& pairs);

// x -> y with L_sup; early stopping on S_val (on S_tr when S_val is empty).
PhaseResult pretrain_trainee(UNet& tne, const std::vector<Sample>& s_train,
                             const std::vector<Sample>& s_val, const PhaseConfig& phase,
                             std::uint64_t seed, const EpochCallback& log = {});

// y -> x with mse.
PhaseResult train_reverse(UNet& rev, const std::vector<Sample>& s_train,
                          const std::vector<Sample>& s_val, const PhaseConfig& phase,
                          std::uint64_t seed, const EpochCallback& log = {});

// Summed supervised loss of a net over labeled samples (reverse = y -> x, mse).
double supervised_loss(const UNet& net, const std::vector<Sample>& samples, LossKind kind,
                       bool reverse = false);

struct Phase4Losses {
  std::optional<double> l_sup;
  double l_cons = 0.0;
  double l_ae = 0.0;
  double total = 0.0;
};

Phase4Losses phase4_losses(const UNet& tne, const UNet& ref, const UNet& rev, const Image& x,
                           const std::optional<Mask>& y, const PhaseConfig& phase);

// -|rev(ref(tne(x))) - x|_1 / |x|_1, or -infinity for an all-black x.
double curriculum_score(const UNet& tne, const UNet& ref, const UNet& rev, const Image& x);

// Indices of the k largest scores, ties broken by lower index.
std::vector<std::size_t> select_top_k(const std::vector<double>& scores, std::size_t k);

// L_sup(S_val) + L_cons(U_val) + L_ae(U_val).
double validation_loss(const UNet& tne, const UNet& ref, const UNet& rev,
                       const DatasetBundle& bundle, const PhaseConfig& phase);

struct RoundSummary {
  double fraction = 0.0;
  std::vector<double> scores;          // over U_tr, at round start
  std::vector<std::size_t> active;     // indices into U_tr
  int epochs = 0;
  double best_validation = 0.0;
};

struct MainPhaseResult {
  std::vector<RoundSummary> rounds;
  int best_round = 0;
  double best_validation = 0.0;
};

// Curriculum loop over U_tr with early stopping per round on L_val. The
// referee and reverse nets are frozen; the trainee ends at the selected
// round's best snapshot.
MainPhaseResult main_phase(UNet& tne, UNet& ref, UNet& rev, const DatasetBundle& bundle,
                           const PhaseConfig& phase, const CurriculumSchedule& schedule,
                           std::uint64_t seed, const EpochCallback& log = {});

}  // namespace selfmentor
