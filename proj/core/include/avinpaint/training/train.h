// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avinpaint/common/matrix.h"
#include "avinpaint/corruption/mask.h"
#include "avinpaint/losses/losses.h"
#include "avinpaint/models/checkpoint.h"
#include "avinpaint/models/model.h"

namespace avi::training {

struct TrainConfig {
  double lr = 0.001;
  int batch = 32;
  int plateau_patience = 5;
  double plateau_factor = 0.1;
  int early_stop_patience = 10;
  int max_epochs = 200;
  double min_delta = 1e-6;  // an improvement must beat the best by this much
  double clip_norm = 0.0;   // global gradient norm limit; 0 disables
  bool masked_only_loss = false;
  std::uint64_t seed = 0;

  void Validate() const;
  nlohmann::json ToJson() const;
  static TrainConfig FromJson(const nlohmann::json& j);
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
};

// Bias-corrected Adam: theta -= lr * m_hat / (sqrt(v_hat) + eps).
template <typename S>
class Adam {
 public:
  explicit Adam(std::vector<nn::Parameter<S>*> params, AdamConfig config = {});

  // Applies one update from the parameters' current grads. Frozen
  // parameters are skipped. Throws nn::NumericalError, leaving every
  // parameter untouched, if any gradient is not finite.
  void Step(double lr);
  long StepCount() const { return step_; }

  void SaveState(models::Checkpoint& ckpt) const;
  void LoadState(const models::Checkpoint& ckpt);

 private:
  std::vector<nn::Parameter<S>*> params_;
  std::vector<nn::Matrix<S>> m_;
  std::vector<nn::Matrix<S>> v_;
  AdamConfig config_;
  long step_ = 0;
};

// Epoch-level learning-rate schedule on the training loss. The plateau
// length counts the epoch that set the current best, so with patience 5 a
// best followed by four non-improving epochs triggers the drop. The counter
// restarts after each drop.
class ReduceLrOnPlateau {
 public:
  ReduceLrOnPlateau(double lr, int patience, double factor, double min_delta);

  // Feeds one epoch's loss and returns the learning rate for the next epoch.
  double Update(double loss);
  double Lr() const { return lr_; }
  nlohmann::json ToJson() const;
  void FromJson(const nlohmann::json& j);

 private:
  double lr_;
  int patience_;
  double factor_;
  double min_delta_;
  std::optional<double> best_;
  int plateau_ = 0;
};

// Stops once `patience` consecutive epochs follow the best without beating it.
class EarlyStopping {
 public:
  EarlyStopping(int patience, double min_delta);

  // Returns true when this epoch set a new best.
  bool Update(int epoch, double loss);
  bool ShouldStop() const { return wait_ >= patience_; }
  int BestEpoch() const { return best_epoch_; }
  double Best() const { return best_.value_or(0.0); }
  nlohmann::json ToJson() const;
  void FromJson(const nlohmann::json& j);

 private:
  int patience_;
  double min_delta_;
  std::optional<double> best_;
  int best_epoch_ = 0;
  int wait_ = 0;
};

struct Sample {
  std::string id;
  RowMatrix target;                    // clean spectrogram x, T x spec_dim
  corruption::MaskedSpectrogram input; // a and its mask
  RowMatrix visual;                    // T x visual_dim, empty for A-SI
  std::vector<int> labels;             // CTC targets
};

struct LossParts {
  double total = 0.0;
  double mse = 0.0;
  double ctc = 0.0;
  losses::CtcBatchStats ctc_stats;
};

// Records the variant's objective over a batch of equal-length samples:
// MSE for every variant plus lambda * CTC for the multi-task one.
template <typename S>
nn::Var BatchLoss(nn::Tape<S>& tape, models::Model<S>& model, const std::vector<const Sample*>& batch,
                  bool masked_only, LossParts* parts);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
  double train_mse = 0.0;
  double train_ctc = 0.0;
  double val_mse = 0.0;
  double val_ctc = 0.0;
  int ctc_infeasible = 0;

  nlohmann::json ToJson(bool with_ctc) const;
  static EpochLog FromJson(const nlohmann::json& j);
};

struct FitResult {
  models::Checkpoint best;  // parameters of the best validation epoch
  models::Checkpoint last;  // final parameters, optimizer and schedule state
  std::vector<EpochLog> log;
  int best_epoch = 0;
  bool early_stopped = false;
};

struct FitOptions {
  const models::Checkpoint* resume = nullptr;  // a `last` checkpoint
  std::function<void(const EpochLog&, const FitResult&)> on_epoch;
  DType checkpoint_dtype = DType::kF32;
};

// Mean objective over `samples` in fixed batch order, without gradients.
template <typename S>
LossParts Evaluate(models::Model<S>& model, const std::vector<Sample>& samples, int batch,
                   bool masked_only);

// Mini-batch training with per-epoch deterministic shuffling, plateau LR
// schedule and early stopping on validation loss. A non-finite loss or
// gradient aborts with nn::NumericalError naming the epoch and batch.
template <typename S>
FitResult Fit(models::Model<S>& model, const std::vector<Sample>& train,
              const std::vector<Sample>& val, const TrainConfig& config,
              const FitOptions& options = {});

// Fisher-Yates permutation of 0..n-1 driven by `seed`.
std::vector<int> ShuffledOrder(int n, std::uint64_t seed);

}  // namespace avi::training
