// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/training/train.h"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "avinpaint/common/random.h"

namespace avi::training {

void TrainConfig::Validate() const {
  if (!(lr > 0)) throw std::invalid_argument("lr must be positive");
  if (batch < 1) throw std::invalid_argument("batch must be at least 1");
  if (plateau_patience < 1 || early_stop_patience < 1)
    throw std::invalid_argument("patiences must be at least 1");
  if (!(plateau_factor > 0 && plateau_factor < 1))
    throw std::invalid_argument("plateau_factor must lie in (0, 1)");
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be at least 1");
  if (!(min_delta >= 0)) throw std::invalid_argument("min_delta must be non-negative");
  if (!(clip_norm >= 0)) throw std::invalid_argument("clip_norm must be non-negative");
}

nlohmann::json TrainConfig::ToJson() const {
  return {{"lr", lr}, {"batch", batch}, {"plateau_patience", plateau_patience},
          {"plateau_factor", plateau_factor}, {"early_stop_patience", early_stop_patience},
          {"max_epochs", max_epochs}, {"min_delta", min_delta}, {"clip_norm", clip_norm},
          {"masked_only_loss", masked_only_loss}, {"seed", seed}};
}

TrainConfig TrainConfig::FromJson(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("train config must be an object");
  TrainConfig c;
  for (const auto& [key, value] : j.items()) {
    if (key == "lr") c.lr = value.get<double>();
    else if (key == "batch") c.batch = value.get<int>();
    else if (key == "plateau_patience") c.plateau_patience = value.get<int>();
    else if (key == "plateau_factor") c.plateau_factor = value.get<double>();
    else if (key == "early_stop_patience") c.early_stop_patience = value.get<int>();
    else if (key == "max_epochs") c.max_epochs = value.get<int>();
    else if (key == "min_delta") c.min_delta = value.get<double>();
    else if (key == "clip_norm") c.clip_norm = value.get<double>();
    else if (key == "masked_only_loss") c.masked_only_loss = value.get<bool>();
    else if (key == "seed") c.seed = value.get<std::uint64_t>();
    else throw std::invalid_argument("unknown train config key: " + key);
  }
  c.Validate();
  return c;
}

// --- Adam ---

template <typename S>
Adam<S>::Adam(std::vector<nn::Parameter<S>*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  for (auto* p : params_) {
    m_.push_back(nn::Matrix<S>::Zero(p->value.rows(), p->value.cols()));
    v_.push_back(nn::Matrix<S>::Zero(p->value.rows(), p->value.cols()));
  }
}

template <typename S>
void Adam<S>::Step(double lr) {
  for (auto* p : params_)
    if (!p->frozen && !p->grad.allFinite())
      throw nn::NumericalError("non-finite gradient for " + p->Name());
  ++step_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  const S b1 = static_cast<S>(config_.beta1), b2 = static_cast<S>(config_.beta2);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto* p = params_[i];
    if (p->frozen) continue;
    auto g = p->grad.array();
    m_[i].array() = b1 * m_[i].array() + (S(1) - b1) * g;
    v_[i].array() = b2 * v_[i].array() + (S(1) - b2) * g.square();
    p->value.array() -= static_cast<S>(lr) * (m_[i].array() / static_cast<S>(c1)) /
                        ((v_[i].array() / static_cast<S>(c2)).sqrt() + static_cast<S>(config_.epsilon));
  }
}

template <typename S>
void Adam<S>::SaveState(models::Checkpoint& ckpt) const {
  const DType dtype = sizeof(S) == 4 ? DType::kF32 : DType::kF64;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string name = params_[i]->Name();
    ckpt.aux.push_back({"adam.m/" + name, "", "", Tensor::FromMatrix(m_[i].template cast<double>(), dtype)});
    ckpt.aux.push_back({"adam.v/" + name, "", "", Tensor::FromMatrix(v_[i].template cast<double>(), dtype)});
  }
  ckpt.meta["adam_step"] = step_;
}

template <typename S>
void Adam<S>::LoadState(const models::Checkpoint& ckpt) {
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const std::string name = params_[i]->Name();
    const auto* m = ckpt.FindAux("adam.m/" + name);
    const auto* v = ckpt.FindAux("adam.v/" + name);
    if (!m || !v) throw std::runtime_error("checkpoint lacks optimizer state for " + name);
    m_[i] = m->tensor.ToMatrix().template cast<S>();
    v_[i] = v->tensor.ToMatrix().template cast<S>();
    if (m_[i].rows() != params_[i]->value.rows() || m_[i].cols() != params_[i]->value.cols())
      throw std::runtime_error("optimizer state shape mismatch for " + name);
  }
  step_ = ckpt.meta.at("adam_step").get<long>();
}

template class Adam<float>;
template class Adam<double>;

// --- schedules ---

ReduceLrOnPlateau::ReduceLrOnPlateau(double lr, int patience, double factor, double min_delta)
    : lr_(lr), patience_(patience), factor_(factor), min_delta_(min_delta) {}

double ReduceLrOnPlateau::Update(double loss) {
  if (!best_ || loss < *best_ - min_delta_) {
    best_ = loss;
    plateau_ = 1;
  } else {
    ++plateau_;
  }
  if (plateau_ >= patience_) {
    lr_ *= factor_;
    plateau_ = 0;
  }
  return lr_;
}

nlohmann::json ReduceLrOnPlateau::ToJson() const {
  nlohmann::json j = {{"lr", lr_}, {"plateau", plateau_}};
  if (best_) j["best"] = *best_;
  return j;
}

void ReduceLrOnPlateau::FromJson(const nlohmann::json& j) {
  lr_ = j.at("lr").get<double>();
  plateau_ = j.at("plateau").get<int>();
  if (j.contains("best")) best_ = j.at("best").get<double>();
  else best_.reset();
}

EarlyStopping::EarlyStopping(int patience, double min_delta)
    : patience_(patience), min_delta_(min_delta) {}

bool EarlyStopping::Update(int epoch, double loss) {
  if (!best_ || loss < *best_ - min_delta_) {
    best_ = loss;
    best_epoch_ = epoch;
    wait_ = 0;
    return true;
  }
  ++wait_;
  return false;
}

nlohmann::json EarlyStopping::ToJson() const {
  nlohmann::json j = {{"best_epoch", best_epoch_}, {"wait", wait_}};
  if (best_) j["best"] = *best_;
  return j;
}

void EarlyStopping::FromJson(const nlohmann::json& j) {
  best_epoch_ = j.at("best_epoch").get<int>();
  wait_ = j.at("wait").get<int>();
  if (j.contains("best")) best_ = j.at("best").get<double>();
  else best_.reset();
}

// --- losses over batches ---

template <typename S>
nn::Var BatchLoss(nn::Tape<S>& tape, models::Model<S>& model, const std::vector<const Sample*>& batch,
                  bool masked_only, LossParts* parts) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const auto& cfg = model.Config();
  const Eigen::Index steps = batch.front()->target.rows();
  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  nn::Matrix<S> spec(steps * b, cfg.spec_dim), target(steps * b, cfg.spec_dim);
  nn::Matrix<S> visual;
  if (cfg.UsesVisual()) visual.resize(steps * b, cfg.visual_dim);
  std::vector<std::uint8_t> masked_rows;
  if (masked_only) masked_rows.resize(static_cast<std::size_t>(steps * b));
  std::vector<std::vector<int>> labels;
  for (Eigen::Index j = 0; j < b; ++j) {
    const Sample& s = *batch[static_cast<std::size_t>(j)];
    if (s.target.rows() != steps || s.input.values.rows() != steps)
      throw std::invalid_argument("batch samples differ in length: " + s.id);
    if (s.target.cols() != cfg.spec_dim || s.input.values.cols() != cfg.spec_dim)
      throw std::invalid_argument("sample spectrogram width does not match the model: " + s.id);
    if (cfg.UsesVisual() && (s.visual.rows() != steps || s.visual.cols() != cfg.visual_dim))
      throw std::invalid_argument("sample visual features do not match the model: " + s.id);
    for (Eigen::Index t = 0; t < steps; ++t) {
      spec.row(t * b + j) = s.input.values.row(t).template cast<S>();
      target.row(t * b + j) = s.target.row(t).template cast<S>();
      if (cfg.UsesVisual()) visual.row(t * b + j) = s.visual.row(t).template cast<S>();
      if (masked_only) masked_rows[static_cast<std::size_t>(t * b + j)] = s.input.mask.IsIntact(static_cast<int>(t)) ? 0 : 1;
    }
    labels.push_back(s.labels);
  }
  const nn::Layout layout{steps, b};
  const nn::Var spec_var = tape.Input(std::move(spec), layout);
  const nn::Var vis_var = cfg.UsesVisual() ? tape.Input(std::move(visual), layout) : nn::Var{};
  const auto out = model.Forward(tape, spec_var, vis_var);
  const nn::Var mse = losses::Mse(tape, out.y, target, masked_only ? &masked_rows : nullptr);
  LossParts local;
  local.mse = static_cast<double>(tape.Value(mse)(0, 0));
  nn::Var total = mse;
  if (cfg.HasCtcHead()) {
    const nn::Var ctc = losses::Ctc(tape, out.logits, labels, &local.ctc_stats);
    local.ctc = local.ctc_stats.mean_nll;
    total = losses::Joint(tape, mse, ctc, losses::LossWeights{cfg.lambda});
  }
  local.total = static_cast<double>(tape.Value(total)(0, 0));
  if (parts) *parts = local;
  return total;
}

template <typename S>
LossParts Evaluate(models::Model<S>& model, const std::vector<Sample>& samples, int batch,
                   bool masked_only) {
  LossParts sum;
  if (samples.empty()) return sum;
  for (std::size_t start = 0; start < samples.size(); start += static_cast<std::size_t>(batch)) {
    std::vector<const Sample*> chunk;
    for (std::size_t i = start; i < std::min(samples.size(), start + static_cast<std::size_t>(batch)); ++i)
      chunk.push_back(&samples[i]);
    nn::Tape<S> tape;
    LossParts p;
    BatchLoss(tape, model, chunk, masked_only, &p);
    const double w = static_cast<double>(chunk.size());
    sum.total += w * p.total;
    sum.mse += w * p.mse;
    sum.ctc += w * p.ctc;
    sum.ctc_stats.feasible += p.ctc_stats.feasible;
    sum.ctc_stats.infeasible += p.ctc_stats.infeasible;
  }
  const double n = static_cast<double>(samples.size());
  sum.total /= n;
  sum.mse /= n;
  sum.ctc /= n;
  sum.ctc_stats.mean_nll = sum.ctc;
  return sum;
}

// --- fit ---

nlohmann::json EpochLog::ToJson(bool with_ctc) const {
  nlohmann::json j = {{"epoch", epoch}, {"train_loss", train_loss}, {"val_loss", val_loss},
                      {"lr", lr}, {"seconds", seconds}, {"train_mse", train_mse},
                      {"val_mse", val_mse}};
  if (with_ctc) {
    j["train_ctc"] = train_ctc;
    j["val_ctc"] = val_ctc;
    j["ctc_infeasible"] = ctc_infeasible;
  }
  return j;
}

EpochLog EpochLog::FromJson(const nlohmann::json& j) {
  EpochLog e;
  e.epoch = j.at("epoch").get<int>();
  e.train_loss = j.at("train_loss").get<double>();
  e.val_loss = j.at("val_loss").get<double>();
  e.lr = j.at("lr").get<double>();
  e.seconds = j.at("seconds").get<double>();
  e.train_mse = j.value("train_mse", 0.0);
  e.val_mse = j.value("val_mse", 0.0);
  e.train_ctc = j.value("train_ctc", 0.0);
  e.val_ctc = j.value("val_ctc", 0.0);
  e.ctc_infeasible = j.value("ctc_infeasible", 0);
  return e;
}

std::vector<int> ShuffledOrder(int n, std::uint64_t seed) {
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  Rng rng(seed);
  for (int i = n - 1; i > 0; --i)
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(rng.UniformInt(0, i))]);
  return order;
}

namespace {

template <typename S>
void ClipGlobalNorm(const std::vector<nn::Parameter<S>*>& params, double limit) {
  double sq = 0.0;
  for (auto* p : params)
    if (!p->frozen) sq += p->grad.template cast<double>().squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm <= limit || norm == 0.0) return;
  const S scale = static_cast<S>(limit / norm);
  for (auto* p : params) p->grad *= scale;
}

}  // namespace

template <typename S>
FitResult Fit(models::Model<S>& model, const std::vector<Sample>& train,
              const std::vector<Sample>& val, const TrainConfig& config, const FitOptions& options) {
  config.Validate();
  if (train.empty()) throw std::invalid_argument("training set is empty");
  if (val.empty()) throw std::invalid_argument("validation set is empty");

  const auto params = model.Parameters();
  Adam<S> adam(params);
  ReduceLrOnPlateau plateau(config.lr, config.plateau_patience, config.plateau_factor, config.min_delta);
  EarlyStopping early(config.early_stop_patience, config.min_delta);
  FitResult result;
  int first_epoch = 1;

  if (options.resume) {
    const auto& ck = *options.resume;
    models::Restore(ck, model);
    adam.LoadState(ck);
    plateau.FromJson(ck.meta.at("plateau"));
    early.FromJson(ck.meta.at("early_stopping"));
    for (const auto& e : ck.meta.at("log")) result.log.push_back(EpochLog::FromJson(e));
    first_epoch = ck.meta.at("epoch").get<int>() + 1;
    result.best = models::Capture(model, options.checkpoint_dtype);
    for (auto& p : result.best.params) {
      const auto* b = ck.FindAux("best/" + p.name);
      if (!b) throw std::runtime_error("resume checkpoint lacks best parameters for " + p.name);
      p.tensor = b->tensor;
    }
    result.best_epoch = early.BestEpoch();
    if (early.ShouldStop()) first_epoch = config.max_epochs + 1;
  }

  const bool with_ctc = model.Config().HasCtcHead();
  for (int epoch = first_epoch; epoch <= config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    const double lr = plateau.Lr();
    const auto order = ShuffledOrder(static_cast<int>(train.size()),
                                     DeriveSeed(config.seed, "epoch:" + std::to_string(epoch)));
    LossParts sum;
    int batch_id = 0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch), ++batch_id) {
      std::vector<const Sample*> chunk;
      for (std::size_t i = start; i < std::min(order.size(), start + static_cast<std::size_t>(config.batch)); ++i)
        chunk.push_back(&train[static_cast<std::size_t>(order[i])]);
      const std::string where = "epoch " + std::to_string(epoch) + " batch " + std::to_string(batch_id);
      for (auto* p : params) p->ZeroGrad();
      nn::Tape<S> tape;
      LossParts parts;
      try {
        const nn::Var loss = BatchLoss(tape, model, chunk, config.masked_only_loss, &parts);
        if (!std::isfinite(parts.total)) throw nn::NumericalError("non-finite loss");
        tape.Backward(loss);
        if (config.clip_norm > 0) ClipGlobalNorm(params, config.clip_norm);
        adam.Step(lr);
      } catch (const nn::NumericalError& e) {
        throw nn::NumericalError(std::string(e.what()) + " at " + where);
      }
      const double w = static_cast<double>(chunk.size());
      sum.total += w * parts.total;
      sum.mse += w * parts.mse;
      sum.ctc += w * parts.ctc;
      sum.ctc_stats.infeasible += parts.ctc_stats.infeasible;
    }
    const double n = static_cast<double>(train.size());
    const LossParts v = Evaluate(model, val, config.batch, config.masked_only_loss);

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = sum.total / n;
    log.train_mse = sum.mse / n;
    log.train_ctc = sum.ctc / n;
    log.val_loss = v.total;
    log.val_mse = v.mse;
    log.val_ctc = v.ctc;
    log.lr = lr;
    log.ctc_infeasible = sum.ctc_stats.infeasible;

    plateau.Update(log.train_loss);
    if (early.Update(epoch, log.val_loss)) {
      result.best = models::Capture(model, options.checkpoint_dtype);
      result.best.meta["epoch"] = epoch;
      result.best_epoch = epoch;
    }
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);

    result.last = models::Capture(model, options.checkpoint_dtype);
    adam.SaveState(result.last);
    for (const auto& p : result.best.params) result.last.aux.push_back({"best/" + p.name, "", "", p.tensor});
    result.last.meta["epoch"] = epoch;
    result.last.meta["plateau"] = plateau.ToJson();
    result.last.meta["early_stopping"] = early.ToJson();
    result.last.meta["log"] = nlohmann::json::array();
    for (const auto& e : result.log) result.last.meta["log"].push_back(e.ToJson(with_ctc));
    result.best.config = model.Config();
    if (options.on_epoch) options.on_epoch(log, result);
    if (early.ShouldStop()) {
      result.early_stopped = true;
      break;
    }
  }
  result.early_stopped = result.early_stopped || early.ShouldStop();
  return result;
}

#define AVI_INSTANTIATE_TRAINING(S)                                                               \
  template nn::Var BatchLoss<S>(nn::Tape<S>&, models::Model<S>&, const std::vector<const Sample*>&, \
                                bool, LossParts*);                                                \
  template LossParts Evaluate<S>(models::Model<S>&, const std::vector<Sample>&, int, bool);       \
  template FitResult Fit<S>(models::Model<S>&, const std::vector<Sample>&,                        \
                            const std::vector<Sample>&, const TrainConfig&, const FitOptions&);

AVI_INSTANTIATE_TRAINING(float)
AVI_INSTANTIATE_TRAINING(double)

}  // namespace avi::training
