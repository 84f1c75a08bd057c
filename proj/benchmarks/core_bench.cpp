// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include <cmath>
#include <numbers>
#include <vector>

#include <benchmark/benchmark.h>

#include "avinpaint/common/random.h"
#include "avinpaint/corruption/mask.h"
#include "avinpaint/dsp/mel.h"
#include "avinpaint/dsp/stft.h"
#include "avinpaint/losses/losses.h"
#include "avinpaint/models/model.h"
#include "avinpaint/nn/layers.h"
#include "avinpaint/nn/tape.h"

namespace {

using namespace avi;

std::vector<double> Speechlike(std::size_t n) {
  Rng rng(1);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / 8000.0;
    x[i] = 0.3 * std::sin(2 * std::numbers::pi * 180 * t) * (0.6 + 0.4 * std::sin(2 * std::numbers::pi * 4 * t)) +
           0.1 * std::sin(2 * std::numbers::pi * 1400 * t) + 0.01 * rng.Uniform(-1.0, 1.0);
  }
  return x;
}

RowMatrix RandomGrid(std::uint64_t seed, Eigen::Index rows, Eigen::Index cols) {
  Rng rng(seed);
  RowMatrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.Uniform();
  return m;
}

void BM_Stft(benchmark::State& state) {
  const auto x = Speechlike(24000);
  const dsp::StftParams p;
  for (auto _ : state) benchmark::DoNotOptimize(dsp::Stft(x, p));
}
BENCHMARK(BM_Stft)->Unit(benchmark::kMillisecond);

void BM_Istft(benchmark::State& state) {
  const auto spec = dsp::Stft(Speechlike(24000), dsp::StftParams{});
  for (auto _ : state) benchmark::DoNotOptimize(dsp::Istft(spec));
}
BENCHMARK(BM_Istft)->Unit(benchmark::kMillisecond);

void BM_GriffinLim(benchmark::State& state) {
  const dsp::StftParams p;
  const RowMatrix mag = dsp::Stft(Speechlike(24000), p).frames.cwiseAbs();
  const int iters = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(dsp::GriffinLim(mag, iters, p));
  state.SetItemsProcessed(state.iterations() * iters);
}
BENCHMARK(BM_GriffinLim)->Arg(10)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_InvertMel(benchmark::State& state) {
  const auto fb = dsp::MelMatrix(64, 510, 8000);
  const auto mel = dsp::ToMel(dsp::Stft(Speechlike(24000), dsp::StftParams{}), fb);
  for (auto _ : state) benchmark::DoNotOptimize(dsp::InvertMel(mel, fb, dsp::StftParams{}));
}
BENCHMARK(BM_InvertMel)->Unit(benchmark::kMillisecond);

void BM_CtcLoss(benchmark::State& state) {
  const RowMatrix logits = RandomGrid(2, 149, 40);
  std::vector<int> target(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = static_cast<int>(i * 7 % 39);
  for (auto _ : state) benchmark::DoNotOptimize(losses::CtcLoss(logits, target));
}
BENCHMARK(BM_CtcLoss)->Arg(10)->Arg(30);

void BM_BlstmForwardBackward(benchmark::State& state) {
  const int hidden = static_cast<int>(state.range(0));
  const int batch = static_cast<int>(state.range(1));
  nn::BlstmLayer<float> layer("b", 64, hidden);
  Rng rng(3);
  nn::InitLstm(layer.forward, rng);
  nn::InitLstm(layer.backward, rng);
  const nn::Matrix<float> x = RandomGrid(4, 149 * batch, 64).cast<float>();
  const nn::Matrix<float> target = nn::Matrix<float>::Zero(149 * batch, 2 * hidden);
  for (auto _ : state) {
    nn::Tape<float> tape;
    const nn::Var y = nn::Blstm(tape, tape.Input(x, nn::Layout{149, batch}), layer);
    tape.Backward(losses::Mse(tape, y, target));
  }
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_BlstmForwardBackward)->Args({32, 32})->Args({256, 1})->Unit(benchmark::kMillisecond);

void BM_ModelInpaint(benchmark::State& state) {
  models::ModelConfig c;
  c.variant = static_cast<models::Variant>(state.range(0));
  models::Model<float> m(c, 1);
  const RowMatrix x = RandomGrid(5, 149, 64);
  const auto a = corruption::ApplyMask(x, corruption::SampleMask(6, 149, corruption::MaskSpec{}));
  const RowMatrix vis = RandomGrid(7, 149, 40);
  for (auto _ : state) benchmark::DoNotOptimize(models::Inpaint(m, a, c.UsesVisual() ? &vis : nullptr));
  state.SetLabel(std::string(models::VariantName(c.variant)));
}
BENCHMARK(BM_ModelInpaint)
    ->Arg(static_cast<int>(models::Variant::kAudioOnly))
    ->Arg(static_cast<int>(models::Variant::kMultiTaskSeq2Seq))
    ->Unit(benchmark::kMillisecond);

void BM_SampleMask(benchmark::State& state) {
  const corruption::MaskSpec spec;
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(corruption::SampleMask(++seed, 149, spec));
}
BENCHMARK(BM_SampleMask);

}  // namespace

BENCHMARK_MAIN();
