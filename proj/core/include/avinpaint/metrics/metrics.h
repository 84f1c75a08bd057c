// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "avinpaint/common/matrix.h"
#include "avinpaint/dsp/waveform.h"

namespace avi::metrics {

// Reported for identical spectrograms; also the cap applied before
// averaging.
inline constexpr double kPsnrCapDb = 99.0;

// Mean squared cell difference.
double Mse(const RowMatrix& x, const RowMatrix& o);

// Peak-1 PSNR, -10 log10(mse). +infinity when mse is 0.
double PsnrFromMse(double mse);
double Psnr(const RowMatrix& x, const RowMatrix& o);

// Short-time objective intelligibility of `degraded` against `clean`. Both
// are rate-converted to 10 kHz; frames more than 40 dB below the loudest
// clean frame are dropped from both; 15 one-third octave bands from 150 Hz
// are compared over 30-frame (384 ms) segments with the degraded envelope
// scaled to the clean energy and clipped at -15 dB SDR. Throws
// std::invalid_argument for unequal lengths or rates, or when fewer than 30
// frames survive.
double Stoi(const dsp::Waveform& clean, const dsp::Waveform& degraded);

// Environment variable naming the external narrowband PESQ executable.
inline constexpr const char* kPesqEnv = "AVINPAINT_PESQ_BIN";

struct PesqOutcome {
  std::optional<double> score;  // absent when not configured or failed
  std::string error;            // why the score is absent, empty if unconfigured
  bool configured = false;
};

// Runs `<tool> +8000 <clean.wav> <degraded.wav>` and reads the MOS from its
// output: the number after '=' on a line mentioning "Prediction", or else a
// line holding a single number. An empty tool path falls back to the
// environment variable; neither set yields an absent score.
PesqOutcome Pesq(const dsp::Waveform& clean, const dsp::Waveform& degraded,
                 std::string tool_path = {});

// Parses the tool output described above.
std::optional<double> ParsePesqOutput(const std::string& text);

struct SampleMetrics {
  std::string id;
  std::optional<double> pesq;
  double stoi = 0.0;
  double psnr_db = 0.0;  // uncapped; may be +infinity
  double mse = 0.0;
};

struct MetricsReport {
  std::vector<SampleMetrics> per_sample;
  std::optional<double> mean_pesq;  // only when every sample has a score
  double mean_stoi = 0.0;
  double mean_psnr_db = 0.0;  // of per-sample values capped at kPsnrCapDb
  double mean_mse = 0.0;
  std::string config_digest;
  std::string pesq_status;  // "not configured", "ok", or the first failure

  // Recomputes the means from per_sample.
  void Finalize();
  // {"per_sample": [...], "means": {"pesq"?, "stoi", "psnr_db", "mse"}, "n", ...}
  nlohmann::json ToJson() const;
  static MetricsReport FromJson(const nlohmann::json& j);
  // Columns id, PESQ, STOI, PSNR, MSE; a final "mean" row; absent PESQ as
  // an empty cell.
  std::string ToCsv() const;
};

}  // namespace avi::metrics
