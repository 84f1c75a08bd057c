// Copyright 2026 The avinpaint Authors
// License: Apache 2.0 (http://www.apache.org/licenses/LICENSE-2.0)

#include "avinpaint/metrics/metrics.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <numbers>
#include <regex>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "avinpaint/dsp/filters.h"
#include "avinpaint/dsp/stft.h"

namespace avi::metrics {

double Mse(const RowMatrix& x, const RowMatrix& o) {
  if (x.rows() != o.rows() || x.cols() != o.cols()) throw std::invalid_argument("metric: shape mismatch");
  if (x.size() == 0) throw std::invalid_argument("metric: empty input");
  return (x - o).squaredNorm() / static_cast<double>(x.size());
}

double PsnrFromMse(double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return -10.0 * std::log10(mse);
}

double Psnr(const RowMatrix& x, const RowMatrix& o) { return PsnrFromMse(Mse(x, o)); }

// --- STOI ---

namespace {

constexpr int kStoiRate = 10000;
constexpr int kFrame = 256;
constexpr int kFftLen = 512;
constexpr int kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr int kSegment = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann without its zero end points.
std::vector<double> InnerHann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * (i + 1) / (n + 1));
  return w;
}

// Frame starts 0, hop, ... strictly below len - frame.
int FrameStarts(std::size_t len, int frame, int hop) {
  if (len <= static_cast<std::size_t>(frame)) return 0;
  return static_cast<int>((len - frame - 1) / hop) + 1;
}

void RemoveSilentFrames(std::vector<double>& x, std::vector<double>& y) {
  const int hop = kFrame / 2;
  const auto w = InnerHann(kFrame);
  const int frames = FrameStarts(x.size(), kFrame, hop);
  std::vector<double> energy(static_cast<std::size_t>(frames));
  for (int f = 0; f < frames; ++f) {
    double sq = 0.0;
    for (int i = 0; i < kFrame; ++i) {
      const double v = w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(f * hop + i)];
      sq += v * v;
    }
    energy[static_cast<std::size_t>(f)] = 20.0 * std::log10(std::sqrt(sq) + kEps);
  }
  const double peak = frames > 0 ? *std::max_element(energy.begin(), energy.end()) : 0.0;
  std::vector<int> kept;
  for (int f = 0; f < frames; ++f)
    if (peak - kDynRange - energy[static_cast<std::size_t>(f)] < 0) kept.push_back(f);
  const std::size_t out_len = kept.empty() ? 0 : (kept.size() - 1) * hop + kFrame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    const std::size_t src = static_cast<std::size_t>(kept[k]) * hop, dst = k * hop;
    for (int i = 0; i < kFrame; ++i) {
      xs[dst + i] += w[static_cast<std::size_t>(i)] * x[src + i];
      ys[dst + i] += w[static_cast<std::size_t>(i)] * y[src + i];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// Band envelopes, bands x frames.
RowMatrix ThirdOctaveEnvelopes(const std::vector<double>& x) {
  const int hop = kFrame / 2;
  const auto w = InnerHann(kFrame);
  const int frames = FrameStarts(x.size(), kFrame, hop);
  const int bins = kFftLen / 2 + 1;

  // Band edges snapped to the nearest FFT bin; band i covers [lo, hi).
  std::vector<int> lo(kBands), hi(kBands);
  auto nearest = [&](double hz) {
    int best = 0;
    double dist = std::numeric_limits<double>::infinity();
    for (int b = 0; b < bins; ++b) {
      const double f = static_cast<double>(kStoiRate) * b / kFftLen;
      const double d = (f - hz) * (f - hz);
      if (d < dist) {
        dist = d;
        best = b;
      }
    }
    return best;
  };
  for (int k = 0; k < kBands; ++k) {
    lo[static_cast<std::size_t>(k)] = nearest(kMinFreq * std::pow(2.0, (2.0 * k - 1) / 6.0));
    hi[static_cast<std::size_t>(k)] = nearest(kMinFreq * std::pow(2.0, (2.0 * k + 1) / 6.0));
  }

  dsp::RealFft fft(kFftLen);
  std::vector<double> buf(kFftLen, 0.0);
  std::vector<std::complex<double>> spec(static_cast<std::size_t>(bins));
  RowMatrix env(kBands, frames);
  for (int f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (int i = 0; i < kFrame; ++i)
      buf[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(f * hop + i)];
    fft.Forward(buf, spec);
    for (int k = 0; k < kBands; ++k) {
      double power = 0.0;
      for (int b = lo[static_cast<std::size_t>(k)]; b < hi[static_cast<std::size_t>(k)]; ++b) power += std::norm(spec[static_cast<std::size_t>(b)]);
      env(k, f) = std::sqrt(power);
    }
  }
  return env;
}

}  // namespace

double Stoi(const dsp::Waveform& clean, const dsp::Waveform& degraded) {
  if (clean.samples.size() != degraded.samples.size())
    throw std::invalid_argument("stoi: signals differ in length");
  if (clean.sample_rate != degraded.sample_rate) throw std::invalid_argument("stoi: signals differ in rate");
  std::vector<double> x = dsp::Resample(clean, kStoiRate).samples;
  std::vector<double> y = dsp::Resample(degraded, kStoiRate).samples;
  RemoveSilentFrames(x, y);
  const RowMatrix xe = ThirdOctaveEnvelopes(x);
  const RowMatrix ye = ThirdOctaveEnvelopes(y);
  const Eigen::Index frames = xe.cols();
  if (frames < kSegment)
    throw std::invalid_argument("stoi: fewer than " + std::to_string(kSegment) +
                                " non-silent frames (signal too short)");

  const double clip = std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  long count = 0;
  Eigen::RowVectorXd xs(kSegment), ys(kSegment);
  for (Eigen::Index m = kSegment; m <= frames; ++m) {
    for (int k = 0; k < kBands; ++k) {
      xs = xe.row(k).segment(m - kSegment, kSegment);
      ys = ye.row(k).segment(m - kSegment, kSegment);
      ys *= xs.norm() / (ys.norm() + kEps);
      ys = ys.cwiseMin(xs * (1.0 + clip));
      ys.array() -= ys.mean();
      xs.array() -= xs.mean();
      ys /= ys.norm() + kEps;
      xs /= xs.norm() + kEps;
      total += xs.dot(ys);
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

// --- PESQ ---

std::optional<double> ParsePesqOutput(const std::string& text) {
  static const std::regex kNumber(R"([-+]?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?)");
  std::istringstream in(text);
  std::optional<double> plain;
  for (std::string line; std::getline(in, line);) {
    if (line.find("Prediction") != std::string::npos) {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      std::smatch m;
      const std::string rest = line.substr(eq + 1);
      if (std::regex_search(rest, m, kNumber)) return std::stod(m.str());
    }
    std::smatch m;
    const auto first = line.find_first_not_of(" \t\r");
    if (!plain && first != std::string::npos) {
      const std::string trimmed = line.substr(first, line.find_last_not_of(" \t\r") - first + 1);
      if (std::regex_match(trimmed, m, kNumber)) plain = std::stod(trimmed);
    }
  }
  return plain;
}

PesqOutcome Pesq(const dsp::Waveform& clean, const dsp::Waveform& degraded, std::string tool_path) {
  PesqOutcome out;
  if (tool_path.empty()) {
    const char* env = std::getenv(kPesqEnv);
    if (env) tool_path = env;
  }
  if (tool_path.empty()) return out;
  out.configured = true;
  if (!std::filesystem::exists(tool_path)) {
    out.error = "PESQ tool not found: " + tool_path;
    return out;
  }
  static std::atomic<unsigned> counter{0};
  const auto dir = std::filesystem::temp_directory_path() /
                   ("avinpaint_pesq_" + std::to_string(getpid()) + "_" + std::to_string(counter++));
  std::filesystem::create_directories(dir);
  const auto ref = dir / "ref.wav", deg = dir / "deg.wav";
  try {
    dsp::WriteWav(ref, dsp::Resample(clean, 8000));
    dsp::WriteWav(deg, dsp::Resample(degraded, 8000));
    const std::string cmd = "\"" + tool_path + "\" +8000 \"" + ref.string() + "\" \"" + deg.string() + "\" 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("cannot launch " + tool_path);
    std::string text;
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe)) text += buf;
    const int status = pclose(pipe);
    out.score = ParsePesqOutput(text);
    if (!out.score) out.error = "unparsable PESQ output (exit status " + std::to_string(status) + ")";
  } catch (const std::exception& e) {
    out.error = e.what();
    out.score.reset();
  }
  std::error_code ec;
  std::filesystem::remove_all(dir, ec);
  return out;
}

// --- report ---

void MetricsReport::Finalize() {
  const double n = static_cast<double>(per_sample.size());
  mean_stoi = mean_psnr_db = mean_mse = 0.0;
  mean_pesq.reset();
  if (per_sample.empty()) return;
  bool all_pesq = true;
  double pesq = 0.0;
  for (const auto& s : per_sample) {
    mean_stoi += s.stoi;
    mean_psnr_db += std::min(s.psnr_db, kPsnrCapDb);
    mean_mse += s.mse;
    if (s.pesq) pesq += *s.pesq;
    else all_pesq = false;
  }
  mean_stoi /= n;
  mean_psnr_db /= n;
  mean_mse /= n;
  if (all_pesq) mean_pesq = pesq / n;
}

namespace {

nlohmann::json Num(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double FromNum(const nlohmann::json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    throw std::invalid_argument("bad number in report: " + s);
  }
  return j.get<double>();
}

std::string Fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

nlohmann::json MetricsReport::ToJson() const {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& s : per_sample) {
    nlohmann::json r = {{"id", s.id}};
    r["pesq"] = s.pesq ? nlohmann::json(*s.pesq) : nlohmann::json(nullptr);
    r["stoi"] = s.stoi;
    r["psnr_db"] = Num(s.psnr_db);
    r["mse"] = s.mse;
    rows.push_back(std::move(r));
  }
  nlohmann::json means = nlohmann::json::object();
  if (mean_pesq) means["pesq"] = *mean_pesq;
  means["stoi"] = mean_stoi;
  means["psnr_db"] = mean_psnr_db;
  means["mse"] = mean_mse;
  return {{"per_sample", rows}, {"means", means}, {"n", per_sample.size()},
          {"psnr_cap_db", kPsnrCapDb}, {"config_digest", config_digest},
          {"pesq_status", pesq_status}};
}

MetricsReport MetricsReport::FromJson(const nlohmann::json& j) {
  MetricsReport r;
  for (const auto& row : j.at("per_sample")) {
    SampleMetrics s;
    s.id = row.at("id").get<std::string>();
    if (!row.at("pesq").is_null()) s.pesq = row.at("pesq").get<double>();
    s.stoi = row.at("stoi").get<double>();
    s.psnr_db = FromNum(row.at("psnr_db"));
    s.mse = row.at("mse").get<double>();
    r.per_sample.push_back(std::move(s));
  }
  const auto& m = j.at("means");
  if (m.contains("pesq")) r.mean_pesq = m.at("pesq").get<double>();
  r.mean_stoi = m.at("stoi").get<double>();
  r.mean_psnr_db = m.at("psnr_db").get<double>();
  r.mean_mse = m.at("mse").get<double>();
  r.config_digest = j.value("config_digest", "");
  r.pesq_status = j.value("pesq_status", "");
  return r;
}

std::string MetricsReport::ToCsv() const {
  std::ostringstream out;
  out << "id,PESQ,STOI,PSNR,MSE\n";
  for (const auto& s : per_sample)
    out << s.id << ',' << (s.pesq ? Fmt(*s.pesq) : "") << ',' << Fmt(s.stoi) << ','
        << Fmt(s.psnr_db) << ',' << Fmt(s.mse) << '\n';
  out << "mean," << (mean_pesq ? Fmt(*mean_pesq) : "") << ',' << Fmt(mean_stoi) << ','
      << Fmt(mean_psnr_db) << ',' << Fmt(mean_mse) << '\n';
  return out.str();
}

}  // namespace avi::metrics
