#include "asa/delivery.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "asa/common.hpp"
#include "asa/lexicon.hpp"

namespace asa {

namespace {

constexpr double kDbFloor = -100.0;

double to_db(double linear) { return linear > 1e-5 ? 20.0 * std::log10(linear) : kDbFloor; }

void check_timestamps(const std::vector<WordTimestamp>& words, double duration_s, double tolerance_s) {
  double prev_end = 0.0;
  for (std::size_t i = 0; i < words.size(); ++i) {
    const auto& w = words[i];
    if (!(w.start_s >= 0.0) || !(w.end_s >= w.start_s))
      throw AlignmentError("word " + std::to_string(i) + " ('" + w.token + "') has an invalid interval");
    if (w.start_s + 1e-9 < prev_end)
      throw AlignmentError("word " + std::to_string(i) + " ('" + w.token + "') overlaps its predecessor");
    if (duration_s >= 0.0 && w.end_s > duration_s + tolerance_s)
      throw AlignmentError("word " + std::to_string(i) + " ('" + w.token + "') ends after the audio");
    prev_end = w.end_s;
  }
}

void fill_timing(const std::vector<WordTimestamp>& words, Eigen::MatrixXd& out) {
  const auto n = static_cast<Eigen::Index>(words.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& w = words[static_cast<std::size_t>(i)];
    const double pause = i == 0 ? 0.0 : w.start_s - words[static_cast<std::size_t>(i - 1)].end_s;
    out(i, kWordDuration) = w.end_s - w.start_s;
    out(i, kPrecedingPause) = std::max(0.0, pause);
    out(i, kLongPauseFlag) = pause > kLongPauseSeconds ? 1.0 : 0.0;
    out(i, kWordPosition) = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;

    const Eigen::Index lo = std::max<Eigen::Index>(0, i - 2);
    const Eigen::Index hi = std::min<Eigen::Index>(n - 1, i + 2);
    const double span = words[static_cast<std::size_t>(hi)].end_s - words[static_cast<std::size_t>(lo)].start_s;
    double speaking = 0.0;
    int syllables = 0;
    for (Eigen::Index j = lo; j <= hi; ++j) {
      const auto& wj = words[static_cast<std::size_t>(j)];
      speaking += wj.end_s - wj.start_s;
      syllables += lexicon::syllable_count(wj.token);
    }
    out(i, kSpeechRate) = span > 0.0 ? static_cast<double>(hi - lo + 1) / span : 0.0;
    out(i, kArticulationRate) = speaking > 0.0 ? syllables / speaking : 0.0;
    out(i, kSilenceRatio) = span > 0.0 ? std::clamp((span - speaking) / span, 0.0, 1.0) : 0.0;
  }
}

// Normalized autocorrelation of x at lag tau over the overlapping part.
double normalized_autocorr(const double* x, int n, int tau) {
  double xy = 0.0, xx = 0.0, yy = 0.0;
  for (int i = 0; i + tau < n; ++i) {
    xy += x[i] * x[i + tau];
    xx += x[i] * x[i];
    yy += x[i + tau] * x[i + tau];
  }
  const double denom = std::sqrt(xx * yy);
  return denom > 0.0 ? xy / denom : 0.0;
}

}  // namespace

FrameTrack analyze_frames(const Waveform& wave, const PitchSettings& s) {
  if (wave.sample_rate <= 0 || wave.samples.empty()) throw MediaError("empty audio");
  const int win = std::max(1, static_cast<int>(std::lround(s.window_s * wave.sample_rate)));
  const int hop = std::max(1, static_cast<int>(std::lround(s.hop_s * wave.sample_rate)));
  const int min_lag = std::max(1, static_cast<int>(std::floor(wave.sample_rate / s.max_hz)));
  const int max_lag = std::min(win - 1, static_cast<int>(std::ceil(wave.sample_rate / s.min_hz)));
  const auto total = static_cast<int>(wave.samples.size());

  FrameTrack track;
  track.hop_s = static_cast<double>(hop) / wave.sample_rate;
  track.window_s = static_cast<double>(win) / wave.sample_rate;
  const int n_frames = total >= win ? 1 + (total - win) / hop : 1;
  track.f0.assign(static_cast<std::size_t>(n_frames), 0.0);
  track.rms.assign(static_cast<std::size_t>(n_frames), 0.0);

  std::vector<double> frame(static_cast<std::size_t>(win));
  for (int f = 0; f < n_frames; ++f) {
    const int begin = f * hop;
    const int len = std::min(win, total - begin);
    double mean = 0.0;
    for (int i = 0; i < len; ++i) mean += wave.samples[static_cast<std::size_t>(begin + i)];
    mean /= len;
    double energy = 0.0;
    for (int i = 0; i < len; ++i) {
      frame[static_cast<std::size_t>(i)] = wave.samples[static_cast<std::size_t>(begin + i)] - mean;
      energy += frame[static_cast<std::size_t>(i)] * frame[static_cast<std::size_t>(i)];
    }
    track.rms[static_cast<std::size_t>(f)] = std::sqrt(energy / len);
  }
  const double loudest = *std::max_element(track.rms.begin(), track.rms.end());
  if (!(loudest > 0.0)) throw MediaError("audio is silent");
  const double gate = loudest * std::pow(10.0, s.silence_db / 20.0);

  std::vector<double> r(static_cast<std::size_t>(max_lag + 2), 0.0);
  for (int f = 0; f < n_frames; ++f) {
    if (track.rms[static_cast<std::size_t>(f)] < gate) continue;
    const int begin = f * hop;
    const int len = std::min(win, total - begin);
    if (len <= max_lag) continue;
    double mean = 0.0;
    for (int i = 0; i < len; ++i) mean += wave.samples[static_cast<std::size_t>(begin + i)];
    mean /= len;
    for (int i = 0; i < len; ++i) frame[static_cast<std::size_t>(i)] = wave.samples[static_cast<std::size_t>(begin + i)] - mean;

    double best = -1.0;
    for (int tau = min_lag - 1; tau <= max_lag + 1; ++tau) {
      r[static_cast<std::size_t>(tau)] = tau >= 1 ? normalized_autocorr(frame.data(), len, tau) : 1.0;
      if (tau >= min_lag && tau <= max_lag) best = std::max(best, r[static_cast<std::size_t>(tau)]);
    }
    if (best < s.voicing_threshold) continue;
    // Smallest-lag local peak close to the global maximum, which avoids
    // picking a multiple of the true period.
    int chosen = -1;
    for (int tau = min_lag; tau <= max_lag; ++tau) {
      const double v = r[static_cast<std::size_t>(tau)];
      if (v >= 0.9 * best && v >= r[static_cast<std::size_t>(tau - 1)] && v >= r[static_cast<std::size_t>(tau + 1)]) {
        chosen = tau;
        break;
      }
    }
    if (chosen < 0) continue;
    // Parabolic interpolation around the peak.
    const double a = r[static_cast<std::size_t>(chosen - 1)], b = r[static_cast<std::size_t>(chosen)],
                 c = r[static_cast<std::size_t>(chosen + 1)];
    const double denom = a - 2.0 * b + c;
    const double offset = std::abs(denom) > 1e-12 ? std::clamp(0.5 * (a - c) / denom, -0.5, 0.5) : 0.0;
    track.f0[static_cast<std::size_t>(f)] = wave.sample_rate / (chosen + offset);
  }
  return track;
}

DeliveryFeatures delivery_features(const Waveform& wave, const std::vector<WordTimestamp>& words,
                                   const PitchSettings& settings) {
  const FrameTrack track = analyze_frames(wave, settings);
  check_timestamps(words, wave.duration_s(), track.hop_s);

  DeliveryFeatures out;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(words.size()), kDeliveryDim);
  fill_timing(words, out.values);

  for (std::size_t w = 0; w < words.size(); ++w) {
    std::vector<double> times, pitches, levels;
    std::size_t frames = 0;
    for (std::size_t f = 0; f < track.f0.size(); ++f) {
      const double t = track.frame_center(f);
      if (t < words[w].start_s || t >= words[w].end_s) continue;
      ++frames;
      levels.push_back(to_db(track.rms[f]));
      if (track.f0[f] > 0.0) {
        times.push_back(t);
        pitches.push_back(track.f0[f]);
      }
    }
    const auto i = static_cast<Eigen::Index>(w);
    if (!levels.empty()) {
      const Eigen::Map<const Eigen::VectorXd> l(levels.data(), static_cast<Eigen::Index>(levels.size()));
      const double m = l.mean();
      out.values(i, kIntensityMean) = m;
      out.values(i, kIntensityStd) = std::sqrt((l.array() - m).square().mean());
      out.values(i, kEnergyPeak) = l.maxCoeff();
    } else {
      out.values(i, kIntensityMean) = kDbFloor;
      out.values(i, kEnergyPeak) = kDbFloor;
    }
    out.values(i, kVoicedFraction) = frames > 0 ? static_cast<double>(pitches.size()) / frames : 0.0;
    if (!pitches.empty()) {
      const Eigen::Map<const Eigen::VectorXd> p(pitches.data(), static_cast<Eigen::Index>(pitches.size()));
      const Eigen::Map<const Eigen::VectorXd> t(times.data(), static_cast<Eigen::Index>(times.size()));
      const double pm = p.mean(), tm = t.mean();
      out.values(i, kPitchMean) = pm;
      out.values(i, kPitchStd) = std::sqrt((p.array() - pm).square().mean());
      const double stt = (t.array() - tm).square().sum();
      out.values(i, kPitchSlope) = stt > 0.0 ? ((t.array() - tm) * (p.array() - pm)).sum() / stt : 0.0;
    }
  }
  return out;
}

DeliveryFeatures delivery_features_from_transcript(const std::vector<WordTimestamp>& words) {
  check_timestamps(words, -1.0, 0.0);
  DeliveryFeatures out;
  out.acoustic = false;
  out.values = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(words.size()), kDeliveryDim);
  fill_timing(words, out.values);
  return out;
}

}  // namespace asa
