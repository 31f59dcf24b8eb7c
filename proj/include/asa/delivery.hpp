#pragma once

#include <vector>

#include <Eigen/Dense>

#include "asa/corpus.hpp"
#include "asa/media.hpp"

namespace asa {

inline constexpr int kDeliveryDim = 14;

/// Column layout of the per-word delivery vector.
enum DeliveryColumn : int {
  kPitchMean = 0,        // Hz over voiced frames
  kPitchStd = 1,         // Hz
  kPitchSlope = 2,       // Hz per second, least squares over voiced frames
  kIntensityMean = 3,    // dB re full scale
  kIntensityStd = 4,     // dB
  kWordDuration = 5,     // s
  kPrecedingPause = 6,   // s, 0 for the first word
  kLongPauseFlag = 7,    // preceding pause > 0.5 s
  kSpeechRate = 8,       // words / s over the +-2 word window
  kArticulationRate = 9, // syllables / s of speaking time in the window
  kVoicedFraction = 10,  // voiced frames / frames in the word
  kEnergyPeak = 11,      // peak frame intensity, dB re full scale
  kWordPosition = 12,    // i / (W - 1)
  kSilenceRatio = 13,    // pause time / window span
};

/// Columns filled from the waveform; zero in transcript-only mode.
inline constexpr int kAcousticColumns[] = {kPitchMean,   kPitchStd,       kPitchSlope, kIntensityMean,
                                           kIntensityStd, kVoicedFraction, kEnergyPeak};

inline constexpr double kLongPauseSeconds = 0.5;

struct PitchSettings {
  double min_hz = 75.0;
  double max_hz = 500.0;
  double hop_s = 0.010;
  double window_s = 0.040;
  /// Minimum normalized autocorrelation at the chosen lag.
  double voicing_threshold = 0.45;
  /// Frames quieter than this relative to the loudest frame are silent.
  double silence_db = -40.0;
};

/// Frame-level analysis. Frame i spans [i * hop, i * hop + window).
struct FrameTrack {
  double hop_s = 0.0;
  double window_s = 0.0;
  std::vector<double> f0;   // Hz, 0 when unvoiced or silent
  std::vector<double> rms;  // linear
  double frame_center(std::size_t i) const { return static_cast<double>(i) * hop_s + window_s / 2.0; }
};

/// Autocorrelation pitch and RMS per frame. Throws MediaError for empty or
/// silent audio.
FrameTrack analyze_frames(const Waveform& wave, const PitchSettings& settings = {});

struct DeliveryFeatures {
  Eigen::MatrixXd values;  // W x 14
  /// False when the acoustic columns were zero-filled (no audio).
  bool acoustic = true;
};

/// Per-word features from audio and word timings. Throws AlignmentError for
/// timestamps outside the audio or out of order, MediaError for silent audio.
DeliveryFeatures delivery_features(const Waveform& wave, const std::vector<WordTimestamp>& words,
                                   const PitchSettings& settings = {});

/// Timing-only variant; acoustic columns are zero.
DeliveryFeatures delivery_features_from_transcript(const std::vector<WordTimestamp>& words);

}  // namespace asa
