#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "asa/common.hpp"
#include "asa/delivery.hpp"
#include "test_util.hpp"

namespace asa {
namespace {

// Tone bursts over [start, end) seconds at the given frequency, silence elsewhere.
Waveform tones(double total_s, const std::vector<std::tuple<double, double, double>>& bursts, int rate = 16000) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.assign(static_cast<std::size_t>(total_s * rate), 0.0);
  for (const auto& [start, end, hz] : bursts)
    for (auto i = static_cast<std::size_t>(start * rate); i < static_cast<std::size_t>(end * rate) && i < w.samples.size(); ++i)
      w.samples[i] = 0.5 * std::sin(2.0 * std::numbers::pi * hz * static_cast<double>(i) / rate);
  return w;
}

TEST(Delivery, ToneWordPitchMean) {
  const auto w = tones(1.0, {{0.2, 0.7, 200.0}});
  const auto f = delivery_features(w, {{"hello", 0.2, 0.7}});
  ASSERT_EQ(f.values.rows(), 1);
  ASSERT_EQ(f.values.cols(), kDeliveryDim);
  EXPECT_NEAR(f.values(0, kPitchMean), 200.0, 5.0);
  EXPECT_LT(f.values(0, kPitchStd), 5.0);
  EXPECT_GT(f.values(0, kVoicedFraction), 0.8);
  EXPECT_TRUE(f.acoustic);
}

TEST(Delivery, PitchTracksOtherFrequencies) {
  for (double hz : {120.0, 310.0}) {
    const auto w = tones(0.6, {{0.05, 0.55, hz}});
    EXPECT_NEAR(delivery_features(w, {{"a", 0.05, 0.55}}).values(0, kPitchMean), hz, 0.025 * hz) << hz;
  }
}

TEST(Delivery, GapGivesPauseAndFlag) {
  const auto w = tones(2.2, {{0.1, 0.6, 200.0}, {1.4, 1.9, 200.0}});
  const auto f = delivery_features(w, {{"one", 0.1, 0.6}, {"two", 1.4, 1.9}});
  ASSERT_EQ(f.values.rows(), 2);
  EXPECT_EQ(f.values(0, kPrecedingPause), 0.0);
  EXPECT_NEAR(f.values(1, kPrecedingPause), 0.8, 0.02);
  EXPECT_EQ(f.values(1, kLongPauseFlag), 1.0);
  EXPECT_EQ(f.values(0, kLongPauseFlag), 0.0);
  EXPECT_NEAR(f.values(0, kWordDuration), 0.5, 1e-9);
  EXPECT_EQ(f.values(0, kWordPosition), 0.0);
  EXPECT_EQ(f.values(1, kWordPosition), 1.0);
}

TEST(Delivery, TranscriptOnlyZeroesAcousticColumns) {
  const auto f = delivery_features_from_transcript({{"a", 0.0, 0.3}, {"b", 0.4, 0.7}, {"c", 1.5, 1.8}});
  EXPECT_FALSE(f.acoustic);
  ASSERT_EQ(f.values.rows(), 3);
  for (int c : kAcousticColumns) EXPECT_EQ(f.values.col(c).squaredNorm(), 0.0) << c;
  EXPECT_NEAR(f.values(2, kPrecedingPause), 0.8, 1e-9);
  EXPECT_GT(f.values(1, kSpeechRate), 0.0);
}

TEST(Delivery, LouderToneHasHigherIntensity) {
  auto quiet = tones(0.6, {{0.05, 0.55, 200.0}});
  auto loud = quiet;
  for (auto& s : quiet.samples) s *= 0.1;
  // Keep one loud sample so both tracks share the reference level.
  quiet.samples.back() = 0.5;
  const auto fq = delivery_features(quiet, {{"a", 0.05, 0.55}});
  const auto fl = delivery_features(loud, {{"a", 0.05, 0.55}});
  EXPECT_GT(fl.values(0, kIntensityMean), fq.values(0, kIntensityMean));
}

TEST(Delivery, TimestampErrors) {
  const auto w = tones(1.0, {{0.1, 0.9, 200.0}});
  EXPECT_THROW(delivery_features(w, {{"a", 0.5, 0.4}}), AlignmentError);
  EXPECT_THROW(delivery_features(w, {{"a", 0.1, 0.5}, {"b", 0.4, 0.6}}), AlignmentError);
  EXPECT_THROW(delivery_features(w, {{"a", 0.1, 1.5}}), AlignmentError);
}

TEST(Delivery, SilentOrEmptyAudioIsMediaError) {
  Waveform silent;
  silent.samples.assign(16000, 0.0);
  EXPECT_THROW(delivery_features(silent, {{"a", 0.1, 0.5}}), MediaError);
  EXPECT_THROW(analyze_frames(Waveform{}), MediaError);
}

TEST(Wav, RoundTripWithinQuantization) {
  test::TempDir dir;
  const auto w = tones(0.2, {{0.0, 0.2, 440.0}}, 8000);
  write_wav(w, dir.path() / "t.wav");
  const auto r = read_wav(dir.path() / "t.wav");
  EXPECT_EQ(r.sample_rate, 8000);
  ASSERT_EQ(r.samples.size(), w.samples.size());
  for (std::size_t i = 0; i < w.samples.size(); ++i) EXPECT_NEAR(r.samples[i], w.samples[i], 1.0 / 32767.0);
  EXPECT_THROW(decode_wav({'R', 'I', 'F', 'F'}), MediaError);
}

}  // namespace
}  // namespace asa
