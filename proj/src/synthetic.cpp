#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "asa/common.hpp"
#include "asa/corpus.hpp"
#include "asa/lexicon.hpp"
#include "asa/media.hpp"
#include "asa/synthetic.hpp"

namespace asa {

namespace {

struct Theme {
  const char* name;
  std::array<const char*, 4> concepts;
  std::array<const char*, 3> questions;
  // Per question: (correct, one planted error); equal members when the
  // sentence has no error variant.
  std::array<std::vector<SentencePair>, 3> bank;
};

const std::vector<SentencePair>& off_topic_bank() {
  static const std::vector<SentencePair> b = {
      {"He plays video games every weekend.", "He play video games every weekend."},
      {"I want to buy a new phone.", "I want to buy a new phone."},
      {"We had noodles for lunch at school.", "We had noodles for lunch at school."},
      {"My mother is a teacher in the city.", "My mother is teacher in the city."},
      {"I like to read a book at night.", "I like to read book at night."},
      {"We were late for school this morning.", "We was late for school this morning."},
  };
  return b;
}

const std::vector<Theme>& themes() {
  static const std::vector<Theme> t = {
      {"park",
       {"dog", "ball", "tree", "sun"},
       {"What can you see in the picture?", "What is the dog doing in the park?",
        "Do you like to walk in the park? Why?"},
       {{{{"I can see a dog and a red ball in the park.", "I can see dog and a red ball in the park."},
          {"There is a big tree near the dog.", "There is a big tree near the the dog."},
          {"It is a sunny day and the sun is bright.", "It are a sunny day and the sun is bright."},
          {"The tree has many green leaves.", "The tree have many green leaves."}},
         {{"The dog runs after the ball.", "The dog run after the ball."},
          {"The dog is playing with two balls.", "The dog is playing with two ball."},
          {"It jumps and catches the red ball.", "It jump and catches the red ball."},
          {"The dog looks very happy.", "The dog look very happy."}},
         {{"I like to walk in the park because it is relaxing.", "I like to walk in park because it is relaxing."},
          {"Yesterday I went to the park with my friends.", "Yesterday I go to the park with my friends."},
          {"Walking outside is better than watching videos.", "Walking outside is more better than watching videos."},
          {"I listen to music when I walk.", "I listen music when I walk."}}}}},
      {"beach",
       {"sand", "water", "boat", "cloud"},
       {"What can you see in the picture?", "What are the children doing on the beach?",
        "Do you like to swim in the sea? Why?"},
       {{{{"I can see the sand, the water and a white boat.", "I can see the the sand, the water and a white boat."},
          {"There is a boat on the water.", "There is boat on the water."},
          {"The sky has two white clouds.", "The sky has two white cloud."},
          {"The sea looks calm and blue.", "The sea look calm and blue."}},
         {{"They are playing on the sand.", "They is playing on the sand."},
          {"A boy builds a house with sand.", "A boy build a house with sand."},
          {"They are looking for shells near the water.", "They is looking for shells near the water."},
          {"The girl swims in the blue water.", "The girl swim in the blue water."}},
         {{"I like to swim in the sea because the water is cool.", "I like to swim in the sea because the water is cool."},
          {"Last year I went to the beach with my family.", "Last year I go to the beach with my family."},
          {"Swimming is more fun than running.", "Swimming is more fun than running."},
          {"I listen to music on the beach.", "I listen music on the beach."}}}}},
      {"street",
       {"car", "bike", "house", "bird"},
       {"What can you see in the picture?", "What is the boy doing on the street?",
        "Do you like to ride a bike? Why?"},
       {{{{"I can see a blue car and a black bike.", "I can see a blue car and and a black bike."},
          {"There is an orange house on the street.", "There is a orange house on the street."},
          {"A green bird sits on the house.", "A green bird sit on the house."},
          {"It is quiet and clean on the street.", "It are quiet and clean on the street."}},
         {{"The boy rides his bike on the street.", "The boy ride his bike on the street."},
          {"He waves to his friend near the house.", "He wave to his friend near the house."},
          {"He is riding past two cars.", "He is riding past two car."},
          {"The boy looks at the bird.", "The boy look at the bird."}},
         {{"I like to ride a bike because it is fast.", "I like to ride a bike because it is fast."},
          {"Yesterday I rode my bike to school.", "Yesterday I ride my bike to school."},
          {"Riding a bike is better than taking a bus.", "Riding a bike is more better than taking a bus."},
          {"I ride with my friends on the weekend.", "I ride with my friends on the the weekend."}}}}},
      {"garden",
       {"flower", "cat", "table", "kite"},
       {"What can you see in the picture?", "What is the girl doing in the garden?",
        "Do you like to have a picnic? Why?"},
       {{{{"I can see pink flowers and a gray cat.", "I can see pink pink flowers and a gray cat."},
          {"There is a table in the garden.", "There is table in the garden."},
          {"The kite is purple and it is flying.", "The kite is purple and it are flying."},
          {"The garden has three flowers.", "The garden has three flower."}},
         {{"The girl sits at the table.", "The girl sit at the table."},
          {"She eats an apple and a sandwich.", "She eats a apple and a sandwich."},
          {"She holds the kite with her hand.", "She hold the kite with her hand."},
          {"The cat sleeps under the table.", "The cat sleep under the table."}},
         {{"I like to have a picnic because the food is delicious.", "I like to have a picnic because the food is delicious."},
          {"Last weekend we had a picnic in the garden.", "Last weekend we have a picnic in the garden."},
          {"A picnic is better than a party.", "A picnic is more better than a party."},
          {"I listen to music at a picnic.", "I listen music at a picnic."}}}}},
  };
  return t;
}

const lexicon::Concept& concept_named(const std::string& name) {
  for (const auto& c : lexicon::concepts())
    if (c.name == name) return c;
  throw InputError("unknown concept '" + name + "'");
}

Image draw_image(const Theme& theme, Rng& rng) {
  Image img;
  img.width = 128;
  img.height = 96;
  img.rgb.assign(static_cast<std::size_t>(img.width) * img.height * 3, 0);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      auto* p = img.at(x, y);
      p[0] = 235, p[1] = 225, p[2] = 200;
    }
  // One shape per concept in its own quadrant, jittered.
  for (std::size_t k = 0; k < theme.concepts.size(); ++k) {
    const auto& c = concept_named(theme.concepts[k]);
    const int cx = (k % 2 == 0 ? 32 : 96) + static_cast<int>(rng.uniform_int(9)) - 4;
    const int cy = (k < 2 ? 24 : 72) + static_cast<int>(rng.uniform_int(9)) - 4;
    const int radius = 14 + static_cast<int>(rng.uniform_int(5));
    const bool square = rng.uniform_int(2) == 0;
    for (int y = std::max(0, cy - radius); y < std::min(img.height, cy + radius + 1); ++y)
      for (int x = std::max(0, cx - radius); x < std::min(img.width, cx + radius + 1); ++x) {
        const int dx = x - cx, dy = y - cy;
        if (!square && dx * dx + dy * dy > radius * radius) continue;
        auto* p = img.at(x, y);
        p[0] = c.rgb[0], p[1] = c.rgb[1], p[2] = c.rgb[2];
      }
  }
  return img;
}

int jitter_level(int s, Rng& rng) {
  // Sub-aspect levels follow the holistic score, occasionally off by one.
  if (rng.uniform() >= 0.2) return s;
  const int d = rng.uniform_int(2) == 0 ? -1 : 1;
  return std::clamp(s + d, 1, 5);
}

struct Timed {
  std::vector<WordTimestamp> words;
  std::vector<double> f0;  // per word
  std::vector<double> amp;
};

Timed time_words(const std::vector<std::string>& tokens, int fluency, double speaker_f0, Rng& rng) {
  static constexpr std::array<double, 5> kBase = {0.45, 0.38, 0.33, 0.28, 0.24};
  static constexpr std::array<double, 5> kLongPause = {0.25, 0.15, 0.08, 0.03, 0.0};
  const double base = kBase[static_cast<std::size_t>(fluency - 1)];
  const double p_long = kLongPause[static_cast<std::size_t>(fluency - 1)];
  Timed out;
  double t = 0.3;
  bool sentence_start = false;
  for (const auto& tok : tokens) {
    if (is_punct_token(tok)) {
      sentence_start = tok == "." || tok == "?" || tok == "!";
      continue;
    }
    double gap = 0.03 + 0.07 * rng.uniform();
    if (sentence_start) gap += 0.2 + 0.2 * rng.uniform();
    if (!out.words.empty() && rng.uniform() < p_long) gap = 0.6 + 0.6 * rng.uniform();
    if (out.words.empty()) gap = 0.0;
    sentence_start = false;
    t += gap;
    const double dur = base * (0.6 + 0.2 * lexicon::syllable_count(tok)) * (0.9 + 0.2 * rng.uniform());
    const double start = std::round(t * 1000.0) / 1000.0;
    const double end = std::round((t + dur) * 1000.0) / 1000.0;
    out.words.push_back({tok, start, end});
    out.f0.push_back(speaker_f0 * (0.9 + 0.2 * rng.uniform()));
    out.amp.push_back(0.25 + 0.2 * rng.uniform());
    t = end;
  }
  return out;
}

Waveform render_audio(const Timed& timed, int sample_rate, Rng& rng) {
  Waveform w;
  w.sample_rate = sample_rate;
  const double total = (timed.words.empty() ? 0.0 : timed.words.back().end_s) + 0.3;
  w.samples.assign(static_cast<std::size_t>(std::ceil(total * sample_rate)), 0.0);
  for (auto& s : w.samples) s = 0.002 * (rng.uniform() * 2.0 - 1.0);
  for (std::size_t k = 0; k < timed.words.size(); ++k) {
    const auto& word = timed.words[k];
    const auto b = static_cast<std::size_t>(word.start_s * sample_rate);
    const auto e = std::min(w.samples.size(), static_cast<std::size_t>(word.end_s * sample_rate));
    const double ramp = 0.01 * sample_rate;
    double phase = 0.0;
    for (std::size_t i = b; i < e; ++i) {
      const double rel = static_cast<double>(i - b);
      const double env = std::min({1.0, rel / ramp, static_cast<double>(e - i) / ramp});
      // Slight downward glide within the word.
      const double f = timed.f0[k] * (1.0 - 0.05 * rel / std::max(1.0, static_cast<double>(e - b)));
      phase += 2.0 * std::numbers::pi * f / sample_rate;
      const double v = std::sin(phase) + 0.5 * std::sin(2.0 * phase) + 0.25 * std::sin(3.0 * phase);
      w.samples[i] += timed.amp[k] * env * v / 1.75;
    }
  }
  return w;
}

std::string two_digits(int v) { return (v < 10 ? "0" : "") + std::to_string(v); }

std::string three_digits(int v) {
  std::string s = std::to_string(v);
  while (s.size() < 3) s.insert(s.begin(), '0');
  return s;
}

}  // namespace

std::vector<SentencePair> synthetic_sentence_pairs() {
  std::vector<SentencePair> out;
  for (const auto& t : themes())
    for (const auto& q : t.bank)
      for (const auto& p : q) out.push_back(p);
  for (const auto& p : off_topic_bank()) out.push_back(p);
  return out;
}

std::filesystem::path generate_synthetic_corpus(const std::filesystem::path& out_dir, const SyntheticOptions& o) {
  if (o.n_sets < 1 || o.n_per_set < 1) throw InputError("synthetic corpus needs n_sets >= 1 and n_per_set >= 1");
  if (o.sample_rate < 4000) throw InputError("synthetic audio needs a sample rate of at least 4000 Hz");
  std::error_code ec;
  std::filesystem::create_directories(out_dir / "images", ec);
  if (!ec && o.with_audio) std::filesystem::create_directories(out_dir / "audio", ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());

  Rng rng(o.seed ^ 0x5eed5eed5eedULL);
  Corpus corpus;
  corpus.base_dir = out_dir;

  for (int s = 0; s < o.n_sets; ++s) {
    const Theme& theme = themes()[static_cast<std::size_t>(s) % themes().size()];
    QuestionSet qs;
    qs.id = "set-" + two_digits(s);
    qs.questions.assign(theme.questions.begin(), theme.questions.end());
    std::vector<std::string> exemplar;
    for (const auto& q : theme.bank) exemplar.push_back(q[0].first + " " + q[1].first);
    qs.exemplar_text = join(exemplar, " ");
    qs.exemplar_segments = exemplar;
    qs.image_ref = "images/" + qs.id + ".ppm";
    write_ppm(draw_image(theme, rng), out_dir / qs.image_ref);
    corpus.question_sets.push_back(qs);

    for (int r = 0; r < o.n_per_set; ++r) {
      const int holistic = 1 + (r + s) % 5;
      const int content = jitter_level(holistic, rng);
      const int language = jitter_level(holistic, rng);
      const int fluency = holistic;

      // Content level decides how many questions get answered and how fully.
      std::vector<std::pair<std::size_t, std::size_t>> picks;  // (question, bank entry)
      std::vector<std::size_t> answered;
      std::size_t per_question = 1;
      switch (content) {
        case 5: answered = {0, 1, 2}; per_question = 2; break;
        case 4: answered = {0, 1, 2}; break;
        case 3: answered = {0, rng.uniform_int(2) == 0 ? std::size_t{1} : std::size_t{2}}; break;
        case 2: answered = {rng.uniform_int(3)}; break;
        default: break;
      }
      for (std::size_t q : answered) {
        std::vector<std::size_t> idx(theme.bank[q].size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        rng.shuffle(idx);
        for (std::size_t i = 0; i < per_question; ++i) picks.emplace_back(q, idx[i]);
      }
      std::vector<const SentencePair*> chosen;
      for (const auto& [q, i] : picks) chosen.push_back(&theme.bank[q][i]);
      const std::size_t off_topic = content == 1 ? 2 : (content == 2 ? 1 : 0);
      for (std::size_t i = 0; i < off_topic; ++i)
        chosen.push_back(&off_topic_bank()[rng.uniform_int(off_topic_bank().size())]);

      // Language level decides how many sentences carry a planted error.
      std::vector<std::size_t> order(chosen.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
      rng.shuffle(order);
      std::size_t errors = static_cast<std::size_t>(5 - language);
      std::vector<std::string> sentences(chosen.size());
      for (std::size_t i = 0; i < chosen.size(); ++i) sentences[i] = chosen[i]->first;
      for (std::size_t i : order) {
        if (errors == 0) break;
        if (chosen[i]->second != chosen[i]->first) {
          sentences[i] = chosen[i]->second;
          --errors;
        }
      }
      if (fluency <= 2 && !sentences.empty()) sentences.front() = "Um, " + sentences.front();
      if (sentences.empty()) sentences.push_back("Um.");

      ResponseRecord rec;
      rec.id = qs.id + "-r" + three_digits(r);
      rec.question_set_id = qs.id;
      rec.transcript = join(sentences, " ");
      const double speaker_f0 = 100.0 + 120.0 * rng.uniform();
      const Timed timed = time_words(tokenize(rec.transcript), fluency, speaker_f0, rng);
      rec.word_timestamps = timed.words;
      rec.scores.holistic = holistic;
      rec.scores.relevance = content;
      rec.scores.language_use = language;
      if (o.with_audio) {
        rec.audio_ref = "audio/" + rec.id + ".wav";
        write_wav(render_audio(timed, o.sample_rate, rng), out_dir / *rec.audio_ref);
      }
      corpus.responses.push_back(std::move(rec));
    }
  }

  const auto manifest = out_dir / "manifest.jsonl";
  write_manifest(corpus, manifest);
  return manifest;
}

}  // namespace asa
