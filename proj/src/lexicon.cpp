#include "asa/lexicon.hpp"

#include <cctype>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace asa::lexicon {

namespace {

// Feature strings are kept sorted by feature name (UD convention).
constexpr const char* kVerbBase = "Mood=Ind|Tense=Pres|VerbForm=Fin";
constexpr const char* kVerbInf = "VerbForm=Inf";
constexpr const char* kVerb3sg = "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin";
constexpr const char* kVerbPast = "Mood=Ind|Tense=Past|VerbForm=Fin";
constexpr const char* kVerbPastPart = "Tense=Past|VerbForm=Part";
constexpr const char* kVerbGerund = "VerbForm=Ger";

struct VerbRow {
  const char* lemma;
  const char* third;
  const char* past;
  const char* part;
  const char* ger;
};

// Irregular and spelling-sensitive verbs are listed in full; everything else
// is regular and expanded by regular_verb().
const VerbRow kIrregularVerbs[] = {
    {"have", "has", "had", "had", "having"},
    {"do", "does", "did", "done", "doing"},
    {"go", "goes", "went", "gone", "going"},
    {"see", "sees", "saw", "seen", "seeing"},
    {"run", "runs", "ran", "run", "running"},
    {"sit", "sits", "sat", "sat", "sitting"},
    {"stand", "stands", "stood", "stood", "standing"},
    {"eat", "eats", "ate", "eaten", "eating"},
    {"drink", "drinks", "drank", "drunk", "drinking"},
    {"fly", "flies", "flew", "flown", "flying"},
    {"swim", "swims", "swam", "swum", "swimming"},
    {"read", "reads", "read", "read", "reading"},
    {"ride", "rides", "rode", "ridden", "riding"},
    {"take", "takes", "took", "taken", "taking"},
    {"make", "makes", "made", "made", "making"},
    {"throw", "throws", "threw", "thrown", "throwing"},
    {"catch", "catches", "caught", "caught", "catching"},
    {"drive", "drives", "drove", "driven", "driving"},
    {"buy", "buys", "bought", "bought", "buying"},
    {"sell", "sells", "sold", "sold", "selling"},
    {"feel", "feels", "felt", "felt", "feeling"},
    {"think", "thinks", "thought", "thought", "thinking"},
    {"sleep", "sleeps", "slept", "slept", "sleeping"},
    {"carry", "carries", "carried", "carried", "carrying"},
    {"wear", "wears", "wore", "worn", "wearing"},
    {"bring", "brings", "brought", "brought", "bringing"},
    {"come", "comes", "came", "come", "coming"},
    {"get", "gets", "got", "got", "getting"},
    {"give", "gives", "gave", "given", "giving"},
    {"know", "knows", "knew", "known", "knowing"},
    {"put", "puts", "put", "put", "putting"},
    {"say", "says", "said", "said", "saying"},
    {"shine", "shines", "shone", "shone", "shining"},
    {"grow", "grows", "grew", "grown", "growing"},
    {"build", "builds", "built", "built", "building"},
    {"write", "writes", "wrote", "written", "writing"},
    {"sing", "sings", "sang", "sung", "singing"},
    {"leave", "leaves", "left", "left", "leaving"},
    {"meet", "meets", "met", "met", "meeting"},
    {"spend", "spends", "spent", "spent", "spending"},
    {"hold", "holds", "held", "held", "holding"},
    {"study", "studies", "studied", "studied", "studying"},
    {"find", "finds", "found", "found", "finding"},
    {"watch", "watches", "watched", "watched", "watching"},
    {"fish", "fishes", "fished", "fished", "fishing"},
    {"cross", "crosses", "crossed", "crossed", "crossing"},
    {"wash", "washes", "washed", "washed", "washing"},
    {"push", "pushes", "pushed", "pushed", "pushing"},
    {"relax", "relaxes", "relaxed", "relaxed", "relaxing"},
    {"begin", "begins", "began", "begun", "beginning"},
    {"sweep", "sweeps", "swept", "swept", "sweeping"},
    {"hear", "hears", "heard", "heard", "hearing"},
    {"win", "wins", "won", "won", "winning"},
    {"shop", "shops", "shopped", "shopped", "shopping"},
    {"stop", "stops", "stopped", "stopped", "stopping"},
};

const char* kRegularVerbs[] = {
    "play", "walk", "like", "want", "look", "enjoy", "talk", "jump", "park", "cook",
    "open", "close", "smile", "laugh", "wait", "visit", "stay", "listen", "help", "love",
    "need", "live", "chase", "paint", "call", "clean", "work", "travel", "move", "start",
    "use", "bark", "rest", "pick", "pull", "climb", "dance", "share", "wave", "kick",
    "bake", "plant", "water", "hope", "prefer", "try", "seem", "learn", "order", "fill",
    "follow", "point", "notice", "hug", "picnic", "float", "sail", "surf", "explore", "repair",
};

bool is_vowel(char c) { return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u'; }

VerbRow regular_verb(const std::string& lemma, std::vector<std::string>& storage) {
  std::string third, past, ger;
  const char last = lemma.back();
  const char prev = lemma.size() > 1 ? lemma[lemma.size() - 2] : '\0';
  if (last == 'y' && !is_vowel(prev)) {
    const std::string stem = lemma.substr(0, lemma.size() - 1);
    third = stem + "ies";
    past = stem + "ied";
    ger = lemma + "ing";
  } else if (last == 'e') {
    third = lemma + "s";
    past = lemma + "d";
    ger = lemma.substr(0, lemma.size() - 1) + "ing";
  } else if (lemma == "hug") {
    third = "hugs";
    past = "hugged";
    ger = "hugging";
  } else if (lemma == "picnic") {
    third = "picnics";
    past = "picnicked";
    ger = "picnicking";
  } else {
    bool es = lemma.size() >= 2 && (lemma.ends_with("sh") || lemma.ends_with("ch") || last == 'x' || last == 's');
    third = lemma + (es ? "es" : "s");
    past = lemma + "ed";
    ger = lemma + "ing";
  }
  storage = {lemma, third, past, past, ger};
  return {storage[0].c_str(), storage[1].c_str(), storage[2].c_str(), storage[3].c_str(), storage[4].c_str()};
}

struct NounRow {
  const char* sing;
  const char* plur;
};

const NounRow kIrregularNouns[] = {
    {"man", "men"},           {"woman", "women"}, {"child", "children"}, {"person", "people"},
    {"fish", "fish"},         {"sheep", "sheep"}, {"foot", "feet"},      {"tooth", "teeth"},
    {"family", "families"},   {"sky", "skies"},   {"party", "parties"},  {"city", "cities"},
    {"leaf", "leaves"},       {"sandwich", "sandwiches"}, {"bench", "benches"}, {"bus", "buses"},
    {"glass", "glasses"},     {"dish", "dishes"}, {"box", "boxes"},      {"beach", "beaches"},
    {"puppy", "puppies"},     {"butterfly", "butterflies"}, {"strawberry", "strawberries"},
};

const char* kRegularNouns[] = {
    "dog", "cat", "tree", "ball", "sun", "car", "sea", "river", "lake", "boat", "house", "home",
    "building", "flower", "kite", "bike", "bicycle", "table", "cake", "park", "street", "garden",
    "picture", "photo", "image", "boy", "girl", "friend", "day", "morning", "afternoon", "night",
    "time", "game", "noodle", "school", "bird", "cloud", "shop", "road", "window", "door", "chair",
    "sandwich", "picnic", "basket", "hat", "book", "phone", "video", "movie", "weekend", "thing",
    "place", "umbrella", "wave", "shell", "drink", "kitten", "student", "teacher", "brother",
    "sister", "mother", "father", "parent", "toy", "cup", "plate", "apple", "banana", "cookie",
    "bread", "answer", "question", "hand", "eye", "way", "walk", "run", "swim", "ride", "rest",
    "smile", "work", "trip", "holiday", "vacation", "sport", "player", "team", "kid", "baby",
    "bag", "shirt", "dress", "color", "minute", "hour", "week", "year", "lot", "corner", "side",
    "middle", "top", "bottom", "front", "back", "city", "town", "village", "market", "restaurant",
    "bridge", "mountain", "hill", "field", "path", "light", "car", "truck", "train", "plane",
    "watch", "call", "stop", "start", "use", "dance", "wave", "surf", "plant", "order", "point",
};

// Uncountable / mass nouns: Number=Sing only.
const char* kMassNouns[] = {
    "water", "grass", "sand", "music", "food", "weather", "fun", "tea", "coffee", "juice",
    "milk", "rice", "homework", "information", "sunshine", "traffic", "air", "ice", "snow", "rain",
};

struct AdjRow {
  const char* pos;
  const char* cmp;
  const char* sup;
};

const AdjRow kAdjectives[] = {
    {"big", "bigger", "biggest"},       {"small", "smaller", "smallest"},
    {"happy", "happier", "happiest"},   {"sad", "sadder", "saddest"},
    {"nice", "nicer", "nicest"},        {"good", "better", "best"},
    {"bad", "worse", "worst"},          {"hot", "hotter", "hottest"},
    {"cold", "colder", "coldest"},      {"warm", "warmer", "warmest"},
    {"sunny", "sunnier", "sunniest"},   {"old", "older", "oldest"},
    {"young", "younger", "youngest"},   {"new", "newer", "newest"},
    {"tall", "taller", "tallest"},      {"short", "shorter", "shortest"},
    {"long", "longer", "longest"},      {"little", "littler", "littlest"},
    {"great", "greater", "greatest"},   {"busy", "busier", "busiest"},
    {"quiet", "quieter", "quietest"},   {"loud", "louder", "loudest"},
    {"clean", "cleaner", "cleanest"},   {"dirty", "dirtier", "dirtiest"},
    {"bright", "brighter", "brightest"},{"cute", "cuter", "cutest"},
    {"fresh", "fresher", "freshest"},   {"easy", "easier", "easiest"},
    {"early", "earlier", "earliest"},   {"late", "later", "latest"},
    {"fast", "faster", "fastest"},      {"slow", "slower", "slowest"},
    {"high", "higher", "highest"},      {"low", "lower", "lowest"},
    {"cool", "cooler", "coolest"},      {"tired", "", ""},
    {"beautiful", "", ""},              {"red", "", ""},
    {"blue", "", ""},                   {"green", "", ""},
    {"yellow", "", ""},                 {"brown", "", ""},
    {"white", "", ""},                  {"black", "", ""},
    {"pink", "", ""},                   {"purple", "", ""},
    {"orange", "", ""},                 {"gray", "", ""},
    {"favorite", "", ""},               {"delicious", "", ""},
    {"lovely", "", ""},                 {"wonderful", "", ""},
    {"peaceful", "", ""},               {"relaxing", "", ""},
    {"interesting", "", ""},            {"excited", "", ""},
    {"exciting", "", ""},               {"different", "", ""},
    {"important", "", ""},              {"popular", "", ""},
    {"colorful", "", ""},               {"funny", "funnier", "funniest"},
    {"free", "", ""},                   {"ready", "", ""},
    {"sure", "", ""},                   {"outdoor", "", ""},
};

struct FixedRow {
  const char* form;
  const char* upos;
  const char* lemma;
  const char* feats;
};

const FixedRow kFunctionWords[] = {
    // determiners
    {"a", "DET", "a", "Definite=Ind|PronType=Art"},
    {"an", "DET", "a", "Definite=Ind|PronType=Art"},
    {"the", "DET", "the", "Definite=Def|PronType=Art"},
    {"some", "DET", "some", "PronType=Ind"},
    {"many", "ADJ", "many", "Degree=Pos"},
    {"every", "DET", "every", "PronType=Tot"},
    {"all", "DET", "all", "PronType=Tot"},
    {"this", "DET", "this", "Number=Sing|PronType=Dem"},
    {"that", "SCONJ", "that", ""},
    {"that", "DET", "that", "Number=Sing|PronType=Dem"},
    {"these", "DET", "this", "Number=Plur|PronType=Dem"},
    {"those", "DET", "that", "Number=Plur|PronType=Dem"},
    {"no", "DET", "no", "PronType=Neg"},
    {"any", "DET", "any", "PronType=Ind"},
    {"each", "DET", "each", "PronType=Tot"},
    {"another", "DET", "another", "PronType=Ind"},
    // pronouns
    {"i", "PRON", "I", "Case=Nom|Number=Sing|Person=1|PronType=Prs"},
    {"me", "PRON", "I", "Case=Acc|Number=Sing|Person=1|PronType=Prs"},
    {"my", "PRON", "my", "Number=Sing|Person=1|Poss=Yes|PronType=Prs"},
    {"you", "PRON", "you", "Person=2|PronType=Prs"},
    {"your", "PRON", "your", "Person=2|Poss=Yes|PronType=Prs"},
    {"he", "PRON", "he", "Case=Nom|Gender=Masc|Number=Sing|Person=3|PronType=Prs"},
    {"him", "PRON", "he", "Case=Acc|Gender=Masc|Number=Sing|Person=3|PronType=Prs"},
    {"his", "PRON", "his", "Gender=Masc|Number=Sing|Person=3|Poss=Yes|PronType=Prs"},
    {"she", "PRON", "she", "Case=Nom|Gender=Fem|Number=Sing|Person=3|PronType=Prs"},
    {"her", "PRON", "she", "Case=Acc|Gender=Fem|Number=Sing|Person=3|PronType=Prs"},
    {"it", "PRON", "it", "Gender=Neut|Number=Sing|Person=3|PronType=Prs"},
    {"its", "PRON", "its", "Gender=Neut|Number=Sing|Person=3|Poss=Yes|PronType=Prs"},
    {"we", "PRON", "we", "Case=Nom|Number=Plur|Person=1|PronType=Prs"},
    {"us", "PRON", "we", "Case=Acc|Number=Plur|Person=1|PronType=Prs"},
    {"our", "PRON", "our", "Number=Plur|Person=1|Poss=Yes|PronType=Prs"},
    {"they", "PRON", "they", "Case=Nom|Number=Plur|Person=3|PronType=Prs"},
    {"them", "PRON", "they", "Case=Acc|Number=Plur|Person=3|PronType=Prs"},
    {"their", "PRON", "their", "Number=Plur|Person=3|Poss=Yes|PronType=Prs"},
    {"something", "PRON", "something", "Number=Sing|PronType=Ind"},
    {"everyone", "PRON", "everyone", "Number=Sing|PronType=Tot"},
    {"someone", "PRON", "someone", "Number=Sing|PronType=Ind"},
    {"what", "PRON", "what", "PronType=Int"},
    {"who", "PRON", "who", "PronType=Int"},
    // adpositions
    {"in", "ADP", "in", ""},       {"on", "ADP", "on", ""},         {"at", "ADP", "at", ""},
    {"with", "ADP", "with", ""},   {"for", "ADP", "for", ""},       {"of", "ADP", "of", ""},
    {"from", "ADP", "from", ""},   {"near", "ADP", "near", ""},     {"under", "ADP", "under", ""},
    {"over", "ADP", "over", ""},   {"behind", "ADP", "behind", ""}, {"by", "ADP", "by", ""},
    {"into", "ADP", "into", ""},   {"about", "ADP", "about", ""},   {"after", "ADP", "after", ""},
    {"before", "ADP", "before", ""}, {"around", "ADP", "around", ""}, {"beside", "ADP", "beside", ""},
    {"between", "ADP", "between", ""}, {"across", "ADP", "across", ""}, {"along", "ADP", "along", ""},
    {"like", "ADP", "like", ""},
    {"to", "ADP", "to", ""},
    {"to", "PART", "to", ""},
    // conjunctions
    {"and", "CCONJ", "and", ""},   {"but", "CCONJ", "but", ""},     {"or", "CCONJ", "or", ""},
    {"so", "ADV", "so", ""},       {"because", "SCONJ", "because", ""}, {"if", "SCONJ", "if", ""},
    {"when", "SCONJ", "when", ""}, {"while", "SCONJ", "while", ""},
    // auxiliaries
    {"am", "AUX", "be", "Mood=Ind|Number=Sing|Person=1|Tense=Pres|VerbForm=Fin"},
    {"is", "AUX", "be", "Mood=Ind|Number=Sing|Person=3|Tense=Pres|VerbForm=Fin"},
    {"are", "AUX", "be", "Mood=Ind|Tense=Pres|VerbForm=Fin"},
    {"was", "AUX", "be", "Mood=Ind|Number=Sing|Tense=Past|VerbForm=Fin"},
    {"were", "AUX", "be", "Mood=Ind|Tense=Past|VerbForm=Fin"},
    {"be", "AUX", "be", "VerbForm=Inf"},
    {"been", "AUX", "be", "Tense=Past|VerbForm=Part"},
    {"being", "AUX", "be", "VerbForm=Ger"},
    {"will", "AUX", "will", "VerbForm=Fin"},
    {"would", "AUX", "would", "VerbForm=Fin"},
    {"can", "AUX", "can", "VerbForm=Fin"},
    {"could", "AUX", "could", "VerbForm=Fin"},
    {"should", "AUX", "should", "VerbForm=Fin"},
    {"must", "AUX", "must", "VerbForm=Fin"},
    {"may", "AUX", "may", "VerbForm=Fin"},
    {"might", "AUX", "might", "VerbForm=Fin"},
    // particles
    {"not", "PART", "not", "Polarity=Neg"},
    {"n't", "PART", "not", "Polarity=Neg"},
    // adverbs
    {"very", "ADV", "very", ""},     {"really", "ADV", "really", ""}, {"also", "ADV", "also", ""},
    {"then", "ADV", "then", "PronType=Dem"}, {"now", "ADV", "now", ""}, {"there", "PRON", "there", ""},
    {"here", "ADV", "here", "PronType=Dem"}, {"too", "ADV", "too", ""}, {"happily", "ADV", "happily", ""},
    {"quickly", "ADV", "quickly", ""}, {"slowly", "ADV", "slowly", ""}, {"today", "NOUN", "today", "Number=Sing"},
    {"yesterday", "NOUN", "yesterday", "Number=Sing"}, {"tomorrow", "NOUN", "tomorrow", "Number=Sing"},
    {"outside", "ADV", "outside", ""}, {"together", "ADV", "together", ""}, {"maybe", "ADV", "maybe", ""},
    {"always", "ADV", "always", ""}, {"sometimes", "ADV", "sometimes", ""}, {"soon", "ADV", "soon", ""},
    {"again", "ADV", "again", ""},   {"more", "ADV", "more", "Degree=Cmp"}, {"most", "ADV", "most", "Degree=Sup"},
    {"next", "ADJ", "next", "Degree=Pos"}, {"first", "ADJ", "first", "Degree=Pos|NumType=Ord"},
    {"usually", "ADV", "usually", ""}, {"often", "ADV", "often", ""}, {"just", "ADV", "just", ""},
    {"only", "ADV", "only", ""},     {"still", "ADV", "still", ""}, {"home", "ADV", "home", ""},
    {"how", "ADV", "how", "PronType=Int"}, {"where", "ADV", "where", "PronType=Int"},
    {"why", "ADV", "why", "PronType=Int"}, {"out", "ADP", "out", ""}, {"up", "ADP", "up", ""},
    {"down", "ADP", "down", ""},     {"away", "ADV", "away", ""}, {"well", "ADV", "well", "Degree=Pos"},
    // interjections and fillers
    {"um", "INTJ", "um", ""}, {"uh", "INTJ", "uh", ""}, {"oh", "INTJ", "oh", ""}, {"er", "INTJ", "er", ""},
    {"yes", "INTJ", "yes", ""}, {"hmm", "INTJ", "hmm", ""}, {"okay", "INTJ", "okay", ""},
    // numerals
    {"one", "NUM", "one", "NumType=Card"},   {"two", "NUM", "two", "NumType=Card"},
    {"three", "NUM", "three", "NumType=Card"}, {"four", "NUM", "four", "NumType=Card"},
    {"five", "NUM", "five", "NumType=Card"}, {"six", "NUM", "six", "NumType=Card"},
    {"seven", "NUM", "seven", "NumType=Card"}, {"eight", "NUM", "eight", "NumType=Card"},
    {"nine", "NUM", "nine", "NumType=Card"}, {"ten", "NUM", "ten", "NumType=Card"},
};

const char* kStopwords[] = {
    "a", "an", "the", "and", "or", "but", "so", "of", "to", "in", "on", "at", "with", "for", "from",
    "is", "are", "am", "was", "were", "be", "been", "being", "i", "me", "my", "you", "your", "he",
    "him", "his", "she", "her", "it", "its", "we", "us", "our", "they", "them", "their", "this",
    "that", "these", "those", "there", "here", "what", "who", "do", "does", "did", "can", "could",
    "will", "would", "should", "not", "n't", "very", "also", "then", "some", "um", "uh", "er",
    "if", "when", "because", "by", "as", "too", "just", "really", "have", "has", "had",
};

struct Tables {
  std::unordered_map<std::string, std::vector<Reading>> forms;
  std::unordered_map<std::string, VerbForms> verbs;
  std::unordered_map<std::string, std::string> plural_of;
  std::unordered_map<std::string, std::string> singular_of;
  std::unordered_set<std::string> stopwords;
  std::vector<Concept> concepts;
  std::unordered_map<std::string, std::size_t> concept_index;

  void add(const std::string& form, Reading r) {
    auto& v = forms[form];
    for (const auto& existing : v)
      if (existing.upos == r.upos && existing.lemma == r.lemma && existing.feats == r.feats) return;
    v.push_back(std::move(r));
  }

  void add_verb(const VerbRow& row) {
    VerbForms vf{row.lemma, row.third, row.past, row.part, row.ger};
    verbs.emplace(row.lemma, vf);
    add(row.lemma, {"VERB", row.lemma, kVerbBase});
    add(row.lemma, {"VERB", row.lemma, kVerbInf});
    add(row.third, {"VERB", row.lemma, kVerb3sg});
    add(row.past, {"VERB", row.lemma, kVerbPast});
    if (std::string(row.part) != row.past) add(row.part, {"VERB", row.lemma, kVerbPastPart});
    add(row.ger, {"VERB", row.lemma, kVerbGerund});
  }

  void add_noun(const std::string& sing, const std::string& plur) {
    plural_of.emplace(sing, plur);
    singular_of.emplace(plur, sing);
    add(sing, {"NOUN", sing, "Number=Sing"});
    if (plur != sing) add(plur, {"NOUN", sing, "Number=Plur"});
  }

  Tables() {
    // Function words go first so that their readings rank ahead of the
    // open-class readings of homographs ("like", "home", "well").
    for (const auto& f : kFunctionWords) add(f.form, {f.upos, f.lemma, f.feats});
    // Nouns before verbs: ambiguous forms ("park", "walk") default to the
    // noun reading unless the tagger's context rules pick the verb.
    for (const auto& n : kIrregularNouns) add_noun(n.sing, n.plur);
    for (const char* n : kRegularNouns) {
      std::string s = n;
      if (plural_of.count(s)) continue;
      std::string p;
      if (s.ends_with("s") || s.ends_with("sh") || s.ends_with("ch") || s.ends_with("x"))
        p = s + "es";
      else
        p = s + "s";
      add_noun(s, p);
    }
    for (const char* n : kMassNouns) add(n, {"NOUN", n, "Number=Sing"});
    add("people", {"NOUN", "person", "Number=Plur"});
    for (const auto& v : kIrregularVerbs) add_verb(v);
    for (const char* v : kRegularVerbs) {
      if (verbs.count(v)) continue;
      std::vector<std::string> storage;
      VerbRow row = regular_verb(v, storage);
      add_verb(row);
    }
    for (const auto& a : kAdjectives) {
      add(a.pos, {"ADJ", a.pos, "Degree=Pos"});
      if (*a.cmp) add(a.cmp, {"ADJ", a.pos, "Degree=Cmp"});
      if (*a.sup) add(a.sup, {"ADJ", a.pos, "Degree=Sup"});
    }
    for (const char* s : kStopwords) stopwords.insert(s);

    concepts = {
        {"dog", {150, 90, 40}, {"dog", "dogs", "puppy", "puppies"}},
        {"cat", {128, 128, 128}, {"cat", "cats", "kitten"}},
        {"tree", {20, 120, 20}, {"tree", "trees", "leaf", "leaves"}},
        {"ball", {220, 30, 30}, {"ball", "balls"}},
        {"sun", {250, 220, 0}, {"sun", "sunny", "sunshine"}},
        {"car", {30, 60, 200}, {"car", "cars", "truck", "traffic"}},
        {"water", {0, 200, 220}, {"water", "sea", "river", "lake", "swim", "swimming", "wave", "waves"}},
        {"house", {230, 130, 30}, {"house", "houses", "building", "buildings", "home"}},
        {"flower", {240, 120, 200}, {"flower", "flowers", "garden"}},
        {"kite", {140, 40, 180}, {"kite", "kites"}},
        {"bike", {20, 20, 20}, {"bike", "bikes", "bicycle", "bicycles"}},
        {"table", {90, 50, 20}, {"table", "tables", "picnic", "basket"}},
        {"boat", {255, 255, 255}, {"boat", "boats", "sail", "sailing"}},
        {"cloud", {170, 190, 210}, {"cloud", "clouds", "sky"}},
        {"sand", {210, 180, 120}, {"sand", "beach", "shell", "shells"}},
        {"bird", {60, 160, 90}, {"bird", "birds"}},
    };
    for (std::size_t i = 0; i < concepts.size(); ++i)
      for (const auto& kw : concepts[i].keywords) concept_index.emplace(kw, i);
  }
};

const Tables& tables() {
  static const Tables t;
  return t;
}

}  // namespace

const std::vector<Reading>& readings(std::string_view lower_form) {
  static const std::vector<Reading> kEmpty;
  const auto& t = tables();
  auto it = t.forms.find(std::string(lower_form));
  return it == t.forms.end() ? kEmpty : it->second;
}

bool in_vocabulary(std::string_view lower_form) { return !readings(lower_form).empty(); }

std::optional<VerbForms> verb_forms(std::string_view lemma) {
  const auto& t = tables();
  auto it = t.verbs.find(std::string(lemma));
  if (it == t.verbs.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> noun_plural(std::string_view singular) {
  const auto& t = tables();
  auto it = t.plural_of.find(std::string(singular));
  if (it == t.plural_of.end()) return std::nullopt;
  return it->second;
}

std::optional<std::string> noun_singular(std::string_view plural) {
  const auto& t = tables();
  auto it = t.singular_of.find(std::string(plural));
  if (it == t.singular_of.end()) return std::nullopt;
  return it->second;
}

bool is_stopword(std::string_view lower_form) { return tables().stopwords.count(std::string(lower_form)) > 0; }

const std::vector<Concept>& concepts() { return tables().concepts; }

std::optional<std::size_t> concept_of(std::string_view lower_form) {
  const auto& t = tables();
  auto it = t.concept_index.find(std::string(lower_form));
  if (it == t.concept_index.end()) return std::nullopt;
  return it->second;
}

int syllable_count(std::string_view word) {
  int count = 0;
  bool prev_vowel = false;
  std::string w;
  for (char c : word)
    if (std::isalpha(static_cast<unsigned char>(c))) w.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (w.empty()) return 0;
  for (char c : w) {
    bool v = is_vowel(c) || c == 'y';
    if (v && !prev_vowel) ++count;
    prev_vowel = v;
  }
  // Silent final e ("make", "house"), but not "-le" ("little").
  if (w.size() > 2 && w.back() == 'e' && !is_vowel(w[w.size() - 2]) && w[w.size() - 2] != 'l' && count > 1) --count;
  return count < 1 ? 1 : count;
}

}  // namespace asa::lexicon
