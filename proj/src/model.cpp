#include "asa/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>

namespace asa {

using ag::Var;

namespace {

constexpr double kMaskedLogit = -1e9;
constexpr char kMagic[8] = {'A', 'S', 'A', 'C', 'K', 'P', 'T', '\0'};

std::string stream_name(SequenceStream s) {
  switch (s) {
    case SequenceStream::kQuestionResponse: return "question-response";
    case SequenceStream::kSyntax: return "syntax";
    case SequenceStream::kDelivery: return "delivery";
  }
  return "?";
}

Eigen::VectorXd valid_vector(int total, int len) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(total);
  v.head(len).setOnes();
  return v;
}

Eigen::VectorXd concat(const std::vector<Eigen::VectorXd>& parts) {
  Eigen::Index n = 0;
  for (const auto& p : parts) n += p.size();
  Eigen::VectorXd out(n);
  Eigen::Index i = 0;
  for (const auto& p : parts) {
    out.segment(i, p.size()) = p;
    i += p.size();
  }
  return out;
}

void check_stream(const Eigen::MatrixXd& m, int dim, int len, const char* name) {
  if (m.rows() < 1) throw ShapeError(std::string(name) + " stream is empty");
  if (m.cols() != dim)
    throw ShapeError(std::string(name) + " stream must have " + std::to_string(dim) + " columns, got " +
                     std::to_string(m.cols()));
  if (len == 0 || len > m.rows()) throw ShapeError(std::string(name) + " stream length is out of range");
}

void check_vector(const Eigen::VectorXd& v, int dim, const char* name) {
  if (v.size() != dim)
    throw ShapeError(std::string(name) + " vector must have " + std::to_string(dim) + " entries, got " +
                     std::to_string(v.size()));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_uint(std::istream& in, int bytes) {
  unsigned char b[8] = {};
  in.read(reinterpret_cast<char*>(b), bytes);
  if (!in) throw CompatibilityError("checkpoint is truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_double(std::ostream& out, double d) { write_u64(out, std::bit_cast<std::uint64_t>(d)); }

}  // namespace

// --- bundle / config ----------------------------------------------------------

void FeatureBundle::validate() const {
  check_stream(qr_seq, kQrDim, qr_len, "question-response");
  check_stream(syntax_seq, kSyntaxDim, syntax_len, "syntax");
  check_stream(delivery_seq, kSpeechDim, delivery_len, "delivery");
  check_vector(s_er, kSlotDim, "exemplar-response");
  check_vector(s_ir, kSlotDim, "image-response");
  check_vector(grammar, kGrammarStreamDim, "grammar");
}

std::string to_string(Aspect a) {
  switch (a) {
    case Aspect::kContent: return "content";
    case Aspect::kLanguageUse: return "language_use";
    case Aspect::kDelivery: return "delivery";
  }
  return "?";
}

Aspect parse_aspect(const std::string& s) {
  if (s == "content") return Aspect::kContent;
  if (s == "language_use") return Aspect::kLanguageUse;
  if (s == "delivery") return Aspect::kDelivery;
  throw ConfigError("unknown aspect '" + s + "' (expected content, language_use or delivery)");
}

void ModelConfig::validate() const {
  if (hidden_dim < 1 || n_heads < 1 || hidden_dim % n_heads != 0)
    throw ConfigError("model.hidden_dim must be a positive multiple of model.n_heads");
  if (n_encoder_layers < 0 || fusion_layers < 0) throw ConfigError("model layer counts must be non-negative");
  if (ffn_dim < 1) throw ConfigError("model.ffn_dim must be positive");
  if (conv_kernel < 1 || conv_kernel % 2 == 0) throw ConfigError("model.conv_kernel must be a positive odd number");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("model.dropout must lie in [0, 1)");
  std::set<std::pair<int, int>> seen;
  for (const auto& p : cross_pairs) {
    if (p.source == p.target) throw ConfigError("cross-aspect pair needs two different aspects");
    if (!seen.emplace(static_cast<int>(p.source), static_cast<int>(p.target)).second)
      throw ConfigError("duplicate cross-aspect pair " + to_string(p.source) + "->" + to_string(p.target));
  }
}

nlohmann::json ModelConfig::to_json() const {
  nlohmann::json pairs = nlohmann::json::array();
  for (const auto& p : cross_pairs) pairs.push_back({to_string(p.source), to_string(p.target)});
  return {{"hidden_dim", hidden_dim},
          {"n_heads", n_heads},
          {"n_encoder_layers", n_encoder_layers},
          {"ffn_dim", ffn_dim},
          {"conv_kernel", conv_kernel},
          {"fusion_layers", fusion_layers},
          {"dropout", dropout},
          {"seed", seed},
          {"head", head == HeadKind::kClassification ? "classification" : "regression"},
          {"cross_pairs", pairs}};
}

ModelConfig ModelConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("model section must be an object");
  ModelConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "hidden_dim") c.hidden_dim = v.get<int>();
      else if (key == "n_heads") c.n_heads = v.get<int>();
      else if (key == "n_encoder_layers") c.n_encoder_layers = v.get<int>();
      else if (key == "ffn_dim") c.ffn_dim = v.get<int>();
      else if (key == "conv_kernel") c.conv_kernel = v.get<int>();
      else if (key == "fusion_layers") c.fusion_layers = v.get<int>();
      else if (key == "dropout") c.dropout = v.get<double>();
      else if (key == "seed") c.seed = v.get<std::uint64_t>();
      else if (key == "head") {
        const auto h = v.get<std::string>();
        if (h == "classification") c.head = HeadKind::kClassification;
        else if (h == "regression") c.head = HeadKind::kRegression;
        else throw ConfigError("model.head must be classification or regression, got '" + h + "'");
      } else if (key == "cross_pairs") {
        c.cross_pairs.clear();
        for (const auto& p : v) {
          if (!p.is_array() || p.size() != 2) throw ConfigError("model.cross_pairs entries are [source, target]");
          c.cross_pairs.push_back({parse_aspect(p[0].get<std::string>()), parse_aspect(p[1].get<std::string>())});
        }
      } else {
        throw ConfigError("unknown config key 'model." + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("model section: ") + e.what());
  }
  c.validate();
  return c;
}

// --- helpers --------------------------------------------------------------------

Eigen::MatrixXd positional_encoding(int length, int dim) {
  Eigen::MatrixXd pe(length, dim);
  for (int t = 0; t < length; ++t)
    for (int i = 0; i < dim; ++i) {
      const double rate = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / dim);
      pe(t, i) = i % 2 == 0 ? std::sin(t * rate) : std::cos(t * rate);
    }
  return pe;
}

Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int kernel, int valid) {
  const int half = kernel / 2;
  const auto t_len = x.rows(), d = x.cols();
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(t_len, kernel * d);
  for (Eigen::Index t = 0; t < t_len; ++t)
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t + k - half;
      if (src >= 0 && src < valid) out.block(t, k * d, 1, d) = x.row(src);
    }
  return out;
}

// --- model ----------------------------------------------------------------------

struct ScoringModel::Ctx {
  ag::Tape tape;
  Rng* rng = nullptr;
};

int ScoringModel::add_param(const std::string& name, int rows, int cols, Rng& rng, double bound) {
  ag::Parameter prm;
  prm.name = name;
  prm.value.resize(rows, cols);
  for (Eigen::Index i = 0; i < prm.value.size(); ++i) prm.value.data()[i] = bound * (2.0 * rng.uniform() - 1.0);
  prm.zero_grad();
  params_.push_back(std::move(prm));
  return static_cast<int>(params_.size() - 1);
}

int ScoringModel::add_const_param(const std::string& name, int rows, int cols, double value) {
  ag::Parameter prm;
  prm.name = name;
  prm.value = Eigen::MatrixXd::Constant(rows, cols, value);
  prm.zero_grad();
  params_.push_back(std::move(prm));
  return static_cast<int>(params_.size() - 1);
}

namespace {
double xavier(int fan_in, int fan_out) { return std::sqrt(6.0 / (fan_in + fan_out)); }
}  // namespace

ScoringModel::Attention ScoringModel::make_attention(const std::string& prefix, Rng& rng) {
  const int h = config_.hidden_dim;
  Attention a{};
  a.wq = add_param(prefix + ".wq", h, h, rng, xavier(h, h));
  a.bq = add_const_param(prefix + ".bq", 1, h, 0.0);
  a.wk = add_param(prefix + ".wk", h, h, rng, xavier(h, h));
  a.bk = add_const_param(prefix + ".bk", 1, h, 0.0);
  a.wv = add_param(prefix + ".wv", h, h, rng, xavier(h, h));
  a.bv = add_const_param(prefix + ".bv", 1, h, 0.0);
  a.wo = add_param(prefix + ".wo", h, h, rng, xavier(h, h));
  a.bo = add_const_param(prefix + ".bo", 1, h, 0.0);
  return a;
}

ScoringModel::Block ScoringModel::make_block(const std::string& prefix, Rng& rng) {
  const int h = config_.hidden_dim, f = config_.ffn_dim;
  Block b{};
  b.attn = make_attention(prefix + ".attn", rng);
  b.ln1_g = add_const_param(prefix + ".ln1.gain", 1, h, 1.0);
  b.ln1_b = add_const_param(prefix + ".ln1.bias", 1, h, 0.0);
  b.w1 = add_param(prefix + ".ffn.w1", h, f, rng, xavier(h, f));
  b.b1 = add_const_param(prefix + ".ffn.b1", 1, f, 0.0);
  b.w2 = add_param(prefix + ".ffn.w2", f, h, rng, xavier(f, h));
  b.b2 = add_const_param(prefix + ".ffn.b2", 1, h, 0.0);
  b.ln2_g = add_const_param(prefix + ".ln2.gain", 1, h, 1.0);
  b.ln2_b = add_const_param(prefix + ".ln2.bias", 1, h, 0.0);
  return b;
}

ScoringModel::ScoringModel(ModelConfig config) : config_(std::move(config)) {
  config_.validate();
  Rng rng(config_.seed ^ 0x6d6f64656cULL);
  const int h = config_.hidden_dim;
  const int k = config_.conv_kernel;
  auto make_encoder = [&](const std::string& name, int in_dim) {
    Encoder e;
    e.in_dim = in_dim;
    e.conv_w = add_param(name + ".conv.w", k * in_dim, h, rng, xavier(k * in_dim, h));
    e.conv_b = add_const_param(name + ".conv.b", 1, h, 0.0);
    for (int l = 0; l < config_.n_encoder_layers; ++l) e.layers.push_back(make_block(name + ".layer" + std::to_string(l), rng));
    return e;
  };
  qr_ = make_encoder("qr", kQrDim);
  syntax_ = make_encoder("syntax", kSyntaxDim);
  delivery_ = make_encoder("delivery", kSpeechDim);
  auto make_projection = [&](const std::string& name, int in_dim) {
    Projection pr;
    pr.w = add_param(name + ".w", in_dim, h, rng, xavier(in_dim, h));
    pr.b = add_const_param(name + ".b", 1, h, 0.0);
    return pr;
  };
  er_ = make_projection("er", kSlotDim);
  ir_ = make_projection("ir", kSlotDim);
  grammar_ = make_projection("grammar", kGrammarStreamDim);
  for (std::size_t i = 0; i < config_.cross_pairs.size(); ++i) {
    const auto& pr = config_.cross_pairs[i];
    cross_.push_back(make_block("cross." + to_string(pr.source) + "_to_" + to_string(pr.target), rng));
  }
  for (int l = 0; l < config_.fusion_layers; ++l) fusion_.push_back(make_block("fusion" + std::to_string(l), rng));
  head1_ = make_projection("head.hidden", h);
  const int out = config_.head == HeadKind::kClassification ? kNumClasses : 1;
  head2_.w = add_param("head.out.w", h, out, rng, xavier(h, out));
  head2_.b = add_const_param("head.out.b", 1, out, config_.head == HeadKind::kRegression ? 3.0 : 0.0);
  delivery_mean_ = Eigen::RowVectorXd::Zero(kSpeechDim);
  delivery_scale_ = Eigen::RowVectorXd::Ones(kSpeechDim);
}

std::size_t ScoringModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ScoringModel::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

void ScoringModel::set_delivery_standardization(Eigen::RowVectorXd mean, Eigen::RowVectorXd scale) {
  if (mean.size() != kSpeechDim || scale.size() != kSpeechDim)
    throw ShapeError("delivery standardization needs 14 means and 14 scales");
  delivery_mean_ = std::move(mean);
  delivery_scale_ = std::move(scale);
}

Var ScoringModel::p(Ctx& c, int index) const { return c.tape.param(params_[static_cast<std::size_t>(index)]); }

Var ScoringModel::dropout(Ctx& c, Var x) const {
  if (!c.rng || config_.dropout <= 0.0) return x;
  const double keep = 1.0 - config_.dropout;
  Eigen::MatrixXd mask(c.tape.rows(x), c.tape.cols(x));
  for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = c.rng->uniform() < keep ? 1.0 / keep : 0.0;
  return c.tape.mul_constant(x, mask);
}

Var ScoringModel::attention(Ctx& c, Var q_in, Var kv_in, const Eigen::VectorXd& kv_valid, const Attention& a) const {
  auto& t = c.tape;
  const int heads = config_.n_heads;
  const int dh = config_.hidden_dim / heads;
  const Var q = t.add_row(t.matmul(q_in, p(c, a.wq)), p(c, a.bq));
  const Var k = t.add_row(t.matmul(kv_in, p(c, a.wk)), p(c, a.bk));
  const Var v = t.add_row(t.matmul(kv_in, p(c, a.wv)), p(c, a.bv));
  Eigen::MatrixXd mask;
  const bool masked = kv_valid.size() > 0 && kv_valid.minCoeff() < 0.5;
  if (masked) {
    const Eigen::RowVectorXd row = ((kv_valid.array() < 0.5).cast<double>() * kMaskedLogit).matrix().transpose();
    mask = row.replicate(t.rows(q), 1);
  }
  std::vector<Var> outs;
  for (int h = 0; h < heads; ++h) {
    const Var qh = t.slice_cols(q, h * dh, dh);
    const Var kh = t.slice_cols(k, h * dh, dh);
    const Var vh = t.slice_cols(v, h * dh, dh);
    Var scores = t.scale(t.matmul_nt(qh, kh), 1.0 / std::sqrt(static_cast<double>(dh)));
    if (masked) scores = t.add_constant(scores, mask);
    outs.push_back(t.matmul(t.softmax_rows(scores), vh));
  }
  const Var joined = heads == 1 ? outs[0] : t.concat_cols(outs);
  return t.add_row(t.matmul(joined, p(c, a.wo)), p(c, a.bo));
}

Var ScoringModel::block(Ctx& c, Var x, Var src, const Eigen::VectorXd& src_valid, const Block& b) const {
  auto& t = c.tape;
  const Var a = dropout(c, attention(c, x, src, src_valid, b.attn));
  const Var x1 = t.layer_norm_rows(t.add(x, a), p(c, b.ln1_g), p(c, b.ln1_b));
  const Var hidden = t.relu(t.add_row(t.matmul(x1, p(c, b.w1)), p(c, b.b1)));
  const Var f = dropout(c, t.add_row(t.matmul(hidden, p(c, b.w2)), p(c, b.b2)));
  return t.layer_norm_rows(t.add(x1, f), p(c, b.ln2_g), p(c, b.ln2_b));
}

ScoringModel::Seq ScoringModel::encode(Ctx& c, const Encoder& e, const Eigen::MatrixXd& x, int len,
                                       bool standardize) const {
  const auto rows = static_cast<int>(x.rows());
  const int valid = len < 0 ? rows : len;
  Eigen::MatrixXd in = Eigen::MatrixXd::Zero(rows, x.cols());
  in.topRows(valid) = x.topRows(valid);
  if (standardize)
    for (int i = 0; i < valid; ++i) in.row(i) = (in.row(i) - delivery_mean_).cwiseProduct(delivery_scale_);
  auto& t = c.tape;
  Var h = t.relu(t.add_row(t.matmul(t.constant(im2col(in, config_.conv_kernel, valid)), p(c, e.conv_w)),
                           p(c, e.conv_b)));
  h = t.add_constant(h, positional_encoding(rows, config_.hidden_dim));
  Seq s{h, valid_vector(rows, valid)};
  for (const auto& layer : e.layers) s.x = block(c, s.x, s.x, s.valid, layer);
  return s;
}

Var ScoringModel::project(Ctx& c, const Projection& pr, const Eigen::VectorXd& v, const char* name) const {
  auto& t = c.tape;
  const auto expected = params_[static_cast<std::size_t>(pr.w)].value.rows();
  if (v.size() != expected)
    throw ShapeError(std::string(name) + " vector must have " + std::to_string(expected) + " entries");
  return t.add_row(t.matmul(t.constant(v.transpose()), p(c, pr.w)), p(c, pr.b));
}

void ScoringModel::check_finite(const Ctx& c, Var v, const std::string& layer) const {
  if (!c.tape.value(v).allFinite()) throw NumericError("non-finite activations in " + layer);
}

Var ScoringModel::forward(Ctx& c, const FeatureBundle& b) const {
  b.validate();
  auto& t = c.tape;
  Seq content = encode(c, qr_, b.qr_seq, b.qr_len, false);
  check_finite(c, content.x, "question-response encoder");
  Seq language = encode(c, syntax_, b.syntax_seq, b.syntax_len, false);
  check_finite(c, language.x, "syntax encoder");
  Seq speech = encode(c, delivery_, b.delivery_seq, b.delivery_len, true);
  check_finite(c, speech.x, "delivery encoder");

  const Var er = project(c, er_, b.s_er, "exemplar-response");
  const Var ir = project(c, ir_, b.s_ir, "image-response");
  const Var g = project(c, grammar_, b.grammar, "grammar");
  check_finite(c, t.concat_rows({er, ir, g}), "fixed-stream projections");

  content = {t.concat_rows({content.x, er, ir}), concat({content.valid, Eigen::VectorXd::Ones(2)})};
  language = {t.concat_rows({language.x, g}), concat({language.valid, Eigen::VectorXd::Ones(1)})};
  auto aspect = [&](Aspect a) -> const Seq& {
    switch (a) {
      case Aspect::kContent: return content;
      case Aspect::kLanguageUse: return language;
      case Aspect::kDelivery: return speech;
    }
    return content;
  };

  std::vector<Seq> parts;
  for (std::size_t i = 0; i < cross_.size(); ++i) {
    const auto& pair = config_.cross_pairs[i];
    const Seq& target = aspect(pair.target);
    const Seq& source = aspect(pair.source);
    parts.push_back({block(c, target.x, source.x, source.valid, cross_[i]), target.valid});
    check_finite(c, parts.back().x, "cross-aspect attention " + to_string(pair.source) + "->" + to_string(pair.target));
  }
  if (parts.empty()) parts = {content, language, speech};

  std::vector<Var> xs;
  std::vector<Eigen::VectorXd> masks;
  for (const auto& s : parts) {
    xs.push_back(s.x);
    masks.push_back(s.valid);
  }
  Var fused = xs.size() == 1 ? xs[0] : t.concat_rows(xs);
  const Eigen::VectorXd valid = concat(masks);
  for (const auto& layer : fusion_) fused = block(c, fused, fused, valid, layer);
  check_finite(c, fused, "fusion self-attention");

  const Var pooled = t.weighted_row_sum(fused, valid / valid.sum());
  const Var hidden = t.add(pooled, t.relu(t.add_row(t.matmul(pooled, p(c, head1_.w)), p(c, head1_.b))));
  const Var out = t.add_row(t.matmul(hidden, p(c, head2_.w)), p(c, head2_.b));
  check_finite(c, out, "prediction head");
  return out;
}

ScorePrediction ScoringModel::predict(const FeatureBundle& bundle) const {
  Ctx c;
  const Var out = forward(c, bundle);
  const Eigen::RowVectorXd o = c.tape.value(out).row(0);
  ScorePrediction pred;
  if (config_.head == HeadKind::kClassification) {
    pred.logits = o.transpose();
    Eigen::Index best = 0;
    o.maxCoeff(&best);
    pred.score = static_cast<int>(best) + 1;
    const Eigen::RowVectorXd prob = (o.array() - o.maxCoeff()).exp().matrix() / (o.array() - o.maxCoeff()).exp().sum();
    for (int k = 0; k < kNumClasses; ++k) pred.value += prob(k) * (k + 1);
  } else {
    pred.value = o(0);
    pred.score = std::clamp(static_cast<int>(std::lround(pred.value)), 1, 5);
  }
  return pred;
}

double ScoringModel::loss(const FeatureBundle& bundle, int gold_score, Rng* dropout_rng, double grad_weight) {
  if (gold_score < 1 || gold_score > 5) throw InputError("gold score must lie in 1..5");
  Ctx c;
  c.rng = dropout_rng;
  const Var out = forward(c, bundle);
  const Var l = config_.head == HeadKind::kClassification ? c.tape.cross_entropy(out, gold_score - 1)
                                                          : c.tape.squared_error(out, gold_score);
  const double value = c.tape.value(l)(0, 0);
  if (!std::isfinite(value)) throw NumericError("non-finite loss");
  if (grad_weight != 0.0) c.tape.backward(l, grad_weight);
  return value;
}

Eigen::MatrixXd ScoringModel::encode_sequence_stream(SequenceStream stream, const Eigen::MatrixXd& x) const {
  const Encoder& e = stream == SequenceStream::kQuestionResponse ? qr_ : (stream == SequenceStream::kSyntax ? syntax_ : delivery_);
  check_stream(x, e.in_dim, -1, stream_name(stream).c_str());
  Ctx c;
  return c.tape.value(encode(c, e, x, -1, stream == SequenceStream::kDelivery).x);
}

Eigen::RowVectorXd ScoringModel::project_fixed_stream(FixedStream stream, const Eigen::VectorXd& v) const {
  Ctx c;
  switch (stream) {
    case FixedStream::kExemplarResponse: return c.tape.value(project(c, er_, v, "exemplar-response")).row(0);
    case FixedStream::kImageResponse: return c.tape.value(project(c, ir_, v, "image-response")).row(0);
    case FixedStream::kGrammar: return c.tape.value(project(c, grammar_, v, "grammar")).row(0);
  }
  return {};
}

Eigen::MatrixXd ScoringModel::cross_aspect_attention(std::size_t pair_index, const Eigen::MatrixXd& target,
                                                     const Eigen::MatrixXd& source,
                                                     const Eigen::VectorXd& source_valid) const {
  if (pair_index >= cross_.size()) throw InputError("no cross-aspect pair with index " + std::to_string(pair_index));
  const int h = config_.hidden_dim;
  if (target.cols() != h || source.cols() != h || target.rows() < 1 || source.rows() < 1)
    throw ShapeError("cross-aspect attention expects non-empty sequences of width " + std::to_string(h));
  if (source_valid.size() != 0 && source_valid.size() != source.rows())
    throw ShapeError("source mask length differs from the source length");
  Ctx c;
  const Var y = block(c, c.tape.constant(target), c.tape.constant(source), source_valid, cross_[pair_index]);
  return c.tape.value(y);
}

// --- checkpoints ----------------------------------------------------------------

void save_checkpoint(const std::filesystem::path& path, const ScoringModel& model, const nlohmann::json& metadata) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& prm : model.parameters()) shapes.push_back({{"name", prm.name}, {"rows", prm.value.rows()}, {"cols", prm.value.cols()}});
  auto row = [](const Eigen::RowVectorXd& r) { return std::vector<double>(r.data(), r.data() + r.size()); };
  const nlohmann::json header = {{"config", model.config().to_json()},
                                 {"parameters", shapes},
                                 {"buffers", {{"delivery_mean", row(model.delivery_mean())},
                                              {"delivery_scale", row(model.delivery_scale())}}},
                                 {"metadata", metadata}};
  const std::string text = header.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write checkpoint " + path.string());
    out.write(kMagic, sizeof kMagic);
    write_u32(out, kCheckpointVersion);
    write_u64(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& prm : model.parameters())
      for (Eigen::Index i = 0; i < prm.value.size(); ++i) write_double(out, prm.value.data()[i]);
    if (!out) throw IoError("failed writing checkpoint " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0)
    throw CompatibilityError(path.string() + " is not a model checkpoint");
  const auto version = static_cast<std::uint32_t>(read_uint(in, 4));
  if (version != kCheckpointVersion)
    throw CompatibilityError("checkpoint version " + std::to_string(version) + " is not supported");
  const auto header_len = read_uint(in, 8);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw CompatibilityError("checkpoint header is truncated");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CompatibilityError(std::string("checkpoint header is not valid JSON: ") + e.what());
  }
  ScoringModel model(ModelConfig::from_json(header.at("config")));
  const auto& shapes = header.at("parameters");
  if (shapes.size() != model.parameters().size()) throw CompatibilityError("checkpoint parameter count differs from its config");
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    auto& prm = model.parameters()[i];
    if (shapes[i].at("name").get<std::string>() != prm.name || shapes[i].at("rows").get<Eigen::Index>() != prm.value.rows() ||
        shapes[i].at("cols").get<Eigen::Index>() != prm.value.cols())
      throw CompatibilityError("checkpoint parameter '" + shapes[i].at("name").get<std::string>() + "' does not match the model layout");
    for (Eigen::Index k = 0; k < prm.value.size(); ++k) prm.value.data()[k] = std::bit_cast<double>(read_uint(in, 8));
  }
  const auto& buffers = header.at("buffers");
  auto to_row = [](const std::vector<double>& v) { return Eigen::RowVectorXd(Eigen::Map<const Eigen::RowVectorXd>(v.data(), static_cast<Eigen::Index>(v.size()))); };
  model.set_delivery_standardization(to_row(buffers.at("delivery_mean").get<std::vector<double>>()),
                                     to_row(buffers.at("delivery_scale").get<std::vector<double>>()));
  return {std::move(model), header.at("metadata")};
}

}  // namespace asa
