#include "asa/traineval.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "asa/common.hpp"

namespace asa {

namespace {

void check_pair(const std::vector<int>& preds, const std::vector<int>& golds) {
  if (preds.empty()) throw InputError("metrics need at least one prediction");
  if (preds.size() != golds.size())
    throw InputError("prediction count " + std::to_string(preds.size()) + " differs from gold count " +
                     std::to_string(golds.size()));
}

std::string fixed(double v, int digits = 3) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void flatten(const nlohmann::json& j, const std::string& prefix, std::map<std::string, nlohmann::json>& out) {
  if (j.is_object() && !j.empty()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
  } else {
    out[prefix] = j;
  }
}

}  // namespace

// --- metrics --------------------------------------------------------------------

double accuracy(const std::vector<int>& preds, const std::vector<int>& golds) {
  check_pair(preds, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) hits += preds[i] == golds[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

double binary_accuracy(const std::vector<int>& preds, const std::vector<int>& golds) {
  check_pair(preds, golds);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (int s : {preds[i], golds[i]})
      if (s < 1 || s > 5) throw InputError("score " + std::to_string(s) + " is outside 1..5");
    hits += (preds[i] >= 4) == (golds[i] >= 4) ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(preds.size());
}

std::size_t token_edit_distance(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  std::iota(prev.begin(), prev.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double word_error_rate(const std::vector<std::string>& reference, const std::vector<std::string>& hypothesis) {
  if (reference.empty()) throw InputError("word_error_rate: empty reference");
  return static_cast<double>(token_edit_distance(reference, hypothesis)) / static_cast<double>(reference.size());
}

nlohmann::json EvalReport::to_json() const {
  nlohmann::json conf = nlohmann::json::array();
  for (const auto& row : confusion) conf.push_back(row);
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < ids.size(); ++i) items.push_back({{"id", ids[i]}, {"pred", preds[i]}, {"gold", golds[i]}});
  return {{"split", split},       {"target", target},     {"n", n},
          {"accuracy", accuracy}, {"binary_accuracy", binary_accuracy}, {"confusion", conf},
          {"predictions", items}};
}

std::string EvalReport::to_table() const {
  std::ostringstream out;
  out << "split: " << split << "  target: " << target << "  n: " << n << "\n";
  out << "Acc.     " << fixed(accuracy) << "\n";
  out << "Bin Acc. " << fixed(binary_accuracy) << "\n";
  out << "confusion (rows gold 1..5, cols pred 1..5)\n";
  for (std::size_t g = 0; g < 5; ++g) {
    out << "  " << g + 1 << " |";
    for (std::size_t p = 0; p < 5; ++p) out << std::setw(5) << confusion[g][p];
    out << "\n";
  }
  return out.str();
}

EvalReport evaluate(const ScoringModel& model, const std::vector<LabeledExample>& examples, const std::string& split,
                    const std::string& target) {
  if (examples.empty()) throw InputError("split '" + split + "' is empty");
  EvalReport r;
  r.split = split;
  r.target = target;
  r.n = examples.size();
  for (const auto& ex : examples) {
    const int pred = model.predict(*ex.bundle).score;
    r.ids.push_back(ex.id);
    r.preds.push_back(pred);
    r.golds.push_back(ex.gold);
    ++r.confusion[static_cast<std::size_t>(ex.gold - 1)][static_cast<std::size_t>(pred - 1)];
  }
  r.accuracy = accuracy(r.preds, r.golds);
  r.binary_accuracy = binary_accuracy(r.preds, r.golds);
  return r;
}

// --- training -------------------------------------------------------------------

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train.epochs must be non-negative");
  if (batch_size < 1) throw ConfigError("train.batch_size must be at least 1");
  if (!(learning_rate > 0.0)) throw ConfigError("train.learning_rate must be positive");
  if (weight_decay < 0.0 || grad_clip < 0.0) throw ConfigError("train.weight_decay and train.grad_clip must be non-negative");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0 && epsilon > 0.0))
    throw ConfigError("train optimizer constants are out of range");
}

nlohmann::json TrainConfig::to_json() const {
  return {{"epochs", epochs},
          {"batch_size", batch_size},
          {"learning_rate", learning_rate},
          {"weight_decay", weight_decay},
          {"beta1", beta1},
          {"beta2", beta2},
          {"epsilon", epsilon},
          {"grad_clip", grad_clip},
          {"stop_at_perfect_train", stop_at_perfect_train},
          {"target", to_string(target)}};
}

TrainConfig TrainConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("train section must be an object");
  TrainConfig c;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "epochs") c.epochs = v.get<int>();
      else if (key == "batch_size") c.batch_size = v.get<int>();
      else if (key == "learning_rate") c.learning_rate = v.get<double>();
      else if (key == "weight_decay") c.weight_decay = v.get<double>();
      else if (key == "beta1") c.beta1 = v.get<double>();
      else if (key == "beta2") c.beta2 = v.get<double>();
      else if (key == "epsilon") c.epsilon = v.get<double>();
      else if (key == "grad_clip") c.grad_clip = v.get<double>();
      else if (key == "stop_at_perfect_train") c.stop_at_perfect_train = v.get<bool>();
      else if (key == "target") c.target = parse_score_target(v.get<std::string>());
      else throw ConfigError("unknown config key 'train." + key + "'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("train section: ") + e.what());
  }
  c.validate();
  return c;
}

AdamW::AdamW(const std::vector<ag::Parameter>& params, const TrainConfig& config) : config_(config) {
  for (const auto& p : params) {
    m_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
    v_.push_back(Eigen::MatrixXd::Zero(p.value.rows(), p.value.cols()));
  }
}

void AdamW::step(std::vector<ag::Parameter>& params) {
  if (params.size() != m_.size()) throw InputError("optimizer state does not match the parameter list");
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  double scale = 1.0;
  if (config_.grad_clip > 0.0) {
    double sq = 0.0;
    for (const auto& p : params) sq += p.grad.squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > config_.grad_clip) scale = config_.grad_clip / norm;
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const Eigen::MatrixXd g = p.grad * scale;
    m_[i] = config_.beta1 * m_[i] + (1.0 - config_.beta1) * g;
    v_[i] = config_.beta2 * v_[i] + (1.0 - config_.beta2) * g.cwiseProduct(g);
    if (p.value.rows() > 1 && p.value.cols() > 1) p.value *= 1.0 - config_.learning_rate * config_.weight_decay;
    p.value.array() -= config_.learning_rate * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + config_.epsilon);
  }
}

nlohmann::json EpochLog::to_json() const {
  return {{"epoch", epoch},
          {"train_loss", train_loss},
          {"train_accuracy", train_accuracy},
          {"dev_accuracy", dev_accuracy},
          {"best", best}};
}

TrainResult train(ScoringModel model, const std::vector<LabeledExample>& train_set,
                  const std::vector<LabeledExample>& dev_set, const TrainConfig& config, std::uint64_t seed,
                  std::ostream* jsonl_log) {
  config.validate();
  if (train_set.empty()) throw InsufficientDataError("training split is empty");
  TrainResult result{model, {}, 0, 0.0};
  if (config.epochs == 0) return result;

  Rng rng(seed ^ 0x747261696eULL);
  AdamW optimizer(model.parameters(), config);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  double best_score = -1.0;
  const std::string target = to_string(config.target);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(config.batch_size));
      const double weight = 1.0 / static_cast<double>(end - begin);
      model.zero_grad();
      for (std::size_t k = begin; k < end; ++k) {
        const auto& ex = train_set[order[k]];
        try {
          loss_sum += model.loss(*ex.bundle, ex.gold, &rng, weight);
        } catch (const NumericError& e) {
          throw NumericError(std::string(e.what()) + " (epoch " + std::to_string(epoch) + ", example '" + ex.id + "')");
        }
      }
      optimizer.step(model.parameters());
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.train_loss = loss_sum / static_cast<double>(train_set.size());
    entry.train_accuracy = evaluate(model, train_set, "train", target).accuracy;
    entry.dev_accuracy = dev_set.empty() ? entry.train_accuracy : evaluate(model, dev_set, "dev", target).accuracy;
    if (entry.dev_accuracy > best_score) {
      best_score = entry.dev_accuracy;
      entry.best = true;
      result.best_model = model;
      result.best_epoch = epoch;
      result.best_dev_accuracy = entry.dev_accuracy;
    }
    result.log.push_back(entry);
    if (jsonl_log) *jsonl_log << entry.to_json().dump() << "\n" << std::flush;
    if (config.stop_at_perfect_train && entry.train_accuracy >= 1.0) break;
  }
  return result;
}

// --- ablation -------------------------------------------------------------------

nlohmann::json AblationRow::to_json() const {
  nlohmann::json reps = nlohmann::json::object();
  for (const auto& [split, r] : reports) reps[split] = {{"accuracy", r.accuracy}, {"binary_accuracy", r.binary_accuracy}, {"n", r.n}};
  return {{"name", name}, {"ok", ok}, {"error", error}, {"config_diff", config_diff}, {"reports", reps}};
}

nlohmann::json config_diff(const nlohmann::json& base, const nlohmann::json& other) {
  std::map<std::string, nlohmann::json> a, b;
  flatten(base, "", a);
  flatten(other, "", b);
  nlohmann::json diff = nlohmann::json::object();
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    if (it == b.end()) diff[k] = {{"base", v}, {"cell", nullptr}};
    else if (it->second != v) diff[k] = {{"base", v}, {"cell", it->second}};
  }
  for (const auto& [k, v] : b)
    if (!a.count(k)) diff[k] = {{"base", nullptr}, {"cell", v}};
  return diff;
}

std::vector<AblationRow> run_ablation(const std::vector<AblationCell>& grid, const AblationRunner& runner) {
  std::vector<AblationRow> rows;
  for (const auto& cell : grid) {
    AblationRow row;
    row.name = cell.name;
    row.config_diff = config_diff(grid.front().config, cell.config);
    try {
      row.reports = runner(cell);
      row.ok = true;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows, const std::vector<std::string>& splits) {
  std::size_t width = 6;
  for (const auto& r : rows) width = std::max(width, r.name.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "config";
  for (const auto& s : splits) out << " | " << std::setw(22) << (s + " Acc / Bin Acc");
  out << "\n" << std::string(width, '-');
  for (std::size_t i = 0; i < splits.size(); ++i) out << "-+-" << std::string(22, '-');
  out << "\n";
  for (const auto& r : rows) {
    out << std::setw(static_cast<int>(width)) << r.name;
    for (const auto& s : splits) {
      std::string cell = "n/a";
      if (!r.ok) cell = "FAILED";
      else if (auto it = r.reports.find(s); it != r.reports.end())
        cell = fixed(it->second.accuracy) + " / " + fixed(it->second.binary_accuracy);
      out << " | " << std::setw(22) << cell;
    }
    out << "\n";
  }
  for (const auto& r : rows)
    if (!r.ok) out << r.name << ": " << r.error << "\n";
  return out.str();
}

}  // namespace asa
