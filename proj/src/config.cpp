#include "iotad/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "iotad/kdd.hpp"
#include "iotad/rng.hpp"

namespace iotad {
namespace {

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> d = {
      {"data", "data/kddcup.data_10_percent.gz"},
      {"out", "runs/latest"},
      {"model", "ensemble"},
      {"seed", "7"},
      {"subsample", "1"},
      {"split.train_fraction", "0.8"},
      {"preprocess.encoding", "auto"},
      {"preprocess.l2_normalize", "auto"},
      {"preprocess.lenient_categories", "false"},
      {"knn.k", "5"},
      {"knn.max_reference_rows", "20000"},
      {"forest.n_trees", "50"},
      {"forest.max_depth", "16"},
      {"forest.min_samples_split", "2"},
      {"forest.features_per_split", "0"},
      {"forest.bootstrap", "true"},
      {"ae.hidden1", "64"},
      {"ae.hidden2", "32"},
      {"ae.learning_rate", "0.1"},
      {"ae.momentum", "0"},
      {"ae.epochs", "20"},
      {"ae.batch_size", "256"},
      {"ae.threshold_percentile", "95"},
      {"gan.latent_dim", "114"},
      {"gan.hidden_units", "128"},
      {"gan.hidden_layers", "6"},
      {"gan.dropout", "0.2"},
      {"gan.learning_rate", "0.00001"},
      {"gan.epochs", "10"},
      {"gan.batch_size", "512"},
      {"gan.use_encoder", "true"},
      {"gan.encoder_hidden", "128"},
      {"gan.encoder_epochs", "5"},
      {"gan.encoder_learning_rate", "0.001"},
      {"gan.lambda", "0.9"},
      {"gan.threshold_percentile", "95"},
      {"cnnlstm.filters", "64"},
      {"cnnlstm.kernel", "3"},
      {"cnnlstm.pool", "2"},
      {"cnnlstm.lstm_units", "64"},
      {"cnnlstm.learning_rate", "0.01"},
      {"cnnlstm.momentum", "0"},
      {"cnnlstm.epochs", "20"},
      {"cnnlstm.batch_size", "128"},
      {"cnnlstm.validation_fraction", "0.1"},
      {"ensemble.min_conflicts", "10"},
      {"evaluate.tolerance", "0.015"},
      {"evaluate.allow_checksum_mismatch", "false"},
  };
  return d;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Error bad_value(const std::string& key, const std::string& value, const char* expected) {
  return Error(ErrorCode::kInvalidArgument,
               "config key '" + key + "': expected " + expected + ", got '" + value + "'", key);
}

}  // namespace

std::string model_kind_name(ModelKind kind) {
  switch (kind) {
    case ModelKind::kAe: return "ae";
    case ModelKind::kGan: return "gan";
    case ModelKind::kKnn: return "knn";
    case ModelKind::kRf: return "rf";
    case ModelKind::kCnnLstm: return "cnnlstm";
    case ModelKind::kEnsemble: return "ensemble";
  }
  return "unknown";
}

ModelKind parse_model_kind(const std::string& name) {
  for (auto k : {ModelKind::kAe, ModelKind::kGan, ModelKind::kKnn, ModelKind::kRf,
                 ModelKind::kCnnLstm, ModelKind::kEnsemble}) {
    if (model_kind_name(k) == name) return k;
  }
  throw Error(ErrorCode::kInvalidArgument,
              "unknown model '" + name + "' (expected ae, gan, knn, rf, cnnlstm or ensemble)", "model");
}

RunConfig::RunConfig() : values_(defaults()) {}

const std::vector<std::string>& RunConfig::known_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const auto& [key, value] : defaults()) k.push_back(key);
    return k;
  }();
  return keys;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) {
    throw Error(ErrorCode::kUnknownConfigKey, "unknown config key '" + key + "'", key);
  }
  it->second = value;
}

void RunConfig::apply_text(const std::string& text, const std::string& origin) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::kInvalidArgument,
                  origin + ":" + std::to_string(number) + ": expected key = value", "", number);
    }
    const auto key = trim(line.substr(0, eq));
    try {
      set(key, trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(e.code(), origin + ":" + std::to_string(number) + ": " + e.what(), key, number);
    }
  }
}

void RunConfig::apply_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot read config file " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  apply_text(buffer.str(), path);
}

void RunConfig::apply_desk_scale() {
  set("subsample", "0.05");
  set("knn.max_reference_rows", "20000");
}

const std::string& RunConfig::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::kUnknownConfigKey, "unknown config key '" + key + "'", key);
  return it->second;
}

double RunConfig::get_double(const std::string& key) const {
  const auto& v = get(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw bad_value(key, v, "a number");
  return out;
}

std::uint64_t RunConfig::get_u64(const std::string& key) const {
  const auto& v = get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) throw bad_value(key, v, "a non-negative integer");
  return out;
}

std::size_t RunConfig::get_size(const std::string& key) const {
  return static_cast<std::size_t>(get_u64(key));
}

bool RunConfig::get_bool(const std::string& key) const {
  const auto& v = get(key);
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw bad_value(key, v, "true or false");
}

ModelKind RunConfig::model() const { return parse_model_kind(get("model")); }

std::string RunConfig::resolved_text() const {
  std::string out;
  for (const auto& [key, value] : values_) out += key + " = " + value + "\n";
  return out;
}

std::string RunConfig::hash() const {
  std::string text;
  for (const auto& [key, value] : values_) {
    if (key == "data" || key == "out") continue;
    text += key + " = " + value + "\n";
  }
  return kdd::sha256_hex(text);
}

EncoderKind RunConfig::encoder_kind() const {
  const auto& v = get("preprocess.encoding");
  if (v == "label") return EncoderKind::kLabel;
  if (v == "onehot") return EncoderKind::kOneHot;
  if (v != "auto") throw bad_value("preprocess.encoding", v, "auto, label or onehot");
  return model() == ModelKind::kAe ? EncoderKind::kOneHot : EncoderKind::kLabel;
}

bool RunConfig::l2_normalize() const {
  if (get("preprocess.l2_normalize") != "auto") return get_bool("preprocess.l2_normalize");
  const auto kind = model();
  return kind == ModelKind::kAe || kind == ModelKind::kGan;
}

// Each model family draws from its own stream of the run seed.
AeConfig RunConfig::ae_config() const {
  AeConfig c;
  c.hidden1 = get_size("ae.hidden1");
  c.hidden2 = get_size("ae.hidden2");
  c.learning_rate = get_double("ae.learning_rate");
  c.momentum = get_double("ae.momentum");
  c.epochs = get_size("ae.epochs");
  c.batch_size = get_size("ae.batch_size");
  c.threshold_percentile = get_double("ae.threshold_percentile");
  c.seed = derive_seed(seed(), 10);
  return c;
}

GanConfig RunConfig::gan_config() const {
  GanConfig c;
  c.latent_dim = get_size("gan.latent_dim");
  c.hidden_units = get_size("gan.hidden_units");
  c.hidden_layers = get_size("gan.hidden_layers");
  c.dropout = get_double("gan.dropout");
  c.learning_rate = get_double("gan.learning_rate");
  c.epochs = get_size("gan.epochs");
  c.batch_size = get_size("gan.batch_size");
  c.use_encoder = get_bool("gan.use_encoder");
  c.encoder_hidden = get_size("gan.encoder_hidden");
  c.encoder_epochs = get_size("gan.encoder_epochs");
  c.encoder_learning_rate = get_double("gan.encoder_learning_rate");
  c.lambda = get_double("gan.lambda");
  c.threshold_percentile = get_double("gan.threshold_percentile");
  c.seed = derive_seed(seed(), 11);
  return c;
}

KnnConfig RunConfig::knn_config() const {
  KnnConfig c;
  c.k = get_size("knn.k");
  c.max_reference_rows = get_size("knn.max_reference_rows");
  c.seed = derive_seed(seed(), 12);
  return c;
}

ForestConfig RunConfig::forest_config() const {
  ForestConfig c;
  c.n_trees = get_size("forest.n_trees");
  c.max_depth = get_size("forest.max_depth");
  c.min_samples_split = get_size("forest.min_samples_split");
  c.features_per_split = get_size("forest.features_per_split");
  c.bootstrap = get_bool("forest.bootstrap");
  c.seed = derive_seed(seed(), 13);
  return c;
}

CnnLstmConfig RunConfig::cnn_lstm_config() const {
  CnnLstmConfig c;
  c.filters = get_size("cnnlstm.filters");
  c.kernel = get_size("cnnlstm.kernel");
  c.pool = get_size("cnnlstm.pool");
  c.lstm_units = get_size("cnnlstm.lstm_units");
  c.learning_rate = get_double("cnnlstm.learning_rate");
  c.momentum = get_double("cnnlstm.momentum");
  c.epochs = get_size("cnnlstm.epochs");
  c.batch_size = get_size("cnnlstm.batch_size");
  c.validation_fraction = get_double("cnnlstm.validation_fraction");
  c.seed = derive_seed(seed(), 14);
  return c;
}

EnsembleConfig RunConfig::ensemble_config() const {
  EnsembleConfig c;
  c.knn = knn_config();
  c.cnn_lstm = cnn_lstm_config();
  c.forest = forest_config();
  c.min_conflicts = get_size("ensemble.min_conflicts");
  return c;
}

}  // namespace iotad
