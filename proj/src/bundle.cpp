#include "iotad/bundle.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace iotad {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

Error format_error(const std::string& msg) { return Error(ErrorCode::kBundleFormat, msg); }

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

void put_f32(std::string& out, float f) {
  const auto v = std::bit_cast<std::uint32_t>(f);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t position() const { return pos_; }

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  float f32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return std::bit_cast<float>(v);
  }

  std::string text(std::uint64_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw format_error("tensor blob truncated at byte " + std::to_string(pos_));
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw format_error("cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for " + path.string());
}

nn::LayerKind parse_layer_kind(const std::string& name) {
  using nn::LayerKind;
  for (auto k : {LayerKind::kDense, LayerKind::kRelu, LayerKind::kTanh, LayerKind::kSigmoid,
                 LayerKind::kConv1d, LayerKind::kMaxPool1d, LayerKind::kLstm, LayerKind::kDropout}) {
    if (nn::layer_kind_name(k) == name) return k;
  }
  throw format_error("unknown layer kind '" + name + "'");
}

void add_network(std::vector<NamedTensor>& out, const std::string& prefix,
                 const nn::Sequential<float>& net) {
  const auto names = net.parameter_names();
  const auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) out.push_back({prefix + "/" + names[i], params[i]->value});
}

using TensorMap = std::map<std::string, nn::Tensor<float>>;

const nn::Tensor<float>& require_tensor(const TensorMap& tensors, const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw format_error("missing tensor '" + name + "'");
  return it->second;
}

nn::Sequential<float> load_network(const json& specs, const TensorMap& tensors, const std::string& prefix) {
  auto net = network_from_json(specs);
  const auto names = net.parameter_names();
  auto params = net.parameters();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& t = require_tensor(tensors, prefix + "/" + names[i]);
    if (t.shape() != params[i]->value.shape()) {
      throw format_error("tensor '" + prefix + "/" + names[i] + "' has shape " +
                         nn::Tensor<float>::shape_string(t.shape()) + ", architecture expects " +
                         nn::Tensor<float>::shape_string(params[i]->value.shape()));
    }
    params[i]->value = t;
  }
  return net;
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw format_error(std::string("manifest lacks '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw format_error(std::string("manifest field '") + key + "': " + e.what());
  }
}

json manifest_base(const TrainedModel& model) {
  json m;
  m["format_version"] = kBundleFormatVersion;
  m["kind"] = model_kind_name(model.kind);
  m["preprocessing"] = preprocessor_to_json(model.preprocessor);
  m["config_hash"] = model.config_hash;
  m["dataset_checksum"] = model.dataset_checksum;
  m["training_config"] = model.training_config;
  m["metadata"] = model.metadata;
  m["architecture"] = json::object();
  m["thresholds"] = json::object();
  return m;
}

void write_bundle_dir(const fs::path& dir, json manifest, const std::vector<NamedTensor>& tensors) {
  fs::create_directories(dir);
  json index = json::array();
  const auto blob = encode_tensors(tensors, &index);
  manifest["tensor_file"] = "tensors.bin";
  manifest["tensors"] = index;
  write_file(dir / "tensors.bin", blob);
  write_file(dir / "manifest.json", manifest.dump(2) + "\n");
}

TrainedModel sub_model(const TrainedModel& parent, ModelKind kind) {
  TrainedModel m;
  m.kind = kind;
  m.preprocessor = parent.preprocessor;
  m.config_hash = parent.config_hash;
  m.dataset_checksum = parent.dataset_checksum;
  m.training_config = parent.training_config;
  return m;
}

}  // namespace

std::string encode_tensors(const std::vector<NamedTensor>& tensors, json* index) {
  std::string out;
  for (const auto& [name, t] : tensors) {
    const std::size_t start = out.size();
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.rank());
    for (auto d : t.shape()) put_u64(out, d);
    for (float v : t.values()) put_f32(out, v);
    if (index) {
      index->push_back({{"name", name}, {"offset", start}, {"bytes", out.size() - start}, {"shape", t.shape()}});
    }
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(std::string_view bytes) {
  Reader r(bytes);
  std::vector<NamedTensor> out;
  while (!r.done()) {
    const auto name_len = r.u64();
    auto name = r.text(name_len);
    const auto rank = r.u64();
    if (rank > 8) throw format_error("tensor '" + name + "' has implausible rank " + std::to_string(rank));
    std::vector<std::size_t> shape(rank);
    std::uint64_t count = 1;
    for (auto& d : shape) {
      d = r.u64();
      if (d != 0 && count > bytes.size() / d) throw format_error("tensor '" + name + "' is larger than the blob");
      count *= d;
    }
    if (count * 4 > bytes.size() - r.position()) throw format_error("tensor '" + name + "' truncated");
    std::vector<float> data(count);
    for (auto& v : data) v = r.f32();
    out.push_back({std::move(name), nn::Tensor<float>(std::move(shape), std::move(data))});
  }
  return out;
}

json preprocessor_to_json(const Preprocessor& p) {
  json j;
  j["encoding"] = p.encoder.kind() == EncoderKind::kOneHot ? "onehot" : "label";
  j["lenient_categories"] = p.encoder.lenient();
  json vocab = json::object();
  for (std::size_t g = 0; g < 3; ++g) {
    vocab[std::string(kdd::kFeatureNames[CategoricalEncoder::kColumns[g]])] = p.encoder.vocabulary(g);
  }
  j["vocabularies"] = vocab;
  j["scaler"] = {{"min", p.scaler.min()}, {"max", p.scaler.max()}, {"scaled", p.scaler.scaled()}};
  j["l2_normalize"] = p.l2_normalize;
  j["output_width"] = p.output_width();
  return j;
}

Preprocessor preprocessor_from_json(const json& j) {
  const auto encoding = field<std::string>(j, "encoding");
  if (encoding != "onehot" && encoding != "label") throw format_error("unknown encoding '" + encoding + "'");
  std::array<std::vector<std::string>, 3> vocab;
  const auto& v = j.at("vocabularies");
  for (std::size_t g = 0; g < 3; ++g) {
    vocab[g] = field<std::vector<std::string>>(v, std::string(kdd::kFeatureNames[CategoricalEncoder::kColumns[g]]).c_str());
  }
  Preprocessor p;
  p.encoder = CategoricalEncoder(encoding == "onehot" ? EncoderKind::kOneHot : EncoderKind::kLabel,
                                 std::move(vocab), field<bool>(j, "lenient_categories"));
  const auto& s = j.at("scaler");
  p.scaler = MinMaxScaler(field<std::vector<double>>(s, "min"), field<std::vector<double>>(s, "max"),
                          field<std::vector<bool>>(s, "scaled"));
  p.l2_normalize = field<bool>(j, "l2_normalize");
  if (p.scaler.size() != p.output_width()) {
    throw format_error("scaler width " + std::to_string(p.scaler.size()) + " differs from encoder width " +
                       std::to_string(p.output_width()));
  }
  return p;
}

json layer_specs_to_json(const std::vector<nn::LayerSpec>& specs) {
  json out = json::array();
  for (const auto& s : specs) {
    out.push_back({{"kind", nn::layer_kind_name(s.kind)},
                   {"inputs", s.inputs},
                   {"outputs", s.outputs},
                   {"kernel", s.kernel},
                   {"rate", s.rate}});
  }
  return out;
}

nn::Sequential<float> network_from_json(const json& specs) {
  using nn::LayerKind;
  if (!specs.is_array()) throw format_error("architecture must be a layer list");
  nn::Sequential<float> net;
  for (const auto& s : specs) {
    const auto kind = parse_layer_kind(field<std::string>(s, "kind"));
    const auto in = field<std::size_t>(s, "inputs");
    const auto out = field<std::size_t>(s, "outputs");
    const auto kernel = field<std::size_t>(s, "kernel");
    switch (kind) {
      case LayerKind::kDense: net.emplace<nn::Dense<float>>(in, out); break;
      case LayerKind::kRelu:
      case LayerKind::kTanh:
      case LayerKind::kSigmoid: net.emplace<nn::Activation<float>>(kind); break;
      case LayerKind::kConv1d: net.emplace<nn::Conv1d<float>>(in, out, kernel); break;
      case LayerKind::kMaxPool1d: net.emplace<nn::MaxPool1d<float>>(kernel); break;
      case LayerKind::kLstm: net.emplace<nn::Lstm<float>>(in, out); break;
      // The mask seed only matters in training mode.
      case LayerKind::kDropout: net.emplace<nn::Dropout<float>>(field<double>(s, "rate"), 0); break;
    }
  }
  return net;
}

const AnomalyScorer* TrainedModel::scorer() const {
  if (kind == ModelKind::kAe) return ae.get();
  if (kind == ModelKind::kGan) return gan.get();
  return nullptr;
}

std::size_t TrainedModel::input_width() const {
  switch (kind) {
    case ModelKind::kAe: return ae->input_width();
    case ModelKind::kGan: return gan->input_width();
    case ModelKind::kKnn: return knn->input_width();
    case ModelKind::kRf: return forest->input_width();
    case ModelKind::kCnnLstm: return cnn_lstm->input_width();
    case ModelKind::kEnsemble: return ensemble->layer1().input_width();
  }
  return 0;
}

void save_bundle(const fs::path& dir, const TrainedModel& model) {
  auto manifest = manifest_base(model);
  std::vector<NamedTensor> tensors;
  auto& arch = manifest["architecture"];
  auto& thresholds = manifest["thresholds"];
  switch (model.kind) {
    case ModelKind::kAe: {
      arch["autoencoder"] = layer_specs_to_json(model.ae->network().specs());
      thresholds["threshold"] = model.ae->threshold();
      thresholds["percentile"] = model.ae->percentile();
      add_network(tensors, "autoencoder", model.ae->network());
      break;
    }
    case ModelKind::kGan: {
      const auto& gan = *model.gan;
      arch["generator"] = layer_specs_to_json(gan.generator().specs());
      arch["discriminator"] = layer_specs_to_json(gan.discriminator().specs());
      arch["latent_dim"] = gan.latent_dim();
      add_network(tensors, "generator", gan.generator());
      add_network(tensors, "discriminator", gan.discriminator());
      if (gan.encoder()) {
        arch["encoder"] = layer_specs_to_json(gan.encoder()->specs());
        add_network(tensors, "encoder", *gan.encoder());
      }
      thresholds["threshold"] = gan.threshold();
      thresholds["percentile"] = gan.percentile();
      thresholds["lambda"] = gan.lambda();
      break;
    }
    case ModelKind::kKnn: {
      const auto& refs = model.knn->references();
      arch["k"] = model.knn->k();
      arch["source_rows"] = model.knn->source_rows();
      arch["reference_rows"] = refs.rows;
      arch["columns"] = refs.cols;
      tensors.push_back({"knn/references", nn::Tensor<float>({refs.rows, refs.cols}, refs.values)});
      std::vector<float> labels(refs.labels.begin(), refs.labels.end());
      std::vector<float> ids(refs.row_ids.begin(), refs.row_ids.end());
      tensors.push_back({"knn/labels", nn::Tensor<float>({refs.rows}, std::move(labels))});
      tensors.push_back({"knn/row_ids", nn::Tensor<float>({refs.rows}, std::move(ids))});
      break;
    }
    case ModelKind::kRf: {
      const auto tables = model.forest->to_node_tables();
      arch["trees"] = tables.size();
      arch["features"] = model.forest->input_width();
      arch["classes"] = model.forest->n_classes();
      for (std::size_t t = 0; t < tables.size(); ++t) tensors.push_back({"forest/tree_" + std::to_string(t), tables[t]});
      break;
    }
    case ModelKind::kCnnLstm: {
      arch["network"] = layer_specs_to_json(model.cnn_lstm->network().specs());
      arch["sequence_length"] = model.cnn_lstm->input_width();
      manifest["metadata"]["best_validation_accuracy"] = model.cnn_lstm->best_validation_accuracy();
      add_network(tensors, "cnnlstm", model.cnn_lstm->network());
      break;
    }
    case ModelKind::kEnsemble: {
      const auto& e = *model.ensemble;
      auto l1 = sub_model(model, ModelKind::kKnn);
      l1.knn = std::dynamic_pointer_cast<KnnModel>(std::const_pointer_cast<Classifier>(e.layer1_ptr()));
      auto l2 = sub_model(model, ModelKind::kCnnLstm);
      l2.cnn_lstm = std::dynamic_pointer_cast<CnnLstmModel>(std::const_pointer_cast<Classifier>(e.layer2_ptr()));
      if (!l1.knn || !l2.cnn_lstm) throw format_error("ensemble layers must be KNN and CNN+LSTM to be saved");
      save_bundle(dir / "layer1", l1);
      save_bundle(dir / "layer2", l2);
      if (e.layer3()) {
        auto l3 = sub_model(model, ModelKind::kRf);
        l3.forest = std::dynamic_pointer_cast<ForestModel>(std::const_pointer_cast<Classifier>(e.layer3_ptr()));
        if (!l3.forest) throw format_error("ensemble layer 3 must be a random forest to be saved");
        save_bundle(dir / "layer3", l3);
      } else {
        fs::remove_all(dir / "layer3");
      }
      arch["layers"] = {{"layer1", "knn"}, {"layer2", "cnnlstm"}, {"layer3", e.layer3() ? "rf" : "none"}};
      arch["routing"] = {{"conflict_count", e.conflict_count()}, {"fallback", "layer2"},
                         {"has_layer3", e.layer3() != nullptr}};
      break;
    }
  }
  const auto& basis = model.threshold_basis;
  if (!basis.reconstruction.empty()) {
    tensors.push_back({"threshold_basis/reconstruction", nn::Tensor<float>({basis.reconstruction.size()}, basis.reconstruction)});
  }
  if (!basis.discriminator.empty()) {
    tensors.push_back({"threshold_basis/discriminator", nn::Tensor<float>({basis.discriminator.size()}, basis.discriminator)});
  }
  write_bundle_dir(dir, std::move(manifest), tensors);
}

TrainedModel load_bundle(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json")) throw format_error("no manifest.json in " + dir.string());
  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::exception& e) {
    throw format_error("manifest.json in " + dir.string() + " is not valid JSON: " + e.what());
  }
  const int version = field<int>(manifest, "format_version");
  if (version != kBundleFormatVersion) {
    throw format_error("unsupported bundle format version " + std::to_string(version));
  }

  TrainedModel model;
  try {
    model.kind = parse_model_kind(field<std::string>(manifest, "kind"));
  } catch (const Error& e) {
    throw format_error(e.what());
  }
  model.preprocessor = preprocessor_from_json(manifest.at("preprocessing"));
  model.config_hash = field<std::string>(manifest, "config_hash");
  model.dataset_checksum = field<std::string>(manifest, "dataset_checksum");
  model.training_config = manifest.value("training_config", json::object());
  model.metadata = manifest.value("metadata", json::object());

  const auto blob = read_file(dir / field<std::string>(manifest, "tensor_file"));
  TensorMap tensors;
  for (auto& t : decode_tensors(blob)) tensors.emplace(t.name, std::move(t.tensor));
  for (const auto& entry : field<json>(manifest, "tensors")) {
    const auto name = field<std::string>(entry, "name");
    const auto& t = require_tensor(tensors, name);
    if (field<std::vector<std::size_t>>(entry, "shape") != t.shape()) {
      throw format_error("tensor '" + name + "' shape disagrees with the manifest");
    }
  }

  if (auto it = tensors.find("threshold_basis/reconstruction"); it != tensors.end()) {
    model.threshold_basis.reconstruction = it->second.storage();
  }
  if (auto it = tensors.find("threshold_basis/discriminator"); it != tensors.end()) {
    model.threshold_basis.discriminator = it->second.storage();
  }
  const auto& arch = field<json>(manifest, "architecture");
  const auto& thresholds = field<json>(manifest, "thresholds");
  try {
    switch (model.kind) {
      case ModelKind::kAe:
        model.ae = std::make_shared<AeModel>(load_network(arch.at("autoencoder"), tensors, "autoencoder"),
                                             field<double>(thresholds, "threshold"),
                                             field<double>(thresholds, "percentile"));
        break;
      case ModelKind::kGan: {
        std::optional<nn::Sequential<float>> encoder;
        if (arch.contains("encoder")) encoder = load_network(arch.at("encoder"), tensors, "encoder");
        model.gan = std::make_shared<GanModel>(
            load_network(arch.at("generator"), tensors, "generator"),
            load_network(arch.at("discriminator"), tensors, "discriminator"), std::move(encoder),
            field<double>(thresholds, "lambda"), field<double>(thresholds, "threshold"),
            field<double>(thresholds, "percentile"), field<std::size_t>(arch, "latent_dim"));
        break;
      }
      case ModelKind::kKnn: {
        const auto& refs = require_tensor(tensors, "knn/references");
        const auto& labels = require_tensor(tensors, "knn/labels");
        const auto& ids = require_tensor(tensors, "knn/row_ids");
        if (refs.rank() != 2 || labels.size() != refs.dim(0) || ids.size() != refs.dim(0)) {
          throw format_error("knn tensors have inconsistent shapes");
        }
        FeatureMatrix m(refs.dim(0), refs.dim(1));
        m.values = refs.storage();
        for (std::size_t i = 0; i < m.rows; ++i) {
          m.labels[i] = static_cast<int>(labels[i]);
          m.row_ids[i] = static_cast<std::size_t>(ids[i]);
        }
        model.knn = std::make_shared<KnnModel>(std::move(m), field<std::size_t>(arch, "k"));
        model.knn->set_source_rows(field<std::size_t>(arch, "source_rows"));
        break;
      }
      case ModelKind::kRf: {
        std::vector<nn::Tensor<float>> tables;
        const auto trees = field<std::size_t>(arch, "trees");
        for (std::size_t t = 0; t < trees; ++t) tables.push_back(require_tensor(tensors, "forest/tree_" + std::to_string(t)));
        model.forest = std::make_shared<ForestModel>(
            ForestModel::from_node_tables(tables, field<std::size_t>(arch, "features")));
        break;
      }
      case ModelKind::kCnnLstm:
        model.cnn_lstm = std::make_shared<CnnLstmModel>(
            load_network(arch.at("network"), tensors, "cnnlstm"), field<std::size_t>(arch, "sequence_length"),
            model.metadata.value("best_validation_accuracy", 0.0));
        break;
      case ModelKind::kEnsemble: {
        const auto& routing = arch.at("routing");
        auto l1 = load_bundle(dir / "layer1");
        auto l2 = load_bundle(dir / "layer2");
        if (l1.kind != ModelKind::kKnn || l2.kind != ModelKind::kCnnLstm) {
          throw format_error("ensemble layers must be knn and cnnlstm bundles");
        }
        std::shared_ptr<const Classifier> l3;
        if (field<bool>(routing, "has_layer3")) {
          auto sub = load_bundle(dir / "layer3");
          if (sub.kind != ModelKind::kRf) throw format_error("ensemble layer3 must be an rf bundle");
          l3 = sub.forest;
        }
        model.ensemble = std::make_shared<EnsembleModel>(l1.knn, l2.cnn_lstm, l3,
                                                         field<std::size_t>(routing, "conflict_count"));
        break;
      }
    }
  } catch (const json::exception& e) {
    throw format_error(std::string("manifest: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kBundleFormat) throw;
    throw format_error(std::string("inconsistent bundle: ") + e.what());
  }
  if (model.input_width() != model.preprocessor.output_width()) {
    throw format_error("model expects " + std::to_string(model.input_width()) +
                       " features but preprocessing yields " + std::to_string(model.preprocessor.output_width()));
  }
  return model;
}

}  // namespace iotad
