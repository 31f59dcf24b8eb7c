#include "asa/feature_store.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "asa/common.hpp"

namespace asa {

namespace {

constexpr char kMagic[8] = {'A', 'S', 'A', 'T', 'N', 'S', 'R', '\0'};

void write_uint(std::ostream& out, std::uint64_t v, int bytes) {
  for (int i = 0; i < bytes; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

std::uint64_t read_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == EOF) throw ParseError("tensor file is truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

Eigen::VectorXd column(const TensorFile& f, const char* name) { return f.get(name).col(0); }

}  // namespace

const Eigen::MatrixXd& TensorFile::get(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw LookupError("tensor '" + name + "' is missing");
  return it->second;
}

void write_tensor_file(const std::filesystem::path& path, const TensorFile& file) {
  nlohmann::json shapes = nlohmann::json::array();
  for (const auto& [name, m] : file.tensors) shapes.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  const std::string header = nlohmann::json{{"meta", file.meta}, {"tensors", shapes}}.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(kMagic, sizeof kMagic);
    write_uint(out, kTensorFileVersion, 4);
    write_uint(out, header.size(), 8);
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    for (const auto& [name, m] : file.tensors)
      for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) write_uint(out, std::bit_cast<std::uint64_t>(m(r, c)), 8);
    if (!out) throw IoError("failed writing " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

TensorFile read_tensor_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) throw ParseError(path.string() + " is not a tensor file");
  const auto version = read_uint(in, 4);
  if (version != kTensorFileVersion) throw ParseError(path.string() + ": unsupported tensor file version " + std::to_string(version));
  const auto header_len = read_uint(in, 8);
  std::string text(header_len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw ParseError(path.string() + ": header is truncated");

  TensorFile file;
  try {
    const auto header = nlohmann::json::parse(text);
    file.meta = header.at("meta");
    for (const auto& s : header.at("tensors")) {
      const auto rows = s.at("rows").get<Eigen::Index>();
      const auto cols = s.at("cols").get<Eigen::Index>();
      if (rows < 0 || cols < 0) throw ParseError(path.string() + ": negative tensor shape");
      Eigen::MatrixXd m(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = std::bit_cast<double>(read_uint(in, 8));
      file.tensors.emplace(s.at("name").get<std::string>(), std::move(m));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path.string() + ": malformed header: " + e.what());
  }
  return file;
}

nlohmann::json FeatureToggles::to_json() const {
  return {{"splitting", splitting},     {"use_er", use_er},           {"use_ir", use_ir},
          {"multifaceted", multifaceted}, {"use_grammar", use_grammar}, {"grammar_normalized", grammar_normalized}};
}

FeatureToggles FeatureToggles::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("features section must be an object");
  FeatureToggles t;
  for (const auto& [key, v] : j.items()) {
    if (!v.is_boolean()) throw ConfigError("features." + key + " must be a boolean");
    const bool b = v.get<bool>();
    if (key == "splitting") t.splitting = b;
    else if (key == "use_er") t.use_er = b;
    else if (key == "use_ir") t.use_ir = b;
    else if (key == "multifaceted") t.multifaceted = b;
    else if (key == "use_grammar") t.use_grammar = b;
    else if (key == "grammar_normalized") t.grammar_normalized = b;
    else throw ConfigError("unknown config key 'features." + key + "'");
  }
  return t;
}

FeatureBundle assemble_bundle(const TensorFile& stored, const FeatureToggles& toggles) {
  namespace bt = bundle_tensor;
  FeatureBundle b;
  b.qr_seq = stored.get(bt::kQr);
  b.syntax_seq = stored.get(bt::kSyntax);
  b.delivery_seq = stored.get(bt::kDelivery);
  const Eigen::VectorXd zero_slots = Eigen::VectorXd::Zero(kSlotDim);
  b.s_er = toggles.multifaceted && toggles.use_er ? column(stored, toggles.splitting ? bt::kErSplit : bt::kErWhole)
                                                  : zero_slots;
  b.s_ir = toggles.multifaceted && toggles.use_ir ? column(stored, toggles.splitting ? bt::kIrSplit : bt::kIrWhole)
                                                  : zero_slots;
  b.grammar = toggles.use_grammar ? column(stored, toggles.grammar_normalized ? bt::kGrammarFreq : bt::kGrammarCount)
                                  : Eigen::VectorXd::Zero(kGrammarStreamDim);
  b.validate();
  return b;
}

std::string safe_file_stem(const std::string& id) {
  std::string out;
  for (char c : id) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' || c == '_' || c == '.';
    out += ok ? c : '_';
  }
  if (out.empty() || out[0] == '.') out = "_" + out;
  // Ids differing only in replaced characters must not collide.
  if (out != id) out += "-" + hex64(fnv1a(id)).substr(0, 8);
  return out;
}

FeatureStore::FeatureStore(std::filesystem::path root) : root_(std::move(root)) {}

std::filesystem::path FeatureStore::raw_path(const std::string& id) const {
  return root_ / "raw" / (safe_file_stem(id) + ".asat");
}

std::filesystem::path FeatureStore::bundle_path(const std::string& id) const {
  return root_ / "bundles" / (safe_file_stem(id) + ".asat");
}

bool FeatureStore::has_bundle(const std::string& id) const { return std::filesystem::is_regular_file(bundle_path(id)); }

TensorFile FeatureStore::load_stored(const std::string& id) const {
  if (!has_bundle(id)) throw LookupError("no extracted features for response '" + id + "' in " + root_.string());
  return read_tensor_file(bundle_path(id));
}

FeatureBundle FeatureStore::load_bundle(const std::string& id, const FeatureToggles& toggles) const {
  return assemble_bundle(load_stored(id), toggles);
}

nlohmann::json FeatureStore::load_schemas() const {
  std::ifstream in(schemas_path());
  if (!in) throw LookupError("feature store " + root_.string() + " has no schemas.json; run extract first");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(schemas_path().string() + ": " + e.what());
  }
}

}  // namespace asa
