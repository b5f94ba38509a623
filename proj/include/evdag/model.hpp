#pragma once

// Model parameters for the action scorer: embedding tables, the two
// recurrent encoder directions, the shared relation hidden layer and the
// scalar output layer. Scalar-templated; the on-disk format is fixed at
// 32-bit floats regardless of the in-memory scalar.

#include <Eigen/Dense>
#include <bit>
#include <cctype>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "evdag/error.hpp"

namespace evdag {

inline constexpr uint32_t kModelFormatVersion = 1;
inline constexpr char kModelMagic[4] = {'E', 'V', 'D', 'G'};

// Action table rows. PENDING marks still-buffered entries.
enum ActionSlot : int { kSlotAdd = 0, kSlotIgnore = 1, kSlotConstruct = 2, kSlotPending = 3 };

struct ModelConfig {
  int word_dim = 200;    // pretrained word embedding size
  int encoder_dim = 100; // concatenated recurrent output (half per direction)
  int role_dim = 10;
  int type_dim = 20;
  int action_dim = 4;
  int hidden_dim = 60;
  uint64_t seed = 42;

  int event_dim() const { return type_dim + encoder_dim; }
  int relation_dim() const {
    return type_dim + encoder_dim + role_dim + type_dim + encoder_dim + action_dim;
  }

  void validate() const {
    if (word_dim < 1 || encoder_dim < 1 || role_dim < 1 || type_dim < 1 ||
        action_dim < 1 || hidden_dim < 1)
      fail(ErrorCode::Config, "all embedding dimensions must be positive");
    if (encoder_dim % 2 != 0)
      fail(ErrorCode::Config, "encoder dimension must be even (two directions)");
    if (2 * hidden_dim != event_dim())
      fail(ErrorCode::Config,
           "event dimension (type " + std::to_string(type_dim) + " + word " +
               std::to_string(encoder_dim) + ") must equal twice the hidden layer size " +
               std::to_string(hidden_dim));
  }
};

template <class S>
struct Tensors {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  // Tables store one embedding per column.
  Mat word_table, type_table, role_table, action_table;
  // Recurrent gates, forward then backward direction.
  Mat f_Wi, f_Ui, f_bi, f_Wf, f_Uf, f_bf, f_Wg, f_Ug, f_bg, f_Wo, f_Uo, f_bo;
  Mat b_Wi, b_Ui, b_bi, b_Wf, b_Uf, b_bf, b_Wg, b_Ug, b_bg, b_Wo, b_Uo, b_bo;
  Mat hidden_W, hidden_b; // relation_dim -> hidden_dim
  Mat out_W, out_b;       // event_dim -> 1

  struct Field {
    const char* name;
    Mat Tensors::*member;
  };

  // Declared order; also the on-disk tensor block order.
  static const std::vector<Field>& fields() {
    static const std::vector<Field> f = {
        {"word_table", &Tensors::word_table},   {"type_table", &Tensors::type_table},
        {"role_table", &Tensors::role_table},   {"action_table", &Tensors::action_table},
        {"f_Wi", &Tensors::f_Wi}, {"f_Ui", &Tensors::f_Ui}, {"f_bi", &Tensors::f_bi},
        {"f_Wf", &Tensors::f_Wf}, {"f_Uf", &Tensors::f_Uf}, {"f_bf", &Tensors::f_bf},
        {"f_Wg", &Tensors::f_Wg}, {"f_Ug", &Tensors::f_Ug}, {"f_bg", &Tensors::f_bg},
        {"f_Wo", &Tensors::f_Wo}, {"f_Uo", &Tensors::f_Uo}, {"f_bo", &Tensors::f_bo},
        {"b_Wi", &Tensors::b_Wi}, {"b_Ui", &Tensors::b_Ui}, {"b_bi", &Tensors::b_bi},
        {"b_Wf", &Tensors::b_Wf}, {"b_Uf", &Tensors::b_Uf}, {"b_bf", &Tensors::b_bf},
        {"b_Wg", &Tensors::b_Wg}, {"b_Ug", &Tensors::b_Ug}, {"b_bg", &Tensors::b_bg},
        {"b_Wo", &Tensors::b_Wo}, {"b_Uo", &Tensors::b_Uo}, {"b_bo", &Tensors::b_bo},
        {"hidden_W", &Tensors::hidden_W}, {"hidden_b", &Tensors::hidden_b},
        {"out_W", &Tensors::out_W},       {"out_b", &Tensors::out_b},
    };
    return f;
  }

  template <class F>
  void for_each(F&& fn) {
    for (const Field& f : fields()) fn(f.name, this->*(f.member));
  }
  template <class F>
  void for_each(F&& fn) const {
    for (const Field& f : fields()) fn(f.name, this->*(f.member));
  }

  // Same-shape zero copy; the gradient/moment container.
  Tensors zeros_like() const {
    Tensors out;
    for (const Field& f : fields())
      out.*(f.member) = Mat::Zero((this->*(f.member)).rows(), (this->*(f.member)).cols());
    return out;
  }

  void set_zero() {
    for (const Field& f : fields()) (this->*(f.member)).setZero();
  }
};

inline std::string ascii_lower(const std::string& s) {
  std::string out = s;
  for (char& c : out) c = (char)std::tolower((unsigned char)c);
  return out;
}

template <class S>
struct Model {
  using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

  ModelConfig cfg;
  // Inventories. words[0] is the trained UNK row; types[0]/roles[0] are the
  // trained NONE rows used by the sentinel buffer entry.
  std::vector<std::string> words, types, roles;
  std::unordered_map<std::string, int> word_ix, type_ix, role_ix;
  Tensors<S> t;

  int word_id(const std::string& w) const {
    auto it = word_ix.find(w);
    if (it != word_ix.end()) return it->second;
    it = word_ix.find(ascii_lower(w));
    if (it != word_ix.end()) return it->second;
    return 0; // UNK
  }

  int type_id(const std::string& label) const {
    auto it = type_ix.find(label);
    if (it == type_ix.end())
      fail(ErrorCode::Config, "mention type '" + label + "' is not in the model inventory");
    return it->second;
  }

  int role_id(const std::string& label) const {
    auto it = role_ix.find(label);
    if (it == role_ix.end())
      fail(ErrorCode::Config, "role '" + label + "' is not in the model inventory");
    return it->second;
  }

  void rebuild_indexes() {
    word_ix.clear();
    type_ix.clear();
    role_ix.clear();
    for (int i = 0; i < (int)words.size(); ++i) word_ix.emplace(words[i], i);
    for (int i = 0; i < (int)types.size(); ++i) type_ix.emplace(types[i], i);
    for (int i = 0; i < (int)roles.size(); ++i) role_ix.emplace(roles[i], i);
  }
};

namespace detail {

template <class S>
void init_tensor_shapes(Model<S>& m) {
  const ModelConfig& c = m.cfg;
  using Mat = typename Model<S>::Mat;
  int half = c.encoder_dim / 2;
  auto& t = m.t;
  t.word_table = Mat::Zero(c.word_dim, (int)m.words.size());
  t.type_table = Mat::Zero(c.type_dim, (int)m.types.size());
  t.role_table = Mat::Zero(c.role_dim, (int)m.roles.size());
  t.action_table = Mat::Zero(c.action_dim, 4);
  auto gate = [&](Mat& W, Mat& U, Mat& b) {
    W = Mat::Zero(half, c.word_dim);
    U = Mat::Zero(half, half);
    b = Mat::Zero(half, 1);
  };
  gate(t.f_Wi, t.f_Ui, t.f_bi); gate(t.f_Wf, t.f_Uf, t.f_bf);
  gate(t.f_Wg, t.f_Ug, t.f_bg); gate(t.f_Wo, t.f_Uo, t.f_bo);
  gate(t.b_Wi, t.b_Ui, t.b_bi); gate(t.b_Wf, t.b_Uf, t.b_bf);
  gate(t.b_Wg, t.b_Ug, t.b_bg); gate(t.b_Wo, t.b_Uo, t.b_bo);
  t.hidden_W = Mat::Zero(c.hidden_dim, c.relation_dim());
  t.hidden_b = Mat::Zero(c.hidden_dim, 1);
  t.out_W = Mat::Zero(1, c.event_dim());
  t.out_b = Mat::Zero(1, 1);
}

} // namespace detail

// Builds a randomly initialised model. Embedding tables draw from
// N(0, 0.1^2), weight matrices from N(0, 1/fan_in), biases start at zero.
// `pretrained` (word -> vector), when given, overrides matching word rows.
template <class S>
Model<S> init_model(const ModelConfig& cfg, std::vector<std::string> words,
                    std::vector<std::string> types, std::vector<std::string> roles,
                    const std::unordered_map<std::string, std::vector<float>>* pretrained =
                        nullptr) {
  cfg.validate();
  if (words.empty() || words[0] != "<unk>") words.insert(words.begin(), "<unk>");
  if (types.empty() || types[0] != "<none>") types.insert(types.begin(), "<none>");
  if (roles.empty() || roles[0] != "<none>") roles.insert(roles.begin(), "<none>");

  Model<S> m;
  m.cfg = cfg;
  m.words = std::move(words);
  m.types = std::move(types);
  m.roles = std::move(roles);
  m.rebuild_indexes();
  detail::init_tensor_shapes(m);

  std::mt19937_64 rng(cfg.seed);
  // Embedding scales are uneven on purpose: the action and role rows are a
  // thin slice of the relation embedding, so they start loud enough for the
  // readout to tell actions apart from the first epochs.
  auto table_sigma = [](const std::string& n) {
    if (n == "action_table") return 2.0;
    if (n == "role_table" || n == "type_table") return 1.0;
    return 0.03; // word_table
  };
  m.t.for_each([&](const char* name, typename Model<S>::Mat& mat) {
    std::string n(name);
    bool is_table = n.find("table") != std::string::npos;
    bool is_bias = n.size() >= 2 && n[n.size() - 2] == 'b' && mat.cols() == 1;
    if (n == "hidden_b" || n == "out_b") is_bias = true;
    if (n == "out_b") {
      // start near the expansion-level positive rate of the transition
      // system; keeps the first updates off the class-prior direction
      mat(0, 0) = (S)-1.5;
      return;
    }
    if (is_bias && !is_table) return; // biases stay zero
    if (is_table) {
      std::normal_distribution<double> table_dist(0.0, table_sigma(n));
      for (int j = 0; j < mat.cols(); ++j)
        for (int i = 0; i < mat.rows(); ++i) mat(i, j) = (S)table_dist(rng);
    } else {
      std::normal_distribution<double> w_dist(0.0, 2.0 / std::sqrt((double)mat.cols()));
      for (int j = 0; j < mat.cols(); ++j)
        for (int i = 0; i < mat.rows(); ++i) mat(i, j) = (S)w_dist(rng);
    }
  });

  if (pretrained) {
    for (const auto& [word, vec] : *pretrained) {
      auto it = m.word_ix.find(word);
      if (it == m.word_ix.end()) continue;
      if ((int)vec.size() != cfg.word_dim)
        fail(ErrorCode::Config, "pretrained vector for '" + word + "' has dimension " +
                                    std::to_string(vec.size()) + ", expected " +
                                    std::to_string(cfg.word_dim));
      for (int i = 0; i < cfg.word_dim; ++i) m.t.word_table(i, it->second) = (S)vec[i];
    }
  }
  return m;
}

static_assert(std::endian::native == std::endian::little,
              "model files are little-endian; big-endian hosts are unsupported");

// Binary layout: magic, format version, JSON header (dims, inventories,
// tensor manifest), then dense little-endian float32 blocks in declared
// order, column-major.
template <class S>
void save_model(const Model<S>& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write model file '" + path + "'");

  nlohmann::json meta;
  meta["dims"] = {{"word", m.cfg.word_dim},     {"encoder", m.cfg.encoder_dim},
                  {"role", m.cfg.role_dim},     {"type", m.cfg.type_dim},
                  {"action", m.cfg.action_dim}, {"hidden", m.cfg.hidden_dim}};
  meta["seed"] = m.cfg.seed;
  meta["words"] = m.words;
  meta["types"] = m.types;
  meta["roles"] = m.roles;
  nlohmann::json manifest = nlohmann::json::array();
  m.t.for_each([&](const char* name, const auto& mat) {
    manifest.push_back({{"name", name}, {"rows", mat.rows()}, {"cols", mat.cols()}});
  });
  meta["tensors"] = manifest;
  std::string header = meta.dump();

  out.write(kModelMagic, 4);
  uint32_t version = kModelFormatVersion;
  out.write(reinterpret_cast<const char*>(&version), 4);
  uint64_t hlen = header.size();
  out.write(reinterpret_cast<const char*>(&hlen), 8);
  out.write(header.data(), (std::streamsize)header.size());

  std::vector<float> buf;
  m.t.for_each([&](const char*, const auto& mat) {
    buf.resize((size_t)mat.size());
    for (Eigen::Index j = 0, k = 0; j < mat.cols(); ++j)
      for (Eigen::Index i = 0; i < mat.rows(); ++i) buf[(size_t)k++] = (float)mat(i, j);
    out.write(reinterpret_cast<const char*>(buf.data()),
              (std::streamsize)(buf.size() * sizeof(float)));
  });
  if (!out) fail(ErrorCode::Io, "short write to model file '" + path + "'");
}

template <class S>
Model<S> load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open model file '" + path + "'");

  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kModelMagic, 4) != 0)
    fail(ErrorCode::Format, "'" + path + "' is not a model file (bad magic bytes)");
  uint32_t version = 0;
  if (!in.read(reinterpret_cast<char*>(&version), 4))
    fail(ErrorCode::Format, "truncated model file '" + path + "'");
  if (version > kModelFormatVersion)
    fail(ErrorCode::Version, "model file version " + std::to_string(version) +
                                 " is newer than supported version " +
                                 std::to_string(kModelFormatVersion));
  uint64_t hlen = 0;
  if (!in.read(reinterpret_cast<char*>(&hlen), 8))
    fail(ErrorCode::Format, "truncated model file '" + path + "'");
  std::string header(hlen, '\0');
  if (!in.read(header.data(), (std::streamsize)hlen))
    fail(ErrorCode::Format, "truncated model file '" + path + "'");

  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("bad model header: ") + e.what());
  }

  Model<S> m;
  try {
    m.cfg.word_dim = meta.at("dims").at("word").get<int>();
    m.cfg.encoder_dim = meta.at("dims").at("encoder").get<int>();
    m.cfg.role_dim = meta.at("dims").at("role").get<int>();
    m.cfg.type_dim = meta.at("dims").at("type").get<int>();
    m.cfg.action_dim = meta.at("dims").at("action").get<int>();
    m.cfg.hidden_dim = meta.at("dims").at("hidden").get<int>();
    m.cfg.seed = meta.at("seed").get<uint64_t>();
    m.words = meta.at("words").get<std::vector<std::string>>();
    m.types = meta.at("types").get<std::vector<std::string>>();
    m.roles = meta.at("roles").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("bad model header: ") + e.what());
  }
  m.cfg.validate();
  m.rebuild_indexes();
  detail::init_tensor_shapes(m);

  auto manifest = meta.at("tensors");
  size_t idx = 0;
  std::vector<float> buf;
  bool ok = true;
  m.t.for_each([&](const char* name, auto& mat) {
    if (!ok) return;
    if (idx >= manifest.size()) { ok = false; return; }
    const auto& entry = manifest[idx++];
    if (entry.at("name").template get<std::string>() != name ||
        entry.at("rows").template get<Eigen::Index>() != mat.rows() ||
        entry.at("cols").template get<Eigen::Index>() != mat.cols()) {
      ok = false;
      return;
    }
    buf.resize((size_t)mat.size());
    if (!in.read(reinterpret_cast<char*>(buf.data()),
                 (std::streamsize)(buf.size() * sizeof(float)))) {
      ok = false;
      return;
    }
    for (Eigen::Index j = 0, k = 0; j < mat.cols(); ++j)
      for (Eigen::Index i = 0; i < mat.rows(); ++i) mat(i, j) = (S)buf[(size_t)k++];
  });
  if (!ok || idx != manifest.size())
    fail(ErrorCode::Format, "model file '" + path + "' does not match its tensor manifest");
  return m;
}

} // namespace evdag
