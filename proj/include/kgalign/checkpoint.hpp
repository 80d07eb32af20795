#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "kgalign/error.hpp"
#include "kgalign/hgcn.hpp"
#include "kgalign/matrix.hpp"

namespace kgalign {

enum class Stage { Preliminary, Joint };

inline const char* to_string(Stage s) { return s == Stage::Preliminary ? "preliminary" : "joint"; }

/// Everything needed to resume scoring: model config, tensors, and where
/// training stood. Randomness is fully derived from rng_seed via labeled
/// streams, so the seed is the complete generator state.
template <typename T>
struct Checkpoint {
  HgcnConfig config;
  ModelParams<T> params;
  Stage stage = Stage::Preliminary;
  std::size_t epoch = 0;
  std::uint64_t rng_seed = 0;
};

// Layout (text, one record per line):
//
//   kgalign-checkpoint 1
//   precision <32|64>
//   stage <preliminary|joint>
//   epoch <n>
//   rng_seed <n>
//   num_layers <L>
//   dims <d0> ... <dL>
//   relation_dim <m>
//   gate_bias_init <x>
//   highway <0|1>
//   relu_last_layer <0|1>
//   tensor <name> <rows> <cols>
//   <row values, space separated, shortest round-trip decimal>   (rows lines)
//   ...
//   end
//
// Tensors appear in ModelParams::tensors() order; WR is present only after
// the joint stage has started.

inline constexpr const char* kCheckpointMagic = "kgalign-checkpoint";
inline constexpr int kCheckpointVersion = 1;

namespace detail {
template <typename T>
void write_real(std::ostream& out, T v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, ptr - buf);
}

template <typename T>
T read_real(const std::string& s) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("checkpoint: bad number '" + s + "'");
  return v;
}
}  // namespace detail

template <typename T>
void write_checkpoint(std::ostream& out, const Checkpoint<T>& ckpt) {
  const auto& c = ckpt.config;
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  out << "precision " << (std::is_same_v<T, float> ? 32 : 64) << '\n';
  out << "stage " << to_string(ckpt.stage) << '\n';
  out << "epoch " << ckpt.epoch << '\n';
  out << "rng_seed " << ckpt.rng_seed << '\n';
  out << "num_layers " << c.num_layers << '\n';
  out << "dims";
  for (auto d : c.dims) out << ' ' << d;
  out << '\n';
  out << "relation_dim " << c.relation_dim << '\n';
  out << "gate_bias_init ";
  detail::write_real(out, c.gate_bias_init);
  out << '\n';
  out << "highway " << (c.highway ? 1 : 0) << '\n';
  out << "relu_last_layer " << (c.relu_last_layer ? 1 : 0) << '\n';
  auto params = ckpt.params;
  for (const auto& [name, tensor] : params.tensors()) {
    out << "tensor " << name << ' ' << tensor->rows() << ' ' << tensor->cols() << '\n';
    for (std::size_t r = 0; r < tensor->rows(); ++r) {
      const auto row = tensor->row(r);
      for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) out << ' ';
        detail::write_real(out, row[i]);
      }
      out << '\n';
    }
  }
  out << "end\n";
}

/// Reads a checkpoint written at either precision and converts to T.
template <typename T>
Checkpoint<T> read_checkpoint(std::istream& in) {
  std::string line;
  auto next = [&]() -> std::istringstream {
    if (!std::getline(in, line)) throw ParseError("checkpoint: unexpected end of file");
    return std::istringstream(line);
  };
  auto expect_key = [&](std::istringstream& ss, const char* key) {
    std::string k;
    ss >> k;
    if (k != key) throw ParseError(std::string("checkpoint: expected '") + key + "', got '" + k + "'");
  };

  Checkpoint<T> ckpt;
  {
    auto ss = next();
    std::string magic;
    int version = 0;
    ss >> magic >> version;
    if (magic != kCheckpointMagic) throw ParseError("not a kgalign checkpoint");
    if (version != kCheckpointVersion) throw ParseError("unsupported checkpoint version " + std::to_string(version));
  }
  int precision = 0;
  {
    auto ss = next();
    expect_key(ss, "precision");
    ss >> precision;
    if (precision != 32 && precision != 64) throw ParseError("checkpoint: bad precision");
  }
  {
    auto ss = next();
    expect_key(ss, "stage");
    std::string s;
    ss >> s;
    if (s == "preliminary")
      ckpt.stage = Stage::Preliminary;
    else if (s == "joint")
      ckpt.stage = Stage::Joint;
    else
      throw ParseError("checkpoint: unknown stage '" + s + "'");
  }
  {
    auto ss = next();
    expect_key(ss, "epoch");
    ss >> ckpt.epoch;
  }
  {
    auto ss = next();
    expect_key(ss, "rng_seed");
    ss >> ckpt.rng_seed;
  }
  auto& c = ckpt.config;
  c.rng_seed = ckpt.rng_seed;
  {
    auto ss = next();
    expect_key(ss, "num_layers");
    ss >> c.num_layers;
  }
  {
    auto ss = next();
    expect_key(ss, "dims");
    c.dims.clear();
    std::size_t d = 0;
    while (ss >> d) c.dims.push_back(d);
  }
  {
    auto ss = next();
    expect_key(ss, "relation_dim");
    ss >> c.relation_dim;
  }
  {
    auto ss = next();
    expect_key(ss, "gate_bias_init");
    std::string v;
    ss >> v;
    c.gate_bias_init = detail::read_real<double>(v);
  }
  {
    auto ss = next();
    expect_key(ss, "highway");
    int v = 0;
    ss >> v;
    c.highway = v != 0;
  }
  {
    auto ss = next();
    expect_key(ss, "relu_last_layer");
    int v = 0;
    ss >> v;
    c.relu_last_layer = v != 0;
  }
  c.validate();

  ckpt.params.layers.resize(c.num_layers);
  while (true) {
    auto ss = next();
    std::string key, name;
    ss >> key;
    if (key == "end") break;
    if (key != "tensor") throw ParseError("checkpoint: expected 'tensor' or 'end', got '" + key + "'");
    std::size_t rows = 0, cols = 0;
    ss >> name >> rows >> cols;
    DenseMatrix<T> m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
      auto rs = next();
      std::string tok;
      for (std::size_t i = 0; i < cols; ++i) {
        if (!(rs >> tok)) throw ParseError("checkpoint: short row in tensor " + name);
        m(r, i) = precision == 32 ? static_cast<T>(detail::read_real<float>(tok))
                                  : static_cast<T>(detail::read_real<double>(tok));
      }
    }
    if (name == "WR") {
      ckpt.params.relation_transform = std::move(m);
      continue;
    }
    const auto prefix_len = name.rfind('T') == 1 ? 2 : 1;  // "WT3"/"bT3" vs "W3"
    std::size_t layer = 0;
    try {
      layer = std::stoul(name.substr(prefix_len));
    } catch (const std::exception&) {
      throw ParseError("checkpoint: bad tensor name '" + name + "'");
    }
    if (layer >= c.num_layers) throw ParseError("checkpoint: tensor " + name + " names a missing layer");
    auto& lp = ckpt.params.layers[layer];
    if (name[0] == 'W' && prefix_len == 1)
      lp.weight = std::move(m);
    else if (name[0] == 'W')
      lp.gate_weight = std::move(m);
    else if (name[0] == 'b')
      lp.gate_bias = std::move(m);
    else
      throw ParseError("checkpoint: unknown tensor '" + name + "'");
  }
  for (std::size_t l = 0; l < c.num_layers; ++l) {
    const auto& lp = ckpt.params.layers[l];
    if (lp.weight.rows() != c.dims[l] || lp.weight.cols() != c.dims[l + 1])
      throw ParseError("checkpoint: W" + std::to_string(l) + " has the wrong shape");
    if (c.highway && (lp.gate_weight.rows() != c.dims[l] || lp.gate_bias.cols() != c.dims[l]))
      throw ParseError("checkpoint: gate tensors of layer " + std::to_string(l) + " missing or misshaped");
  }
  return ckpt;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, const Checkpoint<T>& ckpt) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

template <typename T>
Checkpoint<T> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  return read_checkpoint<T>(in);
}

}  // namespace kgalign
