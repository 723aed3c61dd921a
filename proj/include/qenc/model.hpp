#pragma once

// Model parameters: word embedding + highway, character CNN + two highway
// layers, bi-directional GRU and the residual mix weight, plus the binary
// checkpoint format.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>

#include "qenc/array.hpp"
#include "qenc/vocab.hpp"

namespace qenc {

struct ModelDims {
  std::size_t word_dim = 32;       // word embedding width
  std::size_t char_dim = 16;       // character embedding width
  std::size_t char_filters = 16;   // CNN output channels
  std::size_t char_window = 5;     // CNN window width
  std::size_t gru_hidden = 48;     // per-direction GRU state size
  std::size_t vocab = 0;           // word vocabulary size incl. pad/oov
  std::size_t chars = 0;           // char vocabulary size incl. pad/unk

  std::size_t term_dim() const { return word_dim + char_filters; }
  std::size_t cat_dim() const { return 2 * gru_hidden + term_dim(); }

  // full-scale production preset
  static ModelDims full_scale() {
    ModelDims d;
    d.word_dim = 200;
    d.char_dim = 200;
    d.char_filters = 100;
    d.char_window = 5;
    d.gru_hidden = 512;
    return d;
  }
};

struct GruCell {
  DenseArray wz, uz, bz;  // update gate
  DenseArray wr, ur, br;  // reset gate
  DenseArray wn, un, bn;  // candidate
};

struct ModelParameters {
  ModelDims dims;
  Vocabulary vocab;

  DenseArray word_emb;    // [V, word_dim]
  DenseArray word_gate;   // [word_dim, word_dim]
  DenseArray word_proj;   // [word_dim, word_dim]

  DenseArray char_emb;    // [C, char_dim]
  DenseArray char_conv;   // [filters, window*char_dim]
  DenseArray char_gate1, char_proj1;  // [filters, filters]
  DenseArray char_gate2, char_proj2;  // [filters, filters]

  GruCell gru_fwd, gru_bwd;
  DenseArray residual;    // [cat_dim, cat_dim]

  // Visits every parameter group in the declared (serialization) order.
  void for_each_group(const std::function<void(const std::string&, DenseArray&)>& fn);
  void for_each_group(const std::function<void(const std::string&, const DenseArray&)>& fn) const;

  bool all_finite() const;
};

// Uniform +-sqrt(6/(fan_in+fan_out)) for weight matrices, +-0.05 for the
// embedding tables, zero GRU biases.
ModelParameters init_parameters(const ModelDims& dims, Vocabulary vocab, std::uint64_t seed);

// Checkpoint file: magic, version, dimension header, vocabulary blocks
// (length-prefixed UTF-8), then parameter arrays in for_each_group order as
// little-endian float32. The loader validates dimension consistency.
void save_checkpoint(const ModelParameters& params, const std::filesystem::path& path);
ModelParameters load_checkpoint(const std::filesystem::path& path);

}  // namespace qenc
