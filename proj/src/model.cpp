#include "qenc/model.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "qenc/util.hpp"

namespace qenc {

namespace {

constexpr char kMagic[8] = {'Q', 'E', 'N', 'C', 'M', 'D', 'L', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename Params, typename Fn>
void visit_groups(Params& p, Fn&& fn) {
  fn("word_emb", p.word_emb);
  fn("word_gate", p.word_gate);
  fn("word_proj", p.word_proj);
  fn("char_emb", p.char_emb);
  fn("char_conv", p.char_conv);
  fn("char_gate1", p.char_gate1);
  fn("char_proj1", p.char_proj1);
  fn("char_gate2", p.char_gate2);
  fn("char_proj2", p.char_proj2);
  auto gru = [&](const char* prefix, auto& cell) {
    std::string pre(prefix);
    fn(pre + "_wz", cell.wz);
    fn(pre + "_uz", cell.uz);
    fn(pre + "_bz", cell.bz);
    fn(pre + "_wr", cell.wr);
    fn(pre + "_ur", cell.ur);
    fn(pre + "_br", cell.br);
    fn(pre + "_wn", cell.wn);
    fn(pre + "_un", cell.un);
    fn(pre + "_bn", cell.bn);
  };
  gru("gru_fwd", p.gru_fwd);
  gru("gru_bwd", p.gru_bwd);
  fn("residual", p.residual);
}

DenseArray xavier(Rng& rng, std::size_t rows, std::size_t cols) {
  const Real bound = std::sqrt(6.0 / static_cast<Real>(rows + cols));
  DenseArray a = DenseArray::zeros({rows, cols});
  for (Real& v : a.data) v = rng.uniform(-bound, bound);
  return a;
}

DenseArray embedding_init(Rng& rng, std::size_t rows, std::size_t cols) {
  DenseArray a = DenseArray::zeros({rows, cols});
  for (Real& v : a.data) v = rng.uniform(-0.05, 0.05);
  return a;
}

}  // namespace

void ModelParameters::for_each_group(
    const std::function<void(const std::string&, DenseArray&)>& fn) {
  visit_groups(*this, fn);
}

void ModelParameters::for_each_group(
    const std::function<void(const std::string&, const DenseArray&)>& fn) const {
  visit_groups(*this, fn);
}

bool ModelParameters::all_finite() const {
  bool ok = true;
  for_each_group([&](const std::string&, const DenseArray& a) { ok = ok && a.all_finite(); });
  return ok;
}

ModelParameters init_parameters(const ModelDims& dims_in, Vocabulary vocab, std::uint64_t seed) {
  ModelDims dims = dims_in;
  dims.vocab = vocab.size();
  dims.chars = vocab.char_size();
  if (dims.word_dim == 0 || dims.char_dim == 0 || dims.char_filters == 0 ||
      dims.char_window == 0 || dims.gru_hidden == 0)
    throw std::invalid_argument("init_parameters: all dimensions must be positive");

  Rng rng(seed);
  ModelParameters p;
  p.dims = dims;
  p.vocab = std::move(vocab);

  p.word_emb = embedding_init(rng, dims.vocab, dims.word_dim);
  p.word_gate = xavier(rng, dims.word_dim, dims.word_dim);
  p.word_proj = xavier(rng, dims.word_dim, dims.word_dim);

  p.char_emb = embedding_init(rng, dims.chars, dims.char_dim);
  p.char_conv = xavier(rng, dims.char_filters, dims.char_window * dims.char_dim);
  p.char_gate1 = xavier(rng, dims.char_filters, dims.char_filters);
  p.char_proj1 = xavier(rng, dims.char_filters, dims.char_filters);
  p.char_gate2 = xavier(rng, dims.char_filters, dims.char_filters);
  p.char_proj2 = xavier(rng, dims.char_filters, dims.char_filters);

  const std::size_t h = dims.gru_hidden;
  const std::size_t t = dims.term_dim();
  auto init_cell = [&](GruCell& cell) {
    cell.wz = xavier(rng, h, t);
    cell.uz = xavier(rng, h, h);
    cell.bz = DenseArray::zeros({h});
    cell.wr = xavier(rng, h, t);
    cell.ur = xavier(rng, h, h);
    cell.br = DenseArray::zeros({h});
    cell.wn = xavier(rng, h, t);
    cell.un = xavier(rng, h, h);
    cell.bn = DenseArray::zeros({h});
  };
  init_cell(p.gru_fwd);
  init_cell(p.gru_bwd);

  p.residual = xavier(rng, dims.cat_dim(), dims.cat_dim());
  return p;
}

void save_checkpoint(const ModelParameters& params, const std::filesystem::path& path) {
  atomic_write(path, [&](std::ostream& os) {
    os.write(kMagic, 8);
    write_u32(os, kVersion);
    const ModelDims& d = params.dims;
    write_u32(os, static_cast<std::uint32_t>(d.word_dim));
    write_u32(os, static_cast<std::uint32_t>(d.char_dim));
    write_u32(os, static_cast<std::uint32_t>(d.char_filters));
    write_u32(os, static_cast<std::uint32_t>(d.char_window));
    write_u32(os, static_cast<std::uint32_t>(d.gru_hidden));
    write_u32(os, static_cast<std::uint32_t>(d.vocab));
    write_u32(os, static_cast<std::uint32_t>(d.chars));
    auto write_block = [&](const std::vector<std::string>& rows) {
      for (const auto& s : rows) {
        write_u32(os, static_cast<std::uint32_t>(s.size()));
        write_bytes(os, s);
      }
    };
    write_block(params.vocab.token_rows());
    write_block(params.vocab.char_rows());
    params.for_each_group([&](const std::string&, const DenseArray& a) {
      for (Real v : a.data) write_f32(os, static_cast<float>(v));
    });
    write_u32(os, 0x454E4421);  // end marker
  });
}

ModelParameters load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open checkpoint: " + path.string());
  char magic[8];
  is.read(magic, 8);
  if (!is || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("checkpoint: bad magic bytes in " + path.string());
  if (read_u32(is) != kVersion) throw std::runtime_error("checkpoint: unsupported version");

  ModelDims d;
  d.word_dim = read_u32(is);
  d.char_dim = read_u32(is);
  d.char_filters = read_u32(is);
  d.char_window = read_u32(is);
  d.gru_hidden = read_u32(is);
  d.vocab = read_u32(is);
  d.chars = read_u32(is);
  if (d.word_dim == 0 || d.char_dim == 0 || d.char_filters == 0 || d.char_window == 0 ||
      d.gru_hidden == 0 || d.vocab < 2 || d.chars < 2)
    throw std::runtime_error("checkpoint: inconsistent dimension header");

  auto read_block = [&](std::size_t n) {
    std::vector<std::string> rows;
    rows.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t len = read_u32(is);
      if (len > (1u << 20)) throw std::runtime_error("checkpoint: token length out of range");
      std::string s(len, '\0');
      is.read(s.data(), len);
      if (!is) throw std::runtime_error("checkpoint: truncated vocabulary block");
      rows.push_back(std::move(s));
    }
    return rows;
  };
  auto tokens = read_block(d.vocab);
  auto chars = read_block(d.chars);

  ModelParameters p = init_parameters(d, Vocabulary::from_rows(tokens, chars), 0);
  p.for_each_group([&](const std::string& name, DenseArray& a) {
    for (Real& v : a.data) v = static_cast<Real>(read_f32(is));
    if (!a.all_finite())
      throw std::runtime_error("checkpoint: non-finite values in group " + name);
  });
  if (read_u32(is) != 0x454E4421) throw std::runtime_error("checkpoint: missing end marker");
  return p;
}

}  // namespace qenc
