#include "qenc/encoder.hpp"

#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace qenc {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

Tape::Id ParamIds::of(const std::string& name) const {
  for (const auto& [n, id] : groups)
    if (n == name) return id;
  throw std::logic_error("unknown parameter group: " + name);
}

ParamIds register_parameters(Tape& tape, const ModelParameters& params) {
  ParamIds ids;
  params.for_each_group([&](const std::string& name, const DenseArray& a) {
    ids.groups.emplace_back(name, tape.leaf_ref(&a));
  });
  return ids;
}

namespace {

struct GruIds {
  Tape::Id wz, uz, bz, wr, ur, br, wn, un, bn;
};

GruIds gru_ids(const ParamIds& ids, const char* prefix) {
  std::string pre(prefix);
  return GruIds{ids.of(pre + "_wz"), ids.of(pre + "_uz"), ids.of(pre + "_bz"),
                ids.of(pre + "_wr"), ids.of(pre + "_ur"), ids.of(pre + "_br"),
                ids.of(pre + "_wn"), ids.of(pre + "_un"), ids.of(pre + "_bn")};
}

// gated blend: sigmoid(gate·x) * relu(proj·x) + (1 - sigmoid(gate·x)) * x
Tape::Id highway(Tape& t, Tape::Id gate_w, Tape::Id proj_w, Tape::Id x) {
  Tape::Id g = t.sigmoid(t.matvec(gate_w, x));
  Tape::Id p = t.relu(t.matvec(proj_w, x));
  return t.add(t.mul(g, p), t.mul(t.one_minus(g), x));
}

// One GRU direction; returns the last hidden state. The reset gate is
// applied to the previous state inside the candidate; the update gate
// carries the previous state.
Tape::Id gru_last_state(Tape& t, const GruIds& g, std::span<const Tape::Id> seq,
                        std::size_t hidden) {
  Tape::Id h = t.leaf(DenseArray::zeros({hidden}));
  for (Tape::Id x : seq) {
    Tape::Id z = t.sigmoid(t.add(t.add(t.matvec(g.wz, x), t.matvec(g.uz, h)), g.bz));
    Tape::Id r = t.sigmoid(t.add(t.add(t.matvec(g.wr, x), t.matvec(g.ur, h)), g.br));
    Tape::Id n = t.tanh(t.add(t.add(t.matvec(g.wn, x), t.matvec(g.un, t.mul(r, h))), g.bn));
    h = t.add(t.mul(t.one_minus(z), n), t.mul(z, h));
  }
  return h;
}

}  // namespace

Tape::Id term_on_tape(Tape& tape, const ParamIds& ids, const ModelParameters& params,
                      const std::string& token, std::uint32_t word_id) {
  const ModelDims& d = params.dims;

  // word path
  Tape::Id emb = tape.row(ids.of("word_emb"), word_id);
  Tape::Id word = highway(tape, ids.of("word_gate"), ids.of("word_proj"), emb);

  // char path: width-W convolution over character embeddings, max-pooled
  auto cids = char_ids(token, params.vocab, d.char_window);
  std::vector<Tape::Id> char_rows;
  char_rows.reserve(cids.size());
  Tape::Id char_table = ids.of("char_emb");
  for (std::uint32_t cid : cids) char_rows.push_back(tape.row(char_table, cid));

  const std::size_t positions = cids.size() - d.char_window + 1;
  std::vector<Tape::Id> conv_out;
  conv_out.reserve(positions);
  Tape::Id conv_w = ids.of("char_conv");
  for (std::size_t pos = 0; pos < positions; ++pos) {
    std::span<const Tape::Id> window(char_rows.data() + pos, d.char_window);
    conv_out.push_back(tape.matvec(conv_w, tape.concat(window)));
  }
  Tape::Id pooled = tape.max_over_positions(tape.stack_rows(conv_out));
  Tape::Id chars = highway(tape, ids.of("char_gate1"), ids.of("char_proj1"), pooled);
  chars = highway(tape, ids.of("char_gate2"), ids.of("char_proj2"), chars);

  return tape.concat(word, chars);
}

Tape::Id encode_on_tape(Tape& tape, const ParamIds& ids, const ModelParameters& params,
                        const TokenizedQuery& query) {
  if (query.tokens.empty()) throw std::invalid_argument("encode: empty token list");
  const ModelDims& d = params.dims;

  std::vector<Tape::Id> terms;
  terms.reserve(query.tokens.size());
  for (std::size_t i = 0; i < query.tokens.size(); ++i)
    terms.push_back(term_on_tape(tape, ids, params, query.tokens[i], query.ids[i]));

  std::vector<Tape::Id> reversed(terms.rbegin(), terms.rend());
  Tape::Id h_fwd = gru_last_state(tape, gru_ids(ids, "gru_fwd"), terms, d.gru_hidden);
  Tape::Id h_bwd = gru_last_state(tape, gru_ids(ids, "gru_bwd"), reversed, d.gru_hidden);
  Tape::Id bow = tape.mean_over_positions(tape.stack_rows(terms));

  Tape::Id cat = tape.concat(h_bwd, h_fwd, bow);
  return tape.tanh(tape.add(cat, tape.relu(tape.matvec(ids.of("residual"), cat))));
}

DenseArray encode_query(const ModelParameters& params, const TokenizedQuery& query) {
  Tape tape;
  ParamIds ids = register_parameters(tape, params);
  return tape.value(encode_on_tape(tape, ids, params, query));
}

std::vector<DenseArray> encode_batch(const ModelParameters& params,
                                     std::span<const TokenizedQuery> queries,
                                     ExecPolicy policy) {
  std::vector<DenseArray> out(queries.size());
  std::vector<std::string> errors(queries.size());
  const std::int64_t n = static_cast<std::int64_t>(queries.size());
  if (policy == ExecPolicy::kParallel) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8)
#endif
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        out[i] = encode_query(params, queries[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  } else {
    for (std::int64_t i = 0; i < n; ++i) {
      try {
        out[i] = encode_query(params, queries[i]);
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  }
  for (std::int64_t i = 0; i < n; ++i)
    if (!errors[i].empty())
      throw std::runtime_error("encode_batch: query " + std::to_string(i) + ": " + errors[i]);
  return out;
}

std::vector<float> to_f32(const DenseArray& a) {
  std::vector<float> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = static_cast<float>(a.data[i]);
  return out;
}

}  // namespace qenc
