#pragma once

// The encoder forward pass.
//
// Per term: word path = highway(word_emb[id]); char path = two highway
// layers over max-pooled width-W character convolutions; term vector is
// their concatenation. Per query: a one-layer bi-directional GRU over the
// term vectors plus their mean (bag of words), concatenated as
//   q_cat = h_backward ⌢ h_forward ⌢ mean(terms)
// and mixed through a residual layer: encoding = tanh(q_cat + relu(W q_cat)).
// Every element of the encoding therefore lies strictly in (-1, 1).

#include <span>
#include <vector>

#include "qenc/model.hpp"
#include "qenc/parallel.hpp"
#include "qenc/tape.hpp"

namespace qenc {

// Tape ids of every registered parameter group, in for_each_group order.
struct ParamIds {
  std::vector<std::pair<std::string, Tape::Id>> groups;
  Tape::Id of(const std::string& name) const;
};

// Registers all parameter arrays as external leaves (no copy).
ParamIds register_parameters(Tape& tape, const ModelParameters& params);

// Term embedding of one token: word path ⌢ char path, length term_dim().
Tape::Id term_on_tape(Tape& tape, const ParamIds& ids, const ModelParameters& params,
                      const std::string& token, std::uint32_t word_id);

// Full query encoding, length cat_dim(). Throws on an empty token list.
Tape::Id encode_on_tape(Tape& tape, const ParamIds& ids, const ModelParameters& params,
                        const TokenizedQuery& query);

// Inference-mode single query encoding on a scratch tape.
DenseArray encode_query(const ModelParameters& params, const TokenizedQuery& query);

// Batch encoding; elementwise identical to a loop over encode_query in both
// policies. Per-query failures are reported with the query index.
std::vector<DenseArray> encode_batch(const ModelParameters& params,
                                     std::span<const TokenizedQuery> queries,
                                     ExecPolicy policy = ExecPolicy::kParallel);

// Convenience: f32 copies for the ANN index / encoding files.
std::vector<float> to_f32(const DenseArray& a);

}  // namespace qenc
