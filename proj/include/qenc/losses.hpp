#pragma once

// Pairwise co-click loss and the paraphrase logistic loss, as plain scalar
// functions and as tape nodes (the training path).

#include "qenc/tape.hpp"

namespace qenc {

// 1/(1+exp(cos_pos)) - 1/(1+exp(cos_neg)); strictly decreasing in cos_pos,
// strictly increasing in cos_neg.
Real coclick_loss(Real cos_pos, Real cos_neg);

// 1/(1+exp(y*cos)) for y in {+1,-1}; throws otherwise.
Real paraphrase_loss(Real cos, int y);

Tape::Id coclick_loss_on_tape(Tape& tape, Tape::Id cos_pos, Tape::Id cos_neg);
Tape::Id paraphrase_loss_on_tape(Tape& tape, Tape::Id cos, int y);

}  // namespace qenc
