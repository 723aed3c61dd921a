#include "qenc/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace qenc {

namespace {
// 1/(1+exp(x)) == sigmoid(-x)
Real logistic_of_neg(Real x) { return 1.0 / (1.0 + std::exp(x)); }
}  // namespace

Real coclick_loss(Real cos_pos, Real cos_neg) {
  return logistic_of_neg(cos_pos) - logistic_of_neg(cos_neg);
}

Real paraphrase_loss(Real cos, int y) {
  if (y != 1 && y != -1)
    throw std::invalid_argument("paraphrase_loss: label must be +1 or -1, got " + std::to_string(y));
  return logistic_of_neg(static_cast<Real>(y) * cos);
}

Tape::Id coclick_loss_on_tape(Tape& tape, Tape::Id cos_pos, Tape::Id cos_neg) {
  Tape::Id lp = tape.sigmoid(tape.scale(cos_pos, -1.0));
  Tape::Id ln = tape.sigmoid(tape.scale(cos_neg, -1.0));
  return tape.sub(lp, ln);
}

Tape::Id paraphrase_loss_on_tape(Tape& tape, Tape::Id cos, int y) {
  if (y != 1 && y != -1)
    throw std::invalid_argument("paraphrase_loss: label must be +1 or -1, got " + std::to_string(y));
  return tape.sigmoid(tape.scale(cos, -static_cast<Real>(y)));
}

}  // namespace qenc
