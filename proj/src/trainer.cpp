#include "qenc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "qenc/encoder.hpp"

namespace qenc {

std::size_t nce_select_negative(std::size_t anchor,
                                std::span<const std::uint32_t> groups,
                                std::span<const DenseArray> encodings,
                                std::span<const char> eligible) {
  if (anchor >= encodings.size())
    throw std::invalid_argument("nce_select_negative: anchor index out of range");
  const std::uint32_t anchor_group = groups[anchor];
  const auto& a = encodings[anchor].data;
  bool found = false;
  std::size_t best = 0;
  Real best_cos = 0.0;
  for (std::size_t j = 0; j < encodings.size(); ++j) {
    if (groups[j] == anchor_group) continue;
    if (!eligible.empty() && !eligible[j]) continue;
    const Real c = cosine_value(a, encodings[j].data);
    if (!found || c > best_cos) {
      found = true;
      best = j;
      best_cos = c;
    }
  }
  if (!found)
    throw std::runtime_error("nce_select_negative: no candidate outside the anchor's group");
  return best;
}

namespace {

struct TokGroup {
  std::vector<TokenizedQuery> queries;
  std::uint32_t id = 0;
};

std::vector<TokGroup> tokenize_groups(const std::vector<CoClickGroup>& corpus,
                                      const Vocabulary& vocab) {
  std::vector<TokGroup> out;
  std::uint32_t next_id = 0;
  for (const CoClickGroup& g : corpus) {
    TokGroup tg;
    tg.id = next_id++;
    for (const std::string& q : g.queries) {
      try {
        tg.queries.push_back(tokenize(q, vocab));
      } catch (const std::invalid_argument&) {
        // unreadable query, drop it
      }
    }
    if (tg.queries.size() >= 2) out.push_back(std::move(tg));
  }
  return out;
}

CoClickPair sample_pair(const TokGroup& g, Rng& rng) {
  const std::size_t n = g.queries.size();
  std::size_t i = static_cast<std::size_t>(rng.below(n));
  std::size_t j = static_cast<std::size_t>(rng.below(n - 1));
  if (j >= i) ++j;
  return CoClickPair{g.queries[i], g.queries[j], g.id};
}

// eligibility mask for the NCE candidate pool; empty means "everyone".
std::vector<char> nce_mask(std::size_t n, NceCandidates mode) {
  if (mode == NceCandidates::kAllOutOfGroup) return {};
  std::vector<char> mask(n, 0);
  for (std::size_t j = 1; j < n; j += 2) mask[j] = 1;  // positives sit at odd slots
  return mask;
}

// One gradient step over a co-click batch; returns the mean batch loss.
double coclick_step(ModelParameters& params, const CoClickBatch& batch,
                    OptimizerState& opt, const TrainConfig& cfg) {
  Tape tape;
  ParamIds ids = register_parameters(tape, params);
  std::vector<Tape::Id> enc_ids;
  std::vector<std::uint32_t> groups;
  enc_ids.reserve(batch.size() * 2);
  for (const CoClickPair& p : batch) {
    enc_ids.push_back(encode_on_tape(tape, ids, params, p.q));
    enc_ids.push_back(encode_on_tape(tape, ids, params, p.q_pos));
    groups.push_back(p.group);
    groups.push_back(p.group);
  }
  std::vector<DenseArray> values;
  values.reserve(enc_ids.size());
  for (Tape::Id id : enc_ids) values.push_back(tape.value(id));
  const std::vector<char> mask = nce_mask(values.size(), cfg.nce);

  Tape::Id total = 0;
  bool have_total = false;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const std::size_t anchor = 2 * i;
    const std::size_t neg = nce_select_negative(anchor, groups, values, mask);
    Tape::Id cos_pos = tape.cosine(enc_ids[anchor], enc_ids[anchor + 1]);
    Tape::Id cos_neg = tape.cosine(enc_ids[anchor], enc_ids[neg]);
    Tape::Id loss = coclick_loss_on_tape(tape, cos_pos, cos_neg);
    total = have_total ? tape.add(total, loss) : loss;
    have_total = true;
  }
  Tape::Id mean = tape.scale(total, 1.0 / static_cast<Real>(batch.size()));
  const double loss_value = tape.value(mean).data[0];

  tape.backward(mean);
  GradientMap grads;
  for (const auto& [name, id] : ids.groups) grads[name] = tape.grad(id);
  clip_by_global_norm(grads, cfg.clip_norm);
  adam_step(params, grads, opt);
  if (cfg.check_finite && !params.all_finite())
    throw std::runtime_error("training step produced non-finite parameters");
  return loss_value;
}

struct EarlyStopper {
  double best = std::numeric_limits<double>::infinity();
  std::size_t stale = 0;
  std::size_t patience;
  explicit EarlyStopper(std::size_t p) : patience(p) {}

  // returns true when training should stop
  bool observe(double val, bool* improved) {
    if (val < best - 1e-12) {
      best = val;
      stale = 0;
      *improved = true;
      return false;
    }
    *improved = false;
    return ++stale >= patience;
  }
};

}  // namespace

double coclick_validation_loss(const ModelParameters& params,
                               const std::vector<CoClickPair>& pairs,
                               const TrainConfig& cfg) {
  if (pairs.empty()) return 0.0;
  double total = 0.0;
  std::size_t count = 0;
  const std::vector<char> none;
  for (std::size_t start = 0; start < pairs.size(); start += cfg.batch_size) {
    const std::size_t end = std::min(pairs.size(), start + cfg.batch_size);
    std::vector<TokenizedQuery> queries;
    std::vector<std::uint32_t> groups;
    for (std::size_t i = start; i < end; ++i) {
      queries.push_back(pairs[i].q);
      queries.push_back(pairs[i].q_pos);
      groups.push_back(pairs[i].group);
      groups.push_back(pairs[i].group);
    }
    std::vector<DenseArray> enc = encode_batch(params, queries, ExecPolicy::kParallel);
    const std::vector<char> mask = nce_mask(enc.size(), cfg.nce);
    for (std::size_t i = 0; i < end - start; ++i) {
      const std::size_t anchor = 2 * i;
      std::size_t neg;
      try {
        neg = nce_select_negative(anchor, groups, enc, mask);
      } catch (const std::runtime_error&) {
        continue;  // degenerate batch tail, skip the pair
      }
      const Real cp = cosine_value(enc[anchor].data, enc[anchor + 1].data);
      const Real cn = cosine_value(enc[anchor].data, enc[neg].data);
      total += coclick_loss(cp, cn);
      ++count;
    }
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

TrainResult train_phase1(ModelParameters& params, const std::vector<CoClickGroup>& corpus,
                         const TrainConfig& cfg) {
  if (corpus.empty()) throw std::invalid_argument("train_phase1: empty corpus");
  std::vector<TokGroup> groups = tokenize_groups(corpus, params.vocab);
  if (groups.size() < 2)
    throw std::invalid_argument(
        "train_phase1: need at least 2 co-click groups (no negatives available)");

  Rng rng(cfg.seed);
  std::vector<std::size_t> order(groups.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  rng.shuffle(order);

  std::size_t val_count = static_cast<std::size_t>(
      std::llround(cfg.val_fraction * static_cast<double>(groups.size())));
  val_count = std::max<std::size_t>(val_count, 1);
  if (groups.size() - val_count < 2) val_count = groups.size() - 2;

  std::vector<CoClickPair> val_pairs;
  for (std::size_t i = 0; i < val_count; ++i)
    val_pairs.push_back(sample_pair(groups[order[i]], rng));
  std::vector<std::size_t> train_idx(order.begin() + static_cast<std::ptrdiff_t>(val_count),
                                     order.end());

  OptimizerState opt;
  opt.config = cfg.adam;
  TrainResult result;
  result.initial_validation_loss = coclick_validation_loss(params, val_pairs, cfg);
  result.curve.push_back({0, 0.0, result.initial_validation_loss});

  EarlyStopper stopper(cfg.patience);
  bool improved = false;
  stopper.observe(result.initial_validation_loss, &improved);
  ModelParameters best = params;

  double running_loss = 0.0;
  std::size_t running_count = 0;
  std::size_t step = 0;
  bool stop = false;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    rng.shuffle(train_idx);
    CoClickBatch batch;
    for (std::size_t gi = 0; gi < train_idx.size() && !stop; ++gi) {
      batch.push_back(sample_pair(groups[train_idx[gi]], rng));
      const bool last = gi + 1 == train_idx.size();
      if (batch.size() < cfg.batch_size && !last) continue;
      // a usable batch needs two distinct groups
      bool mixed = false;
      for (std::size_t i = 1; i < batch.size(); ++i)
        if (batch[i].group != batch[0].group) { mixed = true; break; }
      if (batch.size() < 2 || !mixed) {
        if (!last) continue;
        batch.clear();
        break;
      }

      if (step >= cfg.max_steps) { stop = true; break; }
      running_loss += coclick_step(params, batch, opt, cfg);
      ++running_count;
      ++step;
      batch.clear();

      if (step % cfg.eval_every == 0) {
        const double val = coclick_validation_loss(params, val_pairs, cfg);
        result.curve.push_back({step, running_loss / static_cast<double>(running_count), val});
        running_loss = 0.0;
        running_count = 0;
        if (stopper.observe(val, &improved)) stop = true;
        if (improved) best = params;
      }
    }
  }

  if (step % cfg.eval_every != 0 && step > 0) {
    const double val = coclick_validation_loss(params, val_pairs, cfg);
    result.curve.push_back(
        {step, running_count ? running_loss / static_cast<double>(running_count) : 0.0, val});
    bool dummy = false;
    stopper.observe(val, &dummy);
    if (dummy) best = params;
  }

  if (cfg.restore_best && std::isfinite(stopper.best)) params = best;
  result.final_validation_loss = coclick_validation_loss(params, val_pairs, cfg);
  result.steps = step;
  return result;
}

// ---------------------------------------------------------------------------
// phase 2

namespace {

struct ParaItem {
  TokenizedQuery a, b;
  int label = 1;
};

std::vector<ParaItem> tokenize_pairs(const std::vector<ParaphraseExample>& pairs,
                                     const Vocabulary& vocab) {
  std::vector<ParaItem> out;
  for (const auto& p : pairs) {
    try {
      out.push_back(ParaItem{tokenize(p.a, vocab), tokenize(p.b, vocab), p.label});
    } catch (const std::invalid_argument&) {
    }
  }
  return out;
}

double paraphrase_mean_loss(const ModelParameters& params, const std::vector<ParaItem>& items) {
  if (items.empty()) return 0.0;
  std::vector<TokenizedQuery> queries;
  queries.reserve(items.size() * 2);
  for (const auto& it : items) {
    queries.push_back(it.a);
    queries.push_back(it.b);
  }
  std::vector<DenseArray> enc = encode_batch(params, queries, ExecPolicy::kParallel);
  double total = 0.0;
  for (std::size_t i = 0; i < items.size(); ++i)
    total += paraphrase_loss(cosine_value(enc[2 * i].data, enc[2 * i + 1].data), items[i].label);
  return total / static_cast<double>(items.size());
}

enum class TaskKind { kCoClick, kQueryPara, kQuestionPara };

struct MixedItem {
  TaskKind kind;
  std::size_t index;  // group index for co-click, pair index otherwise
};

}  // namespace

TrainResult train_phase2(ModelParameters& params, const Phase2Data& data,
                         const TrainConfig& cfg) {
  if (!cfg.task_coclick && !cfg.task_query && !cfg.task_question)
    throw std::invalid_argument("train_phase2: at least one task must be active");
  if (cfg.task_coclick && data.coclick.empty())
    throw std::invalid_argument("train_phase2: co-click dataset is empty");
  if (cfg.task_query && data.query_train.empty())
    throw std::invalid_argument("train_phase2: query paraphrase dataset is empty");
  if (cfg.task_question && data.question_train.empty())
    throw std::invalid_argument("train_phase2: question paraphrase dataset is empty");

  Rng rng(cfg.seed);

  // co-click groups: split off a validation slice like phase 1
  std::vector<TokGroup> groups;
  std::vector<std::size_t> co_train_idx;
  std::vector<CoClickPair> co_val_pairs;
  if (cfg.task_coclick) {
    groups = tokenize_groups(data.coclick, params.vocab);
    if (groups.size() < 2)
      throw std::invalid_argument("train_phase2: need at least 2 usable co-click groups");
    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    std::size_t val_count = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(cfg.val_fraction * double(groups.size()))));
    if (groups.size() - val_count < 2) val_count = groups.size() - 2;
    for (std::size_t i = 0; i < val_count; ++i)
      co_val_pairs.push_back(sample_pair(groups[order[i]], rng));
    co_train_idx.assign(order.begin() + static_cast<std::ptrdiff_t>(val_count), order.end());
  }

  std::vector<ParaItem> q_train = cfg.task_query ? tokenize_pairs(data.query_train, params.vocab)
                                                 : std::vector<ParaItem>{};
  std::vector<ParaItem> q_val = cfg.task_query ? tokenize_pairs(data.query_val, params.vocab)
                                               : std::vector<ParaItem>{};
  std::vector<ParaItem> qe_train = cfg.task_question
                                       ? tokenize_pairs(data.question_train, params.vocab)
                                       : std::vector<ParaItem>{};
  std::vector<ParaItem> qe_val = cfg.task_question ? tokenize_pairs(data.question_val, params.vocab)
                                                   : std::vector<ParaItem>{};
  if (cfg.task_query && q_train.empty())
    throw std::invalid_argument("train_phase2: no usable query paraphrase pairs");
  if (cfg.task_question && qe_train.empty())
    throw std::invalid_argument("train_phase2: no usable question paraphrase pairs");

  auto validation_loss = [&]() {
    double v = 0.0;
    if (cfg.task_coclick) v += coclick_validation_loss(params, co_val_pairs, cfg);
    if (cfg.task_query) v += paraphrase_mean_loss(params, q_val);
    if (cfg.task_question) v += paraphrase_mean_loss(params, qe_val);
    return v;
  };

  OptimizerState opt;
  opt.config = cfg.adam;
  TrainResult result;
  result.initial_validation_loss = validation_loss();
  result.curve.push_back({0, 0.0, result.initial_validation_loss});

  EarlyStopper stopper(cfg.patience);
  bool improved = false;
  stopper.observe(result.initial_validation_loss, &improved);
  ModelParameters best = params;

  double running_loss = 0.0;
  std::size_t running_count = 0;
  std::size_t step = 0;
  bool stop = false;

  for (std::size_t epoch = 0; epoch < cfg.max_epochs && !stop; ++epoch) {
    // every mini-batch mixes the three tasks: pool one epoch of items and shuffle
    std::vector<MixedItem> pool;
    for (std::size_t i : co_train_idx) pool.push_back({TaskKind::kCoClick, i});
    for (std::size_t i = 0; i < q_train.size(); ++i) pool.push_back({TaskKind::kQueryPara, i});
    for (std::size_t i = 0; i < qe_train.size(); ++i) pool.push_back({TaskKind::kQuestionPara, i});
    rng.shuffle(pool);

    for (std::size_t start = 0; start < pool.size() && !stop; start += cfg.batch_size) {
      if (step >= cfg.max_steps) { stop = true; break; }
      const std::size_t end = std::min(pool.size(), start + cfg.batch_size);

      Tape tape;
      ParamIds ids = register_parameters(tape, params);

      // co-click members first so they can serve as NCE candidates
      std::vector<Tape::Id> co_enc;
      std::vector<std::uint32_t> co_groups;
      std::vector<CoClickPair> co_pairs;
      std::vector<std::pair<Tape::Id, int>> para_terms;  // (cosine node, label)
      for (std::size_t i = start; i < end; ++i) {
        if (pool[i].kind == TaskKind::kCoClick) {
          CoClickPair p = sample_pair(groups[pool[i].index], rng);
          co_enc.push_back(encode_on_tape(tape, ids, params, p.q));
          co_enc.push_back(encode_on_tape(tape, ids, params, p.q_pos));
          co_groups.push_back(p.group);
          co_groups.push_back(p.group);
          co_pairs.push_back(std::move(p));
        }
      }
      std::vector<DenseArray> co_values;
      for (Tape::Id id : co_enc) co_values.push_back(tape.value(id));
      const std::vector<char> mask = nce_mask(co_values.size(), cfg.nce);

      Tape::Id total = 0;
      bool have_total = false;
      std::size_t contributing = 0;
      auto accumulate = [&](Tape::Id term) {
        total = have_total ? tape.add(total, term) : term;
        have_total = true;
        ++contributing;
      };

      for (std::size_t pi = 0; pi < co_pairs.size(); ++pi) {
        const std::size_t anchor = 2 * pi;
        std::size_t neg;
        try {
          neg = nce_select_negative(anchor, co_groups, co_values, mask);
        } catch (const std::runtime_error&) {
          continue;  // no out-of-group candidate in this batch
        }
        Tape::Id cp = tape.cosine(co_enc[anchor], co_enc[anchor + 1]);
        Tape::Id cn = tape.cosine(co_enc[anchor], co_enc[neg]);
        accumulate(coclick_loss_on_tape(tape, cp, cn));
      }

      for (std::size_t i = start; i < end; ++i) {
        if (pool[i].kind == TaskKind::kCoClick) continue;
        const ParaItem& item = pool[i].kind == TaskKind::kQueryPara ? q_train[pool[i].index]
                                                                    : qe_train[pool[i].index];
        Tape::Id ea = encode_on_tape(tape, ids, params, item.a);
        Tape::Id eb = encode_on_tape(tape, ids, params, item.b);
        accumulate(paraphrase_loss_on_tape(tape, tape.cosine(ea, eb), item.label));
      }

      if (!contributing) continue;
      Tape::Id mean = tape.scale(total, 1.0 / static_cast<Real>(contributing));
      running_loss += tape.value(mean).data[0];
      ++running_count;

      tape.backward(mean);
      GradientMap grads;
      for (const auto& [name, id] : ids.groups) grads[name] = tape.grad(id);
      clip_by_global_norm(grads, cfg.clip_norm);
      adam_step(params, grads, opt);
      if (cfg.check_finite && !params.all_finite())
        throw std::runtime_error("training step produced non-finite parameters");
      ++step;

      if (step % cfg.eval_every == 0) {
        const double val = validation_loss();
        result.curve.push_back({step, running_loss / static_cast<double>(running_count), val});
        running_loss = 0.0;
        running_count = 0;
        if (stopper.observe(val, &improved)) stop = true;
        if (improved) best = params;
      }
    }
  }

  if (step % cfg.eval_every != 0 && step > 0) {
    const double val = validation_loss();
    result.curve.push_back(
        {step, running_count ? running_loss / static_cast<double>(running_count) : 0.0, val});
    bool dummy = false;
    stopper.observe(val, &dummy);
    if (dummy) best = params;
  }

  if (cfg.restore_best && std::isfinite(stopper.best)) params = best;
  result.final_validation_loss = validation_loss();
  result.steps = step;
  return result;
}

void write_loss_curve(const std::filesystem::path& path,
                      const std::vector<LossCurvePoint>& curve) {
  atomic_write(path, [&](std::ostream& os) {
    os << "# step\ttrain_loss\tvalidation_loss\n";
    for (const auto& p : curve)
      os << p.step << '\t' << p.train_loss << '\t' << p.validation_loss << '\n';
  });
}

}  // namespace qenc
