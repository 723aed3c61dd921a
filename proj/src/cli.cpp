#include "qenc/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <set>

#include "qenc/config.hpp"
#include "qenc/encfile.hpp"
#include "qenc/encoder.hpp"
#include "qenc/evaluate.hpp"
#include "qenc/hnsw.hpp"
#include "qenc/scorers.hpp"
#include "qenc/session.hpp"
#include "qenc/synth.hpp"
#include "qenc/tailstats.hpp"
#include "qenc/trainer.hpp"

namespace qenc {

namespace {

using nlohmann::json;

void log_event(json fields) {
  std::cerr << fields.dump() << "\n";
}

RunConfig resolve_config(const std::string& config_path,
                         const std::vector<std::string>& overrides) {
  RunConfig cfg;
  if (!config_path.empty()) cfg = RunConfig::from_file(config_path);
  for (const auto& o : overrides) cfg.set_override(o);
  return cfg;
}

ModelDims dims_from_config(const RunConfig& cfg) {
  ModelDims d;
  d.word_dim = static_cast<std::size_t>(cfg.get_int("model.word_dim", 32));
  d.char_dim = static_cast<std::size_t>(cfg.get_int("model.char_dim", 16));
  d.char_filters = static_cast<std::size_t>(cfg.get_int("model.char_filters", 16));
  d.char_window = static_cast<std::size_t>(cfg.get_int("model.char_window", 5));
  d.gru_hidden = static_cast<std::size_t>(cfg.get_int("model.gru_hidden", 48));
  return d;
}

TrainConfig train_config(const RunConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.adam.learning_rate = cfg.get_double("train.learning_rate", 1e-4);
  t.batch_size = static_cast<std::size_t>(cfg.get_int("train.batch_size", 256));
  t.eval_every = static_cast<std::size_t>(cfg.get_int("train.eval_every", 50));
  t.patience = static_cast<std::size_t>(cfg.get_int("train.patience", 3));
  t.max_epochs = static_cast<std::size_t>(cfg.get_int("train.max_epochs", 1000));
  if (cfg.has("train.max_steps"))
    t.max_steps = static_cast<std::size_t>(cfg.get_int("train.max_steps", 0));
  t.val_fraction = cfg.get_double("train.val_fraction", 0.1);
  t.clip_norm = cfg.get_double("train.clip_norm", 5.0);
  const std::string nce = cfg.get("train.nce", "all");
  if (nce == "all") t.nce = NceCandidates::kAllOutOfGroup;
  else if (nce == "positives") t.nce = NceCandidates::kPositivesOnly;
  else throw std::runtime_error("train.nce must be 'all' or 'positives'");
  t.task_coclick = cfg.get_bool("train.task_coclick", true);
  t.task_query = cfg.get_bool("train.task_query", true);
  t.task_question = cfg.get_bool("train.task_question", true);
  t.seed = seed;
  return t;
}

// training must not touch evaluation datasets
void reject_eval_paths(const RunConfig& cfg) {
  std::set<std::string> eval_paths;
  for (const auto& key : cfg.keys_with_prefix("eval."))
    eval_paths.insert(cfg.get(key, ""));
  if (eval_paths.empty()) return;
  for (const auto& key : cfg.keys_with_prefix("train.")) {
    const std::string value = cfg.get(key, "");
    if (eval_paths.count(value))
      throw std::runtime_error("config: " + key + " points at evaluation dataset '" + value +
                               "'; evaluation labels are not readable during training");
  }
}

std::vector<std::string> read_query_lines(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open query list: " + path.string());
  std::vector<std::string> out;
  std::string line;
  while (std::getline(is, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    out.push_back(line);
  }
  return out;
}

// ---------------------------------------------------------------------------

int run_gen_data(std::uint64_t seed, const std::string& out_dir, const RunConfig& cfg) {
  SynthConfig sc;
  sc.seed = seed;
  sc.intents = static_cast<std::size_t>(cfg.get_int("gen.intents", 200));
  sc.queries_per_intent = static_cast<std::size_t>(cfg.get_int("gen.queries_per_intent", 10));
  sc.noise_rate = cfg.get_double("gen.noise_rate", 0.05);
  sc.intents_per_topic = static_cast<std::size_t>(cfg.get_int("gen.intents_per_topic", 4));
  sc.mixed_sessions = static_cast<std::size_t>(cfg.get_int("gen.mixed_sessions", 300));
  sc.question_rate = cfg.get_double("gen.question_rate", 0.15);
  sc.unseen_fraction = cfg.get_double("gen.unseen_fraction", 0.35);
  sc.judgment_targets = static_cast<std::size_t>(cfg.get_int("gen.judgment_targets", 400));
  sc.paraphrase_pairs = static_cast<std::size_t>(cfg.get_int("gen.paraphrase_pairs", 1500));

  SyntheticWorld world = generate_synthetic_world(sc);
  write_world(world, out_dir);
  log_event({{"event", "gen_data_done"},
             {"queries", world.queries.size()},
             {"clicks", world.clicks.size()},
             {"judgments", world.judgments.size()},
             {"out", out_dir}});
  return 0;
}

int run_train(int phase, std::uint64_t seed, const std::string& out_path,
              const std::string& init_path, const std::string& curve_path,
              const RunConfig& cfg) {
  reject_eval_paths(cfg);
  const std::string clicks_path = cfg.get("train.clicks", "");
  if (clicks_path.empty()) throw std::runtime_error("config: train.clicks is required");

  LoadReport report;
  std::vector<ClickRecord> clicks = load_clicks(clicks_path, &report);
  Warnings warnings;
  std::vector<CoClickGroup> groups = build_coclick_groups(clicks, &warnings);
  log_event({{"event", "coclick_groups"}, {"groups", groups.size()}, {"clicks", clicks.size()}});

  TrainConfig tc = train_config(cfg, seed);
  TrainResult result;
  ModelParameters params = [&] {
    if (phase == 1) {
      std::vector<std::string> corpus;
      corpus.reserve(clicks.size());
      for (const auto& r : clicks) corpus.push_back(r.query);
      Vocabulary vocab = Vocabulary::build(
          corpus, static_cast<std::size_t>(cfg.get_int("model.vocab_cap", 5000)),
          static_cast<std::size_t>(cfg.get_int("model.char_vocab_cap", 64)));
      return init_parameters(dims_from_config(cfg), std::move(vocab), seed);
    }
    if (init_path.empty())
      throw std::runtime_error("--init <phase-1 checkpoint> is required for phase 2");
    return load_checkpoint(init_path);
  }();

  if (phase == 1) {
    result = train_phase1(params, groups, tc);
  } else {
    Phase2Data data;
    // phase 2 re-uses a slice of the co-click corpus alongside the labels
    const double fraction = cfg.get_double("train.coclick_fraction", 0.25);
    Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<std::size_t> order(groups.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    rng.shuffle(order);
    const std::size_t keep = std::max<std::size_t>(
        4, static_cast<std::size_t>(fraction * static_cast<double>(groups.size())));
    for (std::size_t i = 0; i < std::min(keep, order.size()); ++i)
      data.coclick.push_back(groups[order[i]]);
    if (tc.task_query) {
      data.query_train = load_paraphrase_pairs(cfg.get("train.para_query_train", ""));
      data.query_val = load_paraphrase_pairs(cfg.get("train.para_query_val", ""));
    }
    if (tc.task_question) {
      data.question_train = load_paraphrase_pairs(cfg.get("train.para_question_train", ""));
      data.question_val = load_paraphrase_pairs(cfg.get("train.para_question_val", ""));
    }
    result = train_phase2(params, data, tc);
  }

  save_checkpoint(params, out_path);
  if (!curve_path.empty()) write_loss_curve(curve_path, result.curve);
  for (const auto& p : result.curve)
    log_event({{"event", "train_eval"},
               {"step", p.step},
               {"train_loss", p.train_loss},
               {"validation_loss", p.validation_loss}});
  log_event({{"event", "train_done"},
             {"phase", phase},
             {"steps", result.steps},
             {"initial_validation_loss", result.initial_validation_loss},
             {"final_validation_loss", result.final_validation_loss},
             {"checkpoint", out_path}});
  return 0;
}

int run_encode(const std::string& model_path, const std::string& input_path,
               const std::string& output_path) {
  ModelParameters params = load_checkpoint(model_path);
  std::vector<std::string> texts = read_query_lines(input_path);
  std::vector<TokenizedQuery> tokenized;
  tokenized.reserve(texts.size());
  for (std::size_t i = 0; i < texts.size(); ++i) {
    try {
      tokenized.push_back(tokenize(texts[i], params.vocab));
    } catch (const std::exception& e) {
      throw std::runtime_error("input query " + std::to_string(i) + ": " + e.what());
    }
  }
  std::vector<DenseArray> encodings = encode_batch(params, tokenized, ExecPolicy::kParallel);
  EncodingFile file;
  file.dim = params.dims.cat_dim();
  file.texts = texts;
  file.rows.reserve(encodings.size());
  for (const auto& e : encodings) file.rows.push_back(to_f32(e));
  write_encodings(output_path, file);
  log_event({{"event", "encode_done"},
             {"queries", texts.size()},
             {"dim", file.dim},
             {"output", output_path}});
  return 0;
}

PairScorer make_model_scorer(const std::string& kind, const std::string& checkpoint,
                             const std::string& clicks_path,
                             const std::vector<std::string>& texts) {
  if (kind == "gen") {
    if (checkpoint.empty()) throw std::runtime_error("--checkpoint is required for model 'gen'");
    auto params = std::make_shared<ModelParameters>(load_checkpoint(checkpoint));
    EncoderScorer scorer(params);
    scorer.precompute(texts);
    return scorer.as_pair_scorer();
  }
  if (kind == "tfidf") {
    if (clicks_path.empty()) throw std::runtime_error("--clicks is required for model 'tfidf'");
    std::vector<std::string> corpus;
    for (const auto& r : load_clicks(clicks_path)) corpus.push_back(r.query);
    auto model = std::make_shared<TfIdfModel>(TfIdfModel::build(corpus));
    return make_tfidf_scorer(model);
  }
  throw std::runtime_error("unknown model kind '" + kind + "' (expected gen|tfidf)");
}

int run_eval(const std::string& model, const std::string& checkpoint,
             const std::string& against, const std::string& against_checkpoint,
             const std::string& clicks_path, const std::string& judgments_path,
             const std::string& classification_path, const std::string& report_path,
             const std::string& histogram_path, const RunConfig& cfg) {
  if (judgments_path.empty() && classification_path.empty())
    throw std::runtime_error("eval: provide --judgments and/or --classification");

  std::vector<std::string> texts;
  RankingDataset ranking;
  ClassificationDataset classification;
  if (!judgments_path.empty()) {
    std::size_t dropped = 0;
    ranking = to_ranking_dataset(load_judgments(judgments_path), &dropped);
    for (const auto& [target, cands] : ranking.targets) {
      texts.push_back(target);
      for (const auto& c : cands) texts.push_back(c.text);
    }
    if (dropped)
      log_event({{"event", "eval_dropped_targets"}, {"count", dropped}});
  }
  if (!classification_path.empty()) {
    classification.pairs = load_paraphrase_pairs(classification_path);
    for (const auto& p : classification.pairs) {
      texts.push_back(p.a);
      texts.push_back(p.b);
    }
  }

  std::vector<MetricRow> rows;
  std::vector<double> primary_ndcg;
  std::vector<std::string> primary_keys;
  std::vector<std::pair<std::string, std::vector<HistogramBin>>> score_histograms;
  auto evaluate_one = [&](const std::string& kind, const std::string& ckpt,
                          std::vector<double>* ndcg_out, std::vector<std::string>* keys_out) {
    PairScorer scorer = make_model_scorer(kind, ckpt, clicks_path, texts);
    if (!ranking.targets.empty()) {
      RankingResult r = evaluate_ranking(ranking, scorer);
      rows.push_back({"judgments", kind + "_mean_ndcg", r.mean_ndcg, r.targets, r.skipped});
      if (ndcg_out) *ndcg_out = r.per_target;
      if (keys_out) *keys_out = r.target_keys;
      if (!histogram_path.empty()) {
        std::vector<double> scores;
        for (const auto& [target, cands] : ranking.targets)
          for (const auto& c : cands) scores.push_back(scorer(target, c.text));
        score_histograms.emplace_back(kind, histogram(scores, -1.0, 1.0, 40));
      }
    }
    if (!classification.pairs.empty()) {
      ClassificationResult c = evaluate_classification(classification, scorer);
      rows.push_back({"classification", kind + "_auc", c.auc, c.positives + c.negatives, 0});
    }
  };

  evaluate_one(model, checkpoint, &primary_ndcg, &primary_keys);
  if (!against.empty()) {
    std::vector<double> other_ndcg;
    std::vector<std::string> other_keys;
    evaluate_one(against, against_checkpoint, &other_ndcg, &other_keys);
    if (!primary_ndcg.empty() && primary_keys == other_keys) {
      FisherResult f = fisher_randomization_test(
          primary_ndcg, other_ndcg,
          static_cast<std::uint64_t>(cfg.get_int("eval.permutations", 100000)),
          static_cast<std::uint64_t>(cfg.get_int("eval.perm_seed", 1)));
      rows.push_back({"judgments", "fisher_p_" + model + "_vs_" + against, f.p,
                      primary_ndcg.size(), 0});
    }
  }

  write_metric_report(report_path, rows);
  if (!histogram_path.empty() && !score_histograms.empty()) {
    // one file, one labeled section per model; data rows stay 3-column
    atomic_write(histogram_path, [&](std::ostream& os) {
      for (const auto& [kind, bins] : score_histograms) {
        os << "# candidate score distribution, model=" << kind << "\n";
        os << "# bin_low\tbin_high\tcount\n";
        for (const auto& b : bins) os << b.low << '\t' << b.high << '\t' << b.count << '\n';
      }
    });
  }
  for (const auto& r : rows)
    log_event({{"event", "metric"},
               {"dataset", r.dataset},
               {"metric", r.metric},
               {"value", r.value},
               {"n", r.n},
               {"skipped", r.skipped}});
  return 0;
}

// ---------------------------------------------------------------------------
// ann subcommands

int run_ann_build(const std::string& input, const std::string& output, std::uint64_t seed,
                  const RunConfig& cfg) {
  EncodingFile file = load_encodings(input, /*with_texts=*/false);
  HnswParams params;
  params.M = static_cast<std::size_t>(cfg.get_int("ann.M", 16));
  params.ef_construction = static_cast<std::size_t>(cfg.get_int("ann.ef_construction", 200));
  params.ef_search = static_cast<std::size_t>(cfg.get_int("ann.ef_search", 64));
  params.seed = seed;
  std::vector<std::uint64_t> ids(file.rows.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  AnnIndex index = AnnIndex::build(ids, file.rows, params);
  index.save(output);
  log_event({{"event", "ann_build_done"},
             {"points", index.size()},
             {"dim", index.dim()},
             {"max_level", index.max_level()},
             {"output", output}});
  return 0;
}

int run_ann_query(const std::string& index_path, const std::string& model_path,
                  const std::string& idmap, const std::string& text, std::size_t k,
                  double radius) {
  AnnIndex index = AnnIndex::load(index_path);
  ModelParameters params = load_checkpoint(model_path);
  DenseArray enc = encode_query(params, tokenize(text, params.vocab));
  std::vector<float> q = to_f32(enc);

  std::unordered_map<std::uint64_t, std::string> id_text;
  if (!idmap.empty()) {
    std::ifstream is(idmap);
    if (!is) throw std::runtime_error("cannot open id map: " + idmap);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto f = split_tab(line);
      if (f.size() == 2) id_text[std::stoull(f[0])] = f[1];
    }
  }

  auto results = index.search(q, k, radius);
  std::cout << "# rank\tid\tdistance\tquery\n";
  for (std::size_t i = 0; i < results.size(); ++i) {
    auto it = id_text.find(results[i].id);
    std::cout << i + 1 << '\t' << results[i].id << '\t' << results[i].distance << '\t'
              << (it == id_text.end() ? "-" : it->second) << '\n';
  }
  log_event({{"event", "ann_query_done"}, {"results", results.size()}});
  return 0;
}

int run_ann_tail_stats(const std::string& index_path, const std::string& model_path,
                       const std::string& oracle_path, const std::string& freq_path,
                       const std::string& idmap, const std::string& out_path,
                       const std::string& unseen_out, const RunConfig& cfg) {
  AnnIndex index = AnnIndex::load(index_path);
  ModelParameters params = load_checkpoint(model_path);
  std::vector<SynthQuery> oracle = load_query_oracle(oracle_path);
  FrequencyTable freq = load_frequency_table(freq_path);

  std::unordered_map<std::uint64_t, std::string> id_text;
  std::unordered_map<std::string, std::uint64_t> text_id;
  {
    std::ifstream is(idmap);
    if (!is) throw std::runtime_error("cannot open id map: " + idmap);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty() || line[0] == '#') continue;
      auto f = split_tab(line);
      if (f.size() == 2) {
        const std::uint64_t id = std::stoull(f[0]);
        id_text[id] = f[1];
        text_id[f[1]] = id;
      }
    }
  }

  std::unordered_map<std::string, std::int64_t> intent_map;
  for (const auto& q : oracle) intent_map[q.text] = static_cast<std::int64_t>(q.intent);
  IntentOracle intent = [&intent_map](const std::string& text) {
    auto it = intent_map.find(text);
    return it == intent_map.end() ? std::int64_t{-1} : it->second;
  };

  std::vector<TokenizedQuery> tokenized;
  tokenized.reserve(oracle.size());
  for (const auto& q : oracle) tokenized.push_back(tokenize(q.text, params.vocab));
  std::vector<DenseArray> encodings = encode_batch(params, tokenized, ExecPolicy::kParallel);
  std::vector<TailProbe> probes;
  probes.reserve(oracle.size());
  for (std::size_t i = 0; i < oracle.size(); ++i) {
    auto it = text_id.find(oracle[i].text);
    const std::uint64_t self = it == text_id.end() ? std::numeric_limits<std::uint64_t>::max()
                                                   : it->second;
    probes.push_back({self, oracle[i].text, to_f32(encodings[i])});
  }

  const std::vector<double> radii = {0.15, 0.10, 0.05};
  auto rows = tail_stats(probes, index, id_text, freq, radii, intent,
                         static_cast<std::size_t>(cfg.get_int("ann.k", 10)));
  write_tail_stats(out_path, rows);

  if (!unseen_out.empty()) {
    std::map<Tier, double> penalties{
        {Tier::kHead, cfg.get_double("ann.penalty_head", 0.92)},
        {Tier::kTorso, cfg.get_double("ann.penalty_torso", 0.80)},
        {Tier::kTail, cfg.get_double("ann.penalty_tail", 0.47)}};
    atomic_write(unseen_out, [&](std::ostream& os) {
      os << "# radius\tunseen_fraction\n";
      os << "none\t" << unseen_fraction(probes, index, id_text, freq, 0.0, penalties) << '\n';
      for (double r : radii)
        os << r << '\t' << unseen_fraction(probes, index, id_text, freq, r, penalties) << '\n';
    });
    // per-bin distribution of augmented log2 frequencies, for plotting
    std::filesystem::path bins_path = unseen_out;
    bins_path += ".bins.tsv";
    atomic_write(bins_path, [&](std::ostream& os) {
      os << "# radius\tlog2_bin\tfraction\n";
      auto emit = [&](const std::string& label, double r) {
        for (const auto& b :
             augmented_bin_histogram(probes, index, id_text, freq, r, penalties))
          os << label << '\t' << (b.bin ? std::to_string(*b.bin) : std::string("-inf")) << '\t'
             << b.fraction << '\n';
      };
      emit("none", 0.0);
      for (double r : radii) emit(std::to_string(r), r);
    });
  }
  log_event({{"event", "tail_stats_done"}, {"probes", probes.size()}, {"out", out_path}});
  return 0;
}

// ---------------------------------------------------------------------------
// session subcommands

int run_session_segment(const std::string& clicks_path, const std::string& out_path) {
  Warnings warnings;
  std::vector<Session> sessions = segment_sessions(load_clicks(clicks_path), &warnings);
  atomic_write(out_path, [&](std::ostream& os) {
    os << "# session\tuser\ttimestamp\tquery\tclicked\n";
    for (std::size_t i = 0; i < sessions.size(); ++i)
      for (const auto& q : sessions[i].queries)
        os << i << '\t' << sessions[i].user_id << '\t' << q.timestamp << '\t' << q.text << '\t'
           << (q.clicked ? 1 : 0) << '\n';
  });
  for (const auto& w : warnings.messages) log_event({{"event", "warning"}, {"message", w}});
  log_event({{"event", "session_segment_done"}, {"sessions", sessions.size()}});
  return 0;
}

int run_session_histogram(const std::string& clicks_path, const std::string& model_path,
                          const std::string& out_path, std::size_t bins, std::uint64_t seed) {
  std::vector<Session> sessions = segment_sessions(load_clicks(clicks_path));
  auto params = std::make_shared<ModelParameters>(load_checkpoint(model_path));
  EncoderScorer scorer(params);
  std::vector<std::string> texts;
  for (const auto& s : sessions)
    for (const auto& q : s.queries) texts.push_back(q.text);
  scorer.precompute(texts);
  Warnings warnings;
  auto histograms =
      distance_distributions(sessions, scorer.as_pair_scorer(), {1, 2, 3}, bins, seed, &warnings);
  write_separation_histograms(out_path, histograms);
  for (const auto& w : warnings.messages) log_event({{"event", "warning"}, {"message", w}});
  log_event({{"event", "session_histogram_done"}, {"sessions", sessions.size()}});
  return 0;
}

int run_session_correlate(const std::string& pairs_path, const std::string& model_path,
                          const std::string& out_path) {
  std::vector<LabeledSessionPair> pairs = load_session_pairs(pairs_path);
  auto params = std::make_shared<ModelParameters>(load_checkpoint(model_path));
  EncoderScorer scorer(params);
  std::vector<std::string> texts;
  for (const auto& p : pairs) {
    texts.push_back(p.a);
    texts.push_back(p.b);
  }
  scorer.precompute(texts);
  Warnings warnings;
  auto rows = category_correlation(pairs, scorer.as_pair_scorer(), &warnings);
  write_category_correlations(out_path, rows);
  for (const auto& w : warnings.messages) log_event({{"event", "warning"}, {"message", w}});
  for (const auto& r : rows)
    log_event({{"event", "correlation"}, {"subset", r.subset}, {"n", r.n}, {"rho", r.rho}});
  return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
  CLI::App app{"query intent embeddings: training, evaluation, ANN search, session analytics"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("--config", config_path, "key=value config file")->configurable(false);
  app.add_option("--set", overrides, "override config entries (key=value)");

  // gen-data
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic search-log world");
  gen->fallthrough();
  std::uint64_t gen_seed = 0;
  std::string gen_out;
  gen->add_option("--seed", gen_seed, "generator seed")->required();
  gen->add_option("--out", gen_out, "output directory")->required();

  // train
  auto* train = app.add_subcommand("train", "train the encoder (phase 1 or 2)");
  train->fallthrough();
  int phase = 1;
  std::uint64_t train_seed = 0;
  std::string train_out, train_init, train_curve;
  auto* phase_opt =
      train->add_option("--phase", phase, "1 = co-click weak supervision, 2 = multi-task fine-tune")
          ->check(CLI::Range(1, 2));
  train->add_option("--seed", train_seed, "training seed")->required();
  train->add_option("--out", train_out, "checkpoint output path")->required();
  train->add_option("--init", train_init, "phase-1 checkpoint (phase 2 only)");
  train->add_option("--curve", train_curve, "loss curve TSV output");

  // encode
  auto* encode = app.add_subcommand("encode", "encode a query list with a trained model");
  encode->fallthrough();
  std::string enc_model, enc_input, enc_output;
  encode->add_option("--model", enc_model, "model checkpoint")->required();
  encode->add_option("--input", enc_input, "query list (one per line)")->required();
  encode->add_option("--output", enc_output, "encodings output file")->required();

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a similarity model");
  eval->fallthrough();
  std::string eval_model = "gen", eval_ckpt, eval_against, eval_against_ckpt, eval_clicks;
  std::string eval_judgments, eval_classification, eval_report, eval_histogram;
  eval->add_option("--model", eval_model, "gen|tfidf");
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint for model 'gen'");
  eval->add_option("--against", eval_against, "second model for significance (gen|tfidf)");
  eval->add_option("--against-checkpoint", eval_against_ckpt, "checkpoint for the second model");
  eval->add_option("--clicks", eval_clicks, "click log (IDF source for tfidf)");
  eval->add_option("--judgments", eval_judgments, "graded similarity judgments TSV");
  eval->add_option("--classification", eval_classification, "labeled pair TSV");
  eval->add_option("--report", eval_report, "metric report output")->required();
  eval->add_option("--histogram", eval_histogram, "score histogram output");

  // ann
  auto* ann = app.add_subcommand("ann", "approximate nearest neighbor index");
  ann->fallthrough();
  ann->require_subcommand(1);
  auto* ann_build = ann->add_subcommand("build", "build an index from encodings");
  ann_build->fallthrough();
  std::string ab_input, ab_output;
  std::uint64_t ab_seed = 0;
  ann_build->add_option("--input", ab_input, "encodings file")->required();
  ann_build->add_option("--output", ab_output, "index output file")->required();
  ann_build->add_option("--seed", ab_seed, "level-assignment seed");

  auto* ann_query = ann->add_subcommand("query", "search the index for a query text");
  ann_query->fallthrough();
  std::string aq_index, aq_model, aq_idmap, aq_text;
  std::size_t aq_k = 10;
  double aq_radius = 0.15;
  ann_query->add_option("--index", aq_index)->required();
  ann_query->add_option("--model", aq_model)->required();
  ann_query->add_option("--idmap", aq_idmap, "id map TSV for neighbor texts");
  ann_query->add_option("--text", aq_text)->required();
  ann_query->add_option("--k", aq_k);
  ann_query->add_option("--radius", aq_radius);

  auto* ann_tail = ann->add_subcommand("tail-stats", "coverage/co-intent per frequency tier");
  ann_tail->fallthrough();
  std::string at_index, at_model, at_oracle, at_freq, at_idmap, at_out, at_unseen;
  ann_tail->add_option("--index", at_index)->required();
  ann_tail->add_option("--model", at_model)->required();
  ann_tail->add_option("--oracle", at_oracle, "query oracle TSV (text, intent, ...)")->required();
  ann_tail->add_option("--freq", at_freq, "frequency table TSV")->required();
  ann_tail->add_option("--idmap", at_idmap, "id map TSV of the indexed encodings")->required();
  ann_tail->add_option("--out", at_out, "tier table output")->required();
  ann_tail->add_option("--unseen-out", at_unseen, "unseen-fraction summary output");

  // session
  auto* session = app.add_subcommand("session", "session segmentation and analytics");
  session->fallthrough();
  session->require_subcommand(1);
  auto* seg = session->add_subcommand("segment", "segment a click log into sessions");
  seg->fallthrough();
  std::string sg_clicks, sg_out;
  seg->add_option("--clicks", sg_clicks)->required();
  seg->add_option("--out", sg_out)->required();

  auto* hist = session->add_subcommand("histogram", "reformulation distance distributions");
  hist->fallthrough();
  std::string sh_clicks, sh_model, sh_out;
  std::size_t sh_bins = 40;
  std::uint64_t sh_seed = 1;
  hist->add_option("--clicks", sh_clicks)->required();
  hist->add_option("--model", sh_model)->required();
  hist->add_option("--out", sh_out)->required();
  hist->add_option("--bins", sh_bins);
  hist->add_option("--seed", sh_seed);

  auto* corr = session->add_subcommand("correlate", "correlation against category labels");
  corr->fallthrough();
  std::string sc_pairs, sc_model, sc_out;
  corr->add_option("--pairs", sc_pairs)->required();
  corr->add_option("--model", sc_model)->required();
  corr->add_option("--out", sc_out)->required();

  std::vector<std::string> argv_copy(args);
  try {
    std::vector<const char*> argv;
    argv.push_back("qenc");
    for (const auto& a : argv_copy) argv.push_back(a.c_str());
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() != 0) {
      std::cerr << e.what() << "\n" << app.help() << "\n";
      log_event({{"event", "error"}, {"message", e.what()}});
    }
    return app.exit(e, std::cout, std::cerr);
  }

  try {
    RunConfig cfg = resolve_config(config_path, overrides);
    if (gen->parsed()) return run_gen_data(gen_seed, gen_out, cfg);
    if (train->parsed()) {
      // flags win; the config may preselect the phase
      if (phase_opt->count() == 0) phase = static_cast<int>(cfg.get_int("train.phase", phase));
      if (phase != 1 && phase != 2) throw std::runtime_error("train.phase must be 1 or 2");
      return run_train(phase, train_seed, train_out, train_init, train_curve, cfg);
    }
    if (encode->parsed()) return run_encode(enc_model, enc_input, enc_output);
    if (eval->parsed())
      return run_eval(eval_model, eval_ckpt, eval_against, eval_against_ckpt, eval_clicks,
                      eval_judgments, eval_classification, eval_report, eval_histogram, cfg);
    if (ann->parsed()) {
      if (ann_build->parsed()) return run_ann_build(ab_input, ab_output, ab_seed, cfg);
      if (ann_query->parsed())
        return run_ann_query(aq_index, aq_model, aq_idmap, aq_text, aq_k, aq_radius);
      if (ann_tail->parsed())
        return run_ann_tail_stats(at_index, at_model, at_oracle, at_freq, at_idmap, at_out,
                                  at_unseen, cfg);
    }
    if (session->parsed()) {
      if (seg->parsed()) return run_session_segment(sg_clicks, sg_out);
      if (hist->parsed())
        return run_session_histogram(sh_clicks, sh_model, sh_out, sh_bins, sh_seed);
      if (corr->parsed()) return run_session_correlate(sc_pairs, sc_model, sc_out);
    }
    throw std::runtime_error("no subcommand selected");
  } catch (const std::exception& e) {
    log_event({{"event", "error"}, {"message", e.what()}});
    return 1;
  }
}

}  // namespace qenc
