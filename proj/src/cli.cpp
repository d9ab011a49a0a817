#include "hcc/cli.hpp"

#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "hcc/checkpoint.hpp"
#include "hcc/completion.hpp"
#include "hcc/errors.hpp"
#include "hcc/lexer.hpp"
#include "hcc/metrics.hpp"
#include "hcc/robustness.hpp"

namespace hcc {

namespace {

using nlohmann::json;

struct Dataset {
  Vocabulary vocab;
  std::vector<TokenizedSample> train;
  std::vector<TokenizedSample> test;
  std::vector<std::vector<TokenId>> train_sequences;
  std::vector<std::vector<TokenId>> test_sequences;
};

// Split, tokenize, and encode. The vocabulary is learned from the training
// split unless one is supplied (checkpointed runs).
Dataset prepare_data(const RunConfig& cfg, std::uint64_t seed, const Vocabulary* vocab) {
  if (!std::filesystem::exists(cfg.corpus)) {
    throw IoError("corpus file '" + cfg.corpus.string() + "' does not exist");
  }
  const auto samples = load_corpus(cfg.corpus);
  if (samples.empty()) throw DataError("corpus '" + cfg.corpus.string() + "' holds no samples");
  const auto split = split_corpus<CodeSample>(samples, cfg.split, seed);

  Dataset d;
  std::vector<std::vector<std::string>> train_tokens;
  for (const CodeSample& s : split.train) train_tokens.push_back(tokenize_code(s.code));
  d.vocab = vocab != nullptr ? *vocab
                             : build_vocabulary(train_tokens, cfg.vocab_max_size, cfg.vocab_min_freq);
  for (const CodeSample& s : split.train) {
    d.train.push_back(tokenize_sample(s.code, d.vocab));
    d.train_sequences.push_back(training_sequence(d.train.back().ids));
  }
  for (const CodeSample& s : split.test) {
    d.test.push_back(tokenize_sample(s.code, d.vocab));
    d.test_sequences.push_back(training_sequence(d.test.back().ids));
  }
  return d;
}

std::string precise(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json read_metrics(const std::filesystem::path& dir) {
  const auto path = dir / report::kMetricsFile;
  if (!std::filesystem::exists(path)) return json::object();
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
  }
}

Checkpoint open_checkpoint(const RunConfig& cfg) {
  const auto path = cfg.output / kCheckpointFile;
  if (!std::filesystem::exists(path)) {
    throw IoError("checkpoint '" + path.string() + "' not found; run `hcc train` first");
  }
  return load_checkpoint(path);
}

std::vector<TokenId> strip_eos(std::vector<TokenId> ids) {
  if (!ids.empty() && ids.back() == special::eos) ids.pop_back();
  return ids;
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ' ';
    out += t;
  }
  return out;
}

// --- train -------------------------------------------------------------

int cmd_train(const RunConfig& cfg, const EffectiveSettings& env, std::ostream& out) {
  const Dataset data = prepare_data(cfg, env.seed, nullptr);
  if (data.train_sequences.empty()) throw DataError("training split is empty");

  HybridConfig mc = cfg.model;
  mc.encoder.vocab_size = data.vocab.size();
  mc.generator.vocab_size = data.vocab.size();
  HybridModel model(mc, env.seed);

  TrainConfig tc = cfg.train;
  tc.seed = env.seed;
  const auto examples = make_examples(data.train_sequences, tc.context_window);
  if (examples.empty()) throw DataError("training split yields no examples");

  std::array<std::string, 4> logs;
  for (auto& l : logs) l = "epoch,loss\n";
  const auto reports = train_all(tc, model, examples, [&](Phase p, std::size_t epoch, double loss) {
    logs[static_cast<std::size_t>(p)] += std::to_string(epoch + 1) + "," + precise(loss) + "\n";
  });
  for (std::size_t i = 0; i < logs.size(); ++i) {
    write_file(cfg.output / "logs" / ("train_phase" + std::to_string(i) + ".csv"), logs[i]);
  }

  CheckpointInfo info{data.vocab, {}, env.seed};
  json phases = json::array();
  for (const PhaseReport& r : reports) {
    info.phases.emplace_back(phase_label(r.phase));
    phases.push_back({{"phase", std::string(phase_label(r.phase))},
                      {"epochs", r.epochs},
                      {"loss", r.epoch_loss},
                      {"trainable_digest", r.trainable_digest}});
  }
  save_checkpoint(model, info, cfg.output / kCheckpointFile);

  const HybridPredictor hybrid(model);
  const double train_accuracy = accuracy(evaluate_next_token(hybrid, examples));
  const json metrics = {{"training",
                         {{"seed", env.seed},
                          {"vocab_size", data.vocab.size()},
                          {"train_samples", data.train.size()},
                          {"train_examples", examples.size()},
                          {"train_accuracy", train_accuracy},
                          {"fusion_mode", std::string(fusion_mode_name(mc.fusion))},
                          {"phases", phases}}}};
  emit_report(metrics, cfg.output);

  for (const PhaseReport& r : reports) {
    out << phase_label(r.phase) << ": " << r.epochs << " epochs, final loss "
        << (r.epoch_loss.empty() ? std::string("n/a") : format_fixed(r.epoch_loss.back(), 4))
        << "\n";
  }
  out << "training accuracy " << format_fixed(train_accuracy, 4) << ", checkpoint "
      << (cfg.output / kCheckpointFile).string() << "\n";
  return exit_code::ok;
}

// --- eval --------------------------------------------------------------

struct Evaluation {
  Checkpoint ck;
  Dataset data;
  std::vector<Example> test_examples;
};

Evaluation load_evaluation(const RunConfig& cfg) {
  Evaluation e{open_checkpoint(cfg), {}, {}};
  e.data = prepare_data(cfg, e.ck.info.seed, &e.ck.info.vocabulary);
  e.test_examples = make_examples(e.data.test_sequences, cfg.train.context_window);
  if (e.test_examples.empty()) throw EmptyEvaluationError("test split yields no examples");
  return e;
}

// BOS + first half of the sample, and the second half as reference.
struct GenerationCase {
  std::vector<TokenId> prompt;
  std::vector<TokenId> reference;
};

std::vector<GenerationCase> generation_cases(const Dataset& data) {
  std::vector<GenerationCase> out;
  for (const TokenizedSample& s : data.test) {
    if (s.ids.size() < 2) continue;
    const std::size_t mid = s.ids.size() / 2;
    GenerationCase c;
    c.prompt.push_back(special::bos);
    c.prompt.insert(c.prompt.end(), s.ids.begin(), s.ids.begin() + static_cast<std::ptrdiff_t>(mid));
    c.reference.assign(s.ids.begin() + static_cast<std::ptrdiff_t>(mid), s.ids.end());
    out.push_back(std::move(c));
  }
  return out;
}

QualityRow generation_quality(const NextTokenModel& model, const std::vector<GenerationCase>& cases,
                              const Vocabulary& vocab, const ContextEncoder& judge,
                              std::size_t max_n) {
  if (cases.empty()) throw EmptyEvaluationError("no test samples long enough to complete");
  std::vector<Tokens> cands;
  std::vector<Tokens> refs;
  std::size_t executable = 0;
  double semantic = 0.0;
  for (const GenerationCase& c : cases) {
    GenerateOptions opts;
    opts.max_new = c.reference.size();
    const auto completion = strip_eos(generate(model, c.prompt, opts));
    const std::span<const TokenId> prompt_body(c.prompt.begin() + 1, c.prompt.end());
    cands.push_back(decode(completion, vocab));
    refs.push_back(decode(c.reference, vocab));
    if (code_executability(decode(prompt_body, vocab), cands.back())) ++executable;
    semantic += semantic_consistency(completion, c.reference, judge);
  }
  QualityRow row;
  row.model = model.name();
  row.breakdown = corpus_bleu(cands, refs, max_n);
  row.bleu = row.breakdown.score;
  row.executability = static_cast<double>(executable) / static_cast<double>(cases.size());
  row.semantic_consistency = semantic / static_cast<double>(cases.size());
  return row;
}

int cmd_eval(const RunConfig& cfg, std::ostream& out) {
  const Evaluation e = load_evaluation(cfg);
  const HybridModel& m = e.ck.model;
  const BigramBaseline baseline(e.data.vocab.size(), e.data.train_sequences);
  const EncoderOnlyPredictor encoder(m);
  const GeneratorOnlyPredictor generator(m);
  const HybridPredictor hybrid(m);
  const std::array<const NextTokenModel*, 4> models = {&baseline, &encoder, &generator, &hybrid};

  json acc = json::array();
  json quality = json::array();
  const auto cases = generation_cases(e.data);
  for (const NextTokenModel* model : models) {
    const ClassificationCounts counts = evaluate_next_token(*model, e.test_examples);
    const PrfScores prf = precision_recall_f1(counts);
    acc.push_back(to_json(AccuracyRow{model->name(), accuracy(counts), prf.precision, prf.recall,
                                      prf.f1, counts.total, counts.correct}));
    quality.push_back(to_json(generation_quality(*model, cases, e.data.vocab, m.encoder(),
                                                 cfg.bleu_max_n)));
  }

  json metrics = read_metrics(cfg.output);
  metrics["accuracy"] = acc;
  metrics["generation_quality"] = quality;
  metrics["evaluation"] = {{"split_seed", e.ck.info.seed},
                           {"test_samples", e.data.test.size()},
                           {"test_examples", e.test_examples.size()},
                           {"generation_cases", cases.size()},
                           {"bleu_max_n", cfg.bleu_max_n}};
  emit_report(metrics, cfg.output);
  out << render_report(metrics).files.at(report::kTable1File)
      << render_report(metrics).files.at(report::kTable2File);
  return exit_code::ok;
}

// --- robust ------------------------------------------------------------

int cmd_robust(const RunConfig& cfg, const EffectiveSettings& env, std::ostream& out) {
  const Evaluation e = load_evaluation(cfg);
  const HybridPredictor hybrid(e.ck.model);
  const RobustnessReport rep =
      run_robustness_suite(hybrid, e.test_examples, cfg.robustness, env.seed, e.data.vocab.size());
  json metrics = read_metrics(cfg.output);
  metrics["robustness"] = to_json(rep);
  metrics["robustness"]["model"] = hybrid.name();
  emit_report(metrics, cfg.output);
  out << render_report(metrics).files.at(report::kTable4File);
  return exit_code::ok;
}

// --- bench -------------------------------------------------------------

int cmd_bench(const RunConfig& cfg, std::ostream& out) {
  const Evaluation e = load_evaluation(cfg);
  const HybridModel& m = e.ck.model;
  std::vector<std::vector<TokenId>> prompts;
  for (const GenerationCase& c : generation_cases(e.data)) {
    if (prompts.size() == cfg.bench_prompts) break;
    prompts.push_back(c.prompt);
  }
  const BigramBaseline baseline(e.data.vocab.size(), e.data.train_sequences);
  const EncoderOnlyPredictor encoder(m);
  const GeneratorOnlyPredictor generator(m);
  const HybridPredictor hybrid(m);
  json rows = json::array();
  for (const NextTokenModel* model :
       std::array<const NextTokenModel*, 4>{&baseline, &encoder, &generator, &hybrid}) {
    rows.push_back(to_json(benchmark_throughput(*model, prompts, cfg.bench_max_new)));
  }
  json metrics = read_metrics(cfg.output);
  metrics["performance"] = rows;
  emit_report(metrics, cfg.output);
  out << render_report(metrics).files.at(report::kTable3File);
  return exit_code::ok;
}

// --- report ------------------------------------------------------------

int cmd_report(const RunConfig& cfg, std::ostream& out) {
  const auto path = cfg.output / report::kMetricsFile;
  if (!std::filesystem::exists(path)) {
    throw IoError("'" + path.string() + "' not found; run train/eval first");
  }
  for (const std::string& rel : emit_report(read_metrics(cfg.output), cfg.output)) {
    out << (cfg.output / rel).string() << "\n";
  }
  return exit_code::ok;
}

// --- complete ----------------------------------------------------------

struct CompleteArgs {
  std::string prompt;
  std::size_t max_new = 16;
  std::string backend = "local";
  std::optional<double> temperature;
};

int cmd_complete(const RunConfig& cfg, const EffectiveSettings& env, const CompleteArgs& a,
                 std::ostream& out) {
  if (a.backend == "remote") {
    out << remote_complete(a.prompt, static_cast<int>(a.max_new), a.temperature.value_or(1.0),
                           env.backend)
        << "\n";
    return exit_code::ok;
  }
  const Checkpoint ck = open_checkpoint(cfg);
  std::vector<TokenId> prefix{special::bos};
  const auto ids = encode(tokenize_code(a.prompt), ck.info.vocabulary);
  prefix.insert(prefix.end(), ids.begin(), ids.end());

  GenerateOptions opts;
  opts.max_new = a.max_new;
  if (a.temperature) {
    opts.decoding = Decoding::temperature;
    opts.temperature = *a.temperature;
    opts.seed = env.seed;
  }
  const HybridPredictor hybrid(ck.model);
  out << join(decode(strip_eos(generate(hybrid, prefix, opts)), ck.info.vocabulary)) << "\n";
  return exit_code::ok;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
                const EnvLookup& env) {
  CLI::App app{"Hybrid encoder/generator code completion", "hcc"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  CompleteArgs complete;

  const auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration")->required();
    sub->add_option("--seed", seed, "overrides CC_SEED and the config seed");
  };
  auto* train = app.add_subcommand("train", "run phases P0-P3 and write the checkpoint");
  auto* comp = app.add_subcommand("complete", "complete a code prompt");
  auto* eval = app.add_subcommand("eval", "accuracy and generation quality on the test split");
  auto* robust = app.add_subcommand("robust", "robustness suite on the test split");
  auto* bench = app.add_subcommand("bench", "latency, memory and throughput");
  auto* rep = app.add_subcommand("report", "re-emit tables and figures from metrics.json");
  for (auto* sub : {train, comp, eval, robust, bench, rep}) common(sub);
  comp->add_option("--prompt", complete.prompt, "code prefix")->required();
  comp->add_option("--max-new", complete.max_new, "tokens to generate")->check(CLI::PositiveNumber);
  comp->add_option("--backend", complete.backend, "local or remote")
      ->check(CLI::IsMember({"local", "remote"}));
  comp->add_option("--temperature", complete.temperature, "sample at this temperature")
      ->check(CLI::PositiveNumber);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_code::ok : exit_code::usage;
  }

  try {
    const RunConfig cfg = load_config(config_path);
    const EffectiveSettings settings = resolve_environment(cfg, seed, env);
    if (*train) return cmd_train(cfg, settings, out);
    if (*comp) return cmd_complete(cfg, settings, complete, out);
    if (*eval) return cmd_eval(cfg, out);
    if (*robust) return cmd_robust(cfg, settings, out);
    if (*bench) return cmd_bench(cfg, out);
    if (*rep) return cmd_report(cfg, out);
    return exit_code::usage;
  } catch (const BackendError& e) {
    err << "hcc: remote backend error: " << e.what() << "\n";
    return exit_code::remote;
  } catch (const DataError& e) {
    err << "hcc: " << e.what() << "\n";
    return exit_code::data;
  } catch (const EmptyEvaluationError& e) {
    err << "hcc: " << e.what() << "\n";
    return exit_code::data;
  } catch (const std::exception& e) {
    err << "hcc: internal error: " << e.what() << "\n";
    return exit_code::internal;
  }
}

int run_command(const std::vector<std::string>& args) {
  return run_command(args, std::cout, std::cerr, process_env);
}

}  // namespace hcc
