#include "hcc/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "hcc/checkpoint.hpp"
#include "hcc/errors.hpp"
#include "hcc/lexer.hpp"

namespace hcc {

using nlohmann::json;

void ClassificationCounts::add(TokenId predicted, TokenId label) {
  ++total;
  classes[label].in_reference = true;
  if (predicted == label) {
    ++correct;
    ++classes[label].tp;
  } else {
    ++classes[predicted].fp;
    ++classes[label].fn;
  }
}

double accuracy(const ClassificationCounts& counts) {
  if (counts.total == 0) throw EmptyEvaluationError("accuracy over zero predictions");
  return static_cast<double>(counts.correct) / static_cast<double>(counts.total);
}

namespace {
double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}
}  // namespace

PrfScores precision_recall_f1(const ClassificationCounts& counts) {
  double p = 0.0;
  double r = 0.0;
  std::size_t n = 0;
  for (const auto& [id, t] : counts.classes) {
    if (!t.in_reference) continue;
    p += ratio(t.tp, t.tp + t.fp);
    r += ratio(t.tp, t.tp + t.fn);
    ++n;
  }
  if (n == 0) throw EmptyEvaluationError("no reference classes observed");
  PrfScores s;
  s.precision = p / static_cast<double>(n);
  s.recall = r / static_cast<double>(n);
  s.f1 = s.precision + s.recall > 0.0
             ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
             : 0.0;
  return s;
}

ClassificationCounts evaluate_next_token(const NextTokenModel& model,
                                         std::span<const Example> examples) {
  ClassificationCounts c;
  for (const Example& ex : examples) c.add(model.predict(ex.prefix), ex.next);
  return c;
}

namespace {

struct NgramStats {
  std::vector<std::size_t> matches;
  std::vector<std::size_t> totals;
  std::size_t c = 0;
  std::size_t r = 0;
};

using NgramCounts = std::map<std::vector<std::string_view>, std::size_t>;

NgramCounts count_ngrams(std::span<const std::string> tokens, std::size_t n) {
  NgramCounts out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    std::vector<std::string_view> key(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                      tokens.begin() + static_cast<std::ptrdiff_t>(i + n));
    ++out[key];
  }
  return out;
}

void accumulate(NgramStats& s, std::span<const std::string> cand, std::span<const std::string> ref,
                std::size_t max_n) {
  if (ref.empty()) throw ArgumentError("bleu: empty reference");
  s.c += cand.size();
  s.r += ref.size();
  for (std::size_t n = 1; n <= max_n; ++n) {
    const NgramCounts cc = count_ngrams(cand, n);
    const NgramCounts rc = count_ngrams(ref, n);
    for (const auto& [gram, k] : cc) {
      const auto it = rc.find(gram);
      if (it != rc.end()) s.matches[n - 1] += std::min(k, it->second);
    }
    s.totals[n - 1] += cand.size() >= n ? cand.size() - n + 1 : 0;
  }
}

std::vector<double> resolve_weights(std::size_t max_n, std::span<const double> weights) {
  if (max_n == 0) throw ArgumentError("bleu: max_n must be positive");
  if (weights.empty()) return std::vector<double>(max_n, 1.0 / static_cast<double>(max_n));
  if (weights.size() != max_n) throw ArgumentError("bleu: need one weight per n-gram order");
  double sum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw ArgumentError("bleu: negative weight");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ArgumentError("bleu: weights must sum to 1");
  return {weights.begin(), weights.end()};
}

BleuBreakdown combine(const NgramStats& s, std::vector<double> weights) {
  BleuBreakdown b;
  b.weights = std::move(weights);
  b.matches = s.matches;
  b.totals = s.totals;
  b.candidate_length = s.c;
  b.reference_length = s.r;
  const std::size_t max_n = b.weights.size();
  b.precisions.resize(max_n);
  for (std::size_t n = 0; n < max_n; ++n) {
    if (n > 0 && s.matches[n] == 0) {
      b.precisions[n] = 1.0 / static_cast<double>(s.totals[n] + 1);
    } else {
      b.precisions[n] = ratio(s.matches[n], s.totals[n]);
    }
  }
  if (s.c == 0) {
    b.brevity_penalty = 0.0;
    b.score = 0.0;
    return b;
  }
  b.brevity_penalty =
      s.c > s.r ? 1.0 : std::exp(1.0 - static_cast<double>(s.r) / static_cast<double>(s.c));
  double log_sum = 0.0;
  for (std::size_t n = 0; n < max_n; ++n) {
    if (b.weights[n] == 0.0) continue;
    if (b.precisions[n] == 0.0) {
      b.score = 0.0;
      return b;
    }
    log_sum += b.weights[n] * std::log(b.precisions[n]);
  }
  b.score = std::clamp(b.brevity_penalty * std::exp(log_sum), 0.0, 1.0);
  return b;
}

}  // namespace

BleuBreakdown bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                   std::size_t max_n, std::span<const double> weights) {
  auto w = resolve_weights(max_n, weights);
  NgramStats s{std::vector<std::size_t>(max_n, 0), std::vector<std::size_t>(max_n, 0)};
  accumulate(s, candidate, reference, max_n);
  return combine(s, std::move(w));
}

BleuBreakdown corpus_bleu(std::span<const Tokens> candidates, std::span<const Tokens> references,
                          std::size_t max_n, std::span<const double> weights) {
  if (candidates.size() != references.size()) {
    throw ArgumentError("corpus_bleu: candidate and reference counts differ");
  }
  if (candidates.empty()) throw EmptyEvaluationError("corpus_bleu over zero pairs");
  auto w = resolve_weights(max_n, weights);
  NgramStats s{std::vector<std::size_t>(max_n, 0), std::vector<std::size_t>(max_n, 0)};
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    accumulate(s, candidates[i], references[i], max_n);
  }
  return combine(s, std::move(w));
}

LatencyReport average_response_time(std::span<const TimingRecord> records) {
  if (records.empty()) throw EmptyEvaluationError("no timing records");
  LatencyReport rep;
  rep.records.assign(records.begin(), records.end());
  rep.count = records.size();
  double sum = 0.0;
  for (const TimingRecord& r : records) {
    if (r.end_ms < r.start_ms) throw ClockError("timing record ends before it starts");
    sum += r.end_ms - r.start_ms;
  }
  rep.art_ms = sum / static_cast<double>(records.size());
  return rep;
}

bool code_executability(std::span<const std::string> prefix,
                        std::span<const std::string> completion) {
  std::string text;
  for (const auto* part : {&prefix, &completion}) {
    for (const std::string& t : *part) {
      if (!text.empty()) text += ' ';
      text += t;
    }
  }
  std::vector<LexToken> tokens;
  try {
    tokens = lex(text);
  } catch (const LexError&) {
    return false;
  }
  std::vector<char> open;
  for (const LexToken& t : tokens) {
    if (t.kind != TokenKind::op || t.text.size() != 1) continue;
    const char ch = t.text[0];
    if (ch == '(' || ch == '[' || ch == '{') {
      open.push_back(ch);
    } else if (ch == ')' || ch == ']' || ch == '}') {
      const char want = ch == ')' ? '(' : ch == ']' ? '[' : '{';
      if (open.empty() || open.back() != want) return false;
      open.pop_back();
    }
  }
  return open.empty();
}

double feature_consistency(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DimensionError("feature widths differ");
  double dot = 0.0;
  double na = 0.0;
  double nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.5;
  const double cosine = std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
  return (cosine + 1.0) / 2.0;
}

double semantic_consistency(std::span<const TokenId> candidate, std::span<const TokenId> reference,
                            const ContextEncoder& encoder) {
  const ContextFeatures a = encoder.encode(candidate);
  const ContextFeatures b = encoder.encode(reference);
  return feature_consistency(a.pooled.values(), b.pooled.values());
}

BenchmarkReport benchmark_throughput(const NextTokenModel& model,
                                     std::span<const std::vector<TokenId>> prompts,
                                     std::size_t max_new) {
  if (prompts.empty()) throw EmptyEvaluationError("benchmark needs at least one prompt");
  using Clock = std::chrono::steady_clock;
  BenchmarkReport rep;
  rep.model = model.name();
  rep.prompts = prompts.size();
  rep.parameter_bytes = model.parameter_bytes();

  GenerateOptions opts;
  opts.max_new = max_new;
  opts.stop_at_eos = false;

  const std::size_t live_before = memory::live_bytes();
  memory::reset_peak();
  std::vector<TimingRecord> records;
  records.reserve(prompts.size());
  const auto origin = Clock::now();
  for (const auto& prompt : prompts) {
    const auto start = Clock::now();
    const auto out = generate(model, prompt, opts);
    const auto end = Clock::now();
    rep.generated_tokens += out.size();
    records.push_back({std::chrono::duration<double, std::milli>(start - origin).count(),
                       std::chrono::duration<double, std::milli>(end - origin).count()});
  }
  rep.total_seconds = std::chrono::duration<double>(Clock::now() - origin).count();
  const std::size_t peak = memory::peak_bytes();
  rep.working_bytes = peak > live_before ? peak - live_before : 0;
  rep.memory_bytes = rep.parameter_bytes + rep.working_bytes;
  rep.tokens_per_second =
      rep.total_seconds > 0.0 ? static_cast<double>(rep.generated_tokens) / rep.total_seconds : 0.0;
  rep.latency = average_response_time(records);
  return rep;
}

double round_half_even(double x, int digits) {
  const double scale = std::pow(10.0, digits);
  const double y = x * scale;
  const double lower = std::floor(y);
  const double frac = y - lower;
  double r = 0.0;
  if (std::abs(frac - 0.5) < 1e-9) {
    r = std::fmod(lower, 2.0) == 0.0 ? lower : lower + 1.0;
  } else {
    r = std::round(y);
  }
  return r / scale;
}

std::string format_fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, round_half_even(x, digits));
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

json to_json(const BleuBreakdown& b) {
  return {{"brevity_penalty", b.brevity_penalty},
          {"weights", b.weights},
          {"precisions", b.precisions},
          {"matches", b.matches},
          {"totals", b.totals},
          {"candidate_length", b.candidate_length},
          {"reference_length", b.reference_length},
          {"score", b.score}};
}

json to_json(const AccuracyRow& row) {
  return {{"model", row.model},         {"accuracy", row.accuracy}, {"precision", row.precision},
          {"recall", row.recall},       {"f1", row.f1},             {"total", row.total},
          {"correct", row.correct}};
}

json to_json(const QualityRow& row) {
  return {{"model", row.model},
          {"bleu", row.bleu},
          {"code_executability", row.executability},
          {"semantic_consistency", row.semantic_consistency},
          {"bleu_breakdown", to_json(row.breakdown)}};
}

json to_json(const BenchmarkReport& row) {
  return {{"model", row.model},
          {"prompts", row.prompts},
          {"generated_tokens", row.generated_tokens},
          {"total_seconds", row.total_seconds},
          {"tokens_per_second", row.tokens_per_second},
          {"average_response_time_ms", row.latency.art_ms},
          {"parameter_bytes", row.parameter_bytes},
          {"working_bytes", row.working_bytes},
          {"memory_bytes", row.memory_bytes},
          {"memory_gb", static_cast<double>(row.memory_bytes) / 1e9}};
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

struct Column {
  const char* key;
  const char* label;
};

std::string table(const char* header, const json& rows, const char* name_key,
                  std::initializer_list<Column> cols) {
  std::string out = std::string(header) + "\n";
  for (const json& row : rows) {
    out += csv_field(row.at(name_key).get<std::string>());
    for (const Column& c : cols) out += "," + format_fixed(row.at(c.key).get<double>());
    out += "\n";
  }
  return out;
}

std::string figure(const json& rows, std::initializer_list<Column> cols) {
  std::string out = std::string(report::kFigureHeader) + "\n";
  for (const json& row : rows) {
    for (const Column& c : cols) {
      out += csv_field(row.at("model").get<std::string>()) + "," + csv_field(c.label) + "," +
             format_fixed(row.at(c.key).get<double>()) + "\n";
    }
  }
  return out;
}

}  // namespace

RenderedReport render_report(const json& metrics) {
  RenderedReport rep;
  try {
    if (metrics.contains("accuracy")) {
      const json& rows = metrics.at("accuracy");
      rep.files[report::kTable1File] =
          table(report::kTable1Header, rows, "model",
                {{"accuracy", ""}, {"precision", ""}, {"recall", ""}, {"f1", ""}});
      rep.files[report::kFigure1File] =
          figure(rows, {{"accuracy", "Accuracy"},
                        {"precision", "Precision"},
                        {"recall", "Recall"},
                        {"f1", "F1-Score"}});
    }
    if (metrics.contains("generation_quality")) {
      const json& rows = metrics.at("generation_quality");
      rep.files[report::kTable2File] =
          table(report::kTable2Header, rows, "model",
                {{"bleu", ""}, {"code_executability", ""}, {"semantic_consistency", ""}});
      rep.files[report::kFigure2File] =
          figure(rows, {{"bleu", "BLEU"},
                        {"code_executability", "Code Executability"},
                        {"semantic_consistency", "Semantic Consistency"}});
    }
    if (metrics.contains("performance")) {
      rep.files[report::kTable3File] =
          table(report::kTable3Header, metrics.at("performance"), "model",
                {{"average_response_time_ms", ""}, {"memory_gb", ""}, {"tokens_per_second", ""}});
    }
    if (metrics.contains("robustness")) {
      rep.files[report::kTable4File] =
          table(report::kTable4Header, metrics.at("robustness").at("rows"), "scenario",
                {{"accuracy", ""}, {"recovery_ability", ""}, {"stability_index", ""}});
    }
  } catch (const json::exception& e) {
    throw SchemaError(std::string("metrics document malformed: ") + e.what());
  }
  return rep;
}

std::vector<std::string> emit_report(const json& metrics, const std::filesystem::path& dir) {
  const RenderedReport rep = render_report(metrics);
  std::vector<std::string> written;
  write_file(dir / report::kMetricsFile, metrics.dump(2) + "\n");
  written.push_back(report::kMetricsFile);
  for (const auto& [rel, body] : rep.files) {
    write_file(dir / rel, body);
    written.push_back(rel);
  }
  return written;
}

}  // namespace hcc
