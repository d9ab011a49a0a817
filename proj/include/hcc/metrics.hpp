#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "hcc/completion.hpp"
#include "hcc/encoder.hpp"
#include "hcc/training.hpp"
#include "json.hpp"

namespace hcc {

struct ClassTally {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  bool in_reference = false;
};

struct ClassificationCounts {
  std::size_t total = 0;
  std::size_t correct = 0;
  std::map<TokenId, ClassTally> classes;

  void add(TokenId predicted, TokenId label);
};

// correct / total. EmptyEvaluationError when total is 0.
double accuracy(const ClassificationCounts& counts);

struct PrfScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Macro P and R over classes present in the reference labels (0/0 = 0);
// F1 is the harmonic mean of the two macro values.
PrfScores precision_recall_f1(const ClassificationCounts& counts);

// Greedy next-token predictions of `model` against the example labels.
ClassificationCounts evaluate_next_token(const NextTokenModel& model,
                                         std::span<const Example> examples);

struct BleuBreakdown {
  double brevity_penalty = 0.0;
  std::vector<double> weights;
  std::vector<double> precisions;     // p_n after smoothing
  std::vector<std::size_t> matches;   // clipped n-gram matches
  std::vector<std::size_t> totals;    // candidate n-gram counts
  std::size_t candidate_length = 0;
  std::size_t reference_length = 0;
  double score = 0.0;
};

using Tokens = std::vector<std::string>;

// BP * exp(sum w_n ln p_n) with clipped n-gram precisions. For n >= 2 a zero
// match count is smoothed to (0 + 1) / (total + 1); p_1 is never smoothed.
// Empty weights mean uniform 1/max_n. An empty candidate scores 0 with BP 0.
// Throws ArgumentError for an empty reference or bad weights.
BleuBreakdown bleu(std::span<const std::string> candidate, std::span<const std::string> reference,
                   std::size_t max_n = 4, std::span<const double> weights = {});

// Pools clipped counts and lengths over all pairs before combining.
BleuBreakdown corpus_bleu(std::span<const Tokens> candidates, std::span<const Tokens> references,
                          std::size_t max_n = 4, std::span<const double> weights = {});

struct TimingRecord {
  double start_ms = 0.0;
  double end_ms = 0.0;
};

struct LatencyReport {
  std::vector<TimingRecord> records;
  std::size_t count = 0;
  double art_ms = 0.0;
};

// Mean of end - start. EmptyEvaluationError for no records, ClockError when a
// record ends before it starts.
LatencyReport average_response_time(std::span<const TimingRecord> records);

// prefix ++ completion re-lexes without error and every (), [], {} pair
// balances with proper nesting.
bool code_executability(std::span<const std::string> prefix, std::span<const std::string> completion);

// (cos(f_code(candidate), f_code(reference)) + 1) / 2; 0.5 when either
// feature has zero norm.
double semantic_consistency(std::span<const TokenId> candidate, std::span<const TokenId> reference,
                            const ContextEncoder& encoder);
double feature_consistency(std::span<const double> a, std::span<const double> b);

struct BenchmarkReport {
  std::string model;
  std::size_t prompts = 0;
  std::size_t generated_tokens = 0;
  double total_seconds = 0.0;
  double tokens_per_second = 0.0;
  std::size_t parameter_bytes = 0;
  std::size_t working_bytes = 0;  // allocation-counter peak above the starting level
  std::size_t memory_bytes = 0;   // parameter_bytes + working_bytes
  LatencyReport latency;          // one record per prompt
};

// Generates exactly max_new tokens per prompt (no EOS stop) on a monotonic
// clock. EmptyEvaluationError for an empty prompt set.
BenchmarkReport benchmark_throughput(const NextTokenModel& model,
                                     std::span<const std::vector<TokenId>> prompts,
                                     std::size_t max_new);

// Round half to even at `digits` decimals. Values within 1e-9 (in units of
// the last kept digit) of a tie count as a tie, so decimal ties such as
// 0.865 resolve as written rather than by their binary approximation.
double round_half_even(double x, int digits = 2);
std::string format_fixed(double x, int digits = 2);

namespace report {
inline constexpr const char* kTable1Header = "Model,Accuracy,Precision,Recall,F1-Score";
inline constexpr const char* kTable2Header = "Model,BLEU,Code Executability,Semantic Consistency";
inline constexpr const char* kTable3Header =
    "Model,Average Response Time(ms),Memory Usage(GB),Inference Speed(tokens/s)";
inline constexpr const char* kTable4Header =
    "Test Scenario,Accuracy,Recovery Ability,Stability Index";
inline constexpr const char* kFigureHeader = "model,metric,value";

inline constexpr const char* kTable1File = "tables/table1_accuracy.csv";
inline constexpr const char* kTable2File = "tables/table2_generation_quality.csv";
inline constexpr const char* kTable3File = "tables/table3_performance.csv";
inline constexpr const char* kTable4File = "tables/table4_robustness.csv";
inline constexpr const char* kFigure1File = "figures/figure1_accuracy.csv";
inline constexpr const char* kFigure2File = "figures/figure2_generation_quality.csv";
inline constexpr const char* kMetricsFile = "metrics.json";
}  // namespace report

struct AccuracyRow {
  std::string model;
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t total = 0;
  std::size_t correct = 0;
};

struct QualityRow {
  std::string model;
  double bleu = 0.0;
  double executability = 0.0;
  double semantic_consistency = 0.0;
  BleuBreakdown breakdown;
};

nlohmann::json to_json(const AccuracyRow& row);
nlohmann::json to_json(const QualityRow& row);
nlohmann::json to_json(const BenchmarkReport& row);
nlohmann::json to_json(const BleuBreakdown& b);

// CSV bodies rendered from a metrics.json document; sections absent from the
// document produce no file.
struct RenderedReport {
  std::map<std::string, std::string> files;  // relative path -> contents
};
RenderedReport render_report(const nlohmann::json& metrics);

// Writes metrics.json and every rendered file under `dir`. IoError when
// unwritable. Returns the relative paths written.
std::vector<std::string> emit_report(const nlohmann::json& metrics,
                                     const std::filesystem::path& dir);

}  // namespace hcc
