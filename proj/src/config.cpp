#include <charconv>
#include <set>

#include "hcc/checkpoint.hpp"
#include "hcc/cli.hpp"
#include "hcc/errors.hpp"
#include "json.hpp"

namespace hcc {

namespace {

using nlohmann::json;

// One JSON object level: typed getters that remember which keys were read,
// then finish() rejects whatever is left.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("'" + where() + "' must be an object");
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  std::string key_path(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  std::size_t size(const std::string& key, std::size_t fallback) {
    if (!has(key)) return fallback;
    return as_size(j_.at(key), key_path(key));
  }

  double number(const std::string& key, double fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_number()) throw ConfigError("'" + key_path(key) + "' must be a number");
    return v.get<double>();
  }

  std::string text(const std::string& key, const std::string& fallback) {
    if (!has(key)) return fallback;
    const json& v = j_.at(key);
    if (!v.is_string()) throw ConfigError("'" + key_path(key) + "' must be a string");
    return v.get<std::string>();
  }

  std::string required_text(const std::string& key) {
    if (!has(key)) throw ConfigError("missing required key '" + key_path(key) + "'");
    return text(key, "");
  }

  std::optional<Section> child(const std::string& key) {
    if (!has(key)) return std::nullopt;
    return Section(j_.at(key), key_path(key));
  }

  const json& raw(const std::string& key) {
    seen_.insert(key);
    return j_.at(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.contains(key)) throw SchemaError("unknown configuration key '" + key_path(key) + "'");
    }
  }

  static std::size_t as_size(const json& v, const std::string& path) {
    if (!v.is_number_unsigned()) {
      throw ConfigError("'" + path + "' must be a non-negative integer");
    }
    return v.get<std::size_t>();
  }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_backbone(Section s, BackboneConfig& c) {
  c.layers = s.size("layers", c.layers);
  c.d_model = s.size("d_model", c.d_model);
  c.heads = s.size("heads", c.heads);
  c.ff_width = s.size("ff_width", c.ff_width);
  c.max_len = s.size("max_len", c.max_len);
  s.finish();
}

template <std::size_t N, class T>
std::array<T, N> fixed_array(const json& v, const std::string& path) {
  if (!v.is_array() || v.size() != N) {
    throw ConfigError("'" + path + "' must be an array of " + std::to_string(N) + " values");
  }
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) {
    if constexpr (std::is_floating_point_v<T>) {
      if (!v[i].is_number()) throw ConfigError("'" + path + "' must hold numbers");
      out[i] = v[i].get<T>();
    } else {
      out[i] = Section::as_size(v[i], path);
    }
  }
  return out;
}

}  // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("configuration is not valid JSON: ") + e.what());
  }

  RunConfig cfg;
  Section root(doc, "");
  const auto resolve = [&base_dir](const std::string& p) {
    const std::filesystem::path path(p);
    return path.is_absolute() || base_dir.empty() ? path : base_dir / path;
  };
  cfg.corpus = resolve(root.required_text("corpus"));
  cfg.output = resolve(root.required_text("output"));
  if (root.has("seed")) cfg.seed = Section::as_size(root.raw("seed"), "seed");

  if (auto split = root.child("split")) {
    if (split->has("ratios")) {
      const auto r = fixed_array<3, double>(split->raw("ratios"), "split.ratios");
      cfg.split = {r[0], r[1], r[2]};
    }
    split->finish();
  }
  if (auto vocab = root.child("vocab")) {
    cfg.vocab_max_size = vocab->size("max_size", cfg.vocab_max_size);
    cfg.vocab_min_freq = vocab->size("min_freq", cfg.vocab_min_freq);
    vocab->finish();
  }
  if (auto model = root.child("model")) {
    if (auto enc = model->child("encoder")) read_backbone(*enc, cfg.model.encoder);
    if (auto gen = model->child("generator")) read_backbone(*gen, cfg.model.generator);
    model->finish();
  }
  if (auto fusion = root.child("fusion")) {
    const std::string mode = fusion->text("mode", "static");
    try {
      cfg.model.fusion = parse_fusion_mode(mode);
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("fusion.mode: ") + e.what());
    }
    fusion->finish();
  }
  if (auto train = root.child("train")) {
    TrainConfig& t = cfg.train;
    t.batch_size = train->size("batch_size", t.batch_size);
    t.optimizer = parse_optimizer(train->text("optimizer", std::string(optimizer_name(t.optimizer))));
    t.momentum = train->number("momentum", t.momentum);
    t.context_window = train->size("context_window", t.context_window);
    if (train->has("rates")) t.rates = fixed_array<4, double>(train->raw("rates"), "train.rates");
    if (train->has("epochs")) {
      t.epochs = fixed_array<4, std::size_t>(train->raw("epochs"), "train.epochs");
    }
    train->finish();
  }
  if (auto metrics = root.child("metrics")) {
    cfg.bleu_max_n = metrics->size("bleu_max_n", cfg.bleu_max_n);
    if (auto rob = metrics->child("robustness")) {
      cfg.robustness.noisy = rob->number("noisy", cfg.robustness.noisy);
      cfg.robustness.incomplete = rob->number("incomplete", cfg.robustness.incomplete);
      cfg.robustness.abnormal = rob->number("abnormal", cfg.robustness.abnormal);
      rob->finish();
    }
    metrics->finish();
  }
  if (auto bench = root.child("bench")) {
    cfg.bench_prompts = bench->size("prompts", cfg.bench_prompts);
    cfg.bench_max_new = bench->size("max_new", cfg.bench_max_new);
    bench->finish();
  }
  if (auto remote = root.child("remote")) {
    cfg.remote_url = remote->text("url", cfg.remote_url);
    cfg.remote_timeout_ms = static_cast<int>(remote->size("timeout_ms", 10000));
    remote->finish();
  }
  root.finish();

  try {
    validate_ratios(cfg.split);
  } catch (const ArgumentError& e) {
    throw ConfigError(std::string("split.ratios: ") + e.what());
  }
  cfg.train.seed = cfg.seed;
  cfg.train.validate();
  for (const BackboneConfig* b : {&cfg.model.encoder, &cfg.model.generator}) {
    BackboneConfig probe = *b;
    probe.vocab_size = special::count + 1;
    try {
      probe.validate();
    } catch (const ArgumentError& e) {
      throw ConfigError(std::string("model: ") + e.what());
    }
  }
  if (cfg.vocab_max_size <= static_cast<std::size_t>(special::count)) {
    throw ConfigError("vocab.max_size must exceed the reserved token count");
  }
  if (cfg.bleu_max_n == 0) throw ConfigError("metrics.bleu_max_n must be positive");
  for (double r : {cfg.robustness.noisy, cfg.robustness.incomplete, cfg.robustness.abnormal}) {
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("metrics.robustness rates must lie in [0, 1]");
  }
  if (cfg.bench_prompts == 0 || cfg.bench_max_new == 0) {
    throw ConfigError("bench.prompts and bench.max_new must be positive");
  }
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const IoError&) {
    throw ConfigError("cannot read configuration '" + path.string() + "'");
  }
  return parse_config(text, path.parent_path());
}

EffectiveSettings resolve_environment(const RunConfig& config,
                                      std::optional<std::uint64_t> flag_seed,
                                      const EnvLookup& env) {
  EffectiveSettings s;
  s.seed = config.seed;
  if (auto raw = env("CC_SEED"); raw && !raw->empty()) {
    std::uint64_t v = 0;
    const char* end = raw->data() + raw->size();
    const auto [ptr, ec] = std::from_chars(raw->data(), end, v);
    if (ec != std::errc() || ptr != end) {
      throw ConfigError("CC_SEED must be an unsigned integer, got '" + *raw + "'");
    }
    s.seed = v;
  }
  if (flag_seed) s.seed = *flag_seed;
  s.backend = backend_from_environment(env, config.remote_url, config.remote_timeout_ms);
  return s;
}

}  // namespace hcc
