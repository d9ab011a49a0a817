#include "hcc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "hcc/digest.hpp"
#include "hcc/errors.hpp"
#include "json.hpp"

namespace hcc {

namespace {

using nlohmann::json;

constexpr std::string_view kMagic = "HCC1";
constexpr std::size_t kHeader = 4 + 8;

json backbone_json(const BackboneConfig& c) {
  return {{"layers", c.layers},     {"d_model", c.d_model}, {"heads", c.heads},
          {"ff_width", c.ff_width}, {"max_len", c.max_len}, {"vocab_size", c.vocab_size}};
}

BackboneConfig backbone_from(const json& j) {
  BackboneConfig c;
  c.layers = j.at("layers").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.heads = j.at("heads").get<std::size_t>();
  c.ff_width = j.at("ff_width").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  return c;
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

std::uint64_t get_u64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(in[static_cast<std::size_t>(i)]);
  return v;
}

void put_f32(std::string& out, double value) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(value));
  for (int i = 0; i < 4; ++i) out += static_cast<char>((bits >> (8 * i)) & 0xff);
}

double get_f32(const char* p) {
  std::uint32_t bits = 0;
  for (int i = 3; i >= 0; --i) bits = (bits << 8) | static_cast<unsigned char>(p[i]);
  return static_cast<double>(std::bit_cast<float>(bits));
}

}  // namespace

std::string serialize_checkpoint(HybridModel& model, const CheckpointInfo& info) {
  std::string payload;
  json tensors = json::array();
  for (const Parameter* p : model.parameters()) {
    const std::size_t offset = payload.size();
    for (std::size_t i = 0; i < p->value.size(); ++i) put_f32(payload, p->value[i]);
    tensors.push_back({{"name", p->name},
                       {"dtype", "f32"},
                       {"shape", p->value.shape()},
                       {"offset", offset},
                       {"byte_length", payload.size() - offset}});
  }

  const HybridConfig& cfg = model.config();
  const json manifest = {
      {"format_version", kCheckpointVersion},
      {"configs",
       {{"encoder", backbone_json(cfg.encoder)},
        {"generator", backbone_json(cfg.generator)},
        {"fusion", std::string(fusion_mode_name(cfg.fusion))}}},
      {"vocabulary", info.vocabulary.learned_tokens()},
      {"tensors", tensors},
      {"digest", sha256_hex(payload)},
      {"phases", info.phases},
      {"seed", info.seed},
  };
  const std::string text = manifest.dump();

  std::string out(kMagic);
  put_u64(out, text.size());
  out += text;
  out += payload;
  return out;
}

Checkpoint parse_checkpoint(std::string_view bytes, int reader_version) {
  if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  if (bytes.size() < kHeader) throw CorruptionError("checkpoint header truncated");
  const std::uint64_t n = get_u64(bytes.substr(4, 8));
  if (n > bytes.size() - kHeader) throw CorruptionError("checkpoint manifest truncated");

  json manifest;
  try {
    manifest = json::parse(bytes.substr(kHeader, n));
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("checkpoint manifest is not JSON: ") + e.what());
  }

  Checkpoint ck;
  std::map<std::string, const json*> directory;
  std::string digest;
  try {
    const int version = manifest.at("format_version").get<int>();
    if (version != reader_version) {
      throw VersionError("checkpoint format version " + std::to_string(version) +
                         " cannot be read by version " + std::to_string(reader_version));
    }
    HybridConfig cfg;
    const json& configs = manifest.at("configs");
    cfg.encoder = backbone_from(configs.at("encoder"));
    cfg.generator = backbone_from(configs.at("generator"));
    cfg.fusion = parse_fusion_mode(configs.at("fusion").get<std::string>());

    const auto tokens = manifest.at("vocabulary").get<std::vector<std::string>>();
    ck.info.vocabulary = Vocabulary(tokens);
    ck.info.phases = manifest.at("phases").get<std::vector<std::string>>();
    ck.info.seed = manifest.at("seed").get<std::uint64_t>();
    ck.model = HybridModel(cfg, ck.info.seed);
    digest = manifest.at("digest").get<std::string>();

    for (const json& t : manifest.at("tensors")) {
      const auto name = t.at("name").get<std::string>();
      if (t.at("dtype").get<std::string>() != "f32") {
        throw FormatError("tensor '" + name + "' has unsupported dtype");
      }
      if (!directory.emplace(name, &t).second) {
        throw CorruptionError("tensor '" + name + "' appears twice");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint manifest malformed: ") + e.what());
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("checkpoint manifest malformed: ") + e.what());
  }

  const std::string_view payload = bytes.substr(kHeader + n);
  if (sha256_hex(payload) != digest) {
    throw CorruptionError("checkpoint payload digest mismatch (truncated or modified)");
  }

  const ParameterRefs params = ck.model.parameters();
  if (directory.size() != params.size()) {
    throw CorruptionError("checkpoint holds " + std::to_string(directory.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (Parameter* p : params) {
    const auto it = directory.find(p->name);
    if (it == directory.end()) throw CorruptionError("tensor '" + p->name + "' missing");
    const json& t = *it->second;
    Shape shape;
    std::size_t offset = 0;
    std::size_t length = 0;
    try {
      shape = t.at("shape").get<Shape>();
      offset = t.at("offset").get<std::size_t>();
      length = t.at("byte_length").get<std::size_t>();
    } catch (const json::exception& e) {
      throw FormatError("tensor '" + p->name + "' entry malformed: " + e.what());
    }
    if (shape != p->value.shape() || length != 4 * p->value.size()) {
      throw CorruptionError("tensor '" + p->name + "' has shape " + shape_string(shape) +
                            ", expected " + shape_string(p->value.shape()));
    }
    if (offset > payload.size() || length > payload.size() - offset) {
      throw CorruptionError("tensor '" + p->name + "' data truncated");
    }
    for (std::size_t i = 0; i < p->value.size(); ++i) {
      p->value[i] = get_f32(payload.data() + offset + 4 * i);
    }
  }
  return ck;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

void save_checkpoint(HybridModel& model, const CheckpointInfo& info,
                     const std::filesystem::path& path) {
  write_file(path, serialize_checkpoint(model, info));
}

Checkpoint load_checkpoint(const std::filesystem::path& path, int reader_version) {
  return parse_checkpoint(read_file(path), reader_version);
}

}  // namespace hcc
