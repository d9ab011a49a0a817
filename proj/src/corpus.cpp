#include "hcc/corpus.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "hcc/lexer.hpp"

namespace hcc {

namespace {
constexpr std::array<std::string_view, special::count> kReserved = {"<pad>", "<unk>", "<bos>",
                                                                    "<eos>", "<mask>"};
}  // namespace

std::string_view reserved_spelling(TokenId id) {
  if (id < 0 || id >= special::count) throw VocabularyError("not a reserved id: " + std::to_string(id));
  return kReserved[static_cast<std::size_t>(id)];
}

Vocabulary::Vocabulary() : Vocabulary(std::span<const std::string>{}) {}

Vocabulary::Vocabulary(std::span<const std::string> tokens) {
  id_to_token_.reserve(special::count + tokens.size());
  for (auto r : kReserved) id_to_token_.emplace_back(r);
  id_to_token_.insert(id_to_token_.end(), tokens.begin(), tokens.end());
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) {
    auto [it, inserted] = token_to_id_.emplace(id_to_token_[i], static_cast<TokenId>(i));
    if (!inserted) throw VocabularyError("duplicate vocabulary entry '" + id_to_token_[i] + "'");
  }
}

bool Vocabulary::contains(std::string_view token) const {
  return token_to_id_.find(std::string(token)) != token_to_id_.end();
}

TokenId Vocabulary::id(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  return it == token_to_id_.end() ? special::unk : it->second;
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_token_.size()) {
    throw VocabularyError("unassigned token id " + std::to_string(id) + " (vocabulary size " +
                          std::to_string(id_to_token_.size()) + ")");
  }
  return id_to_token_[static_cast<std::size_t>(id)];
}

std::vector<std::string> Vocabulary::learned_tokens() const {
  return {id_to_token_.begin() + special::count, id_to_token_.end()};
}

Vocabulary build_vocabulary(std::span<const std::vector<std::string>> samples, std::size_t max_size,
                            std::size_t min_freq) {
  if (max_size <= static_cast<std::size_t>(special::count)) {
    throw ArgumentError("vocabulary max_size must exceed the " + std::to_string(special::count) +
                        " reserved ids");
  }
  std::map<std::string, std::size_t> freq;
  for (const auto& sample : samples) {
    for (const auto& tok : sample) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  for (auto& [tok, n] : freq) {
    if (n >= min_freq && std::find(kReserved.begin(), kReserved.end(), tok) == kReserved.end()) {
      ranked.emplace_back(tok, n);
    }
  }
  // std::map iteration is already lexicographic, so a stable sort by count
  // leaves ties in ascending order.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - special::count);
  std::vector<std::string> tokens;
  tokens.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) tokens.push_back(ranked[i].first);
  return Vocabulary(tokens);
}

std::vector<TokenId> encode(std::span<const std::string> tokens, const Vocabulary& vocab) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(vocab.id(t));
  return ids;
}

std::vector<std::string> decode(std::span<const TokenId> ids, const Vocabulary& vocab) {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (TokenId id : ids) tokens.push_back(vocab.token(id));
  return tokens;
}

TokenizedSample tokenize_sample(std::string source, const Vocabulary& vocab) {
  TokenizedSample s;
  s.tokens = tokenize_code(source);
  s.ids = encode(s.tokens, vocab);
  s.source = std::move(source);
  return s;
}

std::vector<CodeSample> parse_corpus(std::string_view text) {
  std::vector<CodeSample> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), line_no);
    }
    if (!obj.is_object()) throw ParseError("expected a JSON object", line_no);
    auto it = obj.find("code");
    if (it == obj.end()) {
      throw SchemaError("line " + std::to_string(line_no) + ": missing required field \"code\"");
    }
    if (!it->is_string()) {
      throw SchemaError("line " + std::to_string(line_no) + ": field \"code\" must be a string");
    }
    out.push_back({it->get<std::string>()});
  }
  return out;
}

std::vector<CodeSample> load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

void validate_ratios(const SplitRatios& r) {
  if (r.train < 0 || r.valid < 0 || r.test < 0) {
    throw ArgumentError("split ratios must be nonnegative");
  }
  if (std::abs(r.train + r.valid + r.test - 1.0) > 1e-9) {
    throw ArgumentError("split ratios must sum to 1");
  }
}

}  // namespace hcc
