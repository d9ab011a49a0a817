#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "hcc/checkpoint.hpp"
#include "hcc/errors.hpp"

using namespace hcc;

namespace {

CheckpointInfo sample_info() {
  const std::vector<std::string> toks = {"def", "x", "(", ")"};
  return {Vocabulary(toks), {"P0", "P1", "P2", "P3"}, 99};
}

}  // namespace

TEST_CASE("checkpoint round trip") {
  HybridModel model(testutil::tiny_config(FusionMode::dynamic_gate), 21);
  model.fusion().gate().c.value[0] = 0.125;
  const std::string bytes = serialize_checkpoint(model, sample_info());
  CHECK(bytes.substr(0, 4) == "HCC1");
  Checkpoint ck = parse_checkpoint(bytes);
  CHECK(ck.model.config().fusion == FusionMode::dynamic_gate);
  CHECK(ck.model.config().encoder == model.config().encoder);
  CHECK(ck.info.vocabulary == sample_info().vocabulary);
  CHECK(ck.info.phases == sample_info().phases);
  CHECK(ck.info.seed == 99);
  // values are stored as f32
  const auto a = model.parameters();
  const auto b = ck.model.parameters();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i]->name == b[i]->name);
    for (std::size_t j = 0; j < a[i]->value.size(); ++j) {
      CHECK(b[i]->value[j] == static_cast<double>(static_cast<float>(a[i]->value[j])));
    }
  }
  CHECK(serialize_checkpoint(ck.model, ck.info) == bytes);
}

TEST_CASE("file save and load") {
  const auto dir = std::filesystem::temp_directory_path() / "hcc_ckpt_test";
  std::filesystem::remove_all(dir);
  HybridModel model(testutil::tiny_config(), 22);
  save_checkpoint(model, sample_info(), dir / "nested" / "m.hcc");
  Checkpoint ck = load_checkpoint(dir / "nested" / "m.hcc");
  CHECK(serialize_checkpoint(ck.model, ck.info) == read_file(dir / "nested" / "m.hcc"));
  CHECK_THROWS_AS(load_checkpoint(dir / "missing.hcc"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("corrupted checkpoints are rejected") {
  HybridModel model(testutil::tiny_config(), 23);
  const std::string bytes = serialize_checkpoint(model, sample_info());

  std::string flipped = bytes;
  flipped[flipped.size() - 3] ^= 0x10;
  CHECK_THROWS_AS(parse_checkpoint(flipped), CorruptionError);

  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, bytes.size() - 8)), CorruptionError);
  CHECK_THROWS_AS(parse_checkpoint(bytes.substr(0, 10)), DataError);

  std::string magic = bytes;
  magic[0] = 'X';
  CHECK_THROWS_AS(parse_checkpoint(magic), FormatError);

  CHECK_THROWS_AS(parse_checkpoint(bytes, 2), VersionError);
  CHECK_THROWS_AS(parse_checkpoint(""), FormatError);
}

TEST_CASE("garbled manifest is a format error") {
  HybridModel model(testutil::tiny_config(), 24);
  std::string bytes = serialize_checkpoint(model, sample_info());
  // first manifest byte is '{'
  REQUIRE(bytes[12] == '{');
  bytes[12] = '!';
  CHECK_THROWS_AS(parse_checkpoint(bytes), FormatError);
}
