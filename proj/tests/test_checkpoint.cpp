#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "ceskd/checkpoint.hpp"
#include "ceskd/error.hpp"

using namespace ceskd;

namespace {

std::string temp_path(const char* name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

Model sample_model(std::uint64_t seed = 17) {
  ModelSpec spec;
  spec.input_shape = {1, 6, 6};
  spec.layers = {LayerSpec::conv2d(1, 2, 3, 1, 1), LayerSpec::relu(), LayerSpec::maxpool2d(2, 2),
                 LayerSpec::flatten(), LayerSpec::dense(2 * 3 * 3, 4)};
  spec.depth_tag = 6;
  spec.init_seed = seed;
  return init_weights(spec, seed);
}

std::vector<unsigned char> slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("checkpoint round-trips byte for byte") {
  const Model m = sample_model();
  const std::string p1 = temp_path("ceskd_ckpt_a");
  const std::string p2 = temp_path("ceskd_ckpt_b");
  save_checkpoint(m, p1);
  const Model back = load_checkpoint(p1);

  CHECK(back.spec.depth_tag == 6);
  CHECK(back.spec.init_seed == m.spec.init_seed);
  CHECK(back.spec.input_shape == m.spec.input_shape);
  REQUIRE(back.params.size() == m.params.size());
  for (std::size_t i = 0; i < m.params.size(); ++i) {
    REQUIRE(back.params[i].size() == m.params[i].size());
    for (std::size_t j = 0; j < m.params[i].size(); ++j) {
      CHECK(back.params[i][j].shape == m.params[i][j].shape);
      CHECK(back.params[i][j].data == m.params[i][j].data);  // bit exact
    }
  }
  CHECK(param_checksum(back) == param_checksum(m));
  CHECK(checkpoint_id(back) == checkpoint_id(m));

  // saving the reloaded model reproduces the file exactly
  save_checkpoint(back, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("a single corrupted payload byte is detected") {
  const Model m = sample_model();
  const std::string path = temp_path("ceskd_ckpt_corrupt");
  save_checkpoint(m, path);
  auto bytes = slurp(path);
  bytes[bytes.size() - 3] ^= 0x40;  // flip one bit inside the last float
  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
  }
  try {
    load_checkpoint(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("checksum") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("truncated payload and trailing bytes are rejected") {
  const Model m = sample_model();
  const std::string path = temp_path("ceskd_ckpt_trunc");
  save_checkpoint(m, path);
  auto bytes = slurp(path);

  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size() - 5));
  }
  CHECK_THROWS_AS(load_checkpoint(path), ParseError);

  bytes.push_back(0xab);
  {
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<long>(bytes.size()));
  }
  try {
    load_checkpoint(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("trailing") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("wrong magic line names the supported version") {
  const std::string path = temp_path("ceskd_ckpt_magic");
  {
    std::ofstream out(path, std::ios::binary);
    out << "CESKD-CKPT 9\njunk\n";
  }
  try {
    load_checkpoint(path);
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("CESKD-CKPT 1") != std::string::npos);
  }
  std::remove(path.c_str());
}

TEST_CASE("a header describing an inconsistent stack is rejected") {
  const Model m = sample_model();
  const std::string path = temp_path("ceskd_ckpt_badspec");
  save_checkpoint(m, path);
  auto bytes = slurp(path);
  std::string text(bytes.begin(), bytes.end());
  // change the dense input width so the layer no longer fits its predecessor
  const std::string needle = "dense 18 4";
  const auto pos = text.find(needle);
  REQUIRE(pos != std::string::npos);
  text.replace(pos, needle.size(), "dense 19 4");
  {
    std::ofstream out(path, std::ios::binary);
    out.write(text.data(), static_cast<long>(text.size()));
  }
  CHECK_THROWS_AS(load_checkpoint(path), ConfigError);
  std::remove(path.c_str());
}

TEST_CASE("distinct parameters give distinct checkpoint ids") {
  CHECK(checkpoint_id(sample_model(1)) != checkpoint_id(sample_model(2)));
  CHECK(checkpoint_id(sample_model(1)) == checkpoint_id(sample_model(1)));
}

TEST_CASE("missing file errors cleanly") {
  CHECK_THROWS_AS(load_checkpoint(temp_path("ceskd_no_such_ckpt")), ParseError);
}
