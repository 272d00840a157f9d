#include <catch2/catch_amalgamated.hpp>

#include <cstring>
#include <filesystem>
#include <fstream>

#include "wns/io.hpp"
#include "wns/pipeline.hpp"
#include "wns/testfields.hpp"

using namespace wns;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("wns_test_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

VectorField sample_field() {
  const Grid g(16, 8.0);
  FieldParams p;
  p.sigma = 0.6;
  VectorField u = gaussian_bump(g, p);
  u.c[1][5] = -0.0;
  u.c[2][7] = 1e-310;  // subnormal survives the round trip
  return u;
}

void write_bytes(const fs::path& p, const std::string& b) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(b.data(), static_cast<std::streamsize>(b.size()));
}

}  // namespace

TEST_CASE("sha256 known answers") {
  CHECK(sha256_hex("abc", 3) == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("", 0) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("field files") {
  const fs::path dir = scratch("fields");
  const VectorField u = sample_field();
  SECTION("bit-exact round trip with parameters") {
    save_field(dir / "a.wnsf", u, {{"time", "0.25"}, {"note", "two words"}});
    const LoadedField lf = load_field_with_params(dir / "a.wnsf");
    CHECK(lf.field.grid.n() == 16);
    CHECK(lf.field.grid.length() == 8.0);
    for (int j = 0; j < 3; ++j) CHECK(std::memcmp(lf.field.c[j].data(), u.c[j].data(), u.size() * 8) == 0);
    CHECK(lf.params.at("time") == "0.25");
    CHECK(lf.params.at("note") == "two words");
  }
  SECTION("big-endian payload: reversed bytes, same field") {
    save_field(dir / "le.wnsf", u, {}, Endian::little);
    save_field(dir / "be.wnsf", u, {}, Endian::big);
    const std::string le = read_file_bytes(dir / "le.wnsf"), be = read_file_bytes(dir / "be.wnsf");
    const std::size_t payload = 3 * u.size() * 8;
    const std::string pl = le.substr(le.size() - payload), pb = be.substr(be.size() - payload);
    // byte oracle for the first double, independent of the host order
    double first = u.c[0][0];
    unsigned char raw[8];
    std::memcpy(raw, &first, 8);
    for (int b = 0; b < 8; ++b) {
      const unsigned char want_le = std::endian::native == std::endian::little ? raw[b] : raw[7 - b];
      CHECK(static_cast<unsigned char>(pl[b]) == want_le);
      CHECK(static_cast<unsigned char>(pb[b]) == static_cast<unsigned char>(pl[7 - b]));
    }
    CHECK(be.find("endianness big\n") != std::string::npos);
    const LoadedField lb = load_field_with_params(dir / "be.wnsf");
    CHECK(lb.endian == Endian::big);
    CHECK(max_abs_difference(lb.field, u) == 0.0);
  }
  SECTION("truncated payload") {
    save_field(dir / "t.wnsf", u);
    std::string b = read_file_bytes(dir / "t.wnsf");
    b.resize(b.size() - 8);
    write_bytes(dir / "t.wnsf", b);
    CHECK_THROWS_AS(load_field(dir / "t.wnsf"), FormatError);
  }
  SECTION("truncated header") {
    write_bytes(dir / "h.wnsf", "wns-field 1\nn 16\n");
    CHECK_THROWS_AS(load_field(dir / "h.wnsf"), FormatError);
  }
  SECTION("flipped payload byte") {
    save_field(dir / "d.wnsf", u);
    std::string b = read_file_bytes(dir / "d.wnsf");
    b[b.size() - 100] ^= 0x01;
    write_bytes(dir / "d.wnsf", b);
    CHECK_THROWS_AS(load_field(dir / "d.wnsf"), DigestError);
  }
  SECTION("bad magic, unknown key, bad endianness tag") {
    save_field(dir / "m.wnsf", u);
    const std::string b = read_file_bytes(dir / "m.wnsf");
    std::string c = b;
    c[4] = 'X';
    write_bytes(dir / "m1.wnsf", c);
    CHECK_THROWS_AS(load_field(dir / "m1.wnsf"), FormatError);
    c = b;
    c.replace(c.find("components"), 10, "colourways");
    write_bytes(dir / "m2.wnsf", c);
    CHECK_THROWS_AS(load_field(dir / "m2.wnsf"), FormatError);
    c = b;
    c.replace(c.find("little"), 6, "middle");
    write_bytes(dir / "m3.wnsf", c);
    CHECK_THROWS_AS(load_field(dir / "m3.wnsf"), FormatError);
  }
  SECTION("missing file") { CHECK_THROWS(load_field(dir / "nope.wnsf")); }
  SECTION("parameter keys with spaces rejected") { CHECK_THROWS(save_field(dir / "k.wnsf", u, {{"a b", "1"}})); }
  fs::remove_all(dir);
}

TEST_CASE("key=value parsing") {
  SECTION("comments, blanks and whitespace") {
    const ParamMap m = parse_key_values("# header\n\n n = 32 \neps=0.5 # trailing\n");
    CHECK(m.size() == 2);
    CHECK(m.at("n") == "32");
    CHECK(m.at("eps") == "0.5");
  }
  SECTION("errors") {
    CHECK_THROWS_AS(parse_key_values("n 32\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("=3\n"), ConfigError);
    CHECK_THROWS_AS(parse_key_values("n=1\nn=2\n"), ConfigError);
  }
}

TEST_CASE("run configuration") {
  SECTION("round trip through the map") {
    RunConfig c;
    c.n = 48;
    c.epsilon = 0.25;
    c.field = "heavy_tail";
    c.field_params.decay = 0.6;
    c.nonlinear = false;
    const RunConfig d = RunConfig::from_map(c.to_map());
    CHECK(d.to_map() == c.to_map());
    CHECK(d.n == 48);
    CHECK(d.field_params.decay == 0.6);
    CHECK_FALSE(d.nonlinear);
  }
  SECTION("unknown key and malformed numbers") {
    CHECK_THROWS_AS(RunConfig::from_map({{"epsilonn", "1"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_map({{"epsilon", "one"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_map({{"n", "32.5"}}), ConfigError);
    CHECK_THROWS_AS(RunConfig::from_map({{"dt", "1e-3x"}}), ConfigError);
  }
  SECTION("file round trip") {
    const fs::path dir = scratch("config");
    RunConfig c;
    c.eta = 0.05;
    write_config(dir / "run.cfg", c);
    CHECK(RunConfig::load(dir / "run.cfg").to_map() == c.to_map());
    fs::remove_all(dir);
  }
}

TEST_CASE("trajectory directories") {
  const fs::path dir = scratch("traj");
  const Grid g(16, 8.0);
  FieldParams p;
  p.sigma = 0.6;
  const SolverConfig cfg = SolverConfig::make(g, 1.0, 1.0, 5e-3, 0.02, 2);
  const Trajectory tr = solve_mollified(gaussian_bump(g, p), cfg);
  const auto written = save_trajectory(dir, tr, {{"epsilon", "1"}});
  CHECK(written.size() == tr.size() + 2);
  for (const auto& [name, digest] : written) CHECK(file_digest(dir / name) == digest);
  const Trajectory back = load_trajectory(dir);
  REQUIRE(back.size() == tr.size());
  for (std::size_t k = 0; k < tr.size(); ++k) {
    CHECK(back.times[k] == tr.times[k]);
    CHECK(max_abs_difference(back.snapshots[k], tr.snapshots[k]) == 0.0);
  }
  CHECK(back.epsilon == tr.epsilon);
  CHECK(back.dt == tr.dt);
  CHECK(back.nonlinear == tr.nonlinear);
  fs::remove(dir / "trajectory.txt");
  CHECK_THROWS(load_trajectory(dir));
  fs::remove_all(dir);
}

TEST_CASE("manifest and worker count") {
  const fs::path dir = scratch("manifest");
  RunManifest m;
  m.config = {{"n", "32"}};
  m.outputs = {{"u0.wnsf", "abc"}};
  m.stages = {{"split", "ok"}, {"solve_u", "failed: blew up"}};
  m.results = {{"eta", "0.1"}};
  write_manifest(dir / "manifest.txt", m);
  const ParamMap back = read_key_values(dir / "manifest.txt");
  CHECK(back.at("code_version") == kCodeVersion);
  CHECK(back.at("config.n") == "32");
  CHECK(back.at("output.u0.wnsf") == "abc");
  CHECK(back.at("stage.solve_u") == "failed: blew up");
  CHECK(back.at("result.eta") == "0.1");
  fs::remove_all(dir);

  ::setenv("WNS_WORKERS", "3", 1);
  CHECK(worker_count() == 3);
  ::setenv("WNS_WORKERS", "0", 1);
  CHECK(worker_count() == 1);
  ::setenv("WNS_WORKERS", "many", 1);
  CHECK_THROWS_AS(worker_count(), ConfigError);
  ::unsetenv("WNS_WORKERS");
  CHECK(worker_count() == 1);
}
