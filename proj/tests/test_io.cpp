#include "doctest.h"

#include <sys/wait.h>
#include <unistd.h>

#include <bit>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nspg/io.hpp"

using namespace nspg;
namespace fs = std::filesystem;

namespace {

SampledField small_field(int rank) {
  SampledField f;
  f.grid = Grid3(Vec3(-1.0, 0.5, 2.0), 0.125, {3, 4, 5});
  f.times = TimeGrid(0.25, 0.75, 3);
  f.rank = rank;
  f.values.resize(f.grid.size() * f.times.n * rank);
  for (std::size_t i = 0; i < f.values.size(); ++i) f.values[i] = std::sin(0.37 * i) * std::exp(0.01 * i) - 1.0 / (i + 3);
  return f;
}

bool same_bits(const SampledField& a, const SampledField& b) {
  return a.rank == b.rank && a.grid.n == b.grid.n && a.grid.h == b.grid.h && a.grid.origin == b.grid.origin &&
         a.times.n == b.times.n && a.times.t_start == b.times.t_start && a.times.t_end == b.times.t_end &&
         a.values.size() == b.values.size() &&
         std::memcmp(a.values.data(), b.values.data(), a.values.size() * sizeof(double)) == 0;
}

void swap_word(std::vector<unsigned char>& b, std::size_t at, std::size_t width) {
  std::reverse(b.begin() + static_cast<std::ptrdiff_t>(at), b.begin() + static_cast<std::ptrdiff_t>(at + width));
}

// Byte-reverses every word after the 8-byte magic, built by hand from the layout.
std::vector<unsigned char> foreign_endian(std::vector<unsigned char> b) {
  swap_word(b, 8, 4);
  swap_word(b, 12, 4);
  for (std::size_t at = 16; at < b.size(); at += 8) swap_word(b, at, 8);
  return b;
}

void put_u64(std::vector<unsigned char>& b, std::size_t at, std::uint64_t v) { std::memcpy(b.data() + at, &v, 8); }

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("nspg_io_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(dir, ec);
  }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  std::stringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

struct Run {
  int status;
  std::string err;
};

Run cli(const std::string& args, const Scratch& s) {
  const char* bin = std::getenv("NSPG_CLI");
  REQUIRE_MESSAGE(bin != nullptr, "NSPG_CLI must point at the nspg binary");
  const std::string err = s / "stderr.txt";
  const std::string cmd = std::string(bin) + " " + args + " > " + (s / "stdout.txt") + " 2> " + err;
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(err)};
}

std::vector<std::vector<double>> csv_rows(const std::string& path, std::string* header = nullptr) {
  std::ifstream is(path);
  std::string line;
  std::vector<std::vector<double>> rows;
  bool seen_header = false;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!seen_header) {
      seen_header = true;
      if (header) *header = line;
      continue;
    }
    std::vector<double> r;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) r.push_back(std::stod(cell));
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("encode and decode are exact inverses") {
  for (int rank : {1, 3}) {
    const SampledField f = small_field(rank);
    const auto bytes = encode_field(f);
    CHECK(bytes.size() == kHeaderBytes + f.values.size() * 8);
    CHECK(std::memcmp(bytes.data(), "NSPG1\0\0\0", 8) == 0);
    CHECK(same_bits(decode_field(bytes), f));
  }
}

TEST_CASE("foreign byte order is swapped transparently") {
  const SampledField f = small_field(3);
  const auto little = encode_field(f, std::endian::little);
  const auto fixture = foreign_endian(little);
  CHECK(fixture != little);
  CHECK(same_bits(decode_field(fixture), f));
  CHECK(encode_field(f, std::endian::big) == fixture);
}

TEST_CASE("malformed payloads raise specific errors") {
  const SampledField f = small_field(1);
  const auto good = encode_field(f);
  auto code_of = [](const std::vector<unsigned char>& b) {
    try {
      decode_field(b);
    } catch (const IoError& e) {
      return e.code();
    }
    FAIL("decode accepted a malformed payload");
    return IoErrorCode::BadHeader;
  };

  std::vector<unsigned char> truncated(good.begin(), good.end() - 8);
  CHECK(code_of(truncated) == IoErrorCode::TruncatedPayload);
  std::vector<unsigned char> header_only(good.begin(), good.begin() + 40);
  CHECK(code_of(header_only) == IoErrorCode::TruncatedPayload);
  CHECK(code_of(std::vector<unsigned char>(3, 0)) == IoErrorCode::TruncatedPayload);

  auto magic = good;
  magic[4] = '2';
  CHECK(code_of(magic) == IoErrorCode::MagicMismatch);

  auto huge = good;
  put_u64(huge, 16, std::uint64_t{1} << 40);
  CHECK(code_of(huge) == IoErrorCode::DimOverflow);
  auto product = good;
  for (std::size_t a = 0; a < 4; ++a) put_u64(product, 16 + 8 * a, std::uint64_t{1} << 30);
  CHECK(code_of(product) == IoErrorCode::DimOverflow);

  auto rank = good;
  rank[12] = 2;
  CHECK(code_of(rank) == IoErrorCode::BadHeader);
  auto marker = good;
  marker[8] ^= 0xFF;
  CHECK(code_of(marker) == IoErrorCode::BadHeader);
  auto trailing = good;
  trailing.push_back(0);
  CHECK(code_of(trailing) == IoErrorCode::BadHeader);
}

TEST_CASE("files and metadata round trip") {
  const Scratch s;
  const SampledField f = small_field(3);
  FieldMeta m;
  m.generator = "gaussian-vortex";
  m.params = {{"amplitude", 0.1}, {"width", 1.0 / 3.0}};
  m.decay = DecayClass::Gaussian;
  m.divergence_free = true;
  m.config_hash = "0123456789abcdef";
  write_field(s / "f.nspg", f, m);
  CHECK(same_bits(read_field(s / "f.nspg"), f));
  const FieldMeta back = read_meta(meta_path(s / "f.nspg"));
  CHECK(back.generator == m.generator);
  CHECK(back.params == m.params);
  CHECK(back.decay == m.decay);
  CHECK(back.divergence_free);
  CHECK(back.config_hash == m.config_hash);

  try {
    read_field(s / "missing.nspg");
    FAIL("missing file accepted");
  } catch (const IoError& e) {
    CHECK(e.code() == IoErrorCode::OpenFailed);
  }
  std::ofstream(s / "bad.meta") << "generator=x\nno equals sign\n";
  CHECK_THROWS_AS(read_meta(s / "bad.meta"), IoError);
}

TEST_CASE("loading a generator file reconstructs the analytic field") {
  const Scratch s;
  const FieldPair tg = make_taylor_green(1.0);
  const Grid3 g(Vec3::Constant(-kPi), 2 * kPi / 15, {16, 16, 16});
  const SampledField sf = sample(tg.u, g, TimeGrid(0.0, 1.0, 3));
  write_field(s / "tg.nspg", sf, meta_from_traits(tg.u.traits(), "h"));
  const LoadedVelocity lv = load_velocity(s / "tg.nspg");
  CHECK(lv.analytic);
  CHECK((lv.u(Vec3(0.1, 0.2, 0.3), 0.4) - tg.u(Vec3(0.1, 0.2, 0.3), 0.4)).norm() == 0.0);

  SampledField edited = sf;
  edited.values[17] += 1e-6;
  write_field(s / "edited.nspg", edited, meta_from_traits(tg.u.traits(), "h"));
  const LoadedVelocity iv = load_velocity(s / "edited.nspg");
  CHECK_FALSE(iv.analytic);
  const Vec3 node = g.node(3, 4, 5);
  CHECK((iv.u(node, 0.5) - tg.u(node, 0.5)).norm() < 1e-12);
  CHECK(iv.u(Vec3(100, 0, 0), 0.5).norm() == 0.0);
}

TEST_CASE("run configuration") {
  RunConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.number("tol_far") == 1e-7);
  CHECK(c.get("name") == "taylor-green");
  const RunConfig p = RunConfig::parse("# comment\ntol_far = 1e-5\nradii=2,4,8 # trailing\nparam.amp1=0.3\n");
  CHECK(p.number("tol_far") == 1e-5);
  CHECK(p.list("radii") == std::vector<double>{2, 4, 8});
  CHECK(p.params().at("amp1") == 0.3);
  CHECK(p.vec3("beta_center") == Vec3::Zero());

  auto rejects = [](const std::string& text, const std::string& key) {
    try {
      RunConfig::parse(text).validate();
    } catch (const Error& e) {
      return std::string(e.what()).find(key) != std::string::npos;
    }
    return false;
  };
  CHECK(rejects("tol_far=-1\n", "tol_far"));
  CHECK(rejects("tol_check=0\n", "tol_check"));
  CHECK(rejects("grid=1\n", "grid"));
  CHECK(rejects("radii=8,4\n", "radii"));
  CHECK(rejects("beta_center=1,2\n", "beta_center"));
  CHECK(rejects("nu=abc\n", "nu"));
  CHECK(rejects("param.amp1=x\n", "param.amp1"));
  CHECK_THROWS_AS(RunConfig::parse("no equals here\n"), Error);
}

TEST_CASE("config hash") {
  // FNV-1a 64 reference values.
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
  CHECK(fnv1a_hex("a") == "af63dc4c8601ec8c");
  RunConfig a, b;
  CHECK(a.hash() == b.hash());
  CHECK(a.hash() == fnv1a_hex(a.serialize()));
  b.set("tol_far", "1e-8");
  CHECK(a.hash() != b.hash());
  // Insertion order does not matter.
  RunConfig x = RunConfig::parse("nu=2\nt=0.3\n"), y = RunConfig::parse("t=0.3\nnu=2\n");
  CHECK(x.hash() == y.hash());
}

TEST_CASE("csv output carries the hash first") {
  CsvWriter w("abc", {"x", "y"});
  w.comment("note");
  w.row(std::vector<double>{0.1, 1.0 / 3.0});
  const std::string s = w.str();
  CHECK(s.rfind("# config_hash=abc\n", 0) == 0);
  CHECK(s.find("x,y\n") != std::string::npos);
  CHECK(std::stod(format_double(1.0 / 3.0)) == 1.0 / 3.0);
  CHECK_THROWS_AS(w.row(std::vector<double>{1.0}), Error);
}

TEST_CASE("named generators") {
  for (const auto& n : generator_names()) {
    const NamedField f = make_named_field(n, {});
    CHECK(f.name == n);
    CHECK((f.u.has_value() || f.scalar.has_value()));
  }
  CHECK_THROWS_AS(make_named_field("no-such-field", {}), Error);
  CHECK_THROWS_AS(make_named_field("taylor-green", {{"bogus", 1.0}}), Error);
}

TEST_CASE("cli: generate, extract and determinism") {
  const Scratch s;
  REQUIRE(cli("generate-field --name parasitic-tg --grid 16 --field-times 9 --out " + (s / "par.nspg"), s).status == 0);
  CHECK(fs::exists(s / "par.nspg"));
  const FieldMeta m = read_meta(s / "par.nspg.meta");
  CHECK(m.generator == "parasitic-tg");
  CHECK(m.config_hash.size() == 16u);

  const std::string extract = "extract-drift --field " + (s / "par.nspg") + " --beta-radius 1 --time-samples 16 --out ";
  REQUIRE(cli(extract + (s / "d1.csv"), s).status == 0);
  REQUIRE(cli(extract + (s / "d2.csv"), s).status == 0);
  CHECK(slurp(s / "d1.csv") == slurp(s / "d2.csv"));
  CHECK(slurp(s / "d1.csv").rfind("# config_hash=", 0) == 0);

  std::string header;
  const auto rows = csv_rows(s / "d1.csv", &header);
  REQUIRE(rows.size() == 16u);
  CHECK(header.rfind("t,phi1,phi2,phi3", 0) == 0);
  double err = 0.0;
  for (const auto& r : rows) err = std::max(err, std::abs(r[1] - 0.3 * std::sin(r[0])));
  CHECK(err < 1e-2);
}

TEST_CASE("cli: errors") {
  const Scratch s;
  CHECK(cli("no-such-subcommand", s).status != 0);
  CHECK(cli("generate-field --no-such-flag 1", s).status != 0);
  const Run bad = cli("extract-drift --tol-far -1 --out " + (s / "x.csv"), s);
  CHECK(bad.status == 2);
  CHECK(bad.err.find("tol_far") != std::string::npos);
  const Run gen = cli("generate-field --name nothing --out " + (s / "y.nspg"), s);
  CHECK(gen.status == 2);
  std::ofstream(s / "truncated.nspg") << "NSPG1";
  const Run trunc = cli("extract-drift --field " + (s / "truncated.nspg") + " --out " + (s / "z.csv"), s);
  CHECK(trunc.status == 2);
  CHECK(trunc.err.find("truncated") != std::string::npos);
}

TEST_CASE("cli: verify suite all") {
  const Scratch s;
  const Run r = cli("verify --suite all --out " + (s / "v.csv"), s);
  CHECK(r.status == 0);
  CHECK(slurp(s / "v.csv").rfind("# config_hash=", 0) == 0);
}

TEST_CASE("cli: implication matrix table is rectangular") {
  const Scratch s;
  const Run r = cli("implication-matrix --out " + (s / "m.csv"), s);
  CHECK(r.status == 0);
  std::ifstream is(s / "m.csv");
  std::string line;
  int rows = 0;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    INFO(line);
    CHECK(std::count(line.begin(), line.end(), ',') == 5);
    ++rows;
  }
  CHECK(rows == 8);
  CHECK(slurp(s / "m.csv").find("# all_hold=true") != std::string::npos);
}
