#include "nspg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace nspg {

std::string to_string(IoErrorCode c) {
  switch (c) {
    case IoErrorCode::OpenFailed: return "open failed";
    case IoErrorCode::MagicMismatch: return "magic mismatch";
    case IoErrorCode::TruncatedPayload: return "truncated payload";
    case IoErrorCode::DimOverflow: return "dimension overflow";
    case IoErrorCode::BadHeader: return "bad header";
    case IoErrorCode::BadMetadata: return "bad metadata";
  }
  return "io error";
}

// ---------------------------------------------------------------- binary format

namespace {

constexpr char kMagic[5] = {'N', 'S', 'P', 'G', '1'};

template <class T>
T byteswap(T v) {
  unsigned char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  std::reverse(b, b + sizeof(T));
  std::memcpy(&v, b, sizeof(T));
  return v;
}

class Encoder {
 public:
  explicit Encoder(std::endian order) : swap_(order != std::endian::native) {}
  template <class T>
  void put(T v) {
    if (swap_) v = byteswap(v);
    const auto* p = reinterpret_cast<const unsigned char*>(&v);
    out.insert(out.end(), p, p + sizeof(T));
  }
  std::vector<unsigned char> out;

 private:
  bool swap_;
};

class Decoder {
 public:
  explicit Decoder(std::span<const unsigned char> b) : b_(b) {}
  void set_swap(bool s) { swap_ = s; }
  template <class T>
  T get() {
    if (pos_ + sizeof(T) > b_.size()) throw IoError(IoErrorCode::TruncatedPayload, "file ends inside the header");
    T v;
    std::memcpy(&v, b_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return swap_ ? byteswap(v) : v;
  }
  std::size_t pos() const { return pos_; }

 private:
  std::span<const unsigned char> b_;
  std::size_t pos_ = 0;
  bool swap_ = false;
};

}  // namespace

std::vector<unsigned char> encode_field(const SampledField& f, std::endian order) {
  const std::size_t expected = f.grid.size() * static_cast<std::size_t>(f.times.n) * f.rank;
  if (f.values.size() != expected) throw Error("encode_field: value count does not match grid, times and rank");
  Encoder e(order);
  for (char c : kMagic) e.out.push_back(static_cast<unsigned char>(c));
  for (int i = 0; i < 3; ++i) e.out.push_back(0);
  e.put<std::uint32_t>(kEndianMarker);
  e.put<std::uint32_t>(static_cast<std::uint32_t>(f.rank));
  for (int a = 0; a < 3; ++a) e.put<std::uint64_t>(static_cast<std::uint64_t>(f.grid.n[a]));
  e.put<std::uint64_t>(static_cast<std::uint64_t>(f.times.n));
  e.put<double>(f.grid.h);
  e.put<double>(f.times.step());
  e.put<double>(f.times.t_start);
  for (int a = 0; a < 3; ++a) e.put<double>(f.grid.origin[a]);
  e.out.reserve(e.out.size() + 8 * f.values.size());
  for (double v : f.values) e.put<double>(v);
  return e.out;
}

SampledField decode_field(std::span<const unsigned char> bytes) {
  if (bytes.size() < 8) throw IoError(IoErrorCode::TruncatedPayload, "file shorter than the magic");
  if (std::memcmp(bytes.data(), kMagic, 5) != 0) throw IoError(IoErrorCode::MagicMismatch, "not an NSPG1 file");
  Decoder d(bytes.subspan(8));
  const std::uint32_t marker = d.get<std::uint32_t>();
  if (marker == byteswap(kEndianMarker)) {
    d.set_swap(true);
  } else if (marker != kEndianMarker) {
    throw IoError(IoErrorCode::BadHeader, "unknown endianness marker");
  }
  const std::uint32_t rank = d.get<std::uint32_t>();
  std::uint64_t n[4];
  for (auto& v : n) v = d.get<std::uint64_t>();
  const double h = d.get<double>(), dt = d.get<double>(), t0 = d.get<double>();
  Vec3 origin;
  for (int a = 0; a < 3; ++a) origin[a] = d.get<double>();

  if (rank != 1 && rank != 3) throw IoError(IoErrorCode::BadHeader, "rank must be 1 or 3");
  constexpr std::uint64_t kMaxDim = static_cast<std::uint64_t>(std::numeric_limits<int>::max());
  std::uint64_t count = rank;
  for (auto v : n) {
    if (v > kMaxDim) throw IoError(IoErrorCode::DimOverflow, "dimension exceeds the int range");
    if (v == 0) throw IoError(IoErrorCode::BadHeader, "zero dimension");
    if (count > std::numeric_limits<std::uint64_t>::max() / 8 / v) {
      throw IoError(IoErrorCode::DimOverflow, "payload size overflows 64 bits");
    }
    count *= v;
  }
  const std::uint64_t payload = bytes.size() - kHeaderBytes;
  if (count * 8 > payload) {
    throw IoError(IoErrorCode::TruncatedPayload,
                  "expected " + std::to_string(count * 8) + " payload bytes, found " + std::to_string(payload));
  }
  if (count * 8 < payload) throw IoError(IoErrorCode::BadHeader, "trailing bytes after the payload");

  SampledField f;
  try {
    f.grid = Grid3(origin, h, {static_cast<int>(n[0]), static_cast<int>(n[1]), static_cast<int>(n[2])});
    f.times = TimeGrid(t0, t0 + dt * static_cast<double>(n[3] - 1), static_cast<int>(n[3]));
  } catch (const IoError&) {
    throw;
  } catch (const Error& e) {
    throw IoError(IoErrorCode::BadHeader, e.what());
  }
  f.rank = static_cast<int>(rank);
  f.values.resize(count);
  for (auto& v : f.values) v = d.get<double>();
  return f;
}

std::string meta_path(const std::string& field_path) { return field_path + ".meta"; }

void write_field(const std::string& path, const SampledField& f, const FieldMeta& meta) {
  const auto bytes = encode_field(f);
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError(IoErrorCode::OpenFailed, path);
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) throw IoError(IoErrorCode::OpenFailed, "write failed: " + path);
  write_meta(meta_path(path), meta);
}

SampledField read_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError(IoErrorCode::OpenFailed, path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  return decode_field(bytes);
}

FieldMeta meta_from_traits(const FieldTraits& tr, const std::string& config_hash) {
  return {tr.generator, tr.params, tr.decay, tr.divergence_free, config_hash};
}

void write_meta(const std::string& path, const FieldMeta& meta) {
  std::ofstream os(path);
  if (!os) throw IoError(IoErrorCode::OpenFailed, path);
  os << "generator=" << meta.generator << "\n";
  for (const auto& [k, v] : meta.params) os << "param." << k << "=" << format_double(v) << "\n";
  os << "decay_class=" << to_string(meta.decay) << "\n";
  os << "divergence_free=" << (meta.divergence_free ? "true" : "false") << "\n";
  os << "config_hash=" << meta.config_hash << "\n";
}

FieldMeta read_meta(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError(IoErrorCode::OpenFailed, path);
  FieldMeta m;
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError(IoErrorCode::BadMetadata, path + ":" + std::to_string(lineno));
    const std::string k = line.substr(0, eq), v = line.substr(eq + 1);
    try {
      if (k == "generator") {
        m.generator = v;
      } else if (k.rfind("param.", 0) == 0) {
        m.params.emplace_back(k.substr(6), std::stod(v));
      } else if (k == "decay_class") {
        m.decay = decay_class_from_string(v);
      } else if (k == "divergence_free") {
        m.divergence_free = v == "true";
      } else if (k == "config_hash") {
        m.config_hash = v;
      }
    } catch (const std::exception& e) {
      throw IoError(IoErrorCode::BadMetadata, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return m;
}

// ---------------------------------------------------------------- configuration

namespace {

struct KeySpec {
  const char* key;
  const char* value;
  enum Kind { Positive, NonNegative, Count, Text, Triple, List } kind;
};

const KeySpec kKeys[] = {
    {"tol_far", "1e-7", KeySpec::Positive},
    {"tol_check", "1e-6", KeySpec::Positive},
    {"tol_local", "1e-10", KeySpec::Positive},
    {"order_scale", "1", KeySpec::Positive},
    {"grid", "32", KeySpec::Count},
    {"extent", "6.283185307179586", KeySpec::Positive},
    {"time_samples", "64", KeySpec::Count},
    {"field_times", "2", KeySpec::Positive},
    {"lattice_h", "0.25", KeySpec::Positive},
    {"component", "u", KeySpec::Text},
    {"t_end", "1", KeySpec::Positive},
    {"t", "0.5", KeySpec::NonNegative},
    {"nu", "1", KeySpec::Positive},
    {"beta_radius", "1", KeySpec::Positive},
    {"beta_center", "0,0,0", KeySpec::Triple},
    {"ball_center", "0,0,0", KeySpec::Triple},
    {"ball_radius", "1", KeySpec::Positive},
    {"radii", "8,16,32,64", KeySpec::List},
    {"distances", "4,8,16,32", KeySpec::List},
    {"condition", "C", KeySpec::Text},
    {"suite", "all", KeySpec::Text},
    {"name", "taylor-green", KeySpec::Text},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      const std::string t = trim(item);
      out.push_back(std::stod(t, &used));
      if (used != t.size()) throw std::invalid_argument("trailing text");
    } catch (const std::exception&) {
      throw Error("invalid config: " + key + " must be a comma-separated list of numbers, got '" + v + "'");
    }
  }
  return out;
}

}  // namespace

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_[k.key] = k.value;
}

RunConfig RunConfig::parse(const std::string& text) {
  RunConfig c;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error("invalid config: line " + std::to_string(lineno) + " is not key=value");
    c.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse(ss.str());
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw Error("invalid config: empty key");
  values_[key] = value;
}

std::string RunConfig::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error("invalid config: missing key " + key);
  return it->second;
}

double RunConfig::number(const std::string& key) const {
  const std::string v = get(key);
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument("trailing text");
    return d;
  } catch (const std::exception&) {
    throw Error("invalid config: " + key + " must be a number, got '" + v + "'");
  }
}

int RunConfig::integer(const std::string& key) const {
  const double d = number(key);
  if (d != std::floor(d) || std::abs(d) > 1e9) throw Error("invalid config: " + key + " must be an integer");
  return static_cast<int>(d);
}

Vec3 RunConfig::vec3(const std::string& key) const {
  const auto l = list(key);
  if (l.size() != 3) throw Error("invalid config: " + key + " must have three components");
  return {l[0], l[1], l[2]};
}

std::vector<double> RunConfig::list(const std::string& key) const { return parse_list(key, get(key)); }

std::map<std::string, double> RunConfig::params() const {
  std::map<std::string, double> out;
  for (const auto& [k, v] : values_) {
    if (k.rfind("param.", 0) == 0) out[k.substr(6)] = number(k);
  }
  return out;
}

void RunConfig::validate() const {
  for (const auto& k : kKeys) {
    switch (k.kind) {
      case KeySpec::Positive:
        if (!(number(k.key) > 0.0)) throw Error(std::string("invalid config: ") + k.key + " must be > 0");
        break;
      case KeySpec::NonNegative:
        if (!(number(k.key) >= 0.0)) throw Error(std::string("invalid config: ") + k.key + " must be >= 0");
        break;
      case KeySpec::Count:
        if (integer(k.key) < 2) throw Error(std::string("invalid config: ") + k.key + " must be an integer >= 2");
        break;
      case KeySpec::Triple: vec3(k.key); break;
      case KeySpec::List: {
        const auto l = list(k.key);
        if (l.empty()) throw Error(std::string("invalid config: ") + k.key + " must not be empty");
        for (std::size_t i = 0; i < l.size(); ++i) {
          if (!(l[i] > 0.0) || (i > 0 && !(l[i] > l[i - 1]))) {
            throw Error(std::string("invalid config: ") + k.key + " must be positive and increasing");
          }
        }
        break;
      }
      case KeySpec::Text:
        if (get(k.key).empty()) throw Error(std::string("invalid config: ") + k.key + " must not be empty");
        break;
    }
  }
  params();
}

std::string RunConfig::serialize() const {
  std::string s;
  for (const auto& [k, v] : values_) s += k + "=" + v + "\n";
  return s;
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << h;
  return os.str();
}

std::string RunConfig::hash() const { return fnv1a_hex(serialize()); }

// ---------------------------------------------------------------- generators

namespace {

double param(const std::map<std::string, double>& p, const std::string& k, double dflt) {
  const auto it = p.find(k);
  return it == p.end() ? dflt : it->second;
}

}  // namespace

std::vector<std::string> generator_names() {
  return {"taylor-green", "parasitic-tg", "gaussian-vortex", "constant", "nondivergent-control", "cylinder",
          "dyadic-balls"};
}

namespace {

// Accepted parameter names per generator; nu is the run viscosity and is accepted everywhere.
const std::map<std::string, std::vector<std::string>>& generator_params() {
  static const std::map<std::string, std::vector<std::string>> m = {
      {"taylor-green", {}},
      {"parasitic-tg", {"amp1", "amp2", "amp3", "omega", "t_end"}},
      {"gaussian-vortex", {"amplitude", "width", "cx", "cy", "cz"}},
      {"constant", {"cx", "cy", "cz"}},
      {"nondivergent-control", {"radius"}},
      {"cylinder", {}},
      {"dyadic-balls", {"k_max"}},
  };
  return m;
}

}  // namespace

NamedField make_named_field(const std::string& name, const std::map<std::string, double>& p) {
  const auto known = generator_params().find(name);
  if (known == generator_params().end()) throw Error("unknown generator '" + name + "'");
  for (const auto& [k, v] : p) {
    if (k == "nu") continue;
    if (std::find(known->second.begin(), known->second.end(), k) == known->second.end()) {
      throw Error("invalid config: param." + k + " is not a parameter of " + name);
    }
  }
  NamedField out{name, std::nullopt, std::nullopt, std::nullopt};
  if (name == "taylor-green") {
    const FieldPair tg = make_taylor_green(param(p, "nu", 1.0));
    out.u = tg.u;
    out.p = tg.p;
  } else if (name == "parasitic-tg") {
    const FieldPair tg = make_taylor_green(param(p, "nu", 1.0));
    const Vec3 amp(param(p, "amp1", 0.3), param(p, "amp2", 0.0), param(p, "amp3", 0.0));
    const DriftSpec d = make_sinusoidal_drift(amp, param(p, "omega", 1.0));
    FieldPair par = inject_drift(tg, d, param(p, "t_end", 1.0));
    std::vector<std::pair<std::string, double>> ps = {{"nu", param(p, "nu", 1.0)},
                                                      {"amp1", amp[0]},
                                                      {"amp2", amp[1]},
                                                      {"amp3", amp[2]},
                                                      {"omega", param(p, "omega", 1.0)},
                                                      {"t_end", param(p, "t_end", 1.0)}};
    par.u.traits().generator = "parasitic-tg";
    par.u.traits().params = ps;
    par.p.traits().generator = "parasitic-tg-pressure";
    par.p.traits().params = ps;
    out.u = par.u;
    out.p = par.p;
  } else if (name == "gaussian-vortex") {
    out.u = make_gaussian_vortex(param(p, "amplitude", 1.0), param(p, "width", 1.0),
                                 Vec3(param(p, "cx", 0.0), param(p, "cy", 0.0), param(p, "cz", 0.0)));
  } else if (name == "constant") {
    out.u = make_constant_field(Vec3(param(p, "cx", 1.0), param(p, "cy", 0.0), param(p, "cz", 0.0)));
  } else if (name == "nondivergent-control") {
    out.u = make_nondivergent_control(param(p, "radius", 1.5));
  } else if (name == "cylinder") {
    out.scalar = make_cylinder_indicator();
  } else if (name == "dyadic-balls") {
    out.scalar = make_dyadic_balls(static_cast<int>(param(p, "k_max", 12.0)));
  } else {
    throw Error("unknown generator '" + name + "'");
  }
  return out;
}

VectorField interpolated_field(const SampledField& s, const FieldMeta& meta) {
  if (s.rank != 3) throw Error("interpolated_field: need a rank-3 sample");
  FieldTraits tr;
  tr.generator = "sampled(" + meta.generator + ")";
  tr.params = meta.params;
  tr.decay = DecayClass::UlocOnly;
  tr.divergence_free = false;
  double mx = 0.0;
  for (double v : s.values) mx = std::max(mx, std::abs(v));
  tr.sup_bound = std::sqrt(3.0) * mx;
  tr.length_scale = 2.0 * s.grid.h;
  const Vec3 lo = s.grid.origin;
  const Vec3 hi = lo + s.grid.h * Vec3(s.grid.n[0] - 1, s.grid.n[1] - 1, s.grid.n[2] - 1);
  tr.support = SupportBall{0.5 * (lo + hi), 0.5 * (hi - lo).norm()};
  return VectorField(
      [s, lo, hi](const Vec3& x, double t) {
        if ((x - lo).minCoeff() < 0.0 || (hi - x).minCoeff() < 0.0) return Vec3(Vec3::Zero());
        if (s.times.n == 1) {
          Vec3 v;
          for (int c = 0; c < 3; ++c) v[c] = s.interpolate(x, 0, c);
          return v;
        }
        const double u = std::clamp((t - s.times.t_start) / s.times.step(), 0.0, s.times.n - 1.0);
        const int i = std::min(static_cast<int>(u), s.times.n - 2);
        const double a = u - i;
        Vec3 v;
        for (int c = 0; c < 3; ++c) v[c] = (1.0 - a) * s.interpolate(x, i, c) + a * s.interpolate(x, i + 1, c);
        return v;
      },
      tr);
}

LoadedVelocity load_velocity(const std::string& path) {
  const SampledField s = read_field(path);
  FieldMeta meta;
  try {
    meta = read_meta(meta_path(path));
  } catch (const IoError& e) {
    if (e.code() != IoErrorCode::OpenFailed) throw;
  }
  if (s.rank != 3) throw Error("load_velocity: " + path + " holds a scalar field");
  const auto names = generator_names();
  if (std::find(names.begin(), names.end(), meta.generator) != names.end()) {
    std::map<std::string, double> p(meta.params.begin(), meta.params.end());
    const NamedField nf = make_named_field(meta.generator, p);
    if (nf.u) {
      const VectorField& u = *nf.u;
      double worst = 0.0, mag = 0.0;
      for (int it = 0; it < s.times.n; ++it)
        for (int k = 0; k < s.grid.n[2]; ++k)
          for (int j = 0; j < s.grid.n[1]; ++j)
            for (int i = 0; i < s.grid.n[0]; ++i) {
              const Vec3 v = u(s.grid.node(i, j, k), s.times.at(it));
              for (int c = 0; c < 3; ++c) {
                worst = std::max(worst, std::abs(v[c] - s.at(it, i, j, k, c)));
                mag = std::max(mag, std::abs(v[c]));
              }
            }
      if (worst <= 1e-12 * std::max(1.0, mag)) return {u, true, meta};
    }
  }
  return {interpolated_field(s, meta), false, meta};
}

// ---------------------------------------------------------------- CSV

std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

CsvWriter::CsvWriter(std::string config_hash, std::vector<std::string> columns)
    : hash_(std::move(config_hash)), columns_(std::move(columns)) {}

void CsvWriter::comment(const std::string& line) { comments_.push_back(line); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) throw Error("CsvWriter: row width does not match the header");
  std::string r;
  for (std::size_t i = 0; i < cells.size(); ++i) r += (i ? "," : "") + cells[i];
  rows_.push_back(r);
}

void CsvWriter::row(const std::vector<double>& cells) {
  std::vector<std::string> s;
  for (double v : cells) s.push_back(format_double(v));
  row(s);
}

std::string CsvWriter::str() const {
  std::string s = "# config_hash=" + hash_ + "\n";
  for (const auto& c : comments_) s += "# " + c + "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) s += (i ? "," : "") + columns_[i];
  s += "\n";
  for (const auto& r : rows_) s += r + "\n";
  return s;
}

void CsvWriter::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw IoError(IoErrorCode::OpenFailed, path);
  os << str();
}

CsvWriter drift_csv(const DriftRecord& rec, const std::string& hash) {
  std::vector<std::string> cols{"t", "phi1", "phi2", "phi3", "Phi1", "Phi2", "Phi3"};
  for (const char* term : {"current", "initial", "viscous", "flux", "pressure"}) {
    for (int k = 1; k <= 3; ++k) cols.push_back(std::string(term) + std::to_string(k));
  }
  CsvWriter w(hash, cols);
  w.comment("l1_norm=" + format_double(rec.l1_norm()) + " sup_Phi=" + format_double(rec.sup_Phi()) +
            " pressure_converged=" + (rec.pressure_converged ? "true" : "false"));
  for (int i = 0; i < rec.times.n; ++i) {
    std::vector<double> r{rec.times.at(i)};
    for (int k = 0; k < 3; ++k) r.push_back(rec.phi[i][k]);
    for (int k = 0; k < 3; ++k) r.push_back(rec.Phi[i][k]);
    const DriftTerms& t = rec.terms[i];
    for (const Vec3* v : {&t.current, &t.initial, &t.viscous, &t.flux, &t.pressure}) {
      for (int k = 0; k < 3; ++k) r.push_back((*v)[k]);
    }
    w.row(r);
  }
  return w;
}

CsvWriter decay_csv(const DecayReport& rep, const std::string& hash) {
  CsvWriter w(hash, {"condition", "field", "param", "value"});
  w.comment(rep.summary());
  for (const auto& p : rep.sweep) w.row({rep.condition, rep.field, format_double(p.param), format_double(p.value)});
  return w;
}

CsvWriter implication_csv(const ImplicationMatrix& m, const std::string& hash) {
  CsvWriter w(hash, {"kind", "name", "A", "B", "C", "holds"});
  for (const auto& r : m.rows) {
    w.row({"field", r.field, to_string(r.A.verdict), to_string(r.B.verdict), to_string(r.C.verdict), ""});
  }
  for (const auto& b : m.bullets) w.row({"bullet", b.statement, b.witness, "", "", b.holds ? "true" : "false"});
  w.comment(std::string("all_hold=") + (m.all_hold() ? "true" : "false"));
  return w;
}

CsvWriter check_csv(const std::vector<CheckReport>& reports, const std::string& hash) {
  CsvWriter w(hash, {"check", "residual", "value", "tolerance", "within", "negative_control", "as_expected"});
  for (const auto& r : reports) {
    for (const auto& res : r.residuals) {
      w.row({r.name, res.name, format_double(res.value), format_double(res.tolerance), res.ok() ? "true" : "false",
             r.negative_control ? "true" : "false", r.as_expected() ? "true" : "false"});
    }
  }
  return w;
}

}  // namespace nspg
