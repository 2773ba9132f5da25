#pragma once

#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nspg/decay.hpp"
#include "nspg/drift.hpp"
#include "nspg/fields.hpp"
#include "nspg/verify.hpp"

/// Field files, run configuration, CSV reports and the named generator catalogue.
///
/// Field file layout (little-endian on disk, 96-byte header):
///   "NSPG1" + 3 zero bytes, uint32 marker 0x0A0B0C0D, uint32 rank,
///   uint64 n1 n2 n3 n_t, float64 h dt t0 origin[3],
/// then n_t * n3 * n2 * n1 * rank float64 values, time slowest and component
/// fastest. A reader seeing the marker byte-reversed swaps every word.
/// Metadata lives in "<path>.meta" as key=value lines.
namespace nspg {

enum class IoErrorCode { OpenFailed, MagicMismatch, TruncatedPayload, DimOverflow, BadHeader, BadMetadata };
std::string to_string(IoErrorCode c);

class IoError : public Error {
 public:
  IoError(IoErrorCode code, const std::string& what) : Error(to_string(code) + ": " + what), code_(code) {}
  IoErrorCode code() const { return code_; }

 private:
  IoErrorCode code_;
};

inline constexpr std::uint32_t kEndianMarker = 0x0A0B0C0D;
inline constexpr std::size_t kHeaderBytes = 96;

struct FieldMeta {
  std::string generator;
  std::vector<std::pair<std::string, double>> params;
  DecayClass decay = DecayClass::UlocOnly;
  bool divergence_free = false;
  std::string config_hash;
};

FieldMeta meta_from_traits(const FieldTraits& tr, const std::string& config_hash);

std::vector<unsigned char> encode_field(const SampledField& f, std::endian order = std::endian::little);
SampledField decode_field(std::span<const unsigned char> bytes);

void write_field(const std::string& path, const SampledField& f, const FieldMeta& meta);
SampledField read_field(const std::string& path);
void write_meta(const std::string& path, const FieldMeta& meta);
FieldMeta read_meta(const std::string& path);
std::string meta_path(const std::string& field_path);

/// key=value configuration with '#' comments. Unknown keys are kept verbatim;
/// known keys are type- and range-checked by validate().
class RunConfig {
 public:
  RunConfig();
  static RunConfig parse(const std::string& text);
  static RunConfig load(const std::string& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const { return values_.count(key) > 0; }
  std::string get(const std::string& key) const;
  double number(const std::string& key) const;
  int integer(const std::string& key) const;
  Vec3 vec3(const std::string& key) const;
  std::vector<double> list(const std::string& key) const;
  /// "param.<name>" entries.
  std::map<std::string, double> params() const;

  /// Throws Error naming the offending key.
  void validate() const;
  /// Sorted key=value lines.
  std::string serialize() const;
  /// FNV-1a 64 of serialize(), 16 hex digits.
  std::string hash() const;

 private:
  std::map<std::string, std::string> values_;
};

std::string fnv1a_hex(const std::string& s);

/// Analytic fields by name: taylor-green, parasitic-tg, gaussian-vortex,
/// constant, nondivergent-control (vector) and cylinder, dyadic-balls (scalar).
/// Vector generators with a pressure return it in p; others return p = 0.
struct NamedField {
  std::string name;
  std::optional<VectorField> u;
  std::optional<ScalarField> p;
  std::optional<ScalarField> scalar;
};
NamedField make_named_field(const std::string& name, const std::map<std::string, double>& params);
std::vector<std::string> generator_names();

/// Velocity from a file: the named generator when the metadata identifies one
/// and the payload matches it at every node, otherwise trilinear/linear
/// interpolation of the samples.
struct LoadedVelocity {
  VectorField u;
  bool analytic;
  FieldMeta meta;
};
LoadedVelocity load_velocity(const std::string& path);
VectorField interpolated_field(const SampledField& s, const FieldMeta& meta);

// ---------------------------------------------------------------- CSV

/// Comment lines start with '#'; the first is always "# config_hash=<hash>".
class CsvWriter {
 public:
  CsvWriter(std::string config_hash, std::vector<std::string> columns);
  void comment(const std::string& line);
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& cells);
  std::string str() const;
  void save(const std::string& path) const;

 private:
  std::string hash_;
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::string> rows_;
};

std::string format_double(double v);

CsvWriter drift_csv(const DriftRecord& rec, const std::string& hash);
CsvWriter decay_csv(const DecayReport& rep, const std::string& hash);
CsvWriter implication_csv(const ImplicationMatrix& m, const std::string& hash);
CsvWriter check_csv(const std::vector<CheckReport>& reports, const std::string& hash);

}  // namespace nspg
