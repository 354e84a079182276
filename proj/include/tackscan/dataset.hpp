#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tackscan/em_forward.hpp"
#include "tackscan/features.hpp"

namespace tackscan {

/// Ordered key=value document used for sidecars, manifests and summaries.
/// Lines starting with '#' and blank lines are ignored on read.
class KeyValues {
 public:
  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, double value);
  bool has(const std::string& key) const { return index_.count(key) > 0; }
  const std::string& get(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  double get_double(const std::string& key) const;
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string to_string() const;
  static KeyValues parse(const std::string& text, const std::string& origin);
  static KeyValues read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
  std::map<std::string, std::size_t> index_;
};

/// A trace table: header `x,y,quantity,s0,...,s{N-1}`, one A-scan per row.
/// Samples are written with the shortest digits that round-trip in single
/// precision; quantity is empty for unlabelled traces.
void write_trace_table(const std::filesystem::path& path, const std::vector<AScan>& traces);

/// Reads a trace table; every trace gets `dt`. Throws ValidationError naming
/// the offending row for ragged rows or non-numeric cells.
std::vector<AScan> read_trace_table(const std::filesystem::path& path, double dt);

/// Sidecar metadata for a simulated trace table.
KeyValues trace_metadata(const PulseSpec& pulse, const AcquisitionSpec& acq);

/// A feature dataset: header `x,y,label,f0,...`, label = quantity (g/m^2)
/// or empty when unknown.
struct FeatureRow {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> label;
  FeatureVector values;
};

void write_feature_table(const std::filesystem::path& path, const std::vector<FeatureRow>& rows);
std::vector<FeatureRow> read_feature_table(const std::filesystem::path& path);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::filesystem::path& path);

struct DatasetManifest {
  std::filesystem::path traces;
  std::filesystem::path metadata;
  std::string checksum;  // sha256 of the trace table
  std::string provenance;  // "simulated" or "ingested"
  std::size_t trace_count = 0;
  std::size_t samples_per_trace = 0;
  double dt = 0.0;
  bool prediction_only = false;  // no quantity labels

  KeyValues to_kv() const;
  static DatasetManifest from_kv(const KeyValues& kv, const std::filesystem::path& base);
};

/// Validates a trace table against its metadata and builds a manifest.
DatasetManifest ingest_dataset(const std::filesystem::path& traces, const std::filesystem::path& metadata,
                               const std::string& provenance = "ingested");

/// Reads the manifest, checks the checksum and loads the traces.
std::vector<AScan> load_dataset(const DatasetManifest& manifest);

}  // namespace tackscan
