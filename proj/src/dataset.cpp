#include "tackscan/dataset.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>

#include "tackscan/error.hpp"
#include "tackscan/text.hpp"

namespace fs = std::filesystem;

namespace tackscan {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeFailure("cannot write " + path.string());
  return out;
}

// Line iterator over a buffer; strips a trailing '\r'.
class Lines {
 public:
  explicit Lines(std::string_view buf) : buf_(buf) {}
  bool next(std::string_view& line) {
    if (pos_ >= buf_.size()) return false;
    auto nl = buf_.find('\n', pos_);
    if (nl == std::string_view::npos) nl = buf_.size();
    line = buf_.substr(pos_, nl - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = nl + 1;
    ++number_;
    return true;
  }
  std::size_t number() const { return number_; }

 private:
  std::string_view buf_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

void append_float(std::string& out, double v) {
  std::array<char, 32> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), static_cast<float>(v));
  out.append(buf.data(), res.ptr);
}

double cell_double(std::string_view cell, const fs::path& path, std::size_t row, std::size_t col) {
  cell = text::trim(cell);
  double v = 0.0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
    throw ValidationError(path.string() + ": row " + std::to_string(row) + ", column " + std::to_string(col + 1) +
                          ": non-numeric value '" + std::string(cell) + "'");
  }
  return v;
}

std::optional<double> optional_cell(std::string_view cell, const fs::path& path, std::size_t row, std::size_t col) {
  if (text::trim(cell).empty()) return std::nullopt;
  return cell_double(cell, path, row, col);
}

// Header must start with the given columns followed by <prefix>0..<prefix>N-1.
std::size_t check_header(std::string_view header, const fs::path& path, std::initializer_list<std::string_view> fixed,
                         std::string_view prefix) {
  auto cols = text::split(header, ',');
  if (cols.size() < fixed.size()) throw ValidationError(path.string() + ": header too short");
  std::size_t i = 0;
  for (auto name : fixed) {
    if (text::trim(cols[i]) != name) {
      throw ValidationError(path.string() + ": header column " + std::to_string(i + 1) + " must be '" +
                            std::string(name) + "'");
    }
    ++i;
  }
  for (std::size_t k = 0; i < cols.size(); ++i, ++k) {
    if (text::trim(cols[i]) != std::string(prefix) + std::to_string(k)) {
      throw ValidationError(path.string() + ": header column " + std::to_string(i + 1) + " must be '" +
                            std::string(prefix) + std::to_string(k) + "'");
    }
  }
  return cols.size() - fixed.size();
}

}  // namespace

// ---------------------------------------------------------------------------
// KeyValues

void KeyValues::set(const std::string& key, const std::string& value) {
  if (key.empty() || key.find('=') != std::string::npos || key.find('\n') != std::string::npos) {
    throw ValidationError("invalid key '" + key + "'");
  }
  if (value.find('\n') != std::string::npos) throw ValidationError("value for '" + key + "' contains a newline");
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
  } else {
    index_[key] = entries_.size();
    entries_.emplace_back(key, value);
  }
}

void KeyValues::set(const std::string& key, double value) { set(key, text::format_double(value)); }

const std::string& KeyValues::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw ValidationError("missing key '" + key + "'");
  return entries_[it->second].second;
}

std::optional<std::string> KeyValues::find(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) return std::nullopt;
  return entries_[it->second].second;
}

double KeyValues::get_double(const std::string& key) const { return text::parse_double(get(key), key); }

std::string KeyValues::to_string() const {
  std::string out;
  for (const auto& [k, v] : entries_) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

KeyValues KeyValues::parse(const std::string& content, const std::string& origin) {
  KeyValues kv;
  Lines lines(content);
  std::string_view line;
  while (lines.next(line)) {
    auto t = text::trim(line);
    if (t.empty() || t.front() == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError(origin + ": line " + std::to_string(lines.number()) + ": expected key=value");
    }
    std::string key(text::trim(t.substr(0, eq)));
    if (kv.has(key)) {
      throw ValidationError(origin + ": line " + std::to_string(lines.number()) + ": duplicate key '" + key + "'");
    }
    kv.set(key, std::string(text::trim(t.substr(eq + 1))));
  }
  return kv;
}

KeyValues KeyValues::read(const fs::path& path) { return parse(read_file(path), path.string()); }

void KeyValues::write(const fs::path& path) const {
  auto out = open_out(path);
  out << to_string();
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

// ---------------------------------------------------------------------------
// Trace tables

void write_trace_table(const fs::path& path, const std::vector<AScan>& traces) {
  if (traces.empty()) throw ValidationError("trace table needs at least one trace");
  const std::size_t n = traces.front().samples.size();
  auto out = open_out(path);
  std::string buf = "x,y,quantity";
  for (std::size_t i = 0; i < n; ++i) buf += ",s" + std::to_string(i);
  buf += '\n';
  for (const auto& t : traces) {
    if (t.samples.size() != n) throw ValidationError("traces differ in length");
    buf += text::format_double(t.x);
    buf += ',';
    buf += text::format_double(t.y);
    buf += ',';
    if (t.truth_quantity) buf += text::format_double(*t.truth_quantity);
    for (double s : t.samples) {
      buf += ',';
      append_float(buf, s);
    }
    buf += '\n';
    if (buf.size() > (1u << 20)) {
      out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
      buf.clear();
    }
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

std::vector<AScan> read_trace_table(const fs::path& path, double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("sample interval dt must be positive");
  const std::string content = read_file(path);
  Lines lines(content);
  std::string_view line;
  if (!lines.next(line)) throw ValidationError(path.string() + ": empty trace table");
  const std::size_t n = check_header(line, path, {"x", "y", "quantity"}, "s");
  if (n == 0) throw ValidationError(path.string() + ": no sample columns");

  std::vector<AScan> traces;
  while (lines.next(line)) {
    if (text::trim(line).empty()) continue;
    const std::size_t row = lines.number() - 1;  // data rows count from 1 after the header
    auto cells = text::split(line, ',');
    if (cells.size() != n + 3) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + ": ragged row, expected " +
                            std::to_string(n + 3) + " fields, found " + std::to_string(cells.size()));
    }
    AScan scan;
    scan.dt = dt;
    scan.x = cell_double(cells[0], path, row, 0);
    scan.y = cell_double(cells[1], path, row, 1);
    scan.truth_quantity = optional_cell(cells[2], path, row, 2);
    scan.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) scan.samples[i] = cell_double(cells[i + 3], path, row, i + 3);
    traces.push_back(std::move(scan));
  }
  if (traces.empty()) throw ValidationError(path.string() + ": no traces");
  return traces;
}

KeyValues trace_metadata(const PulseSpec& pulse, const AcquisitionSpec& acq) {
  KeyValues kv;
  kv.set("format", "tackscan-traces");
  kv.set("version", "1");
  kv.set("dt", acq.dt());
  kv.set("samples_per_trace", std::to_string(acq.samples_per_trace));
  kv.set("time_window", acq.time_window);
  kv.set("pulse.kind", "ricker");
  kv.set("pulse.center_frequency", pulse.center_frequency);
  kv.set("pulse.amplitude", pulse.amplitude);
  kv.set("pulse.delay", pulse.delay);
  kv.set("acq.traces_per_meter", acq.traces_per_meter);
  kv.set("acq.noise_snr_db", acq.noise_snr_db ? text::format_double(*acq.noise_snr_db) : "none");
  kv.set("acq.seed", std::to_string(acq.seed));
  kv.set("acq.direct_wave_amplitude", acq.direct_wave_amplitude);
  kv.set("acq.direct_wave_lead", acq.direct_wave_lead);
  return kv;
}

// ---------------------------------------------------------------------------
// Feature tables

void write_feature_table(const fs::path& path, const std::vector<FeatureRow>& rows) {
  if (rows.empty()) throw ValidationError("feature table needs at least one row");
  const std::size_t d = rows.front().values.size();
  auto out = open_out(path);
  std::string buf = "x,y,label";
  for (std::size_t i = 0; i < d; ++i) buf += ",f" + std::to_string(i);
  buf += '\n';
  for (const auto& r : rows) {
    if (r.values.size() != d) throw ValidationError("feature vectors differ in length");
    buf += text::format_double(r.x);
    buf += ',';
    buf += text::format_double(r.y);
    buf += ',';
    if (r.label) buf += text::format_double(*r.label);
    for (double v : r.values) {
      buf += ',';
      buf += text::format_double(v);
    }
    buf += '\n';
  }
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw RuntimeFailure("failed writing " + path.string());
}

std::vector<FeatureRow> read_feature_table(const fs::path& path) {
  const std::string content = read_file(path);
  Lines lines(content);
  std::string_view line;
  if (!lines.next(line)) throw ValidationError(path.string() + ": empty feature table");
  const std::size_t d = check_header(line, path, {"x", "y", "label"}, "f");
  std::vector<FeatureRow> rows;
  while (lines.next(line)) {
    if (text::trim(line).empty()) continue;
    const std::size_t row = lines.number() - 1;  // data rows count from 1 after the header
    auto cells = text::split(line, ',');
    if (cells.size() != d + 3) {
      throw ValidationError(path.string() + ": row " + std::to_string(row) + ": ragged row, expected " +
                            std::to_string(d + 3) + " fields, found " + std::to_string(cells.size()));
    }
    FeatureRow r;
    r.x = cell_double(cells[0], path, row, 0);
    r.y = cell_double(cells[1], path, row, 1);
    r.label = optional_cell(cells[2], path, row, 2);
    r.values.resize(d);
    for (std::size_t i = 0; i < d; ++i) r.values[i] = cell_double(cells[i + 3], path, row, i + 3);
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw ValidationError(path.string() + ": no rows");
  return rows;
}

// ---------------------------------------------------------------------------
// Manifests

std::string file_sha256(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeFailure("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw RuntimeFailure("sha256 init failed");
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    auto got = in.gcount();
    if (got > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

KeyValues DatasetManifest::to_kv() const {
  KeyValues kv;
  kv.set("format", "tackscan-dataset");
  kv.set("version", "1");
  kv.set("traces", traces.string());
  kv.set("metadata", metadata.string());
  kv.set("checksum", "sha256:" + checksum);
  kv.set("provenance", provenance);
  kv.set("trace_count", std::to_string(trace_count));
  kv.set("samples_per_trace", std::to_string(samples_per_trace));
  kv.set("dt", dt);
  kv.set("prediction_only", prediction_only ? "true" : "false");
  return kv;
}

DatasetManifest DatasetManifest::from_kv(const KeyValues& kv, const fs::path& base) {
  if (kv.get("format") != "tackscan-dataset") throw ValidationError("not a dataset manifest");
  if (kv.get("version") != "1") throw ValidationError("unsupported dataset manifest version " + kv.get("version"));
  auto resolve = [&](const std::string& p) {
    fs::path path(p);
    return path.is_absolute() ? path : base / path;
  };
  DatasetManifest m;
  m.traces = resolve(kv.get("traces"));
  m.metadata = resolve(kv.get("metadata"));
  const auto& sum = kv.get("checksum");
  if (sum.rfind("sha256:", 0) != 0) throw ValidationError("checksum must be sha256:<hex>");
  m.checksum = sum.substr(7);
  m.provenance = kv.get("provenance");
  m.trace_count = static_cast<std::size_t>(text::parse_int(kv.get("trace_count"), "trace_count"));
  m.samples_per_trace = static_cast<std::size_t>(text::parse_int(kv.get("samples_per_trace"), "samples_per_trace"));
  m.dt = kv.get_double("dt");
  m.prediction_only = kv.get("prediction_only") == "true";
  return m;
}

DatasetManifest ingest_dataset(const fs::path& traces, const fs::path& metadata, const std::string& provenance) {
  const auto meta = KeyValues::read(metadata);
  if (!meta.has("dt")) throw ValidationError(metadata.string() + ": missing sample interval 'dt'");
  const double dt = meta.get_double("dt");
  if (!(dt > 0.0)) throw ValidationError(metadata.string() + ": dt must be positive");
  const auto scans = read_trace_table(traces, dt);
  const std::size_t n = scans.front().samples.size();
  if (auto declared = meta.find("samples_per_trace")) {
    if (static_cast<std::size_t>(text::parse_int(*declared, "samples_per_trace")) != n) {
      throw ValidationError(metadata.string() + ": samples_per_trace disagrees with the trace table");
    }
  }
  DatasetManifest m;
  m.traces = traces;
  m.metadata = metadata;
  m.checksum = file_sha256(traces);
  m.provenance = provenance;
  m.trace_count = scans.size();
  m.samples_per_trace = n;
  m.dt = dt;
  m.prediction_only = true;
  for (const auto& s : scans) {
    if (s.truth_quantity) {
      m.prediction_only = false;
      break;
    }
  }
  if (!m.prediction_only) {
    for (const auto& s : scans) {
      if (!s.truth_quantity) {
        throw ValidationError(traces.string() + ": quantity labels must be given for all traces or none");
      }
    }
  }
  return m;
}

std::vector<AScan> load_dataset(const DatasetManifest& manifest) {
  if (file_sha256(manifest.traces) != manifest.checksum) {
    throw ValidationError(manifest.traces.string() + ": checksum mismatch with manifest");
  }
  auto scans = read_trace_table(manifest.traces, manifest.dt);
  if (scans.size() != manifest.trace_count || scans.front().samples.size() != manifest.samples_per_trace) {
    throw ValidationError(manifest.traces.string() + ": shape disagrees with manifest");
  }
  return scans;
}

}  // namespace tackscan
