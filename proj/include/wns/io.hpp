#pragma once

// Snapshot files, key=value configs, trajectory directories and digests.
//
// Snapshot layout: text header lines
//   wns-field 1
//   n <N>
//   box_length <L, %.17g>
//   components 3
//   endianness little|big
//   param <key> <value>        (zero or more)
//   sha256 <hex digest of the payload bytes>
//   end
// followed by 3 N^3 IEEE doubles, component-major, x-fastest.

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wns/solver.hpp"

namespace wns {

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DigestError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::string sha256_hex(const void* data, std::size_t len) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int mdlen = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data, len) != 1 || EVP_DigestFinal_ex(ctx, md, &mdlen) != 1) {
    EVP_MD_CTX_free(ctx);
    throw std::runtime_error("sha256 failed");
  }
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < mdlen; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

inline std::string read_file_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string file_digest(const std::filesystem::path& p) {
  const std::string b = read_file_bytes(p);
  return sha256_hex(b.data(), b.size());
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

enum class Endian { little, big };

inline Endian host_endian() { return std::endian::native == std::endian::little ? Endian::little : Endian::big; }

namespace detail {

inline void byteswap_doubles(char* p, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    char* d = p + 8 * i;
    for (int a = 0, b = 7; a < b; ++a, --b) std::swap(d[a], d[b]);
  }
}

}  // namespace detail

using ParamMap = std::map<std::string, std::string>;

inline void save_field(const std::filesystem::path& path, const VectorField& u,
                       const ParamMap& params = {}, Endian endian = Endian::little) {
  const std::size_t n3 = u.size();
  std::string payload(3 * n3 * sizeof(double), '\0');
  for (int j = 0; j < 3; ++j) std::memcpy(&payload[j * n3 * sizeof(double)], u.c[j].data(), n3 * sizeof(double));
  if (endian != host_endian()) detail::byteswap_doubles(payload.data(), 3 * n3);
  std::ostringstream h;
  h << "wns-field 1\n"
    << "n " << u.grid.n() << "\n"
    << "box_length " << format_double(u.grid.length()) << "\n"
    << "components 3\n"
    << "endianness " << (endian == Endian::little ? "little" : "big") << "\n";
  for (const auto& [k, v] : params) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos) {
      throw std::invalid_argument("save_field: parameter keys may not contain spaces or newlines");
    }
    h << "param " << k << " " << v << "\n";
  }
  h << "sha256 " << sha256_hex(payload.data(), payload.size()) << "\n"
    << "end\n";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const std::string hs = h.str();
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

struct LoadedField {
  VectorField field;
  ParamMap params;
  Endian endian;
};

inline LoadedField load_field_with_params(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    const std::size_t e = bytes.find('\n', pos);
    if (e == std::string::npos) throw FormatError(path.string() + ": truncated header");
    std::string line = bytes.substr(pos, e - pos);
    pos = e + 1;
    return line;
  };
  if (next_line() != "wns-field 1") throw FormatError(path.string() + ": bad magic");
  int n = 0;
  double L = 0.0;
  int comps = 0;
  Endian endian = Endian::little;
  std::string digest;
  ParamMap params;
  bool have_n = false, have_l = false, have_e = false;
  for (;;) {
    const std::string line = next_line();
    if (line == "end") break;
    std::istringstream ls(line);
    std::string key;
    ls >> key;
    if (key == "n") {
      if (!(ls >> n)) throw FormatError(path.string() + ": bad n");
      have_n = true;
    } else if (key == "box_length") {
      std::string v;
      ls >> v;
      try {
        L = std::stod(v);
      } catch (const std::exception&) {
        throw FormatError(path.string() + ": bad box_length");
      }
      have_l = true;
    } else if (key == "components") {
      ls >> comps;
    } else if (key == "endianness") {
      std::string v;
      ls >> v;
      if (v == "little") endian = Endian::little;
      else if (v == "big") endian = Endian::big;
      else throw FormatError(path.string() + ": bad endianness tag '" + v + "'");
      have_e = true;
    } else if (key == "param") {
      std::string k;
      ls >> k;
      std::string rest;
      std::getline(ls, rest);
      if (!rest.empty() && rest[0] == ' ') rest.erase(0, 1);
      params[k] = rest;
    } else if (key == "sha256") {
      ls >> digest;
    } else {
      throw FormatError(path.string() + ": unknown header key '" + key + "'");
    }
  }
  if (!have_n || !have_l || !have_e || comps != 3 || digest.empty()) {
    throw FormatError(path.string() + ": incomplete header");
  }
  const Grid g(n, L);
  const std::size_t n3 = g.size();
  const std::size_t need = 3 * n3 * sizeof(double);
  if (bytes.size() - pos != need) {
    throw FormatError(path.string() + ": payload has " + std::to_string(bytes.size() - pos) +
                      " bytes, expected " + std::to_string(need));
  }
  std::string payload = bytes.substr(pos);
  if (sha256_hex(payload.data(), payload.size()) != digest) {
    throw DigestError(path.string() + ": payload digest mismatch");
  }
  if (endian != host_endian()) detail::byteswap_doubles(payload.data(), 3 * n3);
  VectorField u(g);
  for (int j = 0; j < 3; ++j) std::memcpy(u.c[j].data(), &payload[j * n3 * sizeof(double)], n3 * sizeof(double));
  return {std::move(u), std::move(params), endian};
}

inline VectorField load_field(const std::filesystem::path& path) {
  return load_field_with_params(path).field;
}

// ---- key=value configuration -------------------------------------------------

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Lines of key=value; '#' starts a comment; blank lines ignored.
inline ParamMap parse_key_values(const std::string& text, const std::string& origin = "config") {
  ParamMap out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key=value");
    }
    const std::string k = trim(line.substr(0, eq));
    const std::string v = trim(line.substr(eq + 1));
    if (k.empty()) throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
    if (out.count(k)) throw ConfigError(origin + ":" + std::to_string(lineno) + ": duplicate key '" + k + "'");
    out[k] = v;
  }
  return out;
}

inline ParamMap read_key_values(const std::filesystem::path& p) {
  return parse_key_values(read_file_bytes(p), p.string());
}

// ---- trajectories --------------------------------------------------------------

inline std::string snapshot_name(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "snap_%05zu.wnsf", k);
  return buf;
}

/// Writes snapshots, diagnostics.csv and trajectory.txt; returns the written
/// paths (relative to dir) with their digests.
inline std::vector<std::pair<std::string, std::string>> save_trajectory(
    const std::filesystem::path& dir, const Trajectory& tr, const ParamMap& config_echo = {}) {
  std::filesystem::create_directories(dir);
  std::vector<std::pair<std::string, std::string>> written;
  for (std::size_t k = 0; k < tr.size(); ++k) {
    const std::string name = snapshot_name(k);
    save_field(dir / name, tr.snapshots[k], {{"time", format_double(tr.times[k])}});
    written.emplace_back(name, file_digest(dir / name));
  }
  {
    std::ofstream csv(dir / "diagnostics.csv", std::ios::trunc);
    csv << "time,kind,p_or_s,gamma,value\n";
    for (const auto& d : tr.diagnostics) {
      csv << format_double(d.time) << ',' << to_string(d.norm.kind) << ','
          << format_double(d.norm.p_or_s) << ',' << format_double(d.norm.gamma) << ','
          << format_double(d.norm.value) << '\n';
    }
  }
  written.emplace_back("diagnostics.csv", file_digest(dir / "diagnostics.csv"));
  {
    std::ofstream t(dir / "trajectory.txt", std::ios::trunc);
    t << "snapshots=" << tr.size() << "\n"
      << "nonlinear=" << (tr.nonlinear ? 1 : 0) << "\n"
      << "blew_up=" << (tr.blew_up ? 1 : 0) << "\n"
      << "last_valid_time=" << format_double(tr.last_valid_time) << "\n"
      << "epsilon=" << format_double(tr.epsilon) << "\n"
      << "alpha=" << format_double(tr.alpha) << "\n"
      << "dt=" << format_double(tr.dt) << "\n"
      << "star_r=" << format_double(tr.star_r) << "\n";
    for (const auto& [k, v] : config_echo) t << "config." << k << "=" << v << "\n";
  }
  written.emplace_back("trajectory.txt", file_digest(dir / "trajectory.txt"));
  return written;
}

inline Trajectory load_trajectory(const std::filesystem::path& dir) {
  const ParamMap meta = read_key_values(dir / "trajectory.txt");
  auto get = [&](const std::string& k) {
    const auto it = meta.find(k);
    if (it == meta.end()) throw FormatError((dir / "trajectory.txt").string() + ": missing " + k);
    return it->second;
  };
  Trajectory tr;
  const std::size_t count = std::stoul(get("snapshots"));
  tr.nonlinear = get("nonlinear") == "1";
  tr.blew_up = get("blew_up") == "1";
  tr.last_valid_time = std::stod(get("last_valid_time"));
  tr.epsilon = std::stod(get("epsilon"));
  tr.alpha = std::stod(get("alpha"));
  tr.dt = std::stod(get("dt"));
  tr.star_r = std::stod(get("star_r"));
  for (std::size_t k = 0; k < count; ++k) {
    LoadedField lf = load_field_with_params(dir / snapshot_name(k));
    const auto it = lf.params.find("time");
    if (it == lf.params.end()) throw FormatError(snapshot_name(k) + ": missing time");
    tr.times.push_back(std::stod(it->second));
    tr.snapshots.push_back(std::move(lf.field));
  }
  return tr;
}

// ---- manifest ------------------------------------------------------------------

inline constexpr const char* kCodeVersion = "wns 1.0.0";

struct RunManifest {
  ParamMap config;
  std::string code_version = kCodeVersion;
  int workers = 1;
  double wall_seconds = 0.0;
  std::vector<std::pair<std::string, std::string>> inputs;   // (path, sha256)
  std::vector<std::pair<std::string, std::string>> outputs;  // (path, sha256)
  std::vector<std::pair<std::string, std::string>> results;  // (name, value)
  std::vector<std::pair<std::string, std::string>> stages;   // (stage, ok|failed: reason|skipped)
};

inline void write_manifest(const std::filesystem::path& path, const RunManifest& m) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "code_version=" << m.code_version << "\n"
      << "workers=" << m.workers << "\n"
      << "wall_seconds=" << format_double(m.wall_seconds) << "\n";
  for (const auto& [k, v] : m.config) out << "config." << k << "=" << v << "\n";
  for (const auto& [k, v] : m.inputs) out << "input." << k << "=" << v << "\n";
  for (const auto& [k, v] : m.outputs) out << "output." << k << "=" << v << "\n";
  for (const auto& [k, v] : m.stages) out << "stage." << k << "=" << v << "\n";
  for (const auto& [k, v] : m.results) out << "result." << k << "=" << v << "\n";
}

/// Worker count from WNS_WORKERS (default 1).
inline int worker_count() {
  const char* s = std::getenv("WNS_WORKERS");
  if (s == nullptr || *s == '\0') return 1;
  try {
    const int w = std::stoi(s);
    return w >= 1 ? w : 1;
  } catch (const std::exception&) {
    throw ConfigError("WNS_WORKERS must be a positive integer");
  }
}

}  // namespace wns
