#pragma once

// JSON report plumbing shared by the CLI subcommands.  Reports are
// deterministic byte-for-byte for a fixed seed and configuration: keys
// are emitted sorted, doubles use the library's shortest round-trip
// formatting, and timing fields can be suppressed wholesale.

#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "l0prox/cli/csv.hpp"
#include "l0prox/errors.hpp"
#include "l0prox/theory.hpp"
#include "l0prox/version.hpp"

namespace l0prox {

using Json = nlohmann::json;  // object keys are kept sorted

/// Doubles into JSON, keeping non-finite values representable.
inline Json json_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

inline Json json_vector(const Vector& v) {
  Json arr = Json::array();
  for (Index i = 0; i < v.size(); ++i) arr.push_back(json_number(v[i]));
  return arr;
}

inline Json json_support(const Support& s) {
  Json arr = Json::array();
  for (Index j : s) arr.push_back(j);
  return arr;
}

inline Json to_json(const BoundCertificate& cert) {
  Json j;
  j["kind"] = cert.kind;
  j["bound_value"] = json_number(cert.bound_value);
  j["actual_gap"] = json_number(cert.actual_gap);
  j["assumptions_ok"] = cert.assumptions_ok;
  j["violated"] = cert.violated();
  j["probabilistic"] = cert.probabilistic;
  if (cert.probabilistic) j["delta"] = json_number(cert.delta);
  j["kappa0"] = json_number(cert.kappa0);
  j["slack"] = json_number(cert.slack);
  j["b"] = json_number(cert.b);
  j["difference"] = json_support(cert.difference);
  Json flags;
  for (const auto& [name, ok] : cert.flags) flags[name] = ok;
  j["flags"] = flags;
  Json details;
  for (const auto& [name, v] : cert.details) details[name] = json_number(v);
  j["details"] = details;
  return j;
}

/// Common envelope: schema marker, library version, subcommand, seed.
inline Json report_envelope(const std::string& command, std::uint64_t seed) {
  Json j;
  j["schema"] = 1;
  j["version"] = version_string;
  j["command"] = command;
  j["seed"] = seed;
  return j;
}

inline void write_report(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed while writing " + path.string());
}

}  // namespace l0prox
