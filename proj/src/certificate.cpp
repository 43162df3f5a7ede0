// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/certificate.hpp"

#include <json.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace flagsq {

namespace {

using nlohmann::json;

json vector_json(const RealVector& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json descriptor_json(const SetupDescriptor& d) {
  json j;
  j["name"] = d.name;
  j["setup"] = std::string(to_string(d.kind));
  if (d.kind == SetupKind::custom) {
    json re = json::array();
    json im = json::array();
    for (Index r = 0; r < d.mode_map.rows(); ++r) {
      json rr = json::array();
      json ii = json::array();
      for (Index c = 0; c < d.mode_map.cols(); ++c) {
        rr.push_back(d.mode_map(r, c).real());
        ii.push_back(d.mode_map(r, c).imag());
      }
      re.push_back(rr);
      im.push_back(ii);
    }
    j["mode_map"] = {{"re", re}, {"im", im}};
  }
  j["eta"] = {{"lo", vector_json(d.eta_lo)}, {"hi", vector_json(d.eta_hi)}};
  j["dark_rate"] = {{"max", vector_json(d.d_max)}};
  j["cutoff"] = d.cutoff;
  j["eta_star"] = d.eta_star_or_default();
  j["mode"] = std::string(to_string(d.mode));
  j["coarse_grain"] = std::string(to_string(d.coarse_grain));
  j["weight"] = {{"W", d.weight_in}};
  if (d.p_e) j["weight"]["p_e"] = *d.p_e;
  j["tolerances"] = {{"cptp", d.tol.cptp},
                     {"equivalence", d.tol.equivalence},
                     {"weight_relation", d.tol.weight_relation},
                     {"feasibility", d.tol.feasibility}};
  j["seed"] = d.seed;
  return j;
}

std::string format_double(double x) {
  if (!std::isfinite(x)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  std::string s(buf);
  // Keep it a JSON floating-point literal so it parses back as a double.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

void write(const json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {  // std::map: keys sorted
        if (!first) out += ",\n";
        first = false;
        out += inner + json(it.key()).dump() + ": ";
        write(it.value(), out, indent + 1);
      }
      out += "\n" + pad + "}";
      return;
    }
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[";
      bool first = true;
      for (const auto& v : j) {
        if (!first) out += ", ";
        first = false;
        write(v, out, indent + 1);
      }
      out += "]";
      return;
    }
    case json::value_t::number_float:
      out += format_double(j.get<double>());
      return;
    default:
      out += j.dump();
      return;
  }
}

std::string dump(const json& j) {
  std::string out;
  write(j, out, 0);
  out += "\n";
  return out;
}

}  // namespace

void Certificate::add(CheckRecord c) {
  if (!c.pass) failures.push_back(c.name + " failed (" + c.operation + ")");
  checks.push_back(std::move(c));
}

std::string serialize_certificate(const Certificate& cert) {
  json j;
  j["command"] = cert.command;
  j["tool"] = {{"name", "flagsq"}, {"version", cert.tool_version}};
  j["seed"] = cert.descriptor.seed;
  j["descriptor"] = descriptor_json(cert.descriptor);
  j["derived"] = json::object();
  for (const auto& [k, v] : cert.derived) j["derived"][k] = v;
  j["notes"] = json::object();
  for (const auto& [k, v] : cert.notes) j["notes"][k] = v;
  j["checks"] = json::object();
  for (const auto& c : cert.checks) {
    j["checks"][c.name] = {{"operation", c.operation}, {"pass", c.pass}, {"residual", c.residual}, {"tol", c.tol}};
  }
  j["failures"] = cert.failures;
  j["verdict"] = cert.reducible() ? "reducible" : "not reducible under this framework";
  return dump(j);
}

void emit_certificate(const Certificate& cert, const std::filesystem::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw std::runtime_error("cannot write " + path.string() + ": " + std::strerror(errno));
  f << serialize_certificate(cert);
  f.close();
  if (!f) throw std::runtime_error("cannot write " + path.string() + ": " + std::strerror(errno));
}

std::string canonical_json(std::string_view text) { return dump(json::parse(text.begin(), text.end())); }

}  // namespace flagsq
