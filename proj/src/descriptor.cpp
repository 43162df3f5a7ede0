// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

#include "flagsq/descriptor.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace flagsq {

namespace {

using nlohmann::json;

struct Position {
  int line = 0;
  int column = 0;
};

Position position_of_offset(std::string_view text, std::size_t offset) {
  Position p{1, 1};
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++p.line;
      p.column = 1;
    } else {
      ++p.column;
    }
  }
  return p;
}

// Best-effort location of a field: the first occurrence of its key.
Position position_of_key(std::string_view text, const std::string& path) {
  const auto dot = path.rfind('.');
  const std::string key = "\"" + path.substr(dot == std::string::npos ? 0 : dot + 1) + "\"";
  const auto at = text.find(key);
  if (at == std::string_view::npos) return {};
  return position_of_offset(text, at);
}

class Reader {
 public:
  explicit Reader(std::string_view text) : text_(text) {}

  [[noreturn]] void fail(const std::string& path, const std::string& msg) const {
    const Position p = position_of_key(text_, path);
    std::ostringstream os;
    os << "descriptor field '" << path << "'";
    if (p.line > 0) os << " (line " << p.line << ", column " << p.column << ")";
    os << ": " << msg;
    throw DescriptorError(os.str(), path, p.line, p.column);
  }

  double number(const json& v, const std::string& path) const {
    if (!v.is_number()) fail(path, "expected a number");
    return v.get<double>();
  }

  double probability(const json& v, const std::string& path) const {
    const double x = number(v, path);
    if (!(x >= 0.0 && x <= 1.0)) fail(path, "expected a value in [0, 1]");
    return x;
  }

  std::string string(const json& v, const std::string& path) const {
    if (!v.is_string()) fail(path, "expected a string");
    return v.get<std::string>();
  }

  /// A number broadcast to k entries, or a list of exactly k numbers.
  RealVector per_detector(const json& v, int k, const std::string& path) const {
    RealVector out(k);
    if (v.is_number()) {
      out.setConstant(probability(v, path));
    } else if (v.is_array()) {
      if (static_cast<int>(v.size()) != k) fail(path, "expected " + std::to_string(k) + " entries, one per detector");
      for (int i = 0; i < k; ++i) out[i] = probability(v[static_cast<std::size_t>(i)], path + "[" + std::to_string(i) + "]");
    } else {
      fail(path, "expected a number or a list of numbers");
    }
    return out;
  }

  RealMatrix real_matrix(const json& v, const std::string& path) const {
    if (!v.is_array() || v.empty()) fail(path, "expected a non-empty list of rows");
    const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
    if (cols == 0) fail(path, "expected a non-empty list of rows");
    RealMatrix m(static_cast<Index>(v.size()), static_cast<Index>(cols));
    for (std::size_t r = 0; r < v.size(); ++r) {
      if (!v[r].is_array() || v[r].size() != cols) fail(path, "rows must have equal length");
      for (std::size_t c = 0; c < cols; ++c) {
        m(static_cast<Index>(r), static_cast<Index>(c)) = number(v[r][c], path);
      }
    }
    return m;
  }

  void only_keys(const json& obj, const std::set<std::string>& allowed, const std::string& prefix) const {
    for (const auto& [key, value] : obj.items()) {
      if (!allowed.contains(key)) fail(prefix.empty() ? key : prefix + "." + key, "unknown field");
    }
  }

 private:
  std::string_view text_;
};

}  // namespace

std::string_view to_string(SetupKind k) {
  switch (k) {
    case SetupKind::passive_bb84: return "passive-bb84";
    case SetupKind::active_bb84: return "active-bb84";
    case SetupKind::custom: return "custom";
  }
  return "custom";
}

std::string_view to_string(AnalysisMode m) { return m == AnalysisMode::flag ? "flag" : "qubit-squasher"; }

std::string_view to_string(CoarseGrain c) { return c == CoarseGrain::none ? "none" : "multiclick"; }

CoarseGrain parse_coarse_grain(std::string_view s) {
  if (s == "none") return CoarseGrain::none;
  if (s == "multiclick") return CoarseGrain::multiclick;
  throw std::invalid_argument("coarse-grain must be \"none\" or \"multiclick\"");
}

SetupDescriptor parse_descriptor(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    const Position p = position_of_offset(text, e.byte > 0 ? e.byte - 1 : 0);
    throw DescriptorError("descriptor syntax error at line " + std::to_string(p.line) + ", column " +
                              std::to_string(p.column) + ": " + e.what(),
                          "", p.line, p.column);
  }
  const Reader in(text);
  if (!doc.is_object()) in.fail("(root)", "expected a JSON object");
  in.only_keys(doc, {"setup", "mode_map", "eta", "dark_rate", "cutoff", "eta_star", "mode", "coarse_grain", "weight",
                     "tolerances", "seed", "name"},
               "");

  SetupDescriptor d;
  if (!doc.contains("setup")) in.fail("setup", "missing");
  const std::string kind = in.string(doc["setup"], "setup");
  int k = 0;
  if (kind == "passive-bb84") {
    d.kind = SetupKind::passive_bb84;
    k = 4;
  } else if (kind == "active-bb84") {
    d.kind = SetupKind::active_bb84;
    k = 2;
  } else if (kind == "custom") {
    d.kind = SetupKind::custom;
    if (!doc.contains("mode_map")) in.fail("mode_map", "required for custom setups");
    const json& mm = doc["mode_map"];
    if (!mm.is_object() || !mm.contains("re")) in.fail("mode_map", "expected {\"re\": [[...]], \"im\": [[...]]}");
    in.only_keys(mm, {"re", "im"}, "mode_map");
    const RealMatrix re = in.real_matrix(mm["re"], "mode_map.re");
    RealMatrix im = RealMatrix::Zero(re.rows(), re.cols());
    if (mm.contains("im")) {
      im = in.real_matrix(mm["im"], "mode_map.im");
      if (im.rows() != re.rows() || im.cols() != re.cols()) in.fail("mode_map.im", "shape differs from mode_map.re");
    }
    d.mode_map = re.cast<Complex>() + Complex(0.0, 1.0) * im.cast<Complex>();
    k = static_cast<int>(re.rows());
    if (k < 1 || k > kMaxDetectors) in.fail("mode_map", "detector count must be 1.." + std::to_string(kMaxDetectors));
    DetectionSetup probe{d.mode_map, RealVector::Ones(k), std::nullopt};
    try {
      probe.validate();
    } catch (const std::invalid_argument& e) {
      in.fail("mode_map", e.what());
    }
  } else {
    in.fail("setup", "expected \"passive-bb84\", \"active-bb84\" or \"custom\"");
  }
  if (d.kind != SetupKind::custom && doc.contains("mode_map")) in.fail("mode_map", "only allowed for custom setups");

  if (!doc.contains("eta")) in.fail("eta", "missing");
  const json& eta = doc["eta"];
  if (!eta.is_object() || !eta.contains("lo") || !eta.contains("hi")) in.fail("eta", "expected {\"lo\": ..., \"hi\": ...}");
  in.only_keys(eta, {"lo", "hi"}, "eta");
  d.eta_lo = in.per_detector(eta["lo"], k, "eta.lo");
  d.eta_hi = in.per_detector(eta["hi"], k, "eta.hi");
  for (int i = 0; i < k; ++i) {
    if (d.eta_lo[i] <= 0.0) in.fail("eta.lo", "efficiencies must be positive");
    if (d.eta_lo[i] > d.eta_hi[i]) in.fail("eta.hi", "range must satisfy lo <= hi");
  }

  if (!doc.contains("dark_rate")) in.fail("dark_rate", "missing");
  const json& dr = doc["dark_rate"];
  if (!dr.is_object() || !dr.contains("max")) in.fail("dark_rate", "expected {\"max\": ...}");
  in.only_keys(dr, {"max"}, "dark_rate");
  d.d_max = in.per_detector(dr["max"], k, "dark_rate.max");

  if (doc.contains("cutoff")) {
    const json& c = doc["cutoff"];
    if (!c.is_number_integer() || c.get<int>() < 1 || c.get<int>() > kMaxCutoff) in.fail("cutoff", "expected 1, 2 or 3");
    d.cutoff = c.get<int>();
  }
  if (doc.contains("eta_star")) {
    const double es = in.number(doc["eta_star"], "eta_star");
    if (!(es > 0.0 && es <= 1.0)) in.fail("eta_star", "expected a value in (0, 1]");
    d.eta_star = es;
  }
  if (doc.contains("mode")) {
    const std::string m = in.string(doc["mode"], "mode");
    if (m == "flag") {
      d.mode = AnalysisMode::flag;
    } else if (m == "qubit-squasher") {
      d.mode = AnalysisMode::qubit_squasher;
    } else {
      in.fail("mode", "expected \"flag\" or \"qubit-squasher\"");
    }
  }
  if (d.mode == AnalysisMode::qubit_squasher && d.kind != SetupKind::active_bb84) {
    in.fail("mode", "qubit-squasher mode needs an active-bb84 setup");
  }
  if (doc.contains("coarse_grain")) {
    try {
      d.coarse_grain = parse_coarse_grain(in.string(doc["coarse_grain"], "coarse_grain"));
    } catch (const std::invalid_argument& e) {
      in.fail("coarse_grain", e.what());
    }
    if (d.coarse_grain == CoarseGrain::multiclick && k < 2) in.fail("coarse_grain", "multiclick needs at least 2 detectors");
  }
  if (doc.contains("weight")) {
    const json& w = doc["weight"];
    if (!w.is_object()) in.fail("weight", "expected an object");
    in.only_keys(w, {"W", "p_e"}, "weight");
    if (w.contains("W")) d.weight_in = in.probability(w["W"], "weight.W");
    if (w.contains("p_e")) {
      d.p_e = in.probability(w["p_e"], "weight.p_e");
      if (d.cutoff < 2) in.fail("cutoff", "the weight bound needs cutoff >= 2 when weight.p_e is given");
    }
  }
  if (doc.contains("tolerances")) {
    const json& t = doc["tolerances"];
    if (!t.is_object()) in.fail("tolerances", "expected an object");
    in.only_keys(t, {"cptp", "equivalence", "weight_relation", "feasibility"}, "tolerances");
    auto positive = [&](const char* key, double& slot) {
      if (!t.contains(key)) return;
      const std::string path = std::string("tolerances.") + key;
      slot = in.number(t[key], path);
      if (!(slot > 0.0)) in.fail(path, "expected a positive number");
    };
    positive("cptp", d.tol.cptp);
    positive("equivalence", d.tol.equivalence);
    positive("weight_relation", d.tol.weight_relation);
    positive("feasibility", d.tol.feasibility);
  }
  if (doc.contains("seed")) {
    const json& s = doc["seed"];
    if (!s.is_number_unsigned() && !(s.is_number_integer() && s.get<long long>() >= 0)) {
      in.fail("seed", "expected a non-negative integer");
    }
    d.seed = s.get<std::uint64_t>();
  }
  if (doc.contains("name")) d.name = in.string(doc["name"], "name");
  return d;
}

SetupDescriptor load_descriptor(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open descriptor " + path.string());
  std::ostringstream buf;
  buf << f.rdbuf();
  return parse_descriptor(buf.str());
}

std::vector<DetectionSetup> setups_for(const SetupDescriptor& desc) {
  switch (desc.kind) {
    case SetupKind::passive_bb84: return {passive_bb84_setup()};
    case SetupKind::active_bb84: return {active_bb84_setup("Z"), active_bb84_setup("X")};
    case SetupKind::custom: {
      DetectionSetup s{desc.mode_map, RealVector::Ones(desc.mode_map.rows()), std::nullopt};
      s.validate();
      return {s};
    }
  }
  return {};
}

std::vector<RealVector> eta_corners(const SetupDescriptor& desc) {
  const int k = desc.detectors();
  std::vector<RealVector> out;
  for (std::uint32_t mask = 0; mask < (1u << k); ++mask) {
    RealVector eta(k);
    for (int i = 0; i < k; ++i) eta[i] = (mask >> i) & 1u ? desc.eta_hi[i] : desc.eta_lo[i];
    const bool seen = std::any_of(out.begin(), out.end(), [&](const RealVector& e) { return e == eta; });
    if (!seen) out.push_back(std::move(eta));
  }
  return out;
}

}  // namespace flagsq
