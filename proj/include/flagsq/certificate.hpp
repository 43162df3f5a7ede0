// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// certificate.hpp: Machine-readable analysis results and their
// deterministic JSON serialization (sorted keys, numbers as %.17g).

#pragma once

#include "flagsq/descriptor.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace flagsq {

struct CheckRecord {
  std::string name;       ///< unique within a certificate, e.g. "dark_count.cptp[eta=0]"
  std::string operation;  ///< library call that re-derives the residual
  bool pass = false;
  double residual = 0.0;
  double tol = 0.0;
};

struct Certificate {
  std::string command;
  std::string tool_version = FLAGSQ_VERSION;
  SetupDescriptor descriptor;
  std::map<std::string, double> derived;
  std::map<std::string, std::string> notes;
  std::vector<CheckRecord> checks;
  /// Unmet framework requirements, each naming the failing relation.
  std::vector<std::string> failures;

  void add(CheckRecord c);
  void fail(std::string reason) { failures.push_back(std::move(reason)); }
  bool reducible() const { return failures.empty(); }
  /// 0 when every check passed and no requirement failed, 2 otherwise.
  int exit_code() const { return reducible() ? 0 : 2; }
};

std::string serialize_certificate(const Certificate& cert);

/// Writes the serialization; throws std::runtime_error with the OS message on failure.
void emit_certificate(const Certificate& cert, const std::filesystem::path& path);

/// Parses any JSON text and re-serializes it in the certificate format.
std::string canonical_json(std::string_view text);

}  // namespace flagsq
