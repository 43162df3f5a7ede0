// Copyright 2026 The flagsquash Authors
// SPDX-License-Identifier: Apache-2.0

// flagsq: command-line front end. Every subcommand reads one JSON setup
// descriptor and writes a JSON certificate to --out (stdout by default).
// Exit codes: 0 all checks pass, 2 framework requirement unmet, 1 tool error.

#include "flagsq/analysis.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <functional>
#include <iostream>
#include <map>

namespace {

struct Options {
  std::string descriptor;
  std::string out;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  std::optional<double> eta_star;
  std::optional<std::string> coarse_grain;
};

void add_common(CLI::App* sub, Options& o) {
  sub->add_option("descriptor", o.descriptor, "setup descriptor (JSON)")->required()->check(CLI::ExistingFile);
  sub->add_option("--out", o.out, "certificate path (default: stdout)");
  sub->add_option("--tol", o.tol, "CPTP and statistics-equivalence tolerance");
  sub->add_option("--seed", o.seed, "seed for randomized searches");
  sub->add_option("--eta-star", o.eta_star, "reference efficiency of the loss decomposition");
  sub->add_option("--coarse-grain", o.coarse_grain, "event coarse-graining")
      ->check(CLI::IsMember({"none", "multiclick"}));
}

}  // namespace

int main(int argc, char** argv) {
  using Runner = std::function<flagsq::Certificate(const flagsq::SetupDescriptor&)>;
  const std::vector<std::tuple<std::string, std::string, Runner>> commands{
      {"analyze", "full reduction pipeline", flagsq::run_analysis},
      {"swap-lp", "solve the qubit-squasher swap relation", flagsq::run_swap_lp},
      {"verify-channel", "build and certify the noise channels", flagsq::run_verify_channel},
      {"weight", "weight bound and its propagation", flagsq::run_weight},
      {"choi-check", "Choi-matrix feasibility search", flagsq::run_choi_check},
  };

  CLI::App app{"Certify reductions of imperfect threshold detectors to ideal ones"};
  app.set_version_flag("--version", std::string(FLAGSQ_VERSION));
  app.require_subcommand(1);
  Options opts;
  std::map<CLI::App*, Runner> runners;
  for (const auto& [name, help, run] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    add_common(sub, opts);
    runners[sub] = run;
  }
  CLI11_PARSE(app, argc, argv);

  try {
    flagsq::AnalysisOverrides o{opts.tol, opts.seed, opts.eta_star, std::nullopt};
    if (opts.coarse_grain) o.coarse_grain = flagsq::parse_coarse_grain(*opts.coarse_grain);
    const flagsq::SetupDescriptor desc = flagsq::apply_overrides(flagsq::load_descriptor(opts.descriptor), o);
    const flagsq::Certificate cert = runners.at(app.get_subcommands().front())(desc);
    if (opts.out.empty()) {
      std::cout << flagsq::serialize_certificate(cert);
    } else {
      flagsq::emit_certificate(cert, opts.out);
    }
    for (const auto& f : cert.failures) std::cerr << "flagsq: " << f << "\n";
    return cert.exit_code();
  } catch (const flagsq::DescriptorError& e) {
    std::cerr << "flagsq: " << opts.descriptor << ": " << e.what() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "flagsq: " << e.what() << "\n";
  }
  return 1;
}
