#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "volterra/kernels.hpp"
#include "volterra/markovian.hpp"
#include "volterra/models.hpp"
#include "volterra/sampler.hpp"
#include "volterra/weakerror.hpp"

namespace volterra {

/// Sectioned key-value text:
///
///   # comment
///   [section]
///   key = value
///
/// Keys are identifiers, values run to the end of the line (no inline
/// comments). Blank lines and lines starting with '#' or ';' are ignored.
struct ConfigEntry {
  std::string key;
  std::string value;
  int line = 0;
  /// 1-based column of the first value character.
  int column = 0;
  int key_column = 0;
};

struct ConfigSection {
  std::string name;
  int line = 0;
  std::vector<ConfigEntry> entries;

  const ConfigEntry* find(std::string_view key) const;
  void set(const std::string& key, const std::string& value);
};

struct ConfigDocument {
  std::vector<ConfigSection> sections;

  const ConfigSection* find(std::string_view name) const;
  ConfigSection& section(const std::string& name);
};

/// Throws ConfigError with line and column.
ConfigDocument parse_config_document(std::string_view text);
std::string serialize_config(const ConfigDocument& doc);

struct GridConfig {
  double T = 1.0;
  int steps = 64;
  bool operator==(const GridConfig&) const = default;
};

struct ModelConfig {
  ModelVariant variant = ModelVariant::Dissipation;
  double nu = 0.5;
  double H = 0.1;
  double rho = 0.0;
  double X0 = 0.0;
  /// Reference kernel scale for the dissipation model (default: the kernel's).
  std::optional<double> scale;
  std::string b;
  std::string sigma;
  bool operator==(const ModelConfig&) const = default;
};

/// Parameters of build_rule; cuts default to default_design(H, T, T / steps, ...).
struct RuleConfig {
  std::optional<double> H;
  int cells = 8;
  int points_per_cell = 2;
  std::optional<double> cut_low;
  std::optional<double> cut_high;
  bool lump_low_tail = false;
  bool operator==(const RuleConfig&) const = default;
};

struct McConfig {
  std::int64_t N = 10000;
  std::uint64_t seed = 0;
  int batches = 64;
  std::string phi = "square";
  bool independent = false;
  bool operator==(const McConfig&) const = default;
};

/// parameter: "tau" (sets kernel_bar.tau) or "cells" (sets rule.cells).
struct SweepConfig {
  std::string parameter = "tau";
  std::vector<double> values;
  bool operator==(const SweepConfig&) const = default;
};

struct OutputConfig {
  std::string dir = ".";
  int dump_paths = 0;
  bool operator==(const OutputConfig&) const = default;
};

struct RunConfig {
  std::optional<Kernel> kernel;
  std::optional<Kernel> kernel_bar;
  std::optional<RuleConfig> rule;
  std::optional<ModelConfig> model;
  GridConfig grid;
  McConfig mc;
  std::optional<SweepConfig> sweep;
  OutputConfig output;

  bool operator==(const RunConfig&) const = default;

  static RunConfig from_document(const ConfigDocument& doc);
  ConfigDocument to_document() const;
  ConfigEcho echo() const;

  TimeGrid time_grid() const { return TimeGrid::uniform(grid.T, grid.steps); }
  /// Throws ConfigError when the [kernel] section is missing.
  const Kernel& require_kernel() const;
  RuleDesign rule_design() const;
  /// [kernel_bar] if present, else the kernel built from [rule] (scaled like
  /// [kernel]); nullopt when neither is given.
  std::optional<Kernel> approximating_kernel() const;
  /// Kbar with the sweep parameter set to `value`.
  Kernel approximating_kernel_at(double value) const;
  ModelSpec build_model() const;
};

RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

}  // namespace volterra
