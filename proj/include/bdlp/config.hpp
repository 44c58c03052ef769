#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdlp/bounds.hpp"
#include "bdlp/hierarchy.hpp"
#include "bdlp/kernels.hpp"
#include "bdlp/simulator.hpp"

namespace bdlp {

inline constexpr const char* kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// A small strict subset of TOML: [section] and [a.b] headers, bare keys,
// double-quoted strings, integers, floats, booleans and (nested) arrays.
// Comments start with '#'. Duplicate keys and sections are errors.

struct TomlValue {
  enum class Kind { Number, Bool, String, Array };
  Kind kind = Kind::Number;
  double number = 0.0;
  bool integral = false;
  bool boolean = false;
  std::string text;
  std::vector<TomlValue> items;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct TomlEntry {
  std::string key;
  TomlValue value;
  std::size_t line = 0;
  std::size_t column = 0;
};

struct TomlSection {
  std::string name;  // "" for the root table
  std::size_t line = 0;
  std::size_t column = 0;
  std::vector<TomlEntry> entries;
};

/// Throws ConfigError with line and column on malformed input.
std::vector<TomlSection> parse_toml(const std::string& text);

// ---------------------------------------------------------------------------

struct KernelSpec {
  std::string type = "zero";  // tophat, gaussian, tabulated, zero
  double c = 0.0;
  double radius = 0.0;
  double sigma = 1.0;
  std::vector<std::pair<double, double>> table;  // (r, value)

  Kernel build(int dim) const;
};

struct SimulateSection {
  double t_end = 1.0;
  double observe_every = 0.1;
  std::size_t replicas = 1;
  std::uint64_t seed = 1;  // master seed
  std::size_t max_points = 1'000'000;
  double initial_intensity = 1.0;
  int bins = 64;
  bool write_points = false;
};

struct HierarchySection {
  int grid_points = 128;
  double dt = 1e-3;
  double t_end = 1.0;
  double observe_every = 0.1;
  std::string closure = "kirkwood";
  double rtol = 0.0;
};

struct StabilitySection {
  double b = 0.0;
  int n_max = 6;
  long trials = 10000;
};

struct BoundsSection {
  double alpha1 = 0.0;
  double alpha2 = 1.0;
  std::string variant = "full";
  double t = 0.0;
  std::optional<double> delta;
  std::optional<double> epsilon;
  std::optional<double> k0_sup_root;  // defaults to the initial intensity
};

struct CompareSection {
  std::optional<double> r0;  // cluster radius; defaults to the competition core radius or L/20
};

struct ExperimentConfig {
  int dim = 1;
  double L = 1.0;
  double cell_size = 0.0;
  double m = 0.0;
  bool allow_no_competition = false;
  KernelSpec minus;
  KernelSpec plus;
  SimulateSection simulate;
  HierarchySection hierarchy;
  StabilitySection stability;
  BoundsSection bounds;
  CompareSection compare;

  Domain domain() const { return {dim, L, cell_size}; }
  KernelPair pair() const { return {minus.build(dim), plus.build(dim), m}; }
  Grid grid() const { return {dim, L, hierarchy.grid_points}; }
  double k0_sup_root() const { return bounds.k0_sup_root.value_or(simulate.initial_intensity); }
};

/// Parses and fully validates a configuration; every error carries the line
/// and column of the offending entry.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Semantic checks shared by the parser and command-line overrides.
void validate(const ExperimentConfig& cfg);

/// Canonical rendering with every default filled in; parse_config of the
/// result gives back the same configuration.
std::string resolved_config(const ExperimentConfig& cfg);

/// 64-bit FNV-1a hash.
std::uint64_t fnv1a(const std::string& bytes);
std::uint64_t config_hash(const ExperimentConfig& cfg);

}  // namespace bdlp
