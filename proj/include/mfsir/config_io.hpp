// Copyright 2026 The mfsir Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mfsir/fluctuation.hpp"
#include "mfsir/meanfield.hpp"
#include "mfsir/model.hpp"
#include "mfsir/particle_sim.hpp"
#include "mfsir/stats.hpp"

namespace mfsir {

struct ExperimentParams {
  std::uint64_t seed = 1;
  std::size_t reps = 200;
  std::vector<std::size_t> ns{100, 400, 1600, 6400};
  std::size_t n = 1000;
  int grid_cells = 512;        // PDE grid for LLN and the SPDE grid
  int limit_grid_cells = 1024; // PDE grid for centering particle eta
  std::size_t n_ref = 100000;
  int n_proj = 128;
  std::vector<double> checkpoints;   // empty: {0, T/4, T/2, 3T/4, T}
  std::vector<std::size_t> bank{0, 1, 2, 3, 4, 5, 6, 7};  // indices into standard_bank()
  int workers = 0;
};

/// A parsed configuration document.
struct RunConfig {
  ModelConfig model;
  SimScheme scheme;  // snapshot_times holds {final_time} after parsing
  double final_time = 1.0;
  ExperimentParams experiment;

  std::vector<double> checkpoints() const;
  std::vector<TestFunction> bank() const;
};

/// Strict parse: unknown keys and invariant violations raise ConfigError
/// with the dotted field path; missing keys take defaults.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config_file(const std::filesystem::path& path);

/// Fully resolved document (every default written out).
nlohmann::json to_json(const RunConfig& config);

/// SHA-256 of the canonical (sorted-key, compact) resolved document.
std::string config_hash(const RunConfig& config);
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

/// Shortest round-trip decimal form; "nan" for NaN.
std::string format_double(double v);

// CSV writers. Rows are emitted in the order given; the header is written
// when `header` is true.
void write_trajectory_csv(std::ostream& os, std::size_t rep, const Trajectory& traj, bool header);
void write_events_csv(std::ostream& os, std::size_t rep, const EventLog& log, bool header);
/// Columns t, cell_center, rho_S, rho_I, rho_R (densities, mass / h).
void write_density_csv(std::ostream& os, const DensityTrajectory& traj);
void write_rate_csv(std::ostream& os, const RateTable& table);
/// Columns [source,] rep, state, phi_id, t, eta, martingale, qv_formula;
/// phi_ids[k] labels bank entry k, missing fields are written empty.
void write_fluctuation_csv(std::ostream& os, const CltResult& result,
                           const std::vector<std::size_t>& phi_ids, std::string_view source,
                           bool header, bool source_column);

/// Binary density cache: magic, key, grid, times and masses as raw doubles.
void write_density_cache(const std::filesystem::path& path, const DensityTrajectory& traj,
                         std::string_view key);
std::optional<DensityTrajectory> read_density_cache(const std::filesystem::path& path,
                                                    std::string_view key);

struct OutputFile {
  std::string path;
  std::string sha256;
};

struct ExperimentManifest {
  std::string config_hash;
  std::uint64_t base_seed = 0;
  std::string tool_version;
  std::string command;
  std::string started;
  std::string finished;
  std::vector<OutputFile> outputs;
  nlohmann::json verdicts = nlohmann::json::object();

  nlohmann::json to_json() const;
};

/// UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();
std::string tool_version();

}  // namespace mfsir
