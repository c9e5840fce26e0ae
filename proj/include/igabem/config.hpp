#pragma once

#include "igabem/bem_assembly.hpp"
#include "igabem/core.hpp"
#include "igabem/geometry.hpp"
#include "igabem/mesher.hpp"
#include "igabem/solver.hpp"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace igabem {

/// Mesher pipeline: scan regions first, then an optional skew of one scanned
/// cell into a super-cell, then grow passes (each either from the skewed
/// super-cell or from explicit corners).
struct GrowConfig {
  std::vector<int> patch_ids;
  std::optional<std::array<Vec3, 8>> super_cell;  // absent: use the skewed cell
  GrowSpec spec;
};

struct SkewConfig {
  int cell_index = -1;
  Vec3 direction = Vec3::Zero();
  int axis = 2;
};

struct ScanConfig {
  ScanRegion region;
  std::vector<int> patch_ids;  // empty: scan against every patch
};

struct MesherConfig {
  std::vector<ScanConfig> scans;
  std::optional<SkewConfig> skew;
  std::vector<GrowConfig> grows;
};

struct MaterialRegion {
  std::optional<Box> box;  // absent: everywhere
  MaterialModel model;
};

struct MonitorPoint {
  std::string name;
  int patch_id = -1;
  Vec2 param = Vec2::Zero();
  std::string quantity;  // "max_compressive_stress" | "displacement"
};

struct OutputConfig {
  std::string directory = "out";
  bool vtk = true;
  std::vector<MonitorPoint> monitors;
  int tessellation = 8;  // boundary sampling density per patch direction
};

struct RunConfig {
  std::string stress_unit = "MPa";
  std::string length_unit = "m";
  std::vector<Patch> patches;
  Loading loading;
  MesherConfig mesher;
  ElasticConstants domain{1.0, 0.0};
  std::vector<MaterialRegion> regions;
  SolverOptions solver;
  OutputConfig output;

  // Raw JSON of the sections that key the precompute cache.
  std::string geometry_key;
  std::string loading_key;
};

/// Parses and validates a config document. All schema violations are collected;
/// the config is only returned when the list is empty.
struct ParseResult {
  std::optional<RunConfig> config;
  std::vector<std::string> errors;
};

ParseResult parse_config(const std::string& text);

/// Loads a config file (IoError on unreadable paths).
ParseResult parse_config_file(const std::string& path);

/// Serialises patches (and the remaining sections) into the config format;
/// inverse of the geometry part of parse_config.
std::string write_config(const RunConfig& config);

/// Material model for every grid point from the region list.
std::vector<MaterialModel> assign_materials(const RunConfig& config,
                                            const GridPointSet& grid);

}  // namespace igabem
