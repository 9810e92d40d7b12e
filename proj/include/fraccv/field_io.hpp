#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "fraccv/grid.hpp"

namespace fraccv {

nlohmann::json to_json(const GridSpec& grid);
GridSpec grid_from_json(const nlohmann::json& j);

/// CSV with one row per node: the n coordinates followed by the m components.
void write_field_csv(const SampledField& u, const std::filesystem::path& path);

/// Raw little-endian IEEE-754 float64 values in the in-memory layout
/// (row-major over axes, components innermost), plus `<path>.json` describing
/// the grid, component count, decay class and byte order.
void write_field_binary(const SampledField& u, const std::filesystem::path& path);
SampledField read_field_binary(const std::filesystem::path& path);

/// One byte per node (0/1) with a `<path>.json` sidecar.
void write_mask(const Mask& mask, const std::filesystem::path& path);
Mask read_mask(const std::filesystem::path& path);

}  // namespace fraccv
