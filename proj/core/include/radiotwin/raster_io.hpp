#pragma once

#include <string>

#include "radiotwin/radiomap.hpp"

namespace rtwin {

// Raster format: <path> holds raw little-endian 32-bit floats, row-major,
// 512x512. <path>.json is the sidecar {transform, mask RLE, coverage_fraction}.
void write_raster(const RadioMap& map, const std::string& path);
RadioMap read_raster(const std::string& path);

// Plain float layer without mask (all cells valid).
void write_layer(const Grid<float>& layer, const GeoTransform& t,
                 const std::string& path);

// 8-bit binary PGM; [-140, -40] dBm maps linearly to [0, 255].
void write_pgm(const RadioMap& map, const std::string& path);

}  // namespace rtwin
