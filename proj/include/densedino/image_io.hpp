#pragma once

#include <cstdint>
#include <string>

#include "densedino/scene.hpp"
#include "densedino/types.hpp"

namespace densedino {

/// Binary PPM (P6), values scaled from [0,1] to 0..255.
void write_ppm(const std::string& path, const Image& image);
Image read_ppm(const std::string& path);

/// Binary PGM (P5) holding raw label values (must fit 0..255).
void write_pgm(const std::string& path, const MatI& values);
MatI read_pgm(const std::string& path);

/// One split directory: <id>.ppm, <id>.pgm per scene plus an index.tsv
/// manifest with columns id, seed, classes. Scene i is generated from
/// mix_seed(root_seed, {stream_tag, i}).
void dump_split(const std::string& dir, const SceneConfig& cfg, std::uint64_t root_seed,
                std::uint64_t stream_tag, int count);

}  // namespace densedino
