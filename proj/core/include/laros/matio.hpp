#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "laros/matrix.hpp"

namespace laros {

// Comma-separated values, one matrix row per line, printed with 17
// significant digits so doubles round-trip exactly. Readers reject ragged
// rows, non-numeric fields, and non-finite values.
Matrix read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const Matrix& m);

// 8-bit grayscale PGM. Writing emits binary P5 with maxval 255 and requires
// entries to land in [0, 255] after rounding; reading accepts P5 and the
// ASCII P2 variant, maxval up to 255, and header comments.
Matrix read_pgm(const std::filesystem::path& path);
void write_pgm(const std::filesystem::path& path, const Matrix& m);

// Stack of equally sized images: column j is image j flattened row-major.
struct ImageStack {
  int pixel_rows = 0;
  int pixel_cols = 0;
  Matrix data;  // (pixel_rows * pixel_cols) x image count
};

// Reads every *.pgm in dir in lexicographic filename order.
ImageStack load_image_stack(const std::filesystem::path& dir);

// [row0, row0 + height) x [col0, col0 + width) in image coordinates.
struct FeatureRect {
  int row0 = 0, col0 = 0, height = 0, width = 0;
};

// Synthetic multi-feature fixture: `features` disjoint rectangles, each
// image lit (value 1) on `per_image` of them. The size-k feature subsets
// are enumerated in lexicographic order and assigned to image columns in
// full cycles; leftover columns draw uniformly from the same enumeration
// with the seeded generator. Fixed seed => byte-identical output.
struct SailboatSpec {
  int height = 80;
  int width = 50;
  int images = 30;
  int per_image = 3;
  std::uint64_t seed = 0;
  std::vector<FeatureRect> features;
};

struct SailboatData {
  ImageStack stack;
  std::vector<std::vector<int>> image_features;  // feature indices per image
};

// Disjoint horizontal-band rectangles with strictly increasing areas, used
// when the caller only fixes a count.
std::vector<FeatureRect> default_sailboat_features(int height, int width, int count);

SailboatData gen_sailboat(const SailboatSpec& spec);

}  // namespace laros
