#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "selfmentor/image.hpp"
#include "selfmentor/synthmask.hpp"

namespace selfmentor {

struct Sample {
  std::string name;
  Image x;                // values in [0,1]
  std::optional<Mask> y;  // values in {0,1}
};

// S_tr inputs are also in U_tr and S_val inputs in U_val; the test inputs
// appear nowhere else and S_tr never reaches U_val.
struct DatasetBundle {
  std::vector<Sample> s_train;
  std::vector<Sample> s_val;
  std::vector<Sample> u_train;  // labels stripped
  std::vector<Sample> u_val;    // labels stripped
  std::vector<Sample> test;

  // Throws ContractError naming the broken overlap rule.
  void validate() const;
};

struct BackgroundSuppression {
  Image background;
  std::vector<Image> processed;
};

// Pixelwise median background, |image - background|, then one min-max
// rescale to [0,1] over the whole collection.
BackgroundSuppression suppress_background(const std::vector<Image>& images);

// Rendering of the synthetic capsule benchmark: bright contour band, faint
// interior, dark background, Gaussian pixel noise.
struct CapsuleStyle {
  float contour_intensity = 0.8f;
  float interior_intensity = 0.15f;
  float background_intensity = 0.02f;
  double noise_sigma = 0.05;
  int contour_thickness = 2;
  EllipseSampling shape{0.08, 0.25, 0.2};
};

std::vector<Sample> synth_capsule_dataset(int n, int side, std::uint64_t seed,
                                          const CapsuleStyle& style = {});

struct SplitCounts {
  int s_train = 3;
  int s_val = 1;
  int u_train = 100;  // total size of U_tr, S_tr inputs included
  int u_val = 20;     // total size of U_val, S_val inputs included
  int test = 50;
};

enum class SplitMode { iid, centroid_region };

SplitMode parse_split_mode(std::string_view name);

// Regions of the grid×grid partition are numbered row-major from the top
// left. Unlabeled images come from the regions that are neither test nor
// labeled.
struct RegionAssignment {
  int grid = 2;
  int test_region = 2;     // bottom-left
  int labeled_region = 1;  // top-right
};

int centroid_region(const Mask& mask, int grid);

DatasetBundle split(const std::vector<Sample>& samples, const SplitCounts& counts, SplitMode mode,
                    std::uint64_t seed, const RegionAssignment& regions = {});

// x = y*o + (1-y)*b, pixelwise.
Image composite_cell_image(const Mask& y, const Image& o, const Image& b);

// Samples from <images_dir>/*.pgm with masks read from the matching file
// name in masks_dir when present. Sorted by file name.
std::vector<Sample> load_directory(const std::filesystem::path& images_dir,
                                   const std::filesystem::path& masks_dir);

// Plain-text manifest: "[S_tr]" style headers, one file name per line.
std::string format_manifest(const DatasetBundle& bundle);
void write_manifest(const DatasetBundle& bundle, const std::filesystem::path& path);
std::map<std::string, std::vector<std::string>> read_manifest(const std::filesystem::path& path);

}  // namespace selfmentor
