#include "selfmentor/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "selfmentor/errors.hpp"
#include "selfmentor/io.hpp"

namespace selfmentor {

namespace {

std::set<std::string> names_of(const std::vector<Sample>& samples) {
  std::set<std::string> out;
  for (const Sample& s : samples) out.insert(s.name);
  return out;
}

bool intersects(const std::set<std::string>& a, const std::set<std::string>& b) {
  return std::any_of(a.begin(), a.end(), [&](const std::string& n) { return b.count(n) > 0; });
}

Sample strip_label(const Sample& s) { return Sample{s.name, s.x, std::nullopt}; }

}  // namespace

void DatasetBundle::validate() const {
  const auto st = names_of(s_train), sv = names_of(s_val), ut = names_of(u_train),
             uv = names_of(u_val), te = names_of(test);
  if (intersects(te, st) || intersects(te, sv) || intersects(te, ut) || intersects(te, uv)) {
    throw ContractError("test inputs must not appear in any other split");
  }
  if (intersects(st, uv)) throw ContractError("S_tr inputs must not appear in U_val");
  if (intersects(st, sv)) throw ContractError("S_tr and S_val must be disjoint");
  if (intersects(ut, uv)) throw ContractError("U_tr and U_val must be disjoint");
  auto labeled = [](const std::vector<Sample>& v) {
    return std::all_of(v.begin(), v.end(), [](const Sample& s) { return s.y.has_value(); });
  };
  if (!labeled(s_train) || !labeled(s_val) || !labeled(test)) {
    throw ContractError("S_tr, S_val and test samples must carry masks");
  }
}

BackgroundSuppression suppress_background(const std::vector<Image>& images) {
  if (images.size() < 3) throw ContractError("background suppression needs at least 3 images");
  const Image& first = images.front();
  for (const Image& im : images) {
    if (!im.same_size(first)) throw ShapeError("background suppression needs same-sized images");
  }
  const std::size_t n = images.size();
  BackgroundSuppression out;
  out.background = Image(first.height, first.width);
  std::vector<float> column(n);
  for (std::size_t p = 0; p < first.size(); ++p) {
    for (std::size_t i = 0; i < n; ++i) column[i] = images[i].pixels[p];
    std::sort(column.begin(), column.end());
    out.background.pixels[p] =
        n % 2 ? column[n / 2] : static_cast<float>((double(column[n / 2 - 1]) + column[n / 2]) / 2.0);
  }
  float lo = std::numeric_limits<float>::max(), hi = 0.0f;
  out.processed.reserve(n);
  for (const Image& im : images) {
    Image diff(im.height, im.width);
    for (std::size_t p = 0; p < im.size(); ++p) {
      diff.pixels[p] = std::fabs(im.pixels[p] - out.background.pixels[p]);
      lo = std::min(lo, diff.pixels[p]);
      hi = std::max(hi, diff.pixels[p]);
    }
    out.processed.push_back(std::move(diff));
  }
  const float range = hi - lo;
  for (Image& im : out.processed) {
    for (float& v : im.pixels) v = range > 0.0f ? std::clamp((v - lo) / range, 0.0f, 1.0f) : 0.0f;
  }
  return out;
}

std::vector<Sample> synth_capsule_dataset(int n, int side, std::uint64_t seed,
                                          const CapsuleStyle& style) {
  if (n < 0) throw ContractError("sample count must be >= 0");
  if (side <= 0 || side % 64 != 0) throw ContractError("synthetic capsule side must be a multiple of 64");
  std::vector<Sample> samples;
  samples.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    Mask y = sample_clean_mask(side, rng, true, style.shape).mask;
    Mask ring = inner_ring(y, style.contour_thickness);
    Image x(side, side);
    std::normal_distribution<double> noise(0.0, style.noise_sigma);
    for (std::size_t p = 0; p < x.size(); ++p) {
      float base = style.background_intensity;
      if (ring.pixels[p] > 0.5f) base = style.contour_intensity;
      else if (y.pixels[p] > 0.5f) base = style.interior_intensity;
      x.pixels[p] = static_cast<float>(std::clamp(base + noise(rng), 0.0, 1.0));
    }
    char name[32];
    std::snprintf(name, sizeof(name), "synth_%05d", i);
    samples.push_back(Sample{name, std::move(x), std::move(y)});
  }
  return samples;
}

SplitMode parse_split_mode(std::string_view name) {
  if (name == "iid") return SplitMode::iid;
  if (name == "centroid_region") return SplitMode::centroid_region;
  throw std::invalid_argument("unknown split mode '" + std::string(name) +
                              "' (expected iid or centroid_region)");
}

int centroid_region(const Mask& mask, int grid) {
  double sr = 0.0, sc = 0.0, count = 0.0;
  for (int r = 0; r < mask.height; ++r) {
    for (int c = 0; c < mask.width; ++c) {
      if (mask.at(r, c) >= 0.5f) {
        sr += r + 0.5;
        sc += c + 0.5;
        count += 1.0;
      }
    }
  }
  if (count == 0.0) throw ContractError("centroid of an empty mask is undefined");
  const int row = std::min(grid - 1, static_cast<int>(sr / count * grid / mask.height));
  const int col = std::min(grid - 1, static_cast<int>(sc / count * grid / mask.width));
  return row * grid + col;
}

DatasetBundle split(const std::vector<Sample>& samples, const SplitCounts& counts, SplitMode mode,
                    std::uint64_t seed, const RegionAssignment& regions) {
  if (counts.s_train < 0 || counts.s_val < 0 || counts.u_train < 0 || counts.u_val < 0 ||
      counts.test < 0) {
    throw CapacityError("split counts must be non-negative");
  }
  if (counts.u_train > 0 && counts.u_train < counts.s_train) {
    throw CapacityError("U_tr must be empty or hold at least the S_tr inputs");
  }
  if (counts.u_val > 0 && counts.u_val < counts.s_val) {
    throw CapacityError("U_val must be empty or hold at least the S_val inputs");
  }
  const int fresh_u_train = counts.u_train > 0 ? counts.u_train - counts.s_train : 0;
  const int fresh_u_val = counts.u_val > 0 ? counts.u_val - counts.s_val : 0;

  Rng rng(seed);
  std::vector<std::size_t> labeled_pool, test_pool, unlabeled_pool;
  if (mode == SplitMode::iid) {
    std::vector<std::size_t> order(samples.size());
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    // Labeled samples feed test and S first; everything left is unlabeled.
    std::vector<std::size_t> labeled, rest;
    for (std::size_t i : order) (samples[i].y ? labeled : rest).push_back(i);
    const std::size_t need_labeled = static_cast<std::size_t>(counts.test + counts.s_train + counts.s_val);
    if (labeled.size() < need_labeled) {
      throw CapacityError("need " + std::to_string(need_labeled) + " labeled samples, have " +
                          std::to_string(labeled.size()));
    }
    test_pool.assign(labeled.begin(), labeled.begin() + counts.test);
    labeled_pool.assign(labeled.begin() + counts.test, labeled.begin() + static_cast<std::ptrdiff_t>(need_labeled));
    unlabeled_pool.assign(labeled.begin() + static_cast<std::ptrdiff_t>(need_labeled), labeled.end());
    unlabeled_pool.insert(unlabeled_pool.end(), rest.begin(), rest.end());
    std::shuffle(unlabeled_pool.begin(), unlabeled_pool.end(), rng);
  } else {
    const int cells = regions.grid * regions.grid;
    if (regions.grid < 2 || regions.test_region < 0 || regions.test_region >= cells ||
        regions.labeled_region < 0 || regions.labeled_region >= cells ||
        regions.test_region == regions.labeled_region) {
      throw ContractError("invalid region assignment");
    }
    for (std::size_t i = 0; i < samples.size(); ++i) {
      if (!samples[i].y) throw ContractError("centroid_region split needs a mask for every sample");
      const int region = centroid_region(*samples[i].y, regions.grid);
      if (region == regions.test_region) test_pool.push_back(i);
      else if (region == regions.labeled_region) labeled_pool.push_back(i);
      else unlabeled_pool.push_back(i);
    }
    std::shuffle(test_pool.begin(), test_pool.end(), rng);
    std::shuffle(labeled_pool.begin(), labeled_pool.end(), rng);
    std::shuffle(unlabeled_pool.begin(), unlabeled_pool.end(), rng);
    if (test_pool.size() < static_cast<std::size_t>(counts.test)) {
      throw CapacityError("test region holds " + std::to_string(test_pool.size()) +
                          " samples, need " + std::to_string(counts.test));
    }
    if (labeled_pool.size() < static_cast<std::size_t>(counts.s_train + counts.s_val)) {
      throw CapacityError("labeled region holds " + std::to_string(labeled_pool.size()) +
                          " samples, need " + std::to_string(counts.s_train + counts.s_val));
    }
    test_pool.resize(static_cast<std::size_t>(counts.test));
  }
  if (unlabeled_pool.size() < static_cast<std::size_t>(fresh_u_train + fresh_u_val)) {
    throw CapacityError("need " + std::to_string(fresh_u_train + fresh_u_val) +
                        " additional unlabeled samples, have " +
                        std::to_string(unlabeled_pool.size()));
  }

  DatasetBundle b;
  for (std::size_t i : test_pool) b.test.push_back(samples[i]);
  for (int k = 0; k < counts.s_train; ++k) b.s_train.push_back(samples[labeled_pool[static_cast<std::size_t>(k)]]);
  for (int k = 0; k < counts.s_val; ++k) {
    b.s_val.push_back(samples[labeled_pool[static_cast<std::size_t>(counts.s_train + k)]]);
  }
  if (counts.u_train > 0) {
    for (const Sample& s : b.s_train) b.u_train.push_back(strip_label(s));
    for (int k = 0; k < fresh_u_train; ++k) {
      b.u_train.push_back(strip_label(samples[unlabeled_pool[static_cast<std::size_t>(k)]]));
    }
  }
  if (counts.u_val > 0) {
    for (const Sample& s : b.s_val) b.u_val.push_back(strip_label(s));
    for (int k = 0; k < fresh_u_val; ++k) {
      b.u_val.push_back(strip_label(samples[unlabeled_pool[static_cast<std::size_t>(fresh_u_train + k)]]));
    }
  }
  b.validate();
  return b;
}

Image composite_cell_image(const Mask& y, const Image& o, const Image& b) {
  if (!y.same_size(o) || !y.same_size(b)) throw ShapeError("composite inputs must share a size");
  Image x(y.height, y.width);
  for (std::size_t p = 0; p < x.size(); ++p) {
    x.pixels[p] = y.pixels[p] * o.pixels[p] + (1.0f - y.pixels[p]) * b.pixels[p];
  }
  return x;
}

std::vector<Sample> load_directory(const std::filesystem::path& images_dir,
                                   const std::filesystem::path& masks_dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(images_dir)) {
    throw std::runtime_error("image directory " + images_dir.string() + " does not exist");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(images_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<Sample> samples;
  for (const fs::path& f : files) {
    Sample s{f.filename().string(), read_pgm(f), std::nullopt};
    const fs::path mask_path = masks_dir / f.filename();
    if (!masks_dir.empty() && fs::exists(mask_path)) {
      Mask m = threshold(read_pgm(mask_path), 0.5f);
      if (!m.same_size(s.x)) throw ShapeError("mask " + mask_path.string() + " does not match its image");
      s.y = std::move(m);
    }
    samples.push_back(std::move(s));
  }
  return samples;
}

std::string format_manifest(const DatasetBundle& b) {
  std::ostringstream out;
  const std::pair<const char*, const std::vector<Sample>*> sections[] = {
      {"S_tr", &b.s_train}, {"S_val", &b.s_val}, {"U_tr", &b.u_train},
      {"U_val", &b.u_val},  {"test", &b.test}};
  for (const auto& [title, list] : sections) {
    out << '[' << title << "]\n";
    for (const Sample& s : *list) out << s.name << '\n';
  }
  return out.str();
}

void write_manifest(const DatasetBundle& bundle, const std::filesystem::path& path) {
  write_file_atomic(path, format_manifest(bundle));
}

std::map<std::string, std::vector<std::string>> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest " + path.string());
  std::map<std::string, std::vector<std::string>> out;
  std::string line, section;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header '" + line + "'", line_no);
      section = line.substr(1, line.size() - 2);
      out[section];
      continue;
    }
    if (section.empty()) throw ConfigError("file name outside of a section", line_no);
    out[section].push_back(line);
  }
  return out;
}

}  // namespace selfmentor
