#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "frodo/rng.hpp"
#include "frodo/vec.hpp"

namespace frodo {

// Labeled classification data, features stored row-major.
struct Dataset {
  int dim = 0;
  int num_classes = 0;
  std::vector<double> features;  // size() == labels.size() * dim
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  const double* row(std::size_t i) const { return features.data() + i * static_cast<std::size_t>(dim); }
};

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in) {
  unsigned char buf[4];
  in.read(reinterpret_cast<char*>(buf), 4);
  if (!in) throw std::runtime_error("unexpected end of IDX file");
  return (static_cast<std::uint32_t>(buf[0]) << 24) |
         (static_cast<std::uint32_t>(buf[1]) << 16) |
         (static_cast<std::uint32_t>(buf[2]) << 8) |
         static_cast<std::uint32_t>(buf[3]);
}

}  // namespace detail

// Reads the big-endian IDX pair used by MNIST: magic 0x00000803 for images,
// 0x00000801 for labels. Pixels are scaled to [0, 1].
inline Dataset load_mnist_idx(const std::string& images_path,
                              const std::string& labels_path,
                              std::size_t limit = 0) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw std::runtime_error("cannot open image file: " + images_path);
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw std::runtime_error("cannot open label file: " + labels_path);

  if (detail::read_be_u32(images) != 0x00000803u) {
    throw std::runtime_error("bad image magic in " + images_path);
  }
  if (detail::read_be_u32(labels) != 0x00000801u) {
    throw std::runtime_error("bad label magic in " + labels_path);
  }

  const std::uint32_t n_images = detail::read_be_u32(images);
  const std::uint32_t rows = detail::read_be_u32(images);
  const std::uint32_t cols = detail::read_be_u32(images);
  const std::uint32_t n_labels = detail::read_be_u32(labels);
  if (n_images != n_labels) {
    throw std::runtime_error("image/label count mismatch");
  }

  const std::size_t count =
      limit > 0 ? std::min<std::size_t>(limit, n_images) : n_images;
  const std::size_t pixels = static_cast<std::size_t>(rows) * cols;

  Dataset out;
  out.dim = static_cast<int>(pixels);
  out.num_classes = 10;
  out.features.resize(count * pixels);
  out.labels.resize(count);

  std::vector<unsigned char> buf(pixels);
  for (std::size_t i = 0; i < count; ++i) {
    images.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(pixels));
    if (!images) throw std::runtime_error("truncated image data");
    for (std::size_t p = 0; p < pixels; ++p) {
      out.features[i * pixels + p] = static_cast<double>(buf[p]) / 255.0;
    }
    char lbl = 0;
    labels.read(&lbl, 1);
    if (!labels) throw std::runtime_error("truncated label data");
    out.labels[i] = static_cast<int>(static_cast<unsigned char>(lbl));
    if (out.labels[i] < 0 || out.labels[i] > 9) {
      throw std::runtime_error("label outside 0..9 in " + labels_path);
    }
  }
  return out;
}

// Gaussian-blob classification data: one random center per class, isotropic
// noise around it. Deterministic for a given seed.
inline Dataset synthetic_blobs(int dim, int num_classes, int count,
                               double center_spread, double noise_std,
                               std::uint64_t seed) {
  if (dim < 1 || num_classes < 2 || count < num_classes) {
    throw std::invalid_argument("synthetic_blobs: degenerate shape");
  }
  Rng rng(derive_seed(seed, 0xb10b5));
  std::vector<double> centers(static_cast<std::size_t>(num_classes) * dim);
  for (double& c : centers) c = center_spread * rng.gaussian();

  Dataset out;
  out.dim = dim;
  out.num_classes = num_classes;
  out.features.resize(static_cast<std::size_t>(count) * dim);
  out.labels.resize(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) {
    const int cls = i % num_classes;  // balanced by construction
    out.labels[static_cast<std::size_t>(i)] = cls;
    for (int d = 0; d < dim; ++d) {
      out.features[static_cast<std::size_t>(i) * dim + d] =
          centers[static_cast<std::size_t>(cls) * dim + d] + noise_std * rng.gaussian();
    }
  }
  return out;
}

// Class-stratified equal split: each part receives the same number of
// examples of every class (surplus examples are dropped). Assignment order
// is shuffled deterministically from the seed.
inline std::vector<Dataset> stratified_split(const Dataset& data, int parts,
                                             std::uint64_t seed) {
  if (parts < 1) throw std::invalid_argument("parts must be positive");
  Rng rng(derive_seed(seed, 0x5911f));

  std::vector<std::vector<std::size_t>> by_class(
      static_cast<std::size_t>(data.num_classes));
  for (std::size_t i = 0; i < data.size(); ++i) {
    const int label = data.labels[i];
    if (label < 0 || label >= data.num_classes) {
      throw std::invalid_argument("label outside class range");
    }
    by_class[static_cast<std::size_t>(label)].push_back(i);
  }

  std::vector<Dataset> out(static_cast<std::size_t>(parts));
  for (auto& part : out) {
    part.dim = data.dim;
    part.num_classes = data.num_classes;
  }
  for (auto& members : by_class) {
    rng.shuffle(members);
    const std::size_t per_part = members.size() / static_cast<std::size_t>(parts);
    for (int p = 0; p < parts; ++p) {
      auto& part = out[static_cast<std::size_t>(p)];
      for (std::size_t k = 0; k < per_part; ++k) {
        const std::size_t idx = members[static_cast<std::size_t>(p) * per_part + k];
        part.labels.push_back(data.labels[idx]);
        const double* row = data.row(idx);
        part.features.insert(part.features.end(), row, row + data.dim);
      }
    }
  }
  return out;
}

}  // namespace frodo
