/* Copyright 2026 The ImmuneKit Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include "immunekit/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "immunekit/rng.hpp"

namespace immunekit {
namespace {

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in),
                                   std::istreambuf_iterator<char>());
}

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off,
                        const char* what) {
  if (off + 4 > b.size())
    throw ParseError(std::string("idx: truncated while reading ") + what +
                     " at offset " + std::to_string(off));
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace

Dataset parse_mnist_idx(const std::vector<std::uint8_t>& images,
                        const std::vector<std::uint8_t>& labels) {
  const std::uint32_t img_magic = read_be32(images, 0, "image magic");
  if (img_magic != 0x00000803u)
    throw FormatError("idx: bad image magic at offset 0 (expected 0x00000803)");
  const std::uint32_t count = read_be32(images, 4, "image count");
  const std::uint32_t rows = read_be32(images, 8, "row count");
  const std::uint32_t cols = read_be32(images, 12, "column count");
  if (rows == 0 || cols == 0)
    throw FormatError("idx: zero image dimensions (" + std::to_string(rows) +
                      "x" + std::to_string(cols) + ")");
  const std::size_t pixels = std::size_t(rows) * cols;
  if (images.size() != 16 + std::size_t(count) * pixels)
    throw ParseError("idx: image payload truncated (expected " +
                     std::to_string(16 + std::size_t(count) * pixels) +
                     " bytes, got " + std::to_string(images.size()) + ")");

  const std::uint32_t lbl_magic = read_be32(labels, 0, "label magic");
  if (lbl_magic != 0x00000801u)
    throw FormatError("idx: bad label magic at offset 0 (expected 0x00000801)");
  const std::uint32_t lbl_count = read_be32(labels, 4, "label count");
  if (labels.size() != 8 + std::size_t(lbl_count))
    throw ParseError("idx: label payload truncated");
  if (lbl_count != count)
    throw ConsistencyError("idx: " + std::to_string(count) + " images but " +
                           std::to_string(lbl_count) + " labels");

  Dataset ds;
  ds.rows = rows;
  ds.cols = cols;
  ds.classes = 10;
  ds.examples.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    Example ex;
    ex.x = Tensor({pixels});
    for (std::size_t k = 0; k < pixels; ++k)
      ex.x.v[k] = images[16 + std::size_t(i) * pixels + k] / 255.0;
    ex.label = labels[8 + i];
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset load_mnist_idx(const std::string& images_path,
                       const std::string& labels_path) {
  return parse_mnist_idx(read_file(images_path), read_file(labels_path));
}

Dataset synth_dataset(std::uint64_t seed, std::size_t per_class, std::size_t n,
                      int classes, double spread) {
  if (classes < 2) throw UsageError("synth_dataset: need at least 2 classes");
  const std::size_t side = static_cast<std::size_t>(std::lround(std::sqrt(double(n))));
  if (side * side != n)
    throw UsageError("synth_dataset: n must be a perfect square");
  if (n < static_cast<std::size_t>(classes))
    throw UsageError("synth_dataset: n must be >= class count");

  // Class means: one bright block per class on a dim background. Scaled
  // simplex vertices, so the classes are linearly separable.
  const std::size_t block = n / classes;
  const double lo = 0.30, hi = 0.75;
  Dataset ds;
  ds.rows = side;
  ds.cols = side;
  ds.classes = classes;
  Rng base(seed);
  for (int c = 0; c < classes; ++c) {
    Rng rc = base.stream("synth/class", static_cast<std::uint64_t>(c));
    for (std::size_t i = 0; i < per_class; ++i) {
      Example ex;
      ex.label = c;
      ex.x = Tensor({n});
      for (std::size_t k = 0; k < n; ++k) {
        const bool in_block = k >= block * static_cast<std::size_t>(c) &&
                              k < block * static_cast<std::size_t>(c + 1);
        double val = (in_block ? hi : lo) + spread * rc.normal();
        ex.x.v[k] = std::clamp(val, 0.0, 1.0);
      }
      ds.examples.push_back(std::move(ex));
    }
  }
  // Interleave classes so any prefix is roughly balanced.
  Rng shuf = base.stream("synth/shuffle");
  shuf.shuffle(ds.examples);
  return ds;
}

Splits split(const Dataset& data, double f_train, double f_val, double f_test,
             std::uint64_t seed) {
  if (std::fabs(f_train + f_val + f_test - 1.0) > 1e-9)
    throw UsageError("split: fractions must sum to 1");
  if (f_train < 0 || f_val < 0 || f_test < 0)
    throw UsageError("split: fractions must be non-negative");
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng = Rng(seed).stream("split");
  rng.shuffle(order);

  const std::size_t n = data.size();
  const std::size_t n_train = static_cast<std::size_t>(std::floor(f_train * n));
  const std::size_t n_val = static_cast<std::size_t>(std::floor(f_val * n));

  Splits out;
  for (Dataset* d : {&out.train, &out.val, &out.test}) {
    d->rows = data.rows;
    d->cols = data.cols;
    d->classes = data.classes;
  }
  for (std::size_t i = 0; i < n; ++i) {
    const Example& ex = data.examples[order[i]];
    if (i < n_train)
      out.train.examples.push_back(ex);
    else if (i < n_train + n_val)
      out.val.examples.push_back(ex);
    else
      out.test.examples.push_back(ex);
  }
  return out;
}

}  // namespace immunekit
