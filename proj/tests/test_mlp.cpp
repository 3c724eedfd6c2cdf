#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>

#include "frodo/data.hpp"
#include "frodo/mlp.hpp"
#include "frodo/rng.hpp"
#include "oracles.hpp"

using frodo::Dataset;
using frodo::MlpObjective;
using frodo::Vec;

namespace {

Dataset tiny_dataset(int dim, int classes, int count, std::uint64_t seed) {
  return frodo::synthetic_blobs(dim, classes, count, 1.5, 0.6, seed);
}

}  // namespace

TEST_CASE("zero parameters give uniform softmax: loss = ln(num_classes)") {
  Dataset data = tiny_dataset(3, 2, 16, 1);
  MlpObjective mlp({3, 4, 2}, data, 8, 99);
  const Vec zero_params = frodo::zeros(mlp.dimension());
  CHECK(mlp.value(zero_params) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  Dataset data10 = tiny_dataset(5, 10, 40, 2);
  MlpObjective mlp10({5, 6, 10}, data10, 8, 99);
  CHECK(mlp10.value(frodo::zeros(mlp10.dimension())) ==
        doctest::Approx(std::log(10.0)).epsilon(1e-12));
}

TEST_CASE("full-batch gradient matches finite differences on a 2-4-2 net") {
  Dataset data = tiny_dataset(2, 2, 8, 3);
  MlpObjective mlp({2, 4, 2}, data, 8, 7);  // batch == partition: deterministic
  Vec params = MlpObjective::initial_params({2, 4, 2}, 5);
  REQUIRE(params.size() == mlp.dimension());

  const Vec grad = mlp.gradient(params);
  const Vec fd = oracles::finite_difference_gradient(
      [&](const Vec& p) { return mlp.value(p); }, params);
  CHECK(oracles::max_relative_error(grad, fd) < 1e-4);
}

TEST_CASE("full-batch gradient matches finite differences on a deeper net") {
  Dataset data = tiny_dataset(3, 3, 9, 4);
  MlpObjective mlp({3, 5, 4, 3}, data, 9, 7);
  Vec params = MlpObjective::initial_params({3, 5, 4, 3}, 6);
  const Vec grad = mlp.gradient(params);
  const Vec fd = oracles::finite_difference_gradient(
      [&](const Vec& p) { return mlp.value(p); }, params);
  CHECK(oracles::max_relative_error(grad, fd) < 1e-4);
}

TEST_CASE("same seed reproduces batches and gradients exactly") {
  Dataset data = tiny_dataset(4, 2, 64, 8);
  MlpObjective a({4, 6, 2}, data, 16, 1234);
  MlpObjective b({4, 6, 2}, data, 16, 1234);
  const Vec params = MlpObjective::initial_params({4, 6, 2}, 9);
  for (int step = 0; step < 10; ++step) {
    CHECK(a.gradient(params) == b.gradient(params));
  }
  MlpObjective c({4, 6, 2}, data, 16, 4321);
  CHECK(a.gradient(params) != c.gradient(params));
}

TEST_CASE("batches within an epoch draw without replacement") {
  // Linear softmax net with zero parameters: the bias gradient of class c is
  // (1/num_classes - [label == c]) summed over the batch, so the class-0 bias
  // gradient counts how many class-0 samples the batch contained. Summing the
  // counts over one epoch must reproduce the exact class total.
  Dataset data = tiny_dataset(2, 2, 12, 10);
  int class0_total = 0;
  for (int label : data.labels) class0_total += (label == 0) ? 1 : 0;

  MlpObjective solo({2, 2}, data, 4, 77);
  const Vec params = frodo::zeros(solo.dimension());
  const std::size_t bias0 = solo.bias_offset(0);
  double seen = 0.0;
  for (int batch = 0; batch < 3; ++batch) {  // 3 batches of 4 = one epoch
    const Vec g = solo.gradient(params);
    seen += 4.0 * (0.5 - g[bias0]);  // undo the mean and the uniform term
  }
  CHECK(seen == doctest::Approx(static_cast<double>(class0_total)).epsilon(1e-9));
}

TEST_CASE("loss is non-negative and approaches zero for a perfect predictor") {
  // one-hot inputs, identity-ish task learned by construction: scale the
  // output weights up and loss tends to zero
  Dataset data;
  data.dim = 2;
  data.num_classes = 2;
  for (int i = 0; i < 8; ++i) {
    const int cls = i % 2;
    data.features.push_back(cls == 0 ? 1.0 : 0.0);
    data.features.push_back(cls == 1 ? 1.0 : 0.0);
    data.labels.push_back(cls);
  }
  MlpObjective mlp({2, 2}, data, 8, 1);
  Vec params = frodo::zeros(mlp.dimension());
  // W = s * I pushes the correct logit up
  for (double s : {1.0, 5.0, 20.0}) {
    params[0] = s;   // W[0][0]
    params[3] = s;   // W[1][1]
    CHECK(mlp.value(params) >= 0.0);
  }
  params[0] = 40.0;
  params[3] = 40.0;
  CHECK(mlp.value(params) < 1e-10);
}

TEST_CASE("constructor validates shapes, batch size and labels") {
  Dataset data = tiny_dataset(3, 2, 10, 11);
  CHECK_THROWS_AS(MlpObjective({3, 4, 3}, data, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(MlpObjective({2, 4, 2}, data, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(MlpObjective({3, 4, 2}, data, 11, 1), std::invalid_argument);
  CHECK_THROWS_AS(MlpObjective({3, 4, 2}, data, 0, 1), std::invalid_argument);

  Dataset bad = data;
  bad.labels[0] = 7;
  CHECK_THROWS_AS(MlpObjective({3, 4, 2}, bad, 4, 1), std::invalid_argument);
}

TEST_CASE("stratified split balances classes across agents") {
  Dataset data = tiny_dataset(4, 5, 200, 12);
  auto parts = frodo::stratified_split(data, 2, 31);
  REQUIRE(parts.size() == 2);
  for (const Dataset& part : parts) {
    CHECK(part.size() == 100);
    std::vector<int> counts(5, 0);
    for (int label : part.labels) counts[static_cast<std::size_t>(label)]++;
    for (int c : counts) CHECK(c == 20);
  }
  // the two partitions are disjoint as multisets of rows
  CHECK(parts[0].features != parts[1].features);
}

TEST_CASE("IDX reader round-trips a hand-written MNIST-format pair") {
  const std::string img_path = "test_images.idx3";
  const std::string lbl_path = "test_labels.idx1";
  {
    std::ofstream img(img_path, std::ios::binary);
    std::ofstream lbl(lbl_path, std::ios::binary);
    auto be32 = [](std::ofstream& out, std::uint32_t v) {
      const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                  static_cast<unsigned char>(v >> 16),
                                  static_cast<unsigned char>(v >> 8),
                                  static_cast<unsigned char>(v)};
      out.write(reinterpret_cast<const char*>(b), 4);
    };
    be32(img, 0x00000803u);
    be32(img, 3);  // three images
    be32(img, 2);  // 2x2 pixels
    be32(img, 2);
    const unsigned char pixels[12] = {0,   64,  128, 255, 10, 20,
                                      30,  40,  200, 150, 100, 50};
    img.write(reinterpret_cast<const char*>(pixels), 12);
    be32(lbl, 0x00000801u);
    be32(lbl, 3);
    const unsigned char labels[3] = {7, 0, 9};
    lbl.write(reinterpret_cast<const char*>(labels), 3);
  }

  Dataset data = frodo::load_mnist_idx(img_path, lbl_path);
  CHECK(data.dim == 4);
  CHECK(data.size() == 3);
  CHECK(data.labels == std::vector<int>{7, 0, 9});
  CHECK(data.row(0)[0] == 0.0);
  CHECK(data.row(0)[3] == 1.0);
  CHECK(data.row(1)[0] == doctest::Approx(10.0 / 255.0));

  // wrong magic numbers are rejected
  CHECK_THROWS_AS(frodo::load_mnist_idx(lbl_path, img_path), std::runtime_error);
  std::remove(img_path.c_str());
  std::remove(lbl_path.c_str());
}

TEST_CASE("synthetic blobs are balanced and deterministic") {
  Dataset a = frodo::synthetic_blobs(6, 3, 30, 1.0, 0.5, 42);
  Dataset b = frodo::synthetic_blobs(6, 3, 30, 1.0, 0.5, 42);
  Dataset c = frodo::synthetic_blobs(6, 3, 30, 1.0, 0.5, 43);
  CHECK(a.features == b.features);
  CHECK(a.labels == b.labels);
  CHECK(a.features != c.features);
  std::vector<int> counts(3, 0);
  for (int label : a.labels) counts[static_cast<std::size_t>(label)]++;
  for (int n : counts) CHECK(n == 10);
}
