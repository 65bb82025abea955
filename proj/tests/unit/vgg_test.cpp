#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "stylectl/losses.hpp"
#include "stylectl/sfw1.hpp"
#include "stylectl/vgg.hpp"
#include "test_support.hpp"

using namespace stylectl;
using testing_support::model;

namespace {

std::vector<std::uint8_t> model_bytes() { return encode_sfw1(to_weight_file(model())); }

FormatError::Kind decode_error(std::vector<std::uint8_t> bytes) {
  try {
    decode_sfw1(bytes);
  } catch (const FormatError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "decode succeeded";
  return FormatError::Kind::bad_magic;
}

}  // namespace

TEST(Architecture, NamesAndWidths) {
  const auto& arch = vgg19_architecture();
  std::vector<std::string> convs;
  for (const auto& l : arch) {
    if (l.kind == LayerKind::conv) {
      convs.push_back(l.name);
      const char block = l.name[4];
      const std::size_t want = block == '1' ? 64 : block == '2' ? 128 : block == '3' ? 256 : 512;
      EXPECT_EQ(l.channels, want) << l.name;
    }
  }
  const std::vector<std::string> want = {"conv1_1", "conv1_2", "conv2_1", "conv2_2", "conv3_1",
                                         "conv3_2", "conv3_3", "conv3_4", "conv4_1", "conv4_2",
                                         "conv4_3", "conv4_4", "conv5_1"};
  EXPECT_EQ(convs, want);
  EXPECT_EQ(arch.back().name, "relu5_1");
  EXPECT_EQ(arch[4].name, "pool1");
}

TEST(Architecture, StatisticsAreReadAfterRelu) {
  EXPECT_EQ(statistic_layer("conv4_2"), "relu4_2");
  EXPECT_EQ(statistic_layer("relu1_1"), "relu1_1");
  EXPECT_EQ(statistic_layer("pool2"), "pool2");
}

TEST(ReceptiveField, KnownValues) {
  const auto& m = model();
  EXPECT_EQ(m.receptive_field("conv1_1").size, 3u);
  EXPECT_EQ(m.receptive_field("conv1_1").stride, 1u);
  EXPECT_EQ(m.receptive_field("conv2_1").size, 10u);
  EXPECT_EQ(m.receptive_field("conv2_1").stride, 2u);
  EXPECT_EQ(m.receptive_field("relu2_1").size, 10u);
  EXPECT_EQ(m.receptive_field("conv3_1").size, 24u);
  EXPECT_EQ(m.receptive_field("conv4_1").size, 68u);
  EXPECT_EQ(m.receptive_field("conv5_1").size, 156u);
  EXPECT_EQ(m.receptive_field("conv5_1").stride, 16u);
  EXPECT_THROW(m.receptive_field("conv6_1"), ConfigError);
}

TEST(ReceptiveField, NonDecreasingWithDepth) {
  std::size_t prev = 1;
  for (const auto& l : model().layers()) {
    const auto f = model().receptive_field(l.name).size;
    EXPECT_GE(f, prev) << l.name;
    prev = f;
  }
  EXPECT_GT(model().receptive_field("conv5_1").size, model().receptive_field("conv4_1").size);
  EXPECT_GT(model().receptive_field("conv4_1").size, model().receptive_field("conv3_1").size);
}

TEST(Model, RandomModelShapes) {
  const auto& c = model().conv("conv1_1");
  EXPECT_EQ(c.out_channels(), 64u);
  EXPECT_EQ(c.in_channels(), 3u);
  EXPECT_EQ(c.weights().size(), 64u * 3 * 3 * 3);
  EXPECT_EQ(model().output_shape("relu5_1", 64, 64), (Shape{512, 4, 4}));
  EXPECT_EQ(model().output_shape("input", 40, 50), (Shape{3, 40, 50}));
  EXPECT_EQ(model().index_of("input"), -1);
  EXPECT_THROW(model().index_of("fc6"), ConfigError);
}

TEST(Model, PreprocessRoundTripAndBounds) {
  const auto img = testing_support::noise_image(4, 4, 3);
  const auto net = model().preprocess(img);
  EXPECT_NEAR(net(0, 1, 2), 255.0 * img(0, 1, 2) - 123.68, 1e-3);
  const auto back = model().deprocess(net);
  for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back[i], img[i], 1e-6);
  const auto [lo, hi] = model().pixel_bounds();
  EXPECT_NEAR(lo[0], -123.68, 1e-4);
  EXPECT_NEAR(hi[2], 255.0 - 103.939, 1e-4);
}

TEST(Model, BgrOrderSwapsChannels) {
  auto file = to_weight_file(model());
  file.preprocessing.order = ChannelOrder::bgr;
  const auto bgr = model_from_weight_file(file, PoolKind::average);
  ColorImage img(3, 1, 1);
  img[0] = 1.0f;  // red
  const auto net = bgr.preprocess(img);
  EXPECT_NEAR(net[2], 255.0 - 123.68, 1e-3);
  EXPECT_NEAR(net[0], -103.939, 1e-3);
  EXPECT_NEAR(bgr.deprocess(net)[0], 1.0, 1e-6);
}

TEST(Sfw1, RoundTripIsByteIdentical) {
  const auto bytes = model_bytes();
  const auto file = decode_sfw1(bytes);
  EXPECT_TRUE(file.checksum_ok());
  EXPECT_EQ(file.entries.size(), 13u);
  EXPECT_EQ(file.entries[0].dims, (std::vector<std::uint32_t>{64, 3, 3, 3}));
  EXPECT_EQ(encode_sfw1(file), bytes);
  const auto reloaded = model_from_weight_file(file, PoolKind::average);
  EXPECT_EQ(encode_sfw1(to_weight_file(reloaded)), bytes);
}

TEST(Sfw1, HeaderLayout) {
  const auto bytes = model_bytes();
  ASSERT_GT(bytes.size(), 25u);
  EXPECT_EQ(std::string(bytes.begin(), bytes.begin() + 4), "SFW1");
  EXPECT_EQ(bytes[4], 1);  // version, little endian
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  float mean0;
  std::memcpy(&mean0, bytes.data() + 8, 4);
  EXPECT_FLOAT_EQ(mean0, 123.68f);
  EXPECT_EQ(bytes[20], 0);   // rgb
  EXPECT_EQ(bytes[21], 13);  // layer count
  EXPECT_EQ(bytes[25], 7);   // name length of "conv1_1"
  EXPECT_EQ(std::string(bytes.begin() + 27, bytes.begin() + 34), "conv1_1");
  EXPECT_EQ(bytes[34], 4);  // rank
}

TEST(Sfw1, DistinctErrors) {
  auto bytes = model_bytes();
  {
    auto b = bytes;
    b[0] = 'X';
    EXPECT_EQ(decode_error(b), FormatError::Kind::bad_magic);
  }
  {
    auto b = bytes;
    b[4] = 2;
    EXPECT_EQ(decode_error(b), FormatError::Kind::bad_version);
  }
  {
    auto b = bytes;
    b.resize(b.size() / 2);
    EXPECT_EQ(decode_error(b), FormatError::Kind::truncated);
  }
  {
    auto b = bytes;
    b.resize(b.size() - 2);
    EXPECT_EQ(decode_error(b), FormatError::Kind::truncated);
  }
  {
    auto b = bytes;
    b[b.size() / 2] ^= 0x40;
    EXPECT_EQ(decode_error(b), FormatError::Kind::checksum);
    const auto f = decode_sfw1(b, false);
    EXPECT_FALSE(f.checksum_ok());
  }
  EXPECT_EQ(decode_error({'S', 'F'}), FormatError::Kind::truncated);
}

TEST(Sfw1, ShapeMismatchAgainstArchitecture) {
  auto file = to_weight_file(model());
  file.entries[2].dims = {128, 32, 3, 3};
  file.entries[2].weights.resize(128 * 32 * 9);
  try {
    model_from_weight_file(file, PoolKind::average);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.kind(), FormatError::Kind::shape_mismatch);
  }
  auto missing = to_weight_file(model());
  missing.entries.pop_back();
  EXPECT_THROW(model_from_weight_file(missing, PoolKind::average), FormatError);
  auto extra = to_weight_file(model());
  extra.entries.push_back(extra.entries[0]);
  extra.entries.back().name = "conv9_9";
  EXPECT_THROW(model_from_weight_file(extra, PoolKind::average), FormatError);
}

TEST(Sfw1, FileRoundTrip) {
  const auto dir = testing_support::temp_dir("sfw1");
  save_model(model(), dir / "w.sfw1");
  const auto loaded = load_model(dir / "w.sfw1");
  EXPECT_EQ(loaded.conv("conv5_1").weights(), model().conv("conv5_1").weights());
  EXPECT_THROW(load_model(dir / "missing.sfw1"), IoError);
  std::filesystem::resize_file(dir / "w.sfw1", 1000);
  EXPECT_THROW(load_model(dir / "w.sfw1"), FormatError);
}

TEST(Forward, InputCaptureIsTheImage) {
  const auto img = model().preprocess(testing_support::noise_image(32, 32, 1));
  const auto acts = forward(model(), img, {"input"});
  EXPECT_EQ(acts.at("input"), img);
}

TEST(Forward, DoublingTheInputDoublesActivations) {
  const auto small = forward(model(), model().preprocess(testing_support::noise_image(32, 48, 1)),
                             {"conv1_1", "conv3_1", "relu5_1"});
  const auto big = forward(model(), model().preprocess(testing_support::noise_image(64, 96, 1)),
                           {"conv1_1", "conv3_1", "relu5_1"});
  for (const auto& [name, t] : small) {
    EXPECT_EQ(big.at(name).height(), 2 * t.height()) << name;
    EXPECT_EQ(big.at(name).width(), 2 * t.width()) << name;
  }
}

TEST(Forward, RejectsSmallOrWrongInput) {
  EXPECT_THROW(forward(model(), Tensor(3, 31, 40), {"conv1_1"}), ConfigError);
  EXPECT_THROW(forward(model(), Tensor(1, 32, 32), {"conv1_1"}), ConfigError);
  EXPECT_THROW(forward(model(), Tensor(3, 32, 32), {"conv9_1"}), ConfigError);
}

TEST(Forward, MatchesManualComposition) {
  std::mt19937_64 rng(12);
  const auto img = oracle::random_tensor(3, 32, 32, rng, -100.0, 100.0);
  auto x = oracle::relu(oracle::conv3x3(img, model().conv("conv1_1").weights(), model().conv("conv1_1").bias(), 64));
  x = oracle::relu(oracle::conv3x3(x, model().conv("conv1_2").weights(), model().conv("conv1_2").bias(), 64));
  x = oracle::pool2x2(x, false);
  const auto ref = oracle::conv3x3(x, model().conv("conv2_1").weights(), model().conv("conv2_1").bias(), 128);
  const auto got = forward(model(), img, {"conv2_1"}).at("conv2_1");
  ASSERT_EQ(got.shape(), ref.shape());
  double scale = 0.0, err = 0.0;
  for (std::size_t i = 0; i < ref.size(); ++i) {
    scale = std::max(scale, std::abs(ref[i]));
    err = std::max(err, std::abs(got[i] - ref[i]));
  }
  EXPECT_LT(err / scale, 1e-9);
}

TEST(Forward, ExtraCapturesDoNotChangeValues) {
  const auto img = model().preprocess(testing_support::noise_image(32, 32, 5));
  const auto a = forward(model(), img, {"relu2_1"});
  const auto b = forward(model(), img, {"relu2_1", "conv4_2", "input", "pool1"});
  EXPECT_EQ(a.at("relu2_1"), b.at("relu2_1"));
}

TEST(Forward, Conv1PreactivationIsHomogeneous) {
  std::mt19937_64 rng(13);
  auto x = oracle::random_tensor(3, 32, 32, rng, -50.0, 50.0);
  double mean = 0.0;
  for (double v : x.data()) mean += v;
  mean /= static_cast<double>(x.size());
  for (auto& v : x.data()) v -= mean;
  auto x3 = x;
  for (auto& v : x3.data()) v *= 3.0;
  const auto a = forward(model(), x, {"conv1_1"}).at("conv1_1");
  const auto b = forward(model(), x3, {"conv1_1"}).at("conv1_1");
  const auto& bias = model().conv("conv1_1").bias();
  const std::size_t P = a.height() * a.width();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double ba = bias[i / P];
    EXPECT_NEAR(b[i] - ba, 3.0 * (a[i] - ba), 1e-9 * (1.0 + std::abs(b[i])));
  }
}

TEST(Backward, ZeroGradientsGiveZero) {
  const auto img = model().preprocess(testing_support::noise_image(32, 32, 2)).cast<double>();
  ActivationSet<double> grads;
  grads.emplace("relu3_1", BasicTensor<double>(model().output_shape("relu3_1", 32, 32)));
  const auto g = backward(model(), img, grads);
  EXPECT_EQ(g.shape(), img.shape());
  for (double v : g.data()) EXPECT_EQ(v, 0.0);
}

TEST(Backward, InputGradientPassesThrough) {
  std::mt19937_64 rng(14);
  const auto img = model().preprocess(testing_support::noise_image(32, 32, 2));
  ActivationSet<float> grads;
  grads.emplace("input", oracle::random_tensor<float>(3, 32, 32, rng));
  EXPECT_EQ(backward(model(), img, grads), grads.at("input"));
}

TEST(Backward, Errors) {
  const auto img = model().preprocess(testing_support::noise_image(32, 32, 2));
  ActivationSet<float> bad_shape;
  bad_shape.emplace("relu1_1", Tensor(64, 16, 16));
  EXPECT_THROW(backward(model(), img, bad_shape), ConfigError);
  const auto trace = forward_trace(model(), img, model().index_of("relu1_1"));
  ActivationSet<float> too_deep;
  too_deep.emplace("relu2_1", Tensor(model().output_shape("relu2_1", 32, 32)));
  EXPECT_THROW(backward(model(), trace, too_deep), ConfigError);
  ActivationSet<float> unknown;
  unknown.emplace("conv7_7", Tensor(1, 1, 1));
  EXPECT_THROW(backward(model(), img, unknown), ConfigError);
}

TEST(Backward, ContentLossGradientMatchesFiniteDifferences) {
  // Scalar loss: content loss at relu4_2 of a 3x64x64 image, in double.
  const auto& m = model();
  const auto x0 = m.preprocess(testing_support::noise_image(64, 64, 21)).cast<double>();
  const auto target = forward(m, m.preprocess(testing_support::pattern_image(64, 64, 0.3)).cast<double>(),
                              {"relu4_2"}).at("relu4_2");
  auto loss = [&](const std::vector<double>& v) {
    return content_loss(forward(m, BasicTensor<double>(x0.shape(), v), {"relu4_2"}).at("relu4_2"), target).value;
  };
  const auto acts = forward(m, x0, {"relu4_2"});
  ActivationSet<double> grads;
  grads.emplace("relu4_2", content_loss(acts.at("relu4_2"), target).grad);
  const auto g = backward(m, x0, grads);

  std::mt19937_64 rng(22);
  const std::vector<double> x(x0.data().begin(), x0.data().end());
  for (int k = 0; k < 3; ++k) {
    const auto d = oracle::random_direction(x.size(), rng);
    double gd = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) gd += g[i] * d[i];
    const double fd = oracle::directional_derivative(loss, x, d, 1e-3);
    EXPECT_LT(oracle::relative_error(gd, fd), 1e-3) << gd << " vs " << fd;
  }
}
