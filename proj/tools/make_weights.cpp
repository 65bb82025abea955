// Writes an SFW1 file of random VGG-19 weights, and optionally a fixture
// directory of engine activations for it.

#include "CLI11.hpp"

#include <iostream>

#include "stylectl/fixtures.hpp"
#include "stylectl/vgg.hpp"

int main(int argc, char** argv) {
  std::string out;
  std::string fixtures;
  std::uint64_t seed = 0;
  CLI::App app{"random VGG-19 weights in SFW1 format"};
  app.add_option("out", out, "output .sfw1 file")->required();
  app.add_option("--seed", seed, "weight seed")->capture_default_str();
  app.add_option("--fixtures", fixtures, "also write reference activations to this directory");
  CLI11_PARSE(app, argc, argv);

  try {
    const auto model = stylectl::random_vgg19(seed);
    stylectl::save_model(model, out);
    if (!fixtures.empty()) {
      std::vector<stylectl::FixtureImage> images;
      const std::vector<std::pair<std::string, float>> flat = {{"black", 0.0f}, {"gray", 0.5f}, {"white", 1.0f}};
      for (const auto& [id, v] : flat) {
        stylectl::FixtureImage img{id, stylectl::Tensor(3, 64, 64, v), {}};
        const auto acts = stylectl::forward(model, model.preprocess(img.input), {"conv1_1", "conv3_1", "conv5_1"});
        for (const auto& [layer, t] : acts) img.layers.emplace(layer, t);
        images.push_back(std::move(img));
      }
      stylectl::write_fixtures(fixtures, images);
    }
  } catch (const stylectl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::cout << "wrote " << out << "\n";
  return 0;
}
