#pragma once

// Umbrella header.

#include "stylectl/error.hpp"
#include "stylectl/tensor.hpp"
#include "stylectl/nn.hpp"
#include "stylectl/sfw1.hpp"
#include "stylectl/vgg.hpp"
#include "stylectl/losses.hpp"
#include "stylectl/guidance.hpp"
#include "stylectl/color.hpp"
#include "stylectl/optimize.hpp"
#include "stylectl/pipelines.hpp"
#include "stylectl/image_io.hpp"
#include "stylectl/fixtures.hpp"
