// SPDX-License-Identifier: Apache-2.0
#include "emovc/model/cyclegan.hpp"

#include "emovc/common/seed.hpp"
#include "emovc/error.hpp"

namespace emovc::model {

namespace {
std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t k) { return mix_seed({seed, k}); }
}  // namespace

CycleGanModels::CycleGanModels(double rho, std::size_t height, std::size_t crop_width, std::uint64_t seed)
    : g_ab(rho, sub_seed(seed, 0)),
      g_ba(rho, sub_seed(seed, 1)),
      d_a(rho, height, crop_width, sub_seed(seed, 2)),
      d_b(rho, height, crop_width, sub_seed(seed, 3)),
      classifier(rho, height, crop_width, sub_seed(seed, 4)) {}

std::vector<nd::NamedTensor> CycleGanModels::parameters() const {
  std::vector<nd::NamedTensor> out;
  for (auto&& part : {g_ab.parameters("g_ab"), g_ba.parameters("g_ba"), d_a.parameters("d_a"),
                      d_b.parameters("d_b"), classifier.parameters("c")})
    out.insert(out.end(), part.begin(), part.end());
  return out;
}

FeatureTensor generator_forward(const GeneratorNet& g, const FeatureTensor& s) {
  s.validate();
  FeatureTensor out{g.forward(s.data), s.layout, s.stats};
  return out;
}

nd::Tensor discriminate(const DiscriminatorNet& d, const FeatureTensor& s) {
  s.validate();
  require(s.width() % 32 == 0, "discriminator input width " + std::to_string(s.width()) +
                                   " is not a multiple of 32");
  return d.forward(s.data);
}

}  // namespace emovc::model
