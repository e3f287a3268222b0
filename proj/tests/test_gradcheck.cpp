#include <gtest/gtest.h>

#include <vector>

#include "champ/nn/model.hpp"
#include "champ/rng.hpp"
#include "support/gradcheck.hpp"

namespace nn = champ::nn;
using champ::ParamVector;
using champ::Rng;

namespace {

void expect_gradients_match(const nn::ModelSpec& spec, std::uint64_t seed,
                            int n_coords,
                            const std::optional<nn::CompositeLoss>& composite =
                                std::nullopt) {
    const auto worst = gradcheck::max_grad_rel_err(spec, seed, n_coords, composite);
    EXPECT_LT(worst.rel_err, 1e-4)
        << "coord " << worst.coord << " analytic=" << worst.analytic
        << " numeric=" << worst.numeric;
}

TEST(GradCheck, Logistic) {
    expect_gradients_match(nn::ModelSpec::logistic(12, 4), 21, 100);
}

TEST(GradCheck, Mlp) {
    expect_gradients_match(nn::ModelSpec::mlp(16, {8, 6}, 3), 22, 100);
}

TEST(GradCheck, TwoBlockCnn) {
    expect_gradients_match(gradcheck::small_two_block_cnn(), 23, 100);
}

TEST(GradCheck, StridedCnn) {
    expect_gradients_match(gradcheck::small_strided_cnn(), 24, 100);
}

TEST(GradCheck, CompositeEuclidean) {
    auto spec = nn::ModelSpec::mlp(10, {6}, 3);
    ParamVector ref(static_cast<std::size_t>(spec.param_count()));
    Rng rng(99);
    for (double& r : ref) r = rng.uniform(-0.5, 0.5);
    nn::CompositeLoss comp{0.7, champ::attack::ProxMetric::euclidean(), ref};
    expect_gradients_match(spec, 25, 80, comp);
}

TEST(GradCheck, CompositeCosine) {
    auto spec = nn::ModelSpec::mlp(10, {6}, 3);
    ParamVector ref(static_cast<std::size_t>(spec.param_count()));
    Rng rng(98);
    for (double& r : ref) r = rng.uniform(-0.5, 0.5);
    nn::CompositeLoss comp{1.3, champ::attack::ProxMetric::cosine(), ref};
    expect_gradients_match(spec, 26, 80, comp);
}

TEST(GradCheck, CompositeHuber) {
    auto spec = nn::ModelSpec::mlp(10, {6}, 3);
    ParamVector ref(static_cast<std::size_t>(spec.param_count()));
    Rng rng(97);
    for (double& r : ref) r = rng.uniform(-2.0, 2.0);
    nn::CompositeLoss comp{0.5, champ::attack::ProxMetric::huber(0.4), ref};
    expect_gradients_match(spec, 27, 80, comp);
}

}  // namespace
