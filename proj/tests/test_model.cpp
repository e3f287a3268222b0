#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "champ/data/dataset.hpp"
#include "champ/nn/model.hpp"
#include "champ/rng.hpp"

namespace nn = champ::nn;
using champ::Dataset;
using champ::Image;
using champ::ParamVector;
using champ::Shape;

namespace {

double mean_ce(const nn::Model& m, const Dataset& data) {
    std::vector<const Image*> batch;
    std::vector<int> labels;
    for (const auto& item : data.items) {
        batch.push_back(&item.image);
        labels.push_back(item.label);
    }
    return nn::loss_and_grad(m, batch, labels).first;
}

TEST(ModelSpec, ReferenceParamCounts) {
    EXPECT_EQ(nn::ModelSpec::fmnist_cnn().param_count(), 259960);
    EXPECT_EQ(nn::ModelSpec::cifar_alexnet().param_count(), 2472266);
    EXPECT_EQ(nn::ModelSpec::logistic(4, 3).param_count(), 4 * 3 + 3);
    EXPECT_EQ(nn::ModelSpec::mlp(10, {7}, 5).param_count(), (10 * 7 + 7) + (7 * 5 + 5));
}

TEST(ModelSpec, FmnistShapeChain) {
    auto spec = nn::ModelSpec::fmnist_cnn();
    auto shapes = spec.output_shapes();
    ASSERT_EQ(shapes.size(), spec.layers.size());
    EXPECT_EQ(shapes[0], (Shape{30, 28, 28}));  // conv1
    EXPECT_EQ(shapes[2], (Shape{30, 14, 14}));  // pool1
    EXPECT_EQ(shapes[3], (Shape{50, 14, 14}));  // conv2
    EXPECT_EQ(shapes[5], (Shape{50, 7, 7}));    // pool2
    EXPECT_EQ(shapes[6], (Shape{2450, 1, 1}));  // flatten
    EXPECT_EQ(shapes.back(), (Shape{10, 1, 1}));
}

TEST(ModelSpec, AlexnetShapeChain) {
    auto spec = nn::ModelSpec::cifar_alexnet();
    auto shapes = spec.output_shapes();
    EXPECT_EQ(shapes[0], (Shape{64, 8, 8}));
    EXPECT_EQ(shapes[2], (Shape{64, 4, 4}));
    EXPECT_EQ(shapes[3], (Shape{192, 4, 4}));
    EXPECT_EQ(shapes[5], (Shape{192, 2, 2}));
    EXPECT_EQ(shapes[11], (Shape{256, 2, 2}));  // last relu
    EXPECT_EQ(shapes[12], (Shape{256, 1, 1}));  // pool3
    EXPECT_EQ(shapes[13], (Shape{256, 1, 1}));  // flatten
    EXPECT_EQ(shapes.back(), (Shape{10, 1, 1}));
}

TEST(ModelSpec, RejectsClassMismatch) {
    auto spec = nn::ModelSpec::logistic(4, 3);
    spec.classes = 5;  // head still produces 3
    EXPECT_THROW(spec.output_shapes(), std::invalid_argument);
}

TEST(ModelSpec, LayerOffsetsArePrefixSums) {
    auto spec = nn::ModelSpec::fmnist_cnn();
    auto off = spec.layer_offsets();
    ASSERT_EQ(off.size(), spec.layers.size());
    EXPECT_EQ(off[0], 0);
    EXPECT_EQ(off[3], 300);            // after conv1 (30*9 + 30)
    EXPECT_EQ(off[7], 300 + 13550);    // after conv2 (50*30*9 + 50)
    EXPECT_EQ(off[9], 300 + 13550 + 245100);
}

TEST(InitModel, RespectsFanInBounds) {
    auto spec = nn::ModelSpec::mlp(20, {8}, 4);
    auto m = nn::init_model(spec, 7);
    auto off = spec.layer_offsets();
    struct Range {
        std::size_t layer;
        std::int64_t wcount, bcount, fan_in;
    };
    const std::vector<Range> ranges = {{1, 20 * 8, 8, 20}, {3, 8 * 4, 4, 8}};
    for (const auto& r : ranges) {
        const double wbound = std::sqrt(6.0 / static_cast<double>(r.fan_in));
        const double bbound = 1.0 / std::sqrt(static_cast<double>(r.fan_in));
        const double* p = m.params.data() + off[r.layer];
        for (std::int64_t i = 0; i < r.wcount; ++i) {
            EXPECT_GE(p[i], -wbound);
            EXPECT_LT(p[i], wbound);
        }
        for (std::int64_t i = 0; i < r.bcount; ++i) {
            EXPECT_GE(p[r.wcount + i], -bbound);
            EXPECT_LT(p[r.wcount + i], bbound);
        }
    }
}

TEST(InitModel, DeterministicPerSeed) {
    auto spec = nn::ModelSpec::mlp(10, {6}, 3);
    EXPECT_EQ(nn::init_model(spec, 42).params, nn::init_model(spec, 42).params);
    EXPECT_NE(nn::init_model(spec, 42).params, nn::init_model(spec, 43).params);
}

TEST(FlattenUnflatten, RoundTrip) {
    auto spec = nn::ModelSpec::logistic(3, 2);
    auto m = nn::init_model(spec, 1);
    ParamVector flat = nn::flatten(m);
    auto back = nn::unflatten(spec, flat);
    EXPECT_EQ(back.params, m.params);
    EXPECT_EQ(back.spec, spec);
    flat.push_back(0.0);
    EXPECT_THROW(nn::unflatten(spec, flat), std::invalid_argument);
}

TEST(Softmax, NormalizesAndOrders) {
    std::vector<double> logits = {1.0, 2.0, 3.0};
    auto p = nn::softmax(logits);
    double sum = p[0] + p[1] + p[2];
    EXPECT_NEAR(sum, 1.0, 1e-12);
    EXPECT_LT(p[0], p[1]);
    EXPECT_LT(p[1], p[2]);
}

TEST(Softmax, StableUnderLargeLogits) {
    std::vector<double> logits = {1000.0, 1000.0};
    auto p = nn::softmax(logits);
    EXPECT_NEAR(p[0], 0.5, 1e-12);
    EXPECT_NEAR(p[1], 0.5, 1e-12);

    std::vector<double> shifted = {-2000.0, -1999.0};
    auto q = nn::softmax(shifted);
    EXPECT_TRUE(std::isfinite(q[0]));
    EXPECT_NEAR(q[0] + q[1], 1.0, 1e-12);
    // Softmax is shift invariant.
    std::vector<double> base = {0.0, 1.0};
    auto r = nn::softmax(base);
    EXPECT_NEAR(q[0], r[0], 1e-12);
}

TEST(Argmax, PicksFirstOfTies) {
    std::vector<double> v = {0.2, 0.5, 0.5, 0.1};
    EXPECT_EQ(nn::argmax(v), 1);
}

TEST(Forward, LogisticHandCase) {
    auto spec = nn::ModelSpec::logistic(2, 2);
    // W = [[1, 2], [3, -1]], b = [0.5, -0.5].
    auto m = nn::unflatten(spec, {1, 2, 3, -1, 0.5, -0.5});
    Image img{spec.input_shape, {2.0, 1.0}};
    auto logits = nn::forward(m, {img});
    ASSERT_EQ(logits.size(), 1u);
    EXPECT_DOUBLE_EQ(logits[0][0], 1 * 2 + 2 * 1 + 0.5);
    EXPECT_DOUBLE_EQ(logits[0][1], 3 * 2 - 1 * 1 - 0.5);
}

TEST(Forward, RejectsShapeMismatch) {
    auto m = nn::init_model(nn::ModelSpec::logistic(4, 2), 1);
    Image img{Shape{1, 1, 3}, {0, 0, 0}};
    EXPECT_THROW(nn::forward(m, {img}), std::invalid_argument);
}

TEST(LossAndGrad, UniformAtZeroParams) {
    auto spec = nn::ModelSpec::logistic(3, 4);
    auto m = nn::Model::zeros(spec);
    Image img{spec.input_shape, {0.3, -0.2, 0.9}};
    auto [loss, grad] = nn::loss_and_grad(m, {&img}, {2});
    EXPECT_NEAR(loss, std::log(4.0), 1e-12);
    // Bias gradients are probs - onehot = 1/4 everywhere except -3/4 at the label.
    const std::size_t bias0 = 3 * 4;
    for (int c = 0; c < 4; ++c)
        EXPECT_NEAR(grad[bias0 + c], (c == 2 ? -0.75 : 0.25), 1e-12);
}

TEST(LossAndGrad, ValidatesInputs) {
    auto spec = nn::ModelSpec::logistic(2, 2);
    auto m = nn::Model::zeros(spec);
    Image img{spec.input_shape, {1.0, 1.0}};
    EXPECT_THROW(nn::loss_and_grad(m, {}, {}), std::invalid_argument);
    EXPECT_THROW(nn::loss_and_grad(m, {&img}, {0, 1}), std::invalid_argument);
    EXPECT_THROW(nn::loss_and_grad(m, {&img}, {2}), std::invalid_argument);
    EXPECT_THROW(nn::loss_and_grad(m, {&img}, {-1}), std::invalid_argument);
}

TEST(LossAndGrad, ZeroAlphaMatchesPlainLoss) {
    auto spec = nn::ModelSpec::mlp(4, {5}, 3);
    auto m = nn::init_model(spec, 3);
    Image img{spec.input_shape, {0.1, 0.2, 0.3, 0.4}};
    nn::CompositeLoss comp{0.0, champ::attack::ProxMetric{}, ParamVector(m.params.size(), 9.0)};
    auto plain = nn::loss_and_grad(m, {&img}, {1});
    auto with = nn::loss_and_grad(m, {&img}, {1}, comp);
    EXPECT_EQ(plain.first, with.first);
    EXPECT_EQ(plain.second, with.second);
}

TEST(LossAndGrad, CompositeAddsProxTerm) {
    auto spec = nn::ModelSpec::logistic(2, 2);
    auto m = nn::unflatten(spec, {1, 0, 0, 1, 0, 0});
    Image img{spec.input_shape, {1.0, -1.0}};
    ParamVector ref(m.params.size(), 0.0);
    nn::CompositeLoss comp{2.0, champ::attack::ProxMetric{}, ref};
    auto plain = nn::loss_and_grad(m, {&img}, {0});
    auto with = nn::loss_and_grad(m, {&img}, {0}, comp);
    auto [pv, pg] = champ::attack::prox_value_and_grad(comp.metric, m.params, ref);
    EXPECT_NEAR(with.first, plain.first + 2.0 * pv, 1e-12);
    for (std::size_t i = 0; i < pg.size(); ++i)
        EXPECT_NEAR(with.second[i], plain.second[i] + 2.0 * pg[i], 1e-12);
}

TEST(LossAndGrad, CompositeRejectsReferenceMismatch) {
    auto spec = nn::ModelSpec::logistic(2, 2);
    auto m = nn::Model::zeros(spec);
    Image img{spec.input_shape, {1.0, 1.0}};
    nn::CompositeLoss comp{1.0, champ::attack::ProxMetric{}, ParamVector(3, 0.0)};
    EXPECT_THROW(nn::loss_and_grad(m, {&img}, {0}, comp), std::invalid_argument);
}

TEST(SgdStep, AppliesUpdate) {
    auto spec = nn::ModelSpec::logistic(1, 2);
    auto m = nn::unflatten(spec, {1.0, 2.0, 3.0, 4.0});
    ParamVector grad = {0.5, -0.5, 1.0, 0.0};
    auto next = nn::sgd_step(m, grad, 0.1);
    EXPECT_DOUBLE_EQ(next.params[0], 0.95);
    EXPECT_DOUBLE_EQ(next.params[1], 2.05);
    EXPECT_DOUBLE_EQ(next.params[2], 2.9);
    EXPECT_DOUBLE_EQ(next.params[3], 4.0);
    EXPECT_THROW(nn::sgd_step(m, grad, 0.0), std::invalid_argument);
}

TEST(TrainLocal, LossDecreasesOnSeparableData) {
    Shape shape{1, 4, 4};
    auto data = champ::data::gen_synthetic(11, 3, 30, shape, 0.1);
    auto spec = nn::ModelSpec::mlp(static_cast<int>(shape.size()), {16}, 3);
    spec.input_shape = shape;
    auto m0 = nn::init_model(spec, 5);
    const double before = mean_ce(m0, data);
    auto m1 = nn::train_local(m0, data, 20, 0.5, 16, std::nullopt, 77);
    const double after = mean_ce(m1, data);
    EXPECT_LT(after, before * 0.5) << "before=" << before << " after=" << after;
}

TEST(TrainLocal, EuclideanProxIsAnExactImplicitStep) {
    // One item, one epoch, batch 1: a plain CE gradient step followed by the
    // closed-form pull p <- (p + k*ref) / (1 + k) with k = lr * alpha * lambda.
    auto spec = nn::ModelSpec::mlp(4, {3}, 2);
    auto m0 = nn::init_model(spec, 21);
    Dataset data;
    data.class_count = 2;
    data.items.push_back({Image{spec.input_shape, {0.9, 0.1, 0.4, 0.6}}, 1});

    const double alpha = 2.5;
    const double lr = 0.3;
    auto metric = champ::attack::ProxMetric::euclidean(1.5);
    ParamVector ref(m0.params.size(), 0.25);
    nn::CompositeLoss comp{alpha, metric, ref};
    auto got = nn::train_local(m0, data, 1, lr, 1, comp, 55);

    auto grad = nn::loss_and_grad(m0, {&data.items[0].image}, {1}).second;
    auto want = nn::sgd_step(m0, grad, lr);
    const double k = lr * alpha * metric.lambda;
    const double shrink = 1.0 / (1.0 + k);
    for (std::size_t i = 0; i < want.params.size(); ++i)
        want.params[i] = (want.params[i] + k * ref[i]) * shrink;
    ASSERT_EQ(got.params.size(), want.params.size());
    for (std::size_t i = 0; i < got.params.size(); ++i)
        EXPECT_DOUBLE_EQ(got.params[i], want.params[i]) << "coord " << i;
}

TEST(TrainLocal, ImplicitStepMatchesExplicitGradientForSmallPulls) {
    // For k = lr * alpha * lambda << 1 the implicit pull agrees with folding
    // the prox gradient into the step, up to O(k^2 + k * lr * |g|).
    Shape shape{1, 3, 3};
    auto data = champ::data::gen_synthetic(6, 2, 10, shape, 0.2);
    auto spec = nn::ModelSpec::mlp(static_cast<int>(shape.size()), {5}, 2);
    spec.input_shape = shape;
    auto m0 = nn::init_model(spec, 13);

    const double alpha = 0.01;
    const double lr = 0.01;
    nn::CompositeLoss comp{alpha, champ::attack::ProxMetric::euclidean(1.0),
                           ParamVector(m0.params.size(), 0.0)};
    const int batch = static_cast<int>(data.size());
    auto implicit = nn::train_local(m0, data, 1, lr, batch, comp, 3);

    // Same single full-batch step (including the epoch shuffle) with the prox
    // gradient taken explicitly at the start point instead.
    std::vector<int> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    champ::Rng rng(champ::derive_seed(3, "epoch", 0));
    rng.shuffle(order);
    std::vector<const Image*> imgs;
    std::vector<int> labels;
    for (int i : order) {
        imgs.push_back(&data.items[i].image);
        labels.push_back(data.items[i].label);
    }
    auto grad = nn::loss_and_grad(m0, imgs, labels, comp).second;
    auto forward = nn::sgd_step(m0, grad, lr);
    for (std::size_t i = 0; i < implicit.params.size(); ++i)
        EXPECT_NEAR(implicit.params[i], forward.params[i], 1e-5) << "coord " << i;
}

TEST(TrainLocal, DeterministicPerSeed) {
    Shape shape{1, 3, 3};
    auto data = champ::data::gen_synthetic(2, 2, 12, shape, 0.2);
    auto spec = nn::ModelSpec::logistic(static_cast<int>(shape.size()), 2);
    spec.input_shape = shape;
    auto m0 = nn::init_model(spec, 9);
    auto a = nn::train_local(m0, data, 2, 0.1, 4, std::nullopt, 100);
    auto b = nn::train_local(m0, data, 2, 0.1, 4, std::nullopt, 100);
    auto c = nn::train_local(m0, data, 2, 0.1, 4, std::nullopt, 101);
    EXPECT_EQ(a.params, b.params);
    EXPECT_NE(a.params, c.params);
}

TEST(TrainLocal, ZeroLrLeavesParamsUntouched) {
    Shape shape{1, 2, 2};
    auto data = champ::data::gen_synthetic(3, 2, 8, shape, 0.2);
    auto spec = nn::ModelSpec::logistic(static_cast<int>(shape.size()), 2);
    spec.input_shape = shape;
    auto m0 = nn::init_model(spec, 4);
    auto m1 = nn::train_local(m0, data, 3, 0.0, 4, std::nullopt, 1);
    EXPECT_EQ(m1.params, m0.params);
}

TEST(TrainLocal, ValidatesArguments) {
    Shape shape{1, 2, 2};
    auto data = champ::data::gen_synthetic(3, 2, 8, shape, 0.2);
    auto spec = nn::ModelSpec::logistic(static_cast<int>(shape.size()), 2);
    spec.input_shape = shape;
    auto m0 = nn::Model::zeros(spec);
    Dataset empty;
    empty.class_count = 2;
    EXPECT_THROW(nn::train_local(m0, empty, 1, 0.1, 4, std::nullopt, 1),
                 std::invalid_argument);
    EXPECT_THROW(nn::train_local(m0, data, 0, 0.1, 4, std::nullopt, 1),
                 std::invalid_argument);
    EXPECT_THROW(nn::train_local(m0, data, 1, 0.1, 0, std::nullopt, 1),
                 std::invalid_argument);
}

}  // namespace
