#include "nn_support.hpp"

#include "skg/nn/grad_check.hpp"

#include <gtest/gtest.h>

using namespace skg;
using namespace skg::nn;
using skg::test::random_example;
using skg::test::small_config;

namespace {

Tensor<long double> row_tensor(std::vector<long double> const& v)
{
    Tensor<long double> t("w", 1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t i = 0; i < v.size(); ++i) {
        t.value(0, static_cast<Eigen::Index>(i)) = v[i];
    }
    return t;
}

}  // namespace

TEST(GradCheck, QuadraticIsExact)
{
    auto w = row_tensor({0.3L, -1.2L, 2.5L, 0.0L});
    std::function<long double(bool)> loss = [&](bool backprop) {
        Tape<long double> tape;
        auto x = tape.parameter(w);
        auto l = tape.matmul_transposed(x, x);
        if (backprop) {
            tape.backward(l);
        }
        return tape.value(l)(0, 0);
    };
    auto r = grad_check<long double>({&w}, loss);
    EXPECT_EQ(r.entries_checked, 4u);
    EXPECT_TRUE(r.all_finite);
    EXPECT_LT(r.max_relative_error, 1e-10);
    EXPECT_NEAR(static_cast<double>(w.grad(0, 2)), 5.0, 1e-15);
}

TEST(GradCheck, WrongGradientDetected)
{
    auto w = row_tensor({0.5L, 1.5L});
    std::function<long double(bool)> loss = [&](bool backprop) {
        auto v = w.value;
        if (backprop) {
            w.grad = v;  // true gradient is 2v
        }
        return v.squaredNorm();
    };
    auto r = grad_check<long double>({&w}, loss);
    EXPECT_NEAR(r.max_relative_error, 0.5, 1e-6);
    EXPECT_EQ(r.worst_tensor.rfind("w[", 0), 0u);
}

TEST(GradCheck, EkiLongDouble)
{
    InfusionNet<long double> net(small_config(8));
    Rng rng(1);
    net.randomize(rng, 0.5);
    auto ex = random_example(rng, 20, 2, 2);
    auto r = grad_check(net, ex, FusionMode::Eki);
    EXPECT_TRUE(r.all_finite);
    EXPECT_GT(r.entries_checked, 1000u);
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_tensor;
}

TEST(GradCheck, EveryModeLongDouble)
{
    for (auto mode : {FusionMode::ClsConcat, FusionMode::SentConcat, FusionMode::None}) {
        InfusionNet<long double> net(small_config(8));
        Rng rng(2);
        net.randomize(rng, 0.5);
        auto ex = random_example(rng, 20, 3, 1);
        auto r = grad_check(net, ex, mode);
        EXPECT_TRUE(r.all_finite);
        EXPECT_LT(r.max_relative_error, 1e-4) << to_string(mode) << ' ' << r.worst_tensor;
    }
}

TEST(GradCheck, ZeroParametersGiveFiniteGradients)
{
    InfusionNet<long double> net(small_config(8));
    Rng rng(3);
    auto ex = random_example(rng, 20, 2, 0);
    auto r = grad_check(net, ex, FusionMode::Eki);
    EXPECT_TRUE(r.all_finite);
    EXPECT_TRUE(net.params().finite());
    EXPECT_LT(r.max_relative_error, 1e-4) << r.worst_tensor;
}
