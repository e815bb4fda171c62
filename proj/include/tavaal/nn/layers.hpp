#pragma once

#include <cmath>
#include <string>

#include "tavaal/autodiff/ops.hpp"
#include "tavaal/random.hpp"

namespace tavaal::nn {

using ad::NdArray;
using ad::ParamSet;
using ad::Shape;
using ad::Tensor;

/// He-style uniform init, bound sqrt(6 / fan_in).
inline NdArray fan_in_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
    NdArray a(std::move(shape));
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : a.values()) v = dist(rng);
    return a;
}

class Dense {
public:
    Dense() = default;
    Dense(std::size_t in, std::size_t out, Rng& rng)
        : weight_(ad::parameter(fan_in_uniform(Shape{in, out}, in, rng))),
          bias_(ad::parameter(NdArray(Shape{out}))) {}

    Tensor operator()(const Tensor& x) const { return ad::add_bias(ad::matmul(x, weight_), bias_); }

    std::size_t in_features() const { return weight_.dim(0); }
    std::size_t out_features() const { return weight_.dim(1); }

    Tensor& weight() { return weight_; }
    Tensor& bias() { return bias_; }

    ParamSet params(const std::string& prefix) const {
        return {{prefix + ".weight", weight_}, {prefix + ".bias", bias_}};
    }

private:
    Tensor weight_;
    Tensor bias_;
};

class Conv2d {
public:
    Conv2d() = default;
    Conv2d(std::size_t in_ch, std::size_t out_ch, std::size_t kernel, ad::Conv2dSpec spec, Rng& rng)
        : weight_(ad::parameter(fan_in_uniform(Shape{out_ch, in_ch, kernel, kernel}, in_ch * kernel * kernel, rng))),
          bias_(ad::parameter(NdArray(Shape{out_ch}))), spec_(spec) {}

    Tensor operator()(const Tensor& x) const { return ad::conv2d(x, weight_, bias_, spec_); }

    std::size_t out_channels() const { return weight_.dim(0); }

    ParamSet params(const std::string& prefix) const {
        return {{prefix + ".weight", weight_}, {prefix + ".bias", bias_}};
    }

private:
    Tensor weight_;
    Tensor bias_;
    ad::Conv2dSpec spec_;
};

} // namespace tavaal::nn
