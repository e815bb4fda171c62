#pragma once

#include <string>
#include <vector>

#include "tavaal/autodiff/ops.hpp"
#include "tavaal/error.hpp"
#include "tavaal/nn/layers.hpp"

namespace tavaal::task {

using ad::ParamSet;
using ad::Shape;
using ad::Tensor;

enum class TaskArch { conv, mlp };

struct TaskNetConfig {
    TaskArch arch = TaskArch::conv;
    /// Per-sample shape: {channels, height, width} for conv, {features} for mlp.
    Shape input_shape;
    std::size_t num_classes = 10;
    std::size_t width1 = 8;  // conv channels or hidden units of block 1
    std::size_t width2 = 16; // ... of block 2
};

struct TaskOutput {
    Tensor logits;                // [B x C]
    std::vector<Tensor> features; // one tap per block, input to the Ranker
};

/// Classifier with two feature blocks and a dense head.
///
/// conv: (conv3x3 -> relu -> maxpool2x2) x2 -> dense. mlp: (dense -> relu) x2 -> dense.
/// The output of each block is exposed as a tap for the loss-prediction head.
class TaskNet {
public:
    TaskNet(TaskNetConfig cfg, Rng& rng) : cfg_(std::move(cfg)) {
        if (cfg_.num_classes < 2) throw InputError("TaskNet: need at least 2 classes");
        if (cfg_.arch == TaskArch::conv) {
            if (cfg_.input_shape.size() != 3) throw InputError("TaskNet(conv): input shape must be {C,H,W}");
            const std::size_t h = cfg_.input_shape[1] / 4, w = cfg_.input_shape[2] / 4;
            if (h == 0 || w == 0) throw InputError("TaskNet(conv): input smaller than 4x4");
            conv1_ = nn::Conv2d(cfg_.input_shape[0], cfg_.width1, 3, {1, 1}, rng);
            conv2_ = nn::Conv2d(cfg_.width1, cfg_.width2, 3, {1, 1}, rng);
            head_ = nn::Dense(cfg_.width2 * h * w, cfg_.num_classes, rng);
        } else {
            if (cfg_.input_shape.size() != 1) throw InputError("TaskNet(mlp): input shape must be {D}");
            fc1_ = nn::Dense(cfg_.input_shape[0], cfg_.width1, rng);
            fc2_ = nn::Dense(cfg_.width1, cfg_.width2, rng);
            head_ = nn::Dense(cfg_.width2, cfg_.num_classes, rng);
        }
    }

    const TaskNetConfig& config() const { return cfg_; }

    /// Channel (or unit) count of each tap, in order.
    std::vector<std::size_t> tap_widths() const { return {cfg_.width1, cfg_.width2}; }

    TaskOutput forward(const Tensor& batch) const {
        check_input(batch);
        TaskOutput out;
        if (cfg_.arch == TaskArch::conv) {
            Tensor h1 = ad::max_pool2x2(ad::relu(conv1_(batch)));
            Tensor h2 = ad::max_pool2x2(ad::relu(conv2_(h1)));
            out.logits = head_(ad::flatten(h2));
            out.features = {h1, h2};
        } else {
            Tensor h1 = ad::relu(fc1_(batch));
            Tensor h2 = ad::relu(fc2_(h1));
            out.logits = head_(h2);
            out.features = {h1, h2};
        }
        return out;
    }

    ParamSet params() const {
        if (cfg_.arch == TaskArch::conv)
            return ad::concat_params({conv1_.params("task.conv1"), conv2_.params("task.conv2"), head_.params("task.head")});
        return ad::concat_params({fc1_.params("task.fc1"), fc2_.params("task.fc2"), head_.params("task.head")});
    }

private:
    void check_input(const Tensor& batch) const {
        const Shape& s = batch.shape();
        if (s.size() != cfg_.input_shape.size() + 1 || !std::equal(s.begin() + 1, s.end(), cfg_.input_shape.begin()))
            throw InputError("TaskNet: batch shape " + ad::shape_str(s) + " does not match input " +
                             ad::shape_str(cfg_.input_shape));
    }

    TaskNetConfig cfg_;
    nn::Conv2d conv1_, conv2_;
    nn::Dense fc1_, fc2_;
    nn::Dense head_;
};

} // namespace tavaal::task
