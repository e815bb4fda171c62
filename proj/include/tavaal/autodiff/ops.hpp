#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "tavaal/autodiff/tensor.hpp"
#include "tavaal/error.hpp"

namespace tavaal::ad {

namespace detail {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

inline void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape() != b.shape())
        throw InputError(std::string(op) + ": shape mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

inline void require_rank(const Tensor& t, std::size_t rank, const char* op) {
    if (t.rank() != rank)
        throw InputError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         shape_str(t.shape()));
}

// Numerically stable log(1 + exp(x)).
inline double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Elementwise unary op with derivative expressed through input x and output y.
template <class F, class DF>
Tensor unary(const Tensor& x, F f, DF df) {
    NdArray out(x.shape());
    const auto in = x.value().values();
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
    return make_op(std::move(out), {x}, [df](Node& self) {
        Node& p = *self.parents[0];
        if (!p.requires_grad) return;
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * df(p.value[i], self.value[i]);
    });
}

} // namespace detail

// ---------------------------------------------------------------------------
// Elementwise

inline Tensor add(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "add");
    NdArray out(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        for (auto& p : self.parents) {
            if (!p->requires_grad) continue;
            auto& g = p->grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
    });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "sub");
    NdArray out(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        const double sign[2] = {1.0, -1.0};
        for (std::size_t k = 0; k < 2; ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) continue;
            auto& g = p.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += sign[k] * self.grad[i];
        }
    });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mul");
    NdArray out(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
    return make_op(std::move(out), {a, b}, [](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        if (pa.requires_grad) {
            auto& g = pa.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pb.value[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i] * pa.value[i];
        }
    });
}

inline Tensor scale(const Tensor& x, double c) {
    return detail::unary(x, [c](double v) { return c * v; }, [c](double, double) { return c; });
}

inline Tensor relu(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return v > 0 ? v : 0.0; }, [](double v, double) { return v > 0 ? 1.0 : 0.0; });
}

inline Tensor leaky_relu(const Tensor& x, double slope = 0.01) {
    return detail::unary(
        x, [slope](double v) { return v > 0 ? v : slope * v; },
        [slope](double v, double) { return v > 0 ? 1.0 : slope; });
}

inline Tensor sigmoid(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return detail::sigmoid(v); }, [](double, double y) { return y * (1.0 - y); });
}

inline Tensor tanh(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

inline Tensor exp(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

/// log(1 + e^x), stable for large |x|.
inline Tensor softplus(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return detail::softplus(v); }, [](double v, double) { return detail::sigmoid(v); });
}

/// log(sigmoid(x)) = -softplus(-x).
inline Tensor log_sigmoid(const Tensor& x) {
    return detail::unary(
        x, [](double v) { return -detail::softplus(-v); }, [](double v, double) { return detail::sigmoid(-v); });
}

// ---------------------------------------------------------------------------
// Reductions

inline Tensor sum(const Tensor& x) {
    double s = 0;
    for (double v : x.value().values()) s += v;
    return make_op(NdArray::scalar(s), {x}, [](Node& self) {
        Node& p = *self.parents[0];
        auto& g = p.grad_buffer();
        for (auto& v : g) v += self.grad[0];
    });
}

inline Tensor mean(const Tensor& x) {
    if (x.size() == 0) throw InputError("mean: empty tensor");
    double s = 0;
    for (double v : x.value().values()) s += v;
    const double n = static_cast<double>(x.size());
    return make_op(NdArray::scalar(s / n), {x}, [n](Node& self) {
        Node& p = *self.parents[0];
        auto& g = p.grad_buffer();
        const double d = self.grad[0] / n;
        for (auto& v : g) v += d;
    });
}

// ---------------------------------------------------------------------------
// Shape manipulation

inline Tensor reshape(const Tensor& x, Shape shape) {
    NdArray out = x.value().reshaped(std::move(shape));
    return make_op(std::move(out), {x}, [](Node& self) {
        Node& p = *self.parents[0];
        auto& g = p.grad_buffer();
        for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
    });
}

/// [N, ...] -> [N, prod(...)]
inline Tensor flatten(const Tensor& x) {
    if (x.rank() < 1) throw InputError("flatten: scalar input");
    const std::size_t n = x.dim(0);
    return reshape(x, Shape{n, n ? x.size() / n : 0});
}

/// Concatenates 2-D tensors along the feature axis (axis 1).
inline Tensor concat_features(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw InputError("concat_features: no inputs");
    const std::size_t rows = parts[0].dim(0);
    std::size_t cols = 0;
    for (const auto& p : parts) {
        detail::require_rank(p, 2, "concat_features");
        if (p.dim(0) != rows) throw InputError("concat_features: row count mismatch");
        cols += p.dim(1);
    }
    NdArray out(Shape{rows, cols});
    std::vector<std::size_t> offsets;
    std::size_t off = 0;
    for (const auto& p : parts) {
        offsets.push_back(off);
        const std::size_t w = p.dim(1);
        for (std::size_t r = 0; r < rows; ++r)
            std::copy_n(p.value().data() + r * w, w, out.data() + r * cols + off);
        off += w;
    }
    return make_op(std::move(out), parts, [rows, cols, offsets](Node& self) {
        for (std::size_t k = 0; k < self.parents.size(); ++k) {
            Node& p = *self.parents[k];
            if (!p.requires_grad) continue;
            auto& g = p.grad_buffer();
            const std::size_t w = p.value.dim(1);
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < w; ++c) g[r * w + c] += self.grad[r * cols + offsets[k] + c];
        }
    });
}

/// Concatenates tensors along the batch axis (axis 0); trailing dims must agree.
inline Tensor concat_rows(const std::vector<Tensor>& parts) {
    if (parts.empty()) throw InputError("concat_rows: no inputs");
    Shape tail(parts[0].shape().begin() + 1, parts[0].shape().end());
    std::size_t rows = 0;
    for (const auto& p : parts) {
        if (Shape(p.shape().begin() + 1, p.shape().end()) != tail)
            throw InputError("concat_rows: trailing shape mismatch");
        rows += p.dim(0);
    }
    Shape shape{rows};
    shape.insert(shape.end(), tail.begin(), tail.end());
    NdArray out(shape);
    std::size_t off = 0;
    for (const auto& p : parts) {
        std::copy(p.value().values().begin(), p.value().values().end(), out.data() + off);
        off += p.size();
    }
    return make_op(std::move(out), parts, [](Node& self) {
        std::size_t off = 0;
        for (auto& p : self.parents) {
            const std::size_t n = p->value.size();
            if (p->requires_grad) {
                auto& g = p->grad_buffer();
                for (std::size_t i = 0; i < n; ++i) g[i] += self.grad[off + i];
            }
            off += n;
        }
    });
}

/// Rows [begin, end) of a tensor along axis 0.
inline Tensor slice_rows(const Tensor& x, std::size_t begin, std::size_t end) {
    if (x.rank() < 1 || begin > end || end > x.dim(0)) throw InputError("slice_rows: bad range");
    const std::size_t row = x.dim(0) ? x.size() / x.dim(0) : 0;
    Shape shape = x.shape();
    shape[0] = end - begin;
    NdArray out(shape);
    std::copy_n(x.value().data() + begin * row, (end - begin) * row, out.data());
    return make_op(std::move(out), {x}, [begin, row](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[begin * row + i] += self.grad[i];
    });
}

// ---------------------------------------------------------------------------
// Dense algebra

/// [M x K] . [K x N]
inline Tensor matmul(const Tensor& a, const Tensor& b) {
    detail::require_rank(a, 2, "matmul");
    detail::require_rank(b, 2, "matmul");
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    if (b.dim(0) != k) throw InputError("matmul: inner dims " + shape_str(a.shape()) + " . " + shape_str(b.shape()));
    NdArray out(Shape{m, n});
    using namespace detail;
    MutMap(out.data(), m, n).noalias() = ConstMap(a.value().data(), m, k) * ConstMap(b.value().data(), k, n);
    return make_op(std::move(out), {a, b}, [m, k, n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        ConstMap dc(self.grad.data(), m, n);
        if (pa.requires_grad)
            MutMap(pa.grad_buffer().data(), m, k).noalias() += dc * ConstMap(pb.value.data(), k, n).transpose();
        if (pb.requires_grad)
            MutMap(pb.grad_buffer().data(), k, n).noalias() += ConstMap(pa.value.data(), m, k).transpose() * dc;
    });
}

/// x[B x N] + bias[N], broadcast over rows.
inline Tensor add_bias(const Tensor& x, const Tensor& bias) {
    detail::require_rank(x, 2, "add_bias");
    const std::size_t rows = x.dim(0), cols = x.dim(1);
    if (bias.size() != cols) throw InputError("add_bias: bias length mismatch");
    NdArray out(x.shape());
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = x[r * cols + c] + bias[c];
    return make_op(std::move(out), {x, bias}, [rows, cols](Node& self) {
        Node& px = *self.parents[0];
        Node& pb = *self.parents[1];
        if (px.requires_grad) {
            auto& g = px.grad_buffer();
            for (std::size_t i = 0; i < g.size(); ++i) g[i] += self.grad[i];
        }
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t c = 0; c < cols; ++c) g[c] += self.grad[r * cols + c];
        }
    });
}

// ---------------------------------------------------------------------------
// Convolutional primitives (NCHW)

struct Conv2dSpec {
    std::size_t stride = 1;
    std::size_t padding = 0;
};

/// x[N,C,H,W] * w[O,C,K,K] + b[O] with zero padding.
inline Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, Conv2dSpec spec = {}) {
    detail::require_rank(x, 4, "conv2d");
    detail::require_rank(w, 4, "conv2d");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t O = w.dim(0), K = w.dim(2);
    if (w.dim(1) != C || w.dim(3) != K) throw InputError("conv2d: weight shape " + shape_str(w.shape()));
    if (b.size() != O) throw InputError("conv2d: bias length mismatch");
    if (spec.stride < 1 || spec.stride > 2) throw InputError("conv2d: stride must be 1 or 2");
    if (H + 2 * spec.padding < K || W + 2 * spec.padding < K) throw InputError("conv2d: kernel larger than input");
    const std::size_t Ho = (H + 2 * spec.padding - K) / spec.stride + 1;
    const std::size_t Wo = (W + 2 * spec.padding - K) / spec.stride + 1;
    const std::size_t CKK = C * K * K, HW = Ho * Wo, cols = N * HW;

    // im2col: [CKK, N*HW]; entry -1 marks padding in the index map.
    auto index = std::make_shared<std::vector<std::ptrdiff_t>>(CKK * cols);
    auto col = std::make_shared<std::vector<double>>(CKK * cols, 0.0);
    const double* xv = x.value().data();
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t ky = 0; ky < K; ++ky)
            for (std::size_t kx = 0; kx < K; ++kx) {
                const std::size_t row = (c * K + ky) * K + kx;
                for (std::size_t n = 0; n < N; ++n)
                    for (std::size_t oy = 0; oy < Ho; ++oy) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * spec.stride + ky) -
                                                  static_cast<std::ptrdiff_t>(spec.padding);
                        for (std::size_t ox = 0; ox < Wo; ++ox) {
                            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * spec.stride + kx) -
                                                      static_cast<std::ptrdiff_t>(spec.padding);
                            const std::size_t at = row * cols + n * HW + oy * Wo + ox;
                            if (iy < 0 || ix < 0 || iy >= static_cast<std::ptrdiff_t>(H) ||
                                ix >= static_cast<std::ptrdiff_t>(W)) {
                                (*index)[at] = -1;
                            } else {
                                const std::size_t src = ((n * C + c) * H + iy) * W + ix;
                                (*index)[at] = static_cast<std::ptrdiff_t>(src);
                                (*col)[at] = xv[src];
                            }
                        }
                    }
            }

    using namespace detail;
    RowMat y = ConstMap(w.value().data(), O, CKK) * ConstMap(col->data(), CKK, cols);
    NdArray out(Shape{N, O, Ho, Wo});
    for (std::size_t n = 0; n < N; ++n)
        for (std::size_t o = 0; o < O; ++o) {
            const double bias = b[o];
            double* dst = out.data() + (n * O + o) * HW;
            const double* src = y.data() + o * cols + n * HW;
            for (std::size_t i = 0; i < HW; ++i) dst[i] = src[i] + bias;
        }

    return make_op(std::move(out), {x, w, b}, [=](Node& self) {
        Node& px = *self.parents[0];
        Node& pw = *self.parents[1];
        Node& pb = *self.parents[2];
        RowMat dy(O, cols);
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t o = 0; o < O; ++o)
                std::copy_n(self.grad.data() + (n * O + o) * HW, HW, dy.data() + o * cols + n * HW);
        if (pb.requires_grad) {
            auto& g = pb.grad_buffer();
            for (std::size_t o = 0; o < O; ++o) g[o] += dy.row(static_cast<Eigen::Index>(o)).sum();
        }
        if (pw.requires_grad)
            MutMap(pw.grad_buffer().data(), O, CKK).noalias() += dy * ConstMap(col->data(), CKK, cols).transpose();
        if (px.requires_grad) {
            RowMat dcol = ConstMap(pw.value.data(), O, CKK).transpose() * dy;
            auto& g = px.grad_buffer();
            for (std::size_t i = 0; i < CKK * cols; ++i) {
                const auto src = (*index)[i];
                if (src >= 0) g[static_cast<std::size_t>(src)] += dcol.data()[i];
            }
        }
    });
}

/// 2x2 max pooling with stride 2; odd trailing rows/cols are dropped.
inline Tensor max_pool2x2(const Tensor& x) {
    detail::require_rank(x, 4, "max_pool2x2");
    const std::size_t N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t Ho = H / 2, Wo = W / 2;
    if (Ho == 0 || Wo == 0) throw InputError("max_pool2x2: input smaller than 2x2");
    NdArray out(Shape{N, C, Ho, Wo});
    auto argmax = std::make_shared<std::vector<std::size_t>>(out.size());
    const double* xv = x.value().data();
    for (std::size_t nc = 0; nc < N * C; ++nc)
        for (std::size_t oy = 0; oy < Ho; ++oy)
            for (std::size_t ox = 0; ox < Wo; ++ox) {
                std::size_t best = nc * H * W + (2 * oy) * W + 2 * ox;
                for (std::size_t dy = 0; dy < 2; ++dy)
                    for (std::size_t dx = 0; dx < 2; ++dx) {
                        const std::size_t at = nc * H * W + (2 * oy + dy) * W + 2 * ox + dx;
                        if (xv[at] > xv[best]) best = at;
                    }
                const std::size_t o = (nc * Ho + oy) * Wo + ox;
                out[o] = xv[best];
                (*argmax)[o] = best;
            }
    return make_op(std::move(out), {x}, [argmax](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t i = 0; i < self.grad.size(); ++i) g[(*argmax)[i]] += self.grad[i];
    });
}

/// [N,C,H,W] -> [N,C]
inline Tensor global_avg_pool(const Tensor& x) {
    detail::require_rank(x, 4, "global_avg_pool");
    const std::size_t N = x.dim(0), C = x.dim(1), HW = x.dim(2) * x.dim(3);
    NdArray out(Shape{N, C});
    for (std::size_t nc = 0; nc < N * C; ++nc) {
        double s = 0;
        for (std::size_t i = 0; i < HW; ++i) s += x[nc * HW + i];
        out[nc] = s / static_cast<double>(HW);
    }
    return make_op(std::move(out), {x}, [HW](Node& self) {
        auto& g = self.parents[0]->grad_buffer();
        for (std::size_t nc = 0; nc < self.grad.size(); ++nc) {
            const double d = self.grad[nc] / static_cast<double>(HW);
            for (std::size_t i = 0; i < HW; ++i) g[nc * HW + i] += d;
        }
    });
}

// ---------------------------------------------------------------------------

/// mean((a - b)^2) over all elements.
inline Tensor mse(const Tensor& a, const Tensor& b) {
    detail::require_same_shape(a, b, "mse");
    if (a.size() == 0) throw InputError("mse: empty tensors");
    const double n = static_cast<double>(a.size());
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return make_op(NdArray::scalar(s / n), {a, b}, [n](Node& self) {
        Node& pa = *self.parents[0];
        Node& pb = *self.parents[1];
        const double k = 2.0 * self.grad[0] / n;
        for (std::size_t i = 0; i < pa.value.size(); ++i) {
            const double d = k * (pa.value[i] - pb.value[i]);
            if (pa.requires_grad) pa.grad_buffer()[i] += d;
            if (pb.requires_grad) pb.grad_buffer()[i] -= d;
        }
    });
}

inline bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

} // namespace tavaal::ad
