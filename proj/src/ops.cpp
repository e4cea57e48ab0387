#include "causalfew/ops.hpp"

#include <algorithm>
#include <cmath>

#include "causalfew/parallel.hpp"

namespace causalfew {
namespace ops {

namespace {

bool any_requires_grad(const std::vector<TensorPtr>& parents) {
    for (const auto& p : parents) {
        if (p->requires_grad) return true;
    }
    return false;
}

// Wires a freshly computed output into the tape. The backward closure is kept
// only when some ancestor actually needs a gradient; eval graphs carry no
// closures and free their activations as soon as results go out of scope.
TensorPtr make_node(std::vector<std::int64_t> shape, std::vector<double> values,
                    std::vector<TensorPtr> parents, std::function<void(Tensor&)> bw,
                    const char* op_name) {
    check_finite(values, op_name);
    auto out = Tensor::from_data(std::move(shape), std::move(values));
    if (grad_enabled() && any_requires_grad(parents)) {
        out->requires_grad = true;
        out->parents = std::move(parents);
        out->backward_fn = std::move(bw);
    }
    return out;
}

void require(bool cond, const std::string& msg) {
    if (!cond) throw std::invalid_argument(msg);
}

enum class Broadcast { Elementwise, ScalarB, ChannelB };

Broadcast classify(const Tensor& a, const Tensor& b, const char* op) {
    if (a.shape == b.shape) return Broadcast::Elementwise;
    if (b.numel() == 1) return Broadcast::ScalarB;
    if (b.rank() == 1 && (a.rank() == 3 || a.rank() == 4)) {
        const std::int64_t channels = a.rank() == 3 ? a.dim(0) : a.dim(1);
        if (b.dim(0) == channels) return Broadcast::ChannelB;
    }
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                                shape_to_string(a.shape) + " vs " + shape_to_string(b.shape));
}

}  // namespace

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    const Broadcast mode = classify(*a, *b, "add");
    require(mode != Broadcast::ChannelB, "add: channel broadcast not supported");
    std::vector<double> out(a->data);
    if (mode == Broadcast::Elementwise) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b->data[i];
    } else {
        for (double& v : out) v += b->data[0];
    }
    auto bw = [a, b, mode](Tensor& self) {
        if (a->requires_grad) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
        }
        if (b->requires_grad) {
            if (mode == Broadcast::Elementwise) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] += self.grad[i];
            } else {
                double s = 0.0;
                for (const double g : self.grad) s += g;
                b->grad[0] += s;
            }
        }
    };
    return make_node(a->shape, std::move(out), {a, b}, std::move(bw), "add");
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    const Broadcast mode = classify(*a, *b, "sub");
    require(mode != Broadcast::ChannelB, "sub: channel broadcast not supported");
    std::vector<double> out(a->data);
    if (mode == Broadcast::Elementwise) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b->data[i];
    } else {
        for (double& v : out) v -= b->data[0];
    }
    auto bw = [a, b, mode](Tensor& self) {
        if (a->requires_grad) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
        }
        if (b->requires_grad) {
            if (mode == Broadcast::Elementwise) {
                for (std::size_t i = 0; i < self.grad.size(); ++i) b->grad[i] -= self.grad[i];
            } else {
                double s = 0.0;
                for (const double g : self.grad) s += g;
                b->grad[0] -= s;
            }
        }
    };
    return make_node(a->shape, std::move(out), {a, b}, std::move(bw), "sub");
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    const Broadcast mode = classify(*a, *b, "mul");
    std::vector<double> out(a->data.size());
    const std::int64_t channels = b->numel();
    const std::int64_t spatial =
        mode == Broadcast::ChannelB ? a->numel() / (a->rank() == 4 ? a->dim(0) : 1) / channels : 0;
    switch (mode) {
        case Broadcast::Elementwise:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
            break;
        case Broadcast::ScalarB:
            for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[0];
            break;
        case Broadcast::ChannelB:
            for (std::int64_t i = 0; i < a->numel(); ++i) {
                const std::int64_t c = (i / spatial) % channels;
                out[static_cast<std::size_t>(i)] =
                    a->data[static_cast<std::size_t>(i)] * b->data[static_cast<std::size_t>(c)];
            }
            break;
    }
    auto bw = [a, b, mode, channels, spatial](Tensor& self) {
        switch (mode) {
            case Broadcast::Elementwise:
                if (a->requires_grad)
                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                        a->grad[i] += self.grad[i] * b->data[i];
                if (b->requires_grad)
                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                        b->grad[i] += self.grad[i] * a->data[i];
                break;
            case Broadcast::ScalarB:
                if (a->requires_grad)
                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                        a->grad[i] += self.grad[i] * b->data[0];
                if (b->requires_grad) {
                    double s = 0.0;
                    for (std::size_t i = 0; i < self.grad.size(); ++i)
                        s += self.grad[i] * a->data[i];
                    b->grad[0] += s;
                }
                break;
            case Broadcast::ChannelB:
                for (std::int64_t i = 0; i < static_cast<std::int64_t>(self.grad.size()); ++i) {
                    const std::int64_t c = (i / spatial) % channels;
                    const auto iu = static_cast<std::size_t>(i);
                    const auto cu = static_cast<std::size_t>(c);
                    if (a->requires_grad) a->grad[iu] += self.grad[iu] * b->data[cu];
                    if (b->requires_grad) b->grad[cu] += self.grad[iu] * a->data[iu];
                }
                break;
        }
    };
    return make_node(a->shape, std::move(out), {a, b}, std::move(bw), "mul");
}

TensorPtr div(const TensorPtr& a, const TensorPtr& b) {
    const Broadcast mode = classify(*a, *b, "div");
    require(mode != Broadcast::ChannelB, "div: channel broadcast not supported");
    std::vector<double> out(a->data.size());
    if (mode == Broadcast::Elementwise) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] / b->data[i];
    } else {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] / b->data[0];
    }
    auto bw = [a, b, mode](Tensor& self) {
        if (mode == Broadcast::Elementwise) {
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (a->requires_grad) a->grad[i] += self.grad[i] / b->data[i];
                if (b->requires_grad)
                    b->grad[i] -= self.grad[i] * a->data[i] / (b->data[i] * b->data[i]);
            }
        } else {
            const double inv = 1.0 / b->data[0];
            double s = 0.0;
            for (std::size_t i = 0; i < self.grad.size(); ++i) {
                if (a->requires_grad) a->grad[i] += self.grad[i] * inv;
                s += self.grad[i] * a->data[i];
            }
            if (b->requires_grad) b->grad[0] -= s * inv * inv;
        }
    };
    return make_node(a->shape, std::move(out), {a, b}, std::move(bw), "div");
}

TensorPtr neg(const TensorPtr& a) { return scale(a, -1.0); }

TensorPtr scale(const TensorPtr& a, double c) {
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * c;
    auto bw = [a, c](Tensor& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i] * c;
    };
    return make_node(a->shape, std::move(out), {a}, std::move(bw), "scale");
}

TensorPtr add_const(const TensorPtr& a, double c) {
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + c;
    auto bw = [a](Tensor& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) a->grad[i] += self.grad[i];
    };
    return make_node(a->shape, std::move(out), {a}, std::move(bw), "add_const");
}

TensorPtr pow_scalar(const TensorPtr& a, double p) {
    const bool integral = std::floor(p) == p;
    if (!integral) {
        for (const double v : a->data) {
            if (v < 0.0) {
                throw std::domain_error("pow_scalar: negative base with fractional exponent");
            }
        }
    }
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::pow(a->data[i], p);
    auto bw = [a, p](Tensor& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            a->grad[i] += self.grad[i] * p * std::pow(a->data[i], p - 1.0);
        }
    };
    return make_node(a->shape, std::move(out), {a}, std::move(bw), "pow_scalar");
}

TensorPtr relu(const TensorPtr& a) {
    std::vector<double> out(a->data.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] > 0.0 ? a->data[i] : 0.0;
    auto bw = [a](Tensor& self) {
        if (!a->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            if (a->data[i] > 0.0) a->grad[i] += self.grad[i];
        }
    };
    return make_node(a->shape, std::move(out), {a}, std::move(bw), "relu");
}

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias,
                 int stride, int padding) {
    require(x->rank() == 4, "conv2d: input must be [B,C,H,W], got " + x->shape_str());
    require(w->rank() == 4, "conv2d: weight must be [Cout,Cin,kh,kw], got " + w->shape_str());
    require(stride >= 1 && padding >= 0, "conv2d: bad stride/padding");
    const std::int64_t B = x->dim(0), Cin = x->dim(1), H = x->dim(2), W = x->dim(3);
    const std::int64_t Cout = w->dim(0), kh = w->dim(2), kw = w->dim(3);
    require(w->dim(1) == Cin, "conv2d: channel mismatch " + x->shape_str() + " vs " + w->shape_str());
    require(kh <= H + 2 * padding && kw <= W + 2 * padding,
            "conv2d: kernel does not fit within padded input");
    if (bias) require(bias->rank() == 1 && bias->dim(0) == Cout, "conv2d: bad bias shape");
    const std::int64_t Ho = (H + 2 * padding - kh) / stride + 1;
    const std::int64_t Wo = (W + 2 * padding - kw) / stride + 1;

    std::vector<double> out(static_cast<std::size_t>(B * Cout * Ho * Wo), 0.0);
    const double* xd = x->data.data();
    const double* wd = w->data.data();
    double* yd = out.data();
    // valid kernel-row/col ranges are hoisted so the inner loops stay branch-free
    parallel_for(0, B, [&](std::int64_t b) {
        for (std::int64_t oc = 0; oc < Cout; ++oc) {
            const double bias_v = bias ? bias->data[static_cast<std::size_t>(oc)] : 0.0;
            for (std::int64_t oh = 0; oh < Ho; ++oh) {
                const std::int64_t ih0 = oh * stride - padding;
                const std::int64_t r_lo = std::max<std::int64_t>(0, -ih0);
                const std::int64_t r_hi = std::min<std::int64_t>(kh, H - ih0);
                for (std::int64_t ow = 0; ow < Wo; ++ow) {
                    const std::int64_t iw0 = ow * stride - padding;
                    const std::int64_t c_lo = std::max<std::int64_t>(0, -iw0);
                    const std::int64_t c_hi = std::min<std::int64_t>(kw, W - iw0);
                    double acc = bias_v;
                    for (std::int64_t ic = 0; ic < Cin; ++ic) {
                        const double* xp = xd + ((b * Cin + ic) * H) * W;
                        const double* wp = wd + ((oc * Cin + ic) * kh) * kw;
                        for (std::int64_t r = r_lo; r < r_hi; ++r) {
                            const double* xrow = xp + (ih0 + r) * W + iw0;
                            const double* wrow = wp + r * kw;
                            for (std::int64_t c = c_lo; c < c_hi; ++c) {
                                acc += xrow[c] * wrow[c];
                            }
                        }
                    }
                    yd[((b * Cout + oc) * Ho + oh) * Wo + ow] = acc;
                }
            }
        }
    });

    std::vector<TensorPtr> parents = {x, w};
    if (bias) parents.push_back(bias);
    auto bw = [x, w, bias, stride, padding, B, Cin, H, W, Cout, kh, kw, Ho, Wo](Tensor& self) {
        const double* g = self.grad.data();
        if (x->requires_grad) {
            double* dx = x->grad.data();
            const double* wd = w->data.data();
            parallel_for(0, B, [&](std::int64_t b) {
                for (std::int64_t oc = 0; oc < Cout; ++oc) {
                    for (std::int64_t oh = 0; oh < Ho; ++oh) {
                        const std::int64_t ih0 = oh * stride - padding;
                        const std::int64_t r_lo = std::max<std::int64_t>(0, -ih0);
                        const std::int64_t r_hi = std::min<std::int64_t>(kh, H - ih0);
                        for (std::int64_t ow = 0; ow < Wo; ++ow) {
                            const double gv = g[((b * Cout + oc) * Ho + oh) * Wo + ow];
                            if (gv == 0.0) continue;
                            const std::int64_t iw0 = ow * stride - padding;
                            const std::int64_t c_lo = std::max<std::int64_t>(0, -iw0);
                            const std::int64_t c_hi = std::min<std::int64_t>(kw, W - iw0);
                            for (std::int64_t ic = 0; ic < Cin; ++ic) {
                                double* dxp = dx + ((b * Cin + ic) * H) * W;
                                const double* wp = wd + ((oc * Cin + ic) * kh) * kw;
                                for (std::int64_t r = r_lo; r < r_hi; ++r) {
                                    double* dxrow = dxp + (ih0 + r) * W + iw0;
                                    const double* wrow = wp + r * kw;
                                    for (std::int64_t c = c_lo; c < c_hi; ++c) {
                                        dxrow[c] += gv * wrow[c];
                                    }
                                }
                            }
                        }
                    }
                }
            });
        }
        if (w->requires_grad) {
            double* dw = w->grad.data();
            const double* xd = x->data.data();
            parallel_for(0, Cout, [&](std::int64_t oc) {
                for (std::int64_t b = 0; b < B; ++b) {
                    for (std::int64_t oh = 0; oh < Ho; ++oh) {
                        const std::int64_t ih0 = oh * stride - padding;
                        const std::int64_t r_lo = std::max<std::int64_t>(0, -ih0);
                        const std::int64_t r_hi = std::min<std::int64_t>(kh, H - ih0);
                        for (std::int64_t ow = 0; ow < Wo; ++ow) {
                            const double gv = g[((b * Cout + oc) * Ho + oh) * Wo + ow];
                            if (gv == 0.0) continue;
                            const std::int64_t iw0 = ow * stride - padding;
                            const std::int64_t c_lo = std::max<std::int64_t>(0, -iw0);
                            const std::int64_t c_hi = std::min<std::int64_t>(kw, W - iw0);
                            for (std::int64_t ic = 0; ic < Cin; ++ic) {
                                const double* xp = xd + ((b * Cin + ic) * H) * W;
                                double* dwp = dw + ((oc * Cin + ic) * kh) * kw;
                                for (std::int64_t r = r_lo; r < r_hi; ++r) {
                                    const double* xrow = xp + (ih0 + r) * W + iw0;
                                    double* wrow = dwp + r * kw;
                                    for (std::int64_t c = c_lo; c < c_hi; ++c) {
                                        wrow[c] += gv * xrow[c];
                                    }
                                }
                            }
                        }
                    }
                }
            });
        }
        if (bias && bias->requires_grad) {
            for (std::int64_t oc = 0; oc < Cout; ++oc) {
                double s = 0.0;
                for (std::int64_t b = 0; b < B; ++b) {
                    const double* gp = g + ((b * Cout + oc) * Ho) * Wo;
                    for (std::int64_t i = 0; i < Ho * Wo; ++i) s += gp[i];
                }
                bias->grad[static_cast<std::size_t>(oc)] += s;
            }
        }
    };
    return make_node({B, Cout, Ho, Wo}, std::move(out), std::move(parents), std::move(bw),
                     "conv2d");
}

TensorPtr maxpool2d(const TensorPtr& x, int kernel, int stride) {
    require(x->rank() == 4, "maxpool2d: input must be [B,C,H,W], got " + x->shape_str());
    require(kernel >= 1 && stride >= 1, "maxpool2d: bad kernel/stride");
    const std::int64_t B = x->dim(0), C = x->dim(1), H = x->dim(2), W = x->dim(3);
    require(kernel <= H && kernel <= W, "maxpool2d: kernel larger than input");
    const std::int64_t Ho = (H - kernel) / stride + 1;
    const std::int64_t Wo = (W - kernel) / stride + 1;
    std::vector<double> out(static_cast<std::size_t>(B * C * Ho * Wo));
    auto argmax = std::make_shared<std::vector<std::int64_t>>(out.size());
    const double* xd = x->data.data();
    for (std::int64_t bc = 0; bc < B * C; ++bc) {
        const double* xp = xd + bc * H * W;
        for (std::int64_t oh = 0; oh < Ho; ++oh) {
            for (std::int64_t ow = 0; ow < Wo; ++ow) {
                double best = -1e308;
                std::int64_t best_idx = -1;
                for (std::int64_t r = 0; r < kernel; ++r) {
                    for (std::int64_t c = 0; c < kernel; ++c) {
                        const std::int64_t idx = (oh * stride + r) * W + (ow * stride + c);
                        if (xp[idx] > best) {  // strict: first index wins ties
                            best = xp[idx];
                            best_idx = idx;
                        }
                    }
                }
                const std::int64_t o = (bc * Ho + oh) * Wo + ow;
                out[static_cast<std::size_t>(o)] = best;
                (*argmax)[static_cast<std::size_t>(o)] = bc * H * W + best_idx;
            }
        }
    }
    auto bw = [x, argmax](Tensor& self) {
        if (!x->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
            x->grad[static_cast<std::size_t>((*argmax)[i])] += self.grad[i];
        }
    };
    return make_node({B, C, Ho, Wo}, std::move(out), {x}, std::move(bw), "maxpool2d");
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& bias) {
    require(x->rank() == 2 && w->rank() == 2, "linear: expected [B,F] x [F,O]");
    const std::int64_t B = x->dim(0), F = x->dim(1), O = w->dim(1);
    require(w->dim(0) == F, "linear: inner dimension mismatch");
    if (bias) require(bias->rank() == 1 && bias->dim(0) == O, "linear: bad bias shape");
    std::vector<double> out(static_cast<std::size_t>(B * O), 0.0);
    for (std::int64_t b = 0; b < B; ++b) {
        for (std::int64_t o = 0; o < O; ++o) {
            double acc = bias ? bias->data[static_cast<std::size_t>(o)] : 0.0;
            for (std::int64_t f = 0; f < F; ++f) {
                acc += x->data[static_cast<std::size_t>(b * F + f)] *
                       w->data[static_cast<std::size_t>(f * O + o)];
            }
            out[static_cast<std::size_t>(b * O + o)] = acc;
        }
    }
    std::vector<TensorPtr> parents = {x, w};
    if (bias) parents.push_back(bias);
    auto bw = [x, w, bias, B, F, O](Tensor& self) {
        const double* g = self.grad.data();
        if (x->requires_grad) {
            for (std::int64_t b = 0; b < B; ++b)
                for (std::int64_t f = 0; f < F; ++f) {
                    double acc = 0.0;
                    for (std::int64_t o = 0; o < O; ++o)
                        acc += g[b * O + o] * w->data[static_cast<std::size_t>(f * O + o)];
                    x->grad[static_cast<std::size_t>(b * F + f)] += acc;
                }
        }
        if (w->requires_grad) {
            for (std::int64_t f = 0; f < F; ++f)
                for (std::int64_t o = 0; o < O; ++o) {
                    double acc = 0.0;
                    for (std::int64_t b = 0; b < B; ++b)
                        acc += x->data[static_cast<std::size_t>(b * F + f)] * g[b * O + o];
                    w->grad[static_cast<std::size_t>(f * O + o)] += acc;
                }
        }
        if (bias && bias->requires_grad) {
            for (std::int64_t o = 0; o < O; ++o) {
                double acc = 0.0;
                for (std::int64_t b = 0; b < B; ++b) acc += g[b * O + o];
                bias->grad[static_cast<std::size_t>(o)] += acc;
            }
        }
    };
    return make_node({B, O}, std::move(out), std::move(parents), std::move(bw), "linear");
}

namespace {
std::int64_t channel_axis(const Tensor& t, const char* op) {
    if (t.rank() == 3) return 0;
    if (t.rank() == 4) return 1;
    throw std::invalid_argument(std::string(op) + ": expected rank 3 or 4, got " + t.shape_str());
}
}  // namespace

TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b) {
    const std::int64_t axis = channel_axis(*a, "concat_channels");
    require(a->rank() == b->rank(), "concat_channels: rank mismatch");
    for (std::size_t i = 0; i < a->rank(); ++i) {
        if (static_cast<std::int64_t>(i) == axis) continue;
        require(a->shape[i] == b->shape[i], "concat_channels: shape mismatch " + a->shape_str() +
                                                " vs " + b->shape_str());
    }
    const std::int64_t Ca = a->shape[static_cast<std::size_t>(axis)];
    const std::int64_t Cb = b->shape[static_cast<std::size_t>(axis)];
    const std::int64_t batch = axis == 1 ? a->dim(0) : 1;
    const std::int64_t inner = a->numel() / (batch * Ca);
    std::vector<std::int64_t> out_shape = a->shape;
    out_shape[static_cast<std::size_t>(axis)] = Ca + Cb;
    std::vector<double> out(static_cast<std::size_t>(batch * (Ca + Cb) * inner));
    for (std::int64_t g = 0; g < batch; ++g) {
        std::copy_n(a->data.begin() + g * Ca * inner, Ca * inner,
                    out.begin() + g * (Ca + Cb) * inner);
        std::copy_n(b->data.begin() + g * Cb * inner, Cb * inner,
                    out.begin() + g * (Ca + Cb) * inner + Ca * inner);
    }
    auto bw = [a, b, batch, Ca, Cb, inner](Tensor& self) {
        for (std::int64_t g = 0; g < batch; ++g) {
            const double* gp = self.grad.data() + g * (Ca + Cb) * inner;
            if (a->requires_grad) {
                double* da = a->grad.data() + g * Ca * inner;
                for (std::int64_t i = 0; i < Ca * inner; ++i) da[i] += gp[i];
            }
            if (b->requires_grad) {
                double* db = b->grad.data() + g * Cb * inner;
                for (std::int64_t i = 0; i < Cb * inner; ++i) db[i] += gp[Ca * inner + i];
            }
        }
    };
    return make_node(std::move(out_shape), std::move(out), {a, b}, std::move(bw),
                     "concat_channels");
}

TensorPtr slice_channels(const TensorPtr& x, std::int64_t from, std::int64_t to) {
    const std::int64_t axis = channel_axis(*x, "slice_channels");
    const std::int64_t C = x->shape[static_cast<std::size_t>(axis)];
    require(0 <= from && from < to && to <= C, "slice_channels: bad range");
    const std::int64_t batch = axis == 1 ? x->dim(0) : 1;
    const std::int64_t inner = x->numel() / (batch * C);
    const std::int64_t Cs = to - from;
    std::vector<std::int64_t> out_shape = x->shape;
    out_shape[static_cast<std::size_t>(axis)] = Cs;
    std::vector<double> out(static_cast<std::size_t>(batch * Cs * inner));
    for (std::int64_t g = 0; g < batch; ++g) {
        std::copy_n(x->data.begin() + (g * C + from) * inner, Cs * inner,
                    out.begin() + g * Cs * inner);
    }
    auto bw = [x, batch, C, Cs, from, inner](Tensor& self) {
        if (!x->requires_grad) return;
        for (std::int64_t g = 0; g < batch; ++g) {
            const double* gp = self.grad.data() + g * Cs * inner;
            double* dx = x->grad.data() + (g * C + from) * inner;
            for (std::int64_t i = 0; i < Cs * inner; ++i) dx[i] += gp[i];
        }
    };
    return make_node(std::move(out_shape), std::move(out), {x}, std::move(bw), "slice_channels");
}

TensorPtr slice_batch(const TensorPtr& x, std::int64_t index) {
    require(x->rank() >= 1, "slice_batch: rank must be >= 1");
    const std::int64_t B = x->dim(0);
    require(0 <= index && index < B, "slice_batch: index out of range");
    const std::int64_t inner = x->numel() / B;
    std::vector<std::int64_t> out_shape(x->shape.begin() + 1, x->shape.end());
    if (out_shape.empty()) out_shape = {1};  // rank-1 input slices to a scalar
    std::vector<double> out(x->data.begin() + index * inner,
                            x->data.begin() + (index + 1) * inner);
    auto bw = [x, index, inner](Tensor& self) {
        if (!x->requires_grad) return;
        double* dx = x->grad.data() + index * inner;
        for (std::int64_t i = 0; i < inner; ++i) dx[i] += self.grad[static_cast<std::size_t>(i)];
    };
    return make_node(std::move(out_shape), std::move(out), {x}, std::move(bw), "slice_batch");
}

TensorPtr sum(const TensorPtr& x) {
    double s = 0.0;
    for (const double v : x->data) s += v;
    auto bw = [x](Tensor& self) {
        if (!x->requires_grad) return;
        const double g = self.grad[0];
        for (double& d : x->grad) d += g;
    };
    return make_node({1}, {s}, {x}, std::move(bw), "sum");
}

TensorPtr mean(const TensorPtr& x) {
    double s = 0.0;
    for (const double v : x->data) s += v;
    const double inv = 1.0 / static_cast<double>(x->numel());
    auto bw = [x, inv](Tensor& self) {
        if (!x->requires_grad) return;
        const double g = self.grad[0] * inv;
        for (double& d : x->grad) d += g;
    };
    return make_node({1}, {s * inv}, {x}, std::move(bw), "mean");
}

TensorPtr max_reduce(const TensorPtr& x) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < x->data.size(); ++i) {
        if (x->data[i] > x->data[best]) best = i;  // strict: first index wins ties
    }
    auto bw = [x, best](Tensor& self) {
        if (!x->requires_grad) return;
        x->grad[best] += self.grad[0];
    };
    return make_node({1}, {x->data[best]}, {x}, std::move(bw), "max_reduce");
}

TensorPtr stack_scalars(const std::vector<TensorPtr>& items) {
    require(!items.empty(), "stack_scalars: empty input");
    std::vector<double> out;
    out.reserve(items.size());
    for (const auto& t : items) {
        require(t->numel() == 1, "stack_scalars: all items must be scalars");
        out.push_back(t->data[0]);
    }
    auto parents = items;
    auto bw = [parents](Tensor& self) {
        for (std::size_t i = 0; i < parents.size(); ++i) {
            if (parents[i]->requires_grad) parents[i]->grad[0] += self.grad[i];
        }
    };
    return make_node({static_cast<std::int64_t>(items.size())}, std::move(out), items,
                     std::move(bw), "stack_scalars");
}

}  // namespace ops
}  // namespace causalfew
