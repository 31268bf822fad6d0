#include "okpose/nn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace okpose::nn {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a, const Tensor& b) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape) +
                                " vs " + shape_str(b.shape));
}

bool track(std::initializer_list<const TensorPtr*> inputs) {
    if (!grad_enabled()) return false;
    for (const auto* p : inputs) {
        if (*p && ((*p)->requires_grad || (*p)->backward_fn)) return true;
    }
    return false;
}

TensorPtr make_out(std::vector<int> shape, std::vector<float> data, const char* op) {
    auto t = std::make_shared<Tensor>(std::move(shape), std::move(data));
    t->op = op;
    ensure_finite(*t, op);
    return t;
}

double hi_value(const Tensor& t) {
    return t.has_scalar_hi ? t.scalar_hi : static_cast<double>(t.data[0]);
}

// Keeps the double-precision readout alive through scalar arithmetic, so
// composite losses (sums of several reduction terms) stay usable as
// finite-difference references.
void set_hi(Tensor& t, double v) {
    if (t.numel() == 1) {
        t.scalar_hi = v;
        t.has_scalar_hi = true;
    }
}

// ---- dense kernels ------------------------------------------------------
// All three accumulate into C; callers zero or pre-fill C.

// C[M,N] += A[M,K] * B[K,N]
void matmul_nn(const float* __restrict a, const float* __restrict b, float* __restrict c,
               int m, int k, int n) {
    for (int i = 0; i < m; ++i) {
        const float* arow = a + static_cast<size_t>(i) * k;
        float* crow = c + static_cast<size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const float av = arow[p];
            if (av == 0.0f) continue;
            const float* brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

// C[M,N] += A[K,M]^T * B[K,N]
void matmul_tn(const float* __restrict a, const float* __restrict b, float* __restrict c,
               int m, int k, int n) {
    for (int p = 0; p < k; ++p) {
        const float* arow = a + static_cast<size_t>(p) * m;
        const float* brow = b + static_cast<size_t>(p) * n;
        for (int i = 0; i < m; ++i) {
            const float av = arow[i];
            if (av == 0.0f) continue;
            float* crow = c + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

void transpose_into(const float* src, int rows, int cols, std::vector<float>& dst) {
    dst.resize(static_cast<size_t>(rows) * cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j)
            dst[static_cast<size_t>(j) * rows + i] = src[static_cast<size_t>(i) * cols + j];
}

// C[M,N] += A[M,K] * B[N,K]^T
void matmul_nt(const float* a, const float* b, float* c, int m, int k, int n) {
    std::vector<float> bt;
    transpose_into(b, n, k, bt);  // -> [K,N]
    matmul_nn(a, bt.data(), c, m, k, n);
}

// im2col for one sample: src [C,H,W] -> cols [C*kh*kw, Ho*Wo]
void im2col(const float* src, int ch, int h, int w, int kh, int kw, int stride, int pad,
            int ho, int wo, float* cols) {
    const int l = ho * wo;
    for (int c = 0; c < ch; ++c) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                float* dst = cols + static_cast<size_t>((c * kh + ky) * kw + kx) * l;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) {
                        std::fill(dst + oy * wo, dst + (oy + 1) * wo, 0.0f);
                        continue;
                    }
                    const float* srow = src + (static_cast<size_t>(c) * h + iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        dst[oy * wo + ox] = (ix >= 0 && ix < w) ? srow[ix] : 0.0f;
                    }
                }
            }
        }
    }
}

// scatter-add inverse of im2col: cols [C*kh*kw, Ho*Wo] -> dst [C,H,W] (+=)
void col2im_acc(const float* cols, int ch, int h, int w, int kh, int kw, int stride, int pad,
                int ho, int wo, float* dst) {
    const int l = ho * wo;
    for (int c = 0; c < ch; ++c) {
        for (int ky = 0; ky < kh; ++ky) {
            for (int kx = 0; kx < kw; ++kx) {
                const float* src = cols + static_cast<size_t>((c * kh + ky) * kw + kx) * l;
                for (int oy = 0; oy < ho; ++oy) {
                    const int iy = oy * stride - pad + ky;
                    if (iy < 0 || iy >= h) continue;
                    float* drow = dst + (static_cast<size_t>(c) * h + iy) * w;
                    for (int ox = 0; ox < wo; ++ox) {
                        const int ix = ox * stride - pad + kx;
                        if (ix >= 0 && ix < w) drow[ix] += src[oy * wo + ox];
                    }
                }
            }
        }
    }
}

void check_nchw(const char* op, const Tensor& x) {
    if (x.rank() != 4) {
        throw std::invalid_argument(std::string(op) + ": expected rank-4 NCHW input, got " +
                                    shape_str(x.shape));
    }
}

float stable_sigmoid(float x) {
    if (x >= 0.0f) {
        return 1.0f / (1.0f + std::exp(-x));
    }
    const float e = std::exp(x);
    return e / (1.0f + e);
}

}  // namespace

// ---- elementwise --------------------------------------------------------

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) shape_error("add", *a, *b);
    std::vector<float> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    auto t = make_out(a->shape, std::move(out), "add");
    if (t->numel() == 1) set_hi(*t, hi_value(*a) + hi_value(*b));
    if (track({&a, &b})) {
        t->requires_grad = true;
        t->parents = {a, b};
        t->backward_fn = [a, b](Tensor& self) {
            a->accumulate_grad(self.grad.data(), self.grad.size());
            b->accumulate_grad(self.grad.data(), self.grad.size());
        };
    }
    return t;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) shape_error("sub", *a, *b);
    std::vector<float> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
    auto t = make_out(a->shape, std::move(out), "sub");
    if (t->numel() == 1) set_hi(*t, hi_value(*a) - hi_value(*b));
    if (track({&a, &b})) {
        t->requires_grad = true;
        t->parents = {a, b};
        t->backward_fn = [a, b](Tensor& self) {
            a->accumulate_grad(self.grad.data(), self.grad.size());
            std::vector<float> neg(self.grad.size());
            for (size_t i = 0; i < neg.size(); ++i) neg[i] = -self.grad[i];
            b->accumulate_grad(neg.data(), neg.size());
        };
    }
    return t;
}

TensorPtr hadamard(const TensorPtr& a, const TensorPtr& b) {
    if (a->shape != b->shape) shape_error("hadamard", *a, *b);
    std::vector<float> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    auto t = make_out(a->shape, std::move(out), "hadamard");
    if (t->numel() == 1) set_hi(*t, hi_value(*a) * hi_value(*b));
    if (track({&a, &b})) {
        t->requires_grad = true;
        t->parents = {a, b};
        t->backward_fn = [a, b](Tensor& self) {
            std::vector<float> g(self.grad.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * b->data[i];
            a->accumulate_grad(g.data(), g.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * a->data[i];
            b->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr scale(const TensorPtr& x, float s) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] * s;
    auto t = make_out(x->shape, std::move(out), "scale");
    if (t->numel() == 1) set_hi(*t, hi_value(*x) * s);
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, s](Tensor& self) {
            std::vector<float> g(self.grad.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * s;
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr shift(const TensorPtr& x, float c) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] + c;
    auto t = make_out(x->shape, std::move(out), "shift");
    if (t->numel() == 1) set_hi(*t, hi_value(*x) + c);
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x](Tensor& self) {
            x->accumulate_grad(self.grad.data(), self.grad.size());
        };
    }
    return t;
}

TensorPtr relu(const TensorPtr& x) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] > 0.0f ? x->data[i] : 0.0f;
    auto t = make_out(x->shape, std::move(out), "relu");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x](Tensor& self) {
            std::vector<float> g(self.grad.size());
            for (size_t i = 0; i < g.size(); ++i)
                g[i] = x->data[i] > 0.0f ? self.grad[i] : 0.0f;
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr sigmoid(const TensorPtr& x) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(x->data[i]);
    auto t = make_out(x->shape, std::move(out), "sigmoid");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x](Tensor& self) {
            std::vector<float> g(self.grad.size());
            for (size_t i = 0; i < g.size(); ++i) {
                const float y = self.data[i];
                g[i] = self.grad[i] * y * (1.0f - y);
            }
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr exp_op(const TensorPtr& x) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x->data[i]);
    auto t = make_out(x->shape, std::move(out), "exp");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x](Tensor& self) {
            std::vector<float> g(self.grad.size());
            for (size_t i = 0; i < g.size(); ++i) g[i] = self.grad[i] * self.data[i];
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr softmax(const TensorPtr& x) {
    const int last = x->shape.back();
    const int64_t rows = x->numel() / last;
    std::vector<float> out(x->data.size());
    for (int64_t r = 0; r < rows; ++r) {
        const float* in = x->data.data() + r * last;
        float* o = out.data() + r * last;
        float mx = in[0];
        for (int j = 1; j < last; ++j) mx = std::max(mx, in[j]);
        double denom = 0.0;
        for (int j = 0; j < last; ++j) denom += std::exp(static_cast<double>(in[j] - mx));
        for (int j = 0; j < last; ++j)
            o[j] = static_cast<float>(std::exp(static_cast<double>(in[j] - mx)) / denom);
    }
    auto t = make_out(x->shape, std::move(out), "softmax");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, last, rows](Tensor& self) {
            std::vector<float> g(self.grad.size());
            for (int64_t r = 0; r < rows; ++r) {
                const float* y = self.data.data() + r * last;
                const float* dy = self.grad.data() + r * last;
                double dot = 0.0;
                for (int j = 0; j < last; ++j) dot += static_cast<double>(dy[j]) * y[j];
                for (int j = 0; j < last; ++j)
                    g[r * last + j] = y[j] * (dy[j] - static_cast<float>(dot));
            }
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

// ---- shape ops ----------------------------------------------------------

TensorPtr concat_channels(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() < 2 || a->rank() != b->rank()) shape_error("concat_channels", *a, *b);
    for (int i = 0; i < a->rank(); ++i) {
        if (i != 1 && a->dim(i) != b->dim(i)) shape_error("concat_channels", *a, *b);
    }
    const int ca = a->dim(1), cb = b->dim(1);
    int64_t inner = 1;
    for (int i = 2; i < a->rank(); ++i) inner *= a->dim(i);
    const int n = a->dim(0);
    std::vector<int> oshape = a->shape;
    oshape[1] = ca + cb;
    std::vector<float> out(static_cast<size_t>(shape_numel(oshape)));
    const int64_t sa = ca * inner, sb = cb * inner, so = (ca + cb) * inner;
    for (int i = 0; i < n; ++i) {
        std::memcpy(out.data() + i * so, a->data.data() + i * sa, sa * sizeof(float));
        std::memcpy(out.data() + i * so + sa, b->data.data() + i * sb, sb * sizeof(float));
    }
    auto t = make_out(std::move(oshape), std::move(out), "concat_channels");
    if (track({&a, &b})) {
        t->requires_grad = true;
        t->parents = {a, b};
        t->backward_fn = [a, b, n, sa, sb, so](Tensor& self) {
            std::vector<float> ga(a->data.size()), gb(b->data.size());
            for (int i = 0; i < n; ++i) {
                std::memcpy(ga.data() + i * sa, self.grad.data() + i * so, sa * sizeof(float));
                std::memcpy(gb.data() + i * sb, self.grad.data() + i * so + sa,
                            sb * sizeof(float));
            }
            a->accumulate_grad(ga.data(), ga.size());
            b->accumulate_grad(gb.data(), gb.size());
        };
    }
    return t;
}

TensorPtr slice_channels(const TensorPtr& x, int c0, int c1) {
    if (x->rank() < 2 || c0 < 0 || c1 > x->dim(1) || c0 >= c1) {
        throw std::invalid_argument("slice_channels: invalid range [" + std::to_string(c0) +
                                    "," + std::to_string(c1) + ") for " + shape_str(x->shape));
    }
    int64_t inner = 1;
    for (int i = 2; i < x->rank(); ++i) inner *= x->dim(i);
    const int n = x->dim(0), c = x->dim(1), k = c1 - c0;
    std::vector<int> oshape = x->shape;
    oshape[1] = k;
    std::vector<float> out(static_cast<size_t>(shape_numel(oshape)));
    for (int i = 0; i < n; ++i) {
        std::memcpy(out.data() + static_cast<size_t>(i) * k * inner,
                    x->data.data() + (static_cast<size_t>(i) * c + c0) * inner,
                    static_cast<size_t>(k) * inner * sizeof(float));
    }
    auto t = make_out(std::move(oshape), std::move(out), "slice_channels");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, n, c, c0, k, inner](Tensor& self) {
            std::vector<float> g(x->data.size(), 0.0f);
            for (int i = 0; i < n; ++i) {
                std::memcpy(g.data() + (static_cast<size_t>(i) * c + c0) * inner,
                            self.grad.data() + static_cast<size_t>(i) * k * inner,
                            static_cast<size_t>(k) * inner * sizeof(float));
            }
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> new_shape) {
    if (shape_numel(new_shape) != x->numel()) {
        throw std::invalid_argument("reshape: cannot view " + shape_str(x->shape) + " as " +
                                    shape_str(new_shape));
    }
    auto t = make_out(std::move(new_shape), x->data, "reshape");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x](Tensor& self) {
            x->accumulate_grad(self.grad.data(), self.grad.size());
        };
    }
    return t;
}

// ---- convolution stack --------------------------------------------------

TensorPtr conv2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b, int stride,
                 int pad) {
    check_nchw("conv2d", *x);
    if (w->rank() != 4 || w->dim(1) != x->dim(1)) shape_error("conv2d", *x, *w);
    const int n = x->dim(0), cin = x->dim(1), h = x->dim(2), wd = x->dim(3);
    const int cout = w->dim(0), kh = w->dim(2), kw = w->dim(3);
    if (b->numel() != cout) shape_error("conv2d bias", *w, *b);
    const int ho = (h + 2 * pad - kh) / stride + 1;
    const int wo = (wd + 2 * pad - kw) / stride + 1;
    if (ho < 1 || wo < 1) {
        throw std::invalid_argument("conv2d: kernel " + shape_str(w->shape) +
                                    " does not fit input " + shape_str(x->shape));
    }
    const int k = cin * kh * kw;
    const int l = ho * wo;
    std::vector<float> out(static_cast<size_t>(n) * cout * l);
    std::vector<float> cols(static_cast<size_t>(k) * l);
    for (int i = 0; i < n; ++i) {
        im2col(x->data.data() + static_cast<size_t>(i) * cin * h * wd, cin, h, wd, kh, kw,
               stride, pad, ho, wo, cols.data());
        float* o = out.data() + static_cast<size_t>(i) * cout * l;
        for (int co = 0; co < cout; ++co)
            std::fill(o + static_cast<size_t>(co) * l, o + static_cast<size_t>(co + 1) * l,
                      b->data[co]);
        matmul_nn(w->data.data(), cols.data(), o, cout, k, l);
    }
    auto t = make_out({n, cout, ho, wo}, std::move(out), "conv2d");
    if (track({&x, &w, &b})) {
        t->requires_grad = true;
        t->parents = {x, w, b};
        t->backward_fn = [x, w, b, n, cin, h, wd, cout, kh, kw, stride, pad, ho, wo, k,
                          l](Tensor& self) {
            std::vector<float> dw(w->data.size(), 0.0f);
            std::vector<float> db(b->data.size(), 0.0f);
            std::vector<float> dx(x->data.size(), 0.0f);
            std::vector<float> cols(static_cast<size_t>(k) * l);
            std::vector<float> colst;
            std::vector<float> dcols(static_cast<size_t>(k) * l);
            for (int i = 0; i < n; ++i) {
                const float* go = self.grad.data() + static_cast<size_t>(i) * cout * l;
                for (int co = 0; co < cout; ++co) {
                    double s = 0.0;
                    for (int j = 0; j < l; ++j) s += go[static_cast<size_t>(co) * l + j];
                    db[co] += static_cast<float>(s);
                }
                im2col(x->data.data() + static_cast<size_t>(i) * cin * h * wd, cin, h, wd, kh,
                       kw, stride, pad, ho, wo, cols.data());
                transpose_into(cols.data(), k, l, colst);  // [l, k]
                matmul_nn(go, colst.data(), dw.data(), cout, l, k);
                std::fill(dcols.begin(), dcols.end(), 0.0f);
                matmul_tn(w->data.data(), go, dcols.data(), k, cout, l);
                col2im_acc(dcols.data(), cin, h, wd, kh, kw, stride, pad, ho, wo,
                           dx.data() + static_cast<size_t>(i) * cin * h * wd);
            }
            x->accumulate_grad(dx.data(), dx.size());
            w->accumulate_grad(dw.data(), dw.size());
            b->accumulate_grad(db.data(), db.size());
        };
    }
    return t;
}

TensorPtr conv_transpose2d(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b,
                           int stride, int pad) {
    check_nchw("conv_transpose2d", *x);
    if (w->rank() != 4 || w->dim(0) != x->dim(1)) shape_error("conv_transpose2d", *x, *w);
    const int n = x->dim(0), cin = x->dim(1), h = x->dim(2), wd = x->dim(3);
    const int cout = w->dim(1), kh = w->dim(2), kw = w->dim(3);
    if (b->numel() != cout) shape_error("conv_transpose2d bias", *w, *b);
    const int ho = (h - 1) * stride - 2 * pad + kh;
    const int wo = (wd - 1) * stride - 2 * pad + kw;
    if (ho < 1 || wo < 1) {
        throw std::invalid_argument("conv_transpose2d: degenerate output for input " +
                                    shape_str(x->shape));
    }
    const int k = cout * kh * kw;  // col rows
    const int l = h * wd;          // col cols (input spatial)
    std::vector<float> out(static_cast<size_t>(n) * cout * ho * wo, 0.0f);
    std::vector<float> cols(static_cast<size_t>(k) * l);
    for (int i = 0; i < n; ++i) {
        std::fill(cols.begin(), cols.end(), 0.0f);
        matmul_tn(w->data.data(), x->data.data() + static_cast<size_t>(i) * cin * l,
                  cols.data(), k, cin, l);
        float* o = out.data() + static_cast<size_t>(i) * cout * ho * wo;
        col2im_acc(cols.data(), cout, ho, wo, kh, kw, stride, pad, h, wd, o);
        for (int co = 0; co < cout; ++co) {
            float* orow = o + static_cast<size_t>(co) * ho * wo;
            for (int j = 0; j < ho * wo; ++j) orow[j] += b->data[co];
        }
    }
    auto t = make_out({n, cout, ho, wo}, std::move(out), "conv_transpose2d");
    if (track({&x, &w, &b})) {
        t->requires_grad = true;
        t->parents = {x, w, b};
        t->backward_fn = [x, w, b, n, cin, h, wd, cout, kh, kw, stride, pad, ho, wo, k,
                          l](Tensor& self) {
            std::vector<float> dw(w->data.size(), 0.0f);
            std::vector<float> db(b->data.size(), 0.0f);
            std::vector<float> dx(x->data.size(), 0.0f);
            std::vector<float> dcols(static_cast<size_t>(k) * l);
            std::vector<float> dcolst;
            for (int i = 0; i < n; ++i) {
                const float* go = self.grad.data() + static_cast<size_t>(i) * cout * ho * wo;
                for (int co = 0; co < cout; ++co) {
                    double s = 0.0;
                    for (int j = 0; j < ho * wo; ++j)
                        s += go[static_cast<size_t>(co) * ho * wo + j];
                    db[co] += static_cast<float>(s);
                }
                // dcols = im2col(dOut); dX += W * dcols; dW += x * dcols^T
                im2col(go, cout, ho, wo, kh, kw, stride, pad, h, wd, dcols.data());
                matmul_nn(w->data.data(), dcols.data(),
                          dx.data() + static_cast<size_t>(i) * cin * l, cin, k, l);
                transpose_into(dcols.data(), k, l, dcolst);  // [l, k]
                matmul_nn(x->data.data() + static_cast<size_t>(i) * cin * l, dcolst.data(),
                          dw.data(), cin, l, k);
            }
            x->accumulate_grad(dx.data(), dx.size());
            w->accumulate_grad(dw.data(), dw.size());
            b->accumulate_grad(db.data(), db.size());
        };
    }
    return t;
}

TensorPtr linear(const TensorPtr& x, const TensorPtr& w, const TensorPtr& b) {
    if (x->rank() != 2 || w->rank() != 2 || x->dim(1) != w->dim(1)) {
        shape_error("linear", *x, *w);
    }
    const int n = x->dim(0), d = x->dim(1), dout = w->dim(0);
    if (b->numel() != dout) shape_error("linear bias", *w, *b);
    std::vector<float> out(static_cast<size_t>(n) * dout);
    for (int i = 0; i < n; ++i)
        std::memcpy(out.data() + static_cast<size_t>(i) * dout, b->data.data(),
                    static_cast<size_t>(dout) * sizeof(float));
    matmul_nt(x->data.data(), w->data.data(), out.data(), n, d, dout);
    auto t = make_out({n, dout}, std::move(out), "linear");
    if (track({&x, &w, &b})) {
        t->requires_grad = true;
        t->parents = {x, w, b};
        t->backward_fn = [x, w, b, n, d, dout](Tensor& self) {
            std::vector<float> dx(x->data.size(), 0.0f);
            std::vector<float> dw(w->data.size(), 0.0f);
            std::vector<float> db(b->data.size(), 0.0f);
            matmul_nn(self.grad.data(), w->data.data(), dx.data(), n, dout, d);
            matmul_tn(self.grad.data(), x->data.data(), dw.data(), dout, n, d);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < dout; ++j)
                    db[j] += self.grad[static_cast<size_t>(i) * dout + j];
            x->accumulate_grad(dx.data(), dx.size());
            w->accumulate_grad(dw.data(), dw.size());
            b->accumulate_grad(db.data(), db.size());
        };
    }
    return t;
}

TensorPtr maxpool2d(const TensorPtr& x, int k, int stride) {
    check_nchw("maxpool2d", *x);
    const int n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
    const int ho = (h - k) / stride + 1;
    const int wo = (w - k) / stride + 1;
    if (ho < 1 || wo < 1 || k > h || k > w) {
        throw std::invalid_argument("maxpool2d: window " + std::to_string(k) +
                                    " does not fit " + shape_str(x->shape));
    }
    std::vector<float> out(static_cast<size_t>(n) * c * ho * wo);
    auto argmax = std::make_shared<std::vector<int64_t>>(out.size());
    size_t oi = 0;
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* plane = x->data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
            const int64_t base = (static_cast<int64_t>(i) * c + ch) * h * w;
            for (int oy = 0; oy < ho; ++oy) {
                for (int ox = 0; ox < wo; ++ox, ++oi) {
                    float best = plane[(oy * stride) * w + ox * stride];
                    int64_t besti = (oy * stride) * static_cast<int64_t>(w) + ox * stride;
                    for (int ky = 0; ky < k; ++ky) {
                        for (int kx = 0; kx < k; ++kx) {
                            const int iy = oy * stride + ky, ix = ox * stride + kx;
                            const float v = plane[iy * w + ix];
                            if (v > best) {
                                best = v;
                                besti = iy * static_cast<int64_t>(w) + ix;
                            }
                        }
                    }
                    out[oi] = best;
                    (*argmax)[oi] = base + besti;
                }
            }
        }
    }
    auto t = make_out({n, c, ho, wo}, std::move(out), "maxpool2d");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, argmax](Tensor& self) {
            std::vector<float> g(x->data.size(), 0.0f);
            for (size_t i = 0; i < self.grad.size(); ++i) g[(*argmax)[i]] += self.grad[i];
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr upsample_nearest(const TensorPtr& x, int s) {
    check_nchw("upsample_nearest", *x);
    if (s < 1) throw std::invalid_argument("upsample_nearest: scale must be >= 1");
    const int n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
    const int ho = h * s, wo = w * s;
    std::vector<float> out(static_cast<size_t>(n) * c * ho * wo);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* src = x->data.data() + (static_cast<size_t>(i) * c + ch) * h * w;
            float* dst = out.data() + (static_cast<size_t>(i) * c + ch) * ho * wo;
            for (int oy = 0; oy < ho; ++oy) {
                const float* srow = src + (oy / s) * w;
                float* drow = dst + static_cast<size_t>(oy) * wo;
                for (int ox = 0; ox < wo; ++ox) drow[ox] = srow[ox / s];
            }
        }
    }
    auto t = make_out({n, c, ho, wo}, std::move(out), "upsample_nearest");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, n, c, h, w, s, ho, wo](Tensor& self) {
            std::vector<float> g(x->data.size(), 0.0f);
            for (int i = 0; i < n; ++i) {
                for (int ch = 0; ch < c; ++ch) {
                    const float* go =
                        self.grad.data() + (static_cast<size_t>(i) * c + ch) * ho * wo;
                    float* gx = g.data() + (static_cast<size_t>(i) * c + ch) * h * w;
                    for (int oy = 0; oy < ho; ++oy)
                        for (int ox = 0; ox < wo; ++ox)
                            gx[(oy / s) * w + ox / s] += go[static_cast<size_t>(oy) * wo + ox];
                }
            }
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr global_avg_pool(const TensorPtr& x) {
    check_nchw("global_avg_pool", *x);
    const int n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
    const int64_t hw = static_cast<int64_t>(h) * w;
    std::vector<float> out(static_cast<size_t>(n) * c);
    for (int i = 0; i < n; ++i) {
        for (int ch = 0; ch < c; ++ch) {
            const float* plane = x->data.data() + (static_cast<size_t>(i) * c + ch) * hw;
            double s = 0.0;
            for (int64_t j = 0; j < hw; ++j) s += plane[j];
            out[static_cast<size_t>(i) * c + ch] = static_cast<float>(s / hw);
        }
    }
    auto t = make_out({n, c}, std::move(out), "global_avg_pool");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, n, c, hw](Tensor& self) {
            std::vector<float> g(x->data.size());
            for (int i = 0; i < n * c; ++i) {
                const float gv = self.grad[i] / hw;
                std::fill(g.begin() + i * hw, g.begin() + (i + 1) * hw, gv);
            }
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

// ---- reductions ---------------------------------------------------------

TensorPtr sum(const TensorPtr& x) {
    double s = 0.0;
    for (const float v : x->data) s += v;
    auto t = Tensor::scalar(static_cast<float>(s));
    t->op = "sum";
    t->scalar_hi = s;
    t->has_scalar_hi = true;
    ensure_finite(*t, "sum");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x](Tensor& self) {
            std::vector<float> g(x->data.size(), self.grad[0]);
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr mean(const TensorPtr& x) {
    const int64_t n = x->numel();
    double s = 0.0;
    for (const float v : x->data) s += v;
    s /= static_cast<double>(n);
    auto t = Tensor::scalar(static_cast<float>(s));
    t->op = "mean";
    t->scalar_hi = s;
    t->has_scalar_hi = true;
    ensure_finite(*t, "mean");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, n](Tensor& self) {
            std::vector<float> g(x->data.size(), self.grad[0] / static_cast<float>(n));
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr mse_loss(const TensorPtr& pred, const TensorPtr& target) {
    auto d = sub(pred, target);
    return mean(hadamard(d, d));
}

TensorPtr bce_with_logits(const TensorPtr& logits, const TensorPtr& targets,
                          const TensorPtr& weights) {
    if (logits->shape != targets->shape) shape_error("bce_with_logits", *logits, *targets);
    if (weights && weights->shape != logits->shape)
        shape_error("bce_with_logits weights", *logits, *weights);
    const int64_t n = logits->numel();
    double total = 0.0;
    for (int64_t i = 0; i < n; ++i) {
        const double x = logits->data[i];
        const double tgt = targets->data[i];
        const double wgt = weights ? weights->data[i] : 1.0;
        // max(x,0) - x*t + log(1 + exp(-|x|))
        total += wgt * (std::max(x, 0.0) - x * tgt + std::log1p(std::exp(-std::abs(x))));
    }
    total /= static_cast<double>(n);
    auto t = Tensor::scalar(static_cast<float>(total));
    t->op = "bce_with_logits";
    t->scalar_hi = total;
    t->has_scalar_hi = true;
    ensure_finite(*t, "bce_with_logits");
    if (track({&logits})) {
        t->requires_grad = true;
        t->parents = {logits};
        t->backward_fn = [logits, targets, weights, n](Tensor& self) {
            std::vector<float> g(static_cast<size_t>(n));
            const float g0 = self.grad[0] / static_cast<float>(n);
            for (int64_t i = 0; i < n; ++i) {
                const float wgt = weights ? weights->data[i] : 1.0f;
                g[i] = g0 * wgt * (stable_sigmoid(logits->data[i]) - targets->data[i]);
            }
            logits->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

// ---- detection plumbing -------------------------------------------------

TensorPtr gather_anchor_rows(const TensorPtr& x, int anchors, int ch_per_anchor,
                             const std::vector<AnchorCell>& cells) {
    check_nchw("gather_anchor_rows", *x);
    if (x->dim(1) != anchors * ch_per_anchor) {
        throw std::invalid_argument("gather_anchor_rows: channel dim of " + shape_str(x->shape) +
                                    " is not anchors*channels = " +
                                    std::to_string(anchors * ch_per_anchor));
    }
    if (cells.empty()) throw std::invalid_argument("gather_anchor_rows: no cells");
    const int n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
    const int64_t hw = static_cast<int64_t>(h) * w;
    const int p = ch_per_anchor;
    auto flat = [c, p, hw, w](const AnchorCell& cell, int ch) {
        return (static_cast<int64_t>(cell.n) * c + cell.a * p + ch) * hw +
               static_cast<int64_t>(cell.y) * w + cell.x;
    };
    for (const auto& cell : cells) {
        if (cell.n < 0 || cell.n >= n || cell.a < 0 || cell.a >= anchors || cell.y < 0 ||
            cell.y >= h || cell.x < 0 || cell.x >= w) {
            throw std::invalid_argument("gather_anchor_rows: cell out of range");
        }
    }
    const int kk = static_cast<int>(cells.size());
    std::vector<float> out(static_cast<size_t>(kk) * p);
    for (int i = 0; i < kk; ++i)
        for (int ch = 0; ch < p; ++ch) out[static_cast<size_t>(i) * p + ch] = x->data[flat(cells[i], ch)];
    auto t = make_out({kk, p}, std::move(out), "gather_anchor_rows");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, cells, flat, p](Tensor& self) {
            std::vector<float> g(x->data.size(), 0.0f);
            for (size_t i = 0; i < cells.size(); ++i)
                for (int ch = 0; ch < p; ++ch)
                    g[flat(cells[i], ch)] += self.grad[i * p + ch];
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr select_channels(const TensorPtr& x, const std::vector<int>& channels) {
    check_nchw("select_channels", *x);
    const int n = x->dim(0), c = x->dim(1), h = x->dim(2), w = x->dim(3);
    for (const int ch : channels) {
        if (ch < 0 || ch >= c)
            throw std::invalid_argument("select_channels: channel " + std::to_string(ch) +
                                        " out of range for " + shape_str(x->shape));
    }
    const int kk = static_cast<int>(channels.size());
    const int64_t hw = static_cast<int64_t>(h) * w;
    std::vector<float> out(static_cast<size_t>(n) * kk * hw);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < kk; ++j)
            std::memcpy(out.data() + (static_cast<size_t>(i) * kk + j) * hw,
                        x->data.data() + (static_cast<size_t>(i) * c + channels[j]) * hw,
                        hw * sizeof(float));
    auto t = make_out({n, kk, h, w}, std::move(out), "select_channels");
    if (track({&x})) {
        t->requires_grad = true;
        t->parents = {x};
        t->backward_fn = [x, channels, n, c, kk, hw](Tensor& self) {
            std::vector<float> g(x->data.size(), 0.0f);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < kk; ++j) {
                    const float* src = self.grad.data() + (static_cast<size_t>(i) * kk + j) * hw;
                    float* dst = g.data() + (static_cast<size_t>(i) * c + channels[j]) * hw;
                    for (int64_t q = 0; q < hw; ++q) dst[q] += src[q];
                }
            x->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

TensorPtr box_iou_pairs(const TensorPtr& pred, const TensorPtr& target) {
    if (pred->rank() != 2 || pred->dim(1) != 4 || pred->shape != target->shape) {
        shape_error("box_iou_pairs", *pred, *target);
    }
    const int p = pred->dim(0);
    std::vector<float> out(static_cast<size_t>(p));
    for (int i = 0; i < p; ++i) {
        const float* a = pred->data.data() + static_cast<size_t>(i) * 4;
        const float* b = target->data.data() + static_cast<size_t>(i) * 4;
        const float iw = std::min(a[2], b[2]) - std::max(a[0], b[0]);
        const float ih = std::min(a[3], b[3]) - std::max(a[1], b[1]);
        const float inter = (iw > 0.0f && ih > 0.0f) ? iw * ih : 0.0f;
        const float a1 = (a[2] - a[0]) * (a[3] - a[1]);
        const float a2 = (b[2] - b[0]) * (b[3] - b[1]);
        const float uni = a1 + a2 - inter;
        out[i] = uni > 0.0f ? inter / uni : 0.0f;
    }
    auto t = make_out({p}, std::move(out), "box_iou_pairs");
    if (track({&pred})) {
        t->requires_grad = true;
        t->parents = {pred};
        t->backward_fn = [pred, target, p](Tensor& self) {
            std::vector<float> g(pred->data.size(), 0.0f);
            for (int i = 0; i < p; ++i) {
                const float* a = pred->data.data() + static_cast<size_t>(i) * 4;
                const float* b = target->data.data() + static_cast<size_t>(i) * 4;
                const float iw = std::min(a[2], b[2]) - std::max(a[0], b[0]);
                const float ih = std::min(a[3], b[3]) - std::max(a[1], b[1]);
                const bool overlap = iw > 0.0f && ih > 0.0f;
                const float inter = overlap ? iw * ih : 0.0f;
                const float a1 = (a[2] - a[0]) * (a[3] - a[1]);
                const float a2 = (b[2] - b[0]) * (b[3] - b[1]);
                const float uni = a1 + a2 - inter;
                if (uni <= 0.0f) continue;
                const float go = self.grad[i];
                const float iou = inter / uni;
                // d(iou)/dθ = (dI - iou * (dA1 - dI)) / uni, per corner
                float dinter[4] = {0, 0, 0, 0};
                if (overlap) {
                    if (a[0] >= b[0]) dinter[0] = -ih;
                    if (a[1] >= b[1]) dinter[1] = -iw;
                    if (a[2] <= b[2]) dinter[2] = ih;
                    if (a[3] <= b[3]) dinter[3] = iw;
                }
                const float dw = a[2] - a[0], dh = a[3] - a[1];
                const float da1[4] = {-dh, -dw, dh, dw};
                for (int j = 0; j < 4; ++j) {
                    const float duni = da1[j] - dinter[j];
                    g[static_cast<size_t>(i) * 4 + j] +=
                        go * (dinter[j] - iou * duni) / uni;
                }
            }
            pred->accumulate_grad(g.data(), g.size());
        };
    }
    return t;
}

}  // namespace okpose::nn
