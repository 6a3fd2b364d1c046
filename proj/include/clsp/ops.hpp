#pragma once
// Differentiable tensor operations.
// Every op returns a tape-owned output and records one backward closure.
// Parallel loops split over output elements only; each element's reduction
// runs in a fixed order, so results are identical at any thread count.

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "clsp/tensor.hpp"

namespace clsp {

template <typename Real>
Tensor<Real>* matmul(Tape<Real>& tape, Tensor<Real>* a, Tensor<Real>* w) {
    check(a->shape.size() == 2 && w->shape.size() == 2 && a->cols() == w->rows(),
          "matmul: shape mismatch " + a->shape_str() + " x " + w->shape_str());
    const std::size_t B = a->rows(), I = a->cols(), O = w->cols();
    Tensor<Real>* out = tape.make({B, O});
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(B); ++b) {
        Real* yr = &out->data[b * O];
        const Real* ar = &a->data[b * I];
        for (std::size_t i = 0; i < I; ++i) {
            const Real av = ar[i];
            if (av == Real(0)) continue;
            const Real* wr = &w->data[i * O];
            for (std::size_t o = 0; o < O; ++o) yr[o] += av * wr[o];
        }
    }
    tape.record([a, w, out, B, I, O] {
        if (a->requires_grad) {
            a->ensure_grad();
#pragma omp parallel for schedule(static)
            for (long long b = 0; b < static_cast<long long>(B); ++b) {
                Real* dar = &a->grad[b * I];
                const Real* dyr = &out->grad[b * O];
                for (std::size_t i = 0; i < I; ++i) {
                    const Real* wr = &w->data[i * O];
                    Real s = 0;
                    for (std::size_t o = 0; o < O; ++o) s += dyr[o] * wr[o];
                    dar[i] += s;
                }
            }
        }
        if (w->requires_grad) {
            w->ensure_grad();
#pragma omp parallel for schedule(static)
            for (long long i = 0; i < static_cast<long long>(I); ++i) {
                Real* dwr = &w->grad[i * O];
                for (std::size_t b = 0; b < B; ++b) {
                    const Real av = a->data[b * I + i];
                    if (av == Real(0)) continue;
                    const Real* dyr = &out->grad[b * O];
                    for (std::size_t o = 0; o < O; ++o) dwr[o] += av * dyr[o];
                }
            }
        }
    });
    return out;
}

// Fused affine map: Y = X W + b (b broadcast over rows; b may be null).
template <typename Real>
Tensor<Real>* linear(Tape<Real>& tape, Tensor<Real>* x, Tensor<Real>* w, Tensor<Real>* b) {
    Tensor<Real>* out = matmul(tape, x, w);
    if (b == nullptr) return out;
    const std::size_t B = out->rows(), O = out->cols();
    check(b->numel() == O, "linear: bias " + b->shape_str() + " does not match output width " + out->shape_str());
    for (std::size_t r = 0; r < B; ++r)
        for (std::size_t o = 0; o < O; ++o) out->data[r * O + o] += b->data[o];
    tape.record([b, out, B, O] {
        if (!b->requires_grad) return;
        b->ensure_grad();
#pragma omp parallel for schedule(static)
        for (long long o = 0; o < static_cast<long long>(O); ++o) {
            Real s = 0;
            for (std::size_t r = 0; r < B; ++r) s += out->grad[r * O + o];
            b->grad[o] += s;
        }
    });
    return out;
}

// Y = A B^T; rows of both operands are contiguous, good for similarity grids.
template <typename Real>
Tensor<Real>* matmul_nt(Tape<Real>& tape, Tensor<Real>* a, Tensor<Real>* bt) {
    check(a->shape.size() == 2 && bt->shape.size() == 2 && a->cols() == bt->cols(),
          "matmul_nt: shape mismatch " + a->shape_str() + " x " + bt->shape_str() + "^T");
    const std::size_t B = a->rows(), D = a->cols(), N = bt->rows();
    Tensor<Real>* out = tape.make({B, N});
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(B); ++b) {
        const Real* ar = &a->data[b * D];
        Real* yr = &out->data[b * N];
        for (std::size_t n = 0; n < N; ++n) {
            const Real* br = &bt->data[n * D];
            Real s = 0;
            for (std::size_t d = 0; d < D; ++d) s += ar[d] * br[d];
            yr[n] = s;
        }
    }
    tape.record([a, bt, out, B, D, N] {
        if (a->requires_grad) {
            a->ensure_grad();
#pragma omp parallel for schedule(static)
            for (long long b = 0; b < static_cast<long long>(B); ++b) {
                Real* dar = &a->grad[b * D];
                const Real* dyr = &out->grad[b * N];
                for (std::size_t n = 0; n < N; ++n) {
                    const Real g = dyr[n];
                    if (g == Real(0)) continue;
                    const Real* br = &bt->data[n * D];
                    for (std::size_t d = 0; d < D; ++d) dar[d] += g * br[d];
                }
            }
        }
        if (bt->requires_grad) {
            bt->ensure_grad();
#pragma omp parallel for schedule(static)
            for (long long n = 0; n < static_cast<long long>(N); ++n) {
                Real* dbr = &bt->grad[n * D];
                for (std::size_t b = 0; b < B; ++b) {
                    const Real g = out->grad[b * N + n];
                    if (g == Real(0)) continue;
                    const Real* ar = &a->data[b * D];
                    for (std::size_t d = 0; d < D; ++d) dbr[d] += g * ar[d];
                }
            }
        }
    });
    return out;
}

template <typename Real>
Tensor<Real>* add(Tape<Real>& tape, Tensor<Real>* a, Tensor<Real>* b) {
    check(a->shape == b->shape, "add: shape mismatch " + a->shape_str() + " vs " + b->shape_str());
    Tensor<Real>* out = tape.make(a->shape);
    const std::size_t n = a->numel();
    for (std::size_t i = 0; i < n; ++i) out->data[i] = a->data[i] + b->data[i];
    tape.record([a, b, out, n] {
        if (a->requires_grad) {
            a->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) a->grad[i] += out->grad[i];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            for (std::size_t i = 0; i < n; ++i) b->grad[i] += out->grad[i];
        }
    });
    return out;
}

template <typename Real>
Tensor<Real>* scale(Tape<Real>& tape, Tensor<Real>* x, Real c) {
    Tensor<Real>* out = tape.make(x->shape);
    const std::size_t n = x->numel();
    for (std::size_t i = 0; i < n; ++i) out->data[i] = c * x->data[i];
    tape.record([x, out, c, n] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t i = 0; i < n; ++i) x->grad[i] += c * out->grad[i];
    });
    return out;
}

// Exact GELU: y = x * Phi(x) with the Gaussian CDF via erf.
template <typename Real>
Tensor<Real>* gelu(Tape<Real>& tape, Tensor<Real>* x) {
    Tensor<Real>* out = tape.make(x->shape);
    const std::size_t n = x->numel();
    const Real inv_sqrt2 = Real(0.7071067811865475244);
#pragma omp parallel for schedule(static)
    for (long long i = 0; i < static_cast<long long>(n); ++i) {
        const Real v = x->data[i];
        out->data[i] = Real(0.5) * v * (Real(1) + std::erf(v * inv_sqrt2));
    }
    tape.record([x, out, n, inv_sqrt2] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        const Real inv_sqrt2pi = Real(0.3989422804014326779);
#pragma omp parallel for schedule(static)
        for (long long i = 0; i < static_cast<long long>(n); ++i) {
            const Real v = x->data[i];
            const Real cdf = Real(0.5) * (Real(1) + std::erf(v * inv_sqrt2));
            const Real pdf = inv_sqrt2pi * std::exp(Real(-0.5) * v * v);
            x->grad[i] += out->grad[i] * (cdf + v * pdf);
        }
    });
    return out;
}

// Row-wise layer normalization with learned gain and bias.
template <typename Real>
Tensor<Real>* layer_norm_rows(Tape<Real>& tape, Tensor<Real>* x, Tensor<Real>* gain,
                              Tensor<Real>* bias, Real eps = Real(1e-5)) {
    const std::size_t B = x->rows(), D = x->cols();
    check(gain->numel() == D && bias->numel() == D,
          "layer_norm_rows: gain/bias must match row width " + x->shape_str());
    Tensor<Real>* out = tape.make(x->shape);
    auto xhat = std::make_shared<std::vector<Real>>(B * D);
    auto inv_sd = std::make_shared<std::vector<Real>>(B);
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(B); ++b) {
        const Real* xr = &x->data[b * D];
        Real mean = 0;
        for (std::size_t j = 0; j < D; ++j) mean += xr[j];
        mean /= Real(D);
        Real var = 0;
        for (std::size_t j = 0; j < D; ++j) {
            const Real d = xr[j] - mean;
            var += d * d;
        }
        var /= Real(D);
        const Real inv = Real(1) / std::sqrt(var + eps);
        (*inv_sd)[b] = inv;
        for (std::size_t j = 0; j < D; ++j) {
            const Real h = (xr[j] - mean) * inv;
            (*xhat)[b * D + j] = h;
            out->data[b * D + j] = gain->data[j] * h + bias->data[j];
        }
    }
    tape.record([x, gain, bias, out, xhat, inv_sd, B, D] {
        if (x->requires_grad) {
            x->ensure_grad();
#pragma omp parallel for schedule(static)
            for (long long b = 0; b < static_cast<long long>(B); ++b) {
                const Real* dyr = &out->grad[b * D];
                const Real* hr = &(*xhat)[b * D];
                Real mean_dh = 0, mean_dh_h = 0;
                for (std::size_t j = 0; j < D; ++j) {
                    const Real dh = dyr[j] * gain->data[j];
                    mean_dh += dh;
                    mean_dh_h += dh * hr[j];
                }
                mean_dh /= Real(D);
                mean_dh_h /= Real(D);
                const Real inv = (*inv_sd)[b];
                Real* dxr = &x->grad[b * D];
                for (std::size_t j = 0; j < D; ++j) {
                    const Real dh = dyr[j] * gain->data[j];
                    dxr[j] += inv * (dh - mean_dh - hr[j] * mean_dh_h);
                }
            }
        }
        if (gain->requires_grad) {
            gain->ensure_grad();
#pragma omp parallel for schedule(static)
            for (long long j = 0; j < static_cast<long long>(D); ++j) {
                Real s = 0;
                for (std::size_t b = 0; b < B; ++b) s += out->grad[b * D + j] * (*xhat)[b * D + j];
                gain->grad[j] += s;
            }
        }
        if (bias->requires_grad) {
            bias->ensure_grad();
#pragma omp parallel for schedule(static)
            for (long long j = 0; j < static_cast<long long>(D); ++j) {
                Real s = 0;
                for (std::size_t b = 0; b < B; ++b) s += out->grad[b * D + j];
                bias->grad[j] += s;
            }
        }
    });
    return out;
}

// Rows scaled to unit Euclidean norm; an all-zero row stays zero.
template <typename Real>
Tensor<Real>* l2_normalize_rows(Tape<Real>& tape, Tensor<Real>* x) {
    const std::size_t B = x->rows(), D = x->cols();
    Tensor<Real>* out = tape.make(x->shape);
    auto inv_norm = std::make_shared<std::vector<Real>>(B);
#pragma omp parallel for schedule(static)
    for (long long b = 0; b < static_cast<long long>(B); ++b) {
        const Real* xr = &x->data[b * D];
        Real s = 0;
        for (std::size_t j = 0; j < D; ++j) s += xr[j] * xr[j];
        const Real norm = std::sqrt(s);
        const Real inv = norm > Real(0) ? Real(1) / norm : Real(0);
        (*inv_norm)[b] = inv;
        for (std::size_t j = 0; j < D; ++j) out->data[b * D + j] = xr[j] * inv;
    }
    tape.record([x, out, inv_norm, B, D] {
        if (!x->requires_grad) return;
        x->ensure_grad();
#pragma omp parallel for schedule(static)
        for (long long b = 0; b < static_cast<long long>(B); ++b) {
            const Real* yr = &out->data[b * D];
            const Real* dyr = &out->grad[b * D];
            Real dot = 0;
            for (std::size_t j = 0; j < D; ++j) dot += yr[j] * dyr[j];
            const Real inv = (*inv_norm)[b];
            Real* dxr = &x->grad[b * D];
            for (std::size_t j = 0; j < D; ++j) dxr[j] += inv * (dyr[j] - yr[j] * dot);
        }
    });
    return out;
}

template <typename Real>
Tensor<Real>* transpose(Tape<Real>& tape, Tensor<Real>* x) {
    const std::size_t B = x->rows(), C = x->cols();
    Tensor<Real>* out = tape.make({C, B});
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < C; ++c) out->data[c * B + b] = x->data[b * C + c];
    tape.record([x, out, B, C] {
        if (!x->requires_grad) return;
        x->ensure_grad();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t c = 0; c < C; ++c) x->grad[b * C + c] += out->grad[c * B + b];
    });
    return out;
}

template <typename Real>
Tensor<Real>* concat_cols(Tape<Real>& tape, const std::vector<Tensor<Real>*>& parts) {
    check(!parts.empty(), "concat_cols: no inputs");
    const std::size_t B = parts[0]->rows();
    std::size_t total = 0;
    for (auto* p : parts) {
        check(p->rows() == B, "concat_cols: row mismatch " + p->shape_str());
        total += p->cols();
    }
    Tensor<Real>* out = tape.make({B, total});
    std::size_t off = 0;
    for (auto* p : parts) {
        const std::size_t D = p->cols();
        for (std::size_t b = 0; b < B; ++b)
            for (std::size_t j = 0; j < D; ++j) out->data[b * total + off + j] = p->data[b * D + j];
        off += D;
    }
    tape.record([parts, out, B, total] {
        std::size_t off2 = 0;
        for (auto* p : parts) {
            const std::size_t D = p->cols();
            if (p->requires_grad) {
                p->ensure_grad();
                for (std::size_t b = 0; b < B; ++b)
                    for (std::size_t j = 0; j < D; ++j)
                        p->grad[b * D + j] += out->grad[b * total + off2 + j];
            }
            off2 += D;
        }
    });
    return out;
}

// Mean cross-entropy over rows with a stabilized softmax (max subtraction).
template <typename Real>
Tensor<Real>* softmax_cross_entropy_rows(Tape<Real>& tape, Tensor<Real>* logits,
                                         std::vector<int> targets) {
    const std::size_t B = logits->rows(), C = logits->cols();
    check(targets.size() == B, "softmax_cross_entropy_rows: target count mismatch " + logits->shape_str());
    for (int t : targets)
        check(t >= 0 && static_cast<std::size_t>(t) < C,
              "softmax_cross_entropy_rows: target out of range for " + logits->shape_str());
    Tensor<Real>* out = tape.make({1});
    auto probs = std::make_shared<std::vector<Real>>(B * C);
    Real total = 0;
    for (std::size_t b = 0; b < B; ++b) {
        const Real* zr = &logits->data[b * C];
        Real m = zr[0];
        for (std::size_t c = 1; c < C; ++c) m = std::max(m, zr[c]);
        Real sum = 0;
        for (std::size_t c = 0; c < C; ++c) {
            const Real e = std::exp(zr[c] - m);
            (*probs)[b * C + c] = e;
            sum += e;
        }
        const Real inv = Real(1) / sum;
        for (std::size_t c = 0; c < C; ++c) (*probs)[b * C + c] *= inv;
        total += std::log(sum) + m - zr[targets[b]];
    }
    out->data[0] = total / Real(B);
    tape.record([logits, out, probs, targets = std::move(targets), B, C] {
        if (!logits->requires_grad) return;
        logits->ensure_grad();
        const Real g = out->grad[0] / Real(B);
        for (std::size_t b = 0; b < B; ++b) {
            Real* dzr = &logits->grad[b * C];
            const Real* pr = &(*probs)[b * C];
            for (std::size_t c = 0; c < C; ++c) dzr[c] += g * pr[c];
            dzr[targets[b]] -= g;
        }
    });
    return out;
}

// Mean squared error against a constant target, averaged over all elements.
template <typename Real>
Tensor<Real>* mse_loss(Tape<Real>& tape, Tensor<Real>* pred, std::vector<Real> target) {
    const std::size_t n = pred->numel();
    check(target.size() == n, "mse_loss: target size mismatch " + pred->shape_str());
    Tensor<Real>* out = tape.make({1});
    Real total = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const Real d = pred->data[i] - target[i];
        total += d * d;
    }
    out->data[0] = total / Real(n);
    tape.record([pred, out, target = std::move(target), n] {
        if (!pred->requires_grad) return;
        pred->ensure_grad();
        const Real g = out->grad[0] * Real(2) / Real(n);
        for (std::size_t i = 0; i < n; ++i) pred->grad[i] += g * (pred->data[i] - target[i]);
    });
    return out;
}

// Scalar combination helpers for loss arithmetic.
template <typename Real>
Tensor<Real>* scalar_add(Tape<Real>& tape, Tensor<Real>* a, Tensor<Real>* b) {
    check(a->numel() == 1 && b->numel() == 1, "scalar_add: inputs must be scalars");
    Tensor<Real>* out = tape.make({1});
    out->data[0] = a->data[0] + b->data[0];
    tape.record([a, b, out] {
        if (a->requires_grad) {
            a->ensure_grad();
            a->grad[0] += out->grad[0];
        }
        if (b->requires_grad) {
            b->ensure_grad();
            b->grad[0] += out->grad[0];
        }
    });
    return out;
}

}  // namespace clsp
