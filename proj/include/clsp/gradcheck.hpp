#pragma once
// Gradient verification against central finite differences.
// The finite-difference oracle always runs in double precision; the tape
// under test may run in float. Both evaluate at float-representable points.

#include <cmath>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "clsp/ops.hpp"
#include "clsp/rng.hpp"
#include "clsp/tensor.hpp"

namespace clsp {

// A loss program: owned parameters plus a forward pass to a scalar loss.
template <typename Real>
struct DiffProgram {
    std::vector<Tensor<Real>> params;
    std::function<Tensor<Real>*(Tape<Real>&, std::vector<Tensor<Real>>&)> forward;

    double loss() {
        Tape<Real> tape;
        Tensor<Real>* out = forward(tape, params);
        return static_cast<double>(out->data[0]);
    }
};

// A loss program over externally owned parameters (a whole encoder, say).
// The forward closure keeps its model alive; `params` aliases its tensors.
template <typename Real>
struct ParamProgram {
    std::vector<Tensor<Real>*> params;
    std::function<Tensor<Real>*(Tape<Real>&)> forward;

    double loss() {
        Tape<Real> tape;
        return static_cast<double>(forward(tape)->data[0]);
    }
};

struct GradCheckOptions {
    double h = 1e-5;
    std::size_t max_elems_per_tensor = 16;
    std::uint64_t seed = 1;
    // Relative-error denominator floor; keeps near-zero entries from
    // dividing by noise. The corruption test bounds how much this hides.
    double guard = 1e-3;
};

namespace detail {

// Max guarded relative error between tape gradients (precision RealT) and
// the double-precision finite-difference oracle, over a sampled subset.
template <typename RealT>
double gradient_check_core(ParamProgram<double>& ref, ParamProgram<RealT>& prog,
                           const GradCheckOptions& opt) {
    if (ref.params.size() != prog.params.size())
        throw std::invalid_argument("gradient_check: mismatched parameter lists");

    // Snap both programs to the same float-representable parameter values.
    for (std::size_t p = 0; p < ref.params.size(); ++p) {
        if (ref.params[p]->numel() != prog.params[p]->numel())
            throw std::invalid_argument("gradient_check: parameter size mismatch across precisions");
        for (std::size_t j = 0; j < ref.params[p]->numel(); ++j) {
            const RealT snapped = static_cast<RealT>(ref.params[p]->data[j]);
            prog.params[p]->data[j] = snapped;
            ref.params[p]->data[j] = static_cast<double>(snapped);
        }
        prog.params[p]->requires_grad = true;
        prog.params[p]->zero_grad();
    }

    // Analytic gradients from the tape under test.
    {
        Tape<RealT> tape;
        Tensor<RealT>* loss = prog.forward(tape);
        if (!std::isfinite(static_cast<double>(loss->data[0])))
            throw std::runtime_error("gradient_check: non-finite loss");
        tape.backward(loss);
    }

    Rng rng(opt.seed);
    double max_rel = 0.0;
    for (std::size_t p = 0; p < ref.params.size(); ++p) {
        const std::size_t n = ref.params[p]->numel();
        std::vector<std::size_t> idx;
        if (n <= opt.max_elems_per_tensor) {
            for (std::size_t j = 0; j < n; ++j) idx.push_back(j);
        } else {
            for (std::size_t k = 0; k < opt.max_elems_per_tensor; ++k)
                idx.push_back(static_cast<std::size_t>(rng.below(n)));
        }
        for (std::size_t j : idx) {
            const double saved = ref.params[p]->data[j];
            ref.params[p]->data[j] = saved + opt.h;
            const double f_plus = ref.loss();
            ref.params[p]->data[j] = saved - opt.h;
            const double f_minus = ref.loss();
            ref.params[p]->data[j] = saved;
            if (!std::isfinite(f_plus) || !std::isfinite(f_minus))
                throw std::runtime_error("gradient_check: non-finite loss");
            const double fd = (f_plus - f_minus) / (2.0 * opt.h);
            const double an = prog.params[p]->grad.empty()
                                  ? 0.0
                                  : static_cast<double>(prog.params[p]->grad[j]);
            const double denom = std::max({std::fabs(fd), std::fabs(an), opt.guard});
            max_rel = std::max(max_rel, std::fabs(fd - an) / denom);
        }
    }
    return max_rel;
}

}  // namespace detail

// Factory is invoked once per precision and must build the same program;
// see ParamProgram for models that own their parameters elsewhere.
template <typename RealT, typename Factory>
double gradient_check(Factory&& factory, GradCheckOptions opt = {}) {
    DiffProgram<double> ref = factory.template operator()<double>();
    DiffProgram<RealT> prog = factory.template operator()<RealT>();
    ParamProgram<double> ref_view;
    for (auto& t : ref.params) ref_view.params.push_back(&t);
    ref_view.forward = [&ref](Tape<double>& tape) { return ref.forward(tape, ref.params); };
    ParamProgram<RealT> prog_view;
    for (auto& t : prog.params) prog_view.params.push_back(&t);
    prog_view.forward = [&prog](Tape<RealT>& tape) { return prog.forward(tape, prog.params); };
    return detail::gradient_check_core<RealT>(ref_view, prog_view, opt);
}

template <typename RealT, typename Factory>
double gradient_check_shared(Factory&& factory, GradCheckOptions opt = {}) {
    ParamProgram<double> ref = factory.template operator()<double>();
    ParamProgram<RealT> prog = factory.template operator()<RealT>();
    return detail::gradient_check_core<RealT>(ref, prog, opt);
}

}  // namespace clsp
