#pragma once
// Dense row-major tensors and the reverse-mode tape.
// Gradients flow through closures recorded in execution order; backward
// replays them in reverse, so execution order is the topological order.

#include <cstddef>
#include <deque>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace clsp {

template <typename Real>
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<Real> data;
    std::vector<Real> grad;  // allocated on first use; same layout as data
    bool requires_grad = false;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, bool req = false)
        : shape(std::move(s)), requires_grad(req) {
        data.assign(numel_of(shape), Real(0));
    }

    static std::size_t numel_of(const std::vector<std::size_t>& s) {
        std::size_t n = 1;
        for (std::size_t d : s) n *= d;
        return n;
    }
    std::size_t numel() const { return data.size(); }
    std::size_t rows() const { return shape.empty() ? 1 : shape[0]; }
    std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

    Real& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
    const Real& at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

    // Zero-filled gradient buffer, created on demand.
    void ensure_grad() {
        if (grad.size() != data.size()) grad.assign(data.size(), Real(0));
    }
    void zero_grad() {
        if (!grad.empty()) grad.assign(grad.size(), Real(0));
    }

    std::string shape_str() const {
        std::ostringstream os;
        os << '[';
        for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
        os << ']';
        return os.str();
    }
};

// Records op backward closures; owns intermediate tensors.
// Intermediates live in a deque so pointers stay stable as nodes are added.
template <typename Real>
class Tape {
public:
    // New intermediate on the tape. Intermediates always carry gradients.
    Tensor<Real>* make(std::vector<std::size_t> shape) {
        nodes_.emplace_back(std::move(shape), true);
        return &nodes_.back();
    }

    void record(std::function<void()> backward_fn) {
        backward_.push_back(std::move(backward_fn));
    }

    // Seeds d(loss)/d(loss) = 1 and replays closures newest-first.
    void backward(Tensor<Real>* loss) {
        if (loss->numel() != 1)
            throw std::invalid_argument("backward: loss must be a scalar, got " + loss->shape_str());
        // Closures read their output's grad buffer; nodes off the loss path
        // have no downstream consumer to allocate it, so allocate all here.
        for (auto& n : nodes_) n.ensure_grad();
        loss->ensure_grad();
        loss->grad[0] = Real(1);
        for (auto it = backward_.rbegin(); it != backward_.rend(); ++it) (*it)();
    }

    void clear() {
        backward_.clear();
        nodes_.clear();
    }

    std::size_t size() const { return backward_.size(); }

private:
    std::deque<Tensor<Real>> nodes_;
    std::vector<std::function<void()>> backward_;
};

inline void check(bool ok, const std::string& msg) {
    if (!ok) throw std::invalid_argument(msg);
}

}  // namespace clsp
