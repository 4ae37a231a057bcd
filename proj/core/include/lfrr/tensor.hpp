#pragma once

#include <cstdint>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "lfrr/errors.hpp"

namespace lfrr {

// Dimension list of an n-axis value grid. Rank 0 denotes a scalar.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::int64_t> dims) : dims_(dims) { validate(); }
    explicit Shape(std::vector<std::int64_t> dims) : dims_(std::move(dims)) { validate(); }

    std::int64_t rank() const { return static_cast<std::int64_t>(dims_.size()); }
    std::int64_t operator[](std::int64_t i) const { return dims_[static_cast<std::size_t>(i)]; }

    std::int64_t numel() const {
        std::int64_t n = 1;
        for (auto d : dims_) n *= d;
        return n;
    }

    bool operator==(const Shape& o) const { return dims_ == o.dims_; }
    bool operator!=(const Shape& o) const { return dims_ != o.dims_; }

    const std::vector<std::int64_t>& dims() const { return dims_; }

    std::string str() const {
        std::string s = "[";
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(dims_[i]);
        }
        return s + "]";
    }

private:
    void validate() const {
        for (auto d : dims_)
            if (d < 1) throw ShapeMismatch("shape dimension must be >= 1, got " + str());
    }

    std::vector<std::int64_t> dims_;
};

// Real-valued grid with optional gradient storage. Data is shared on copy,
// torch-style; deep copies are explicit via clone().
struct Tensor {
    Shape shape;
    std::shared_ptr<std::vector<double>> data;
    std::shared_ptr<std::vector<double>> grad;  // same shape as data when present
    bool requires_grad = false;

    Tensor() = default;

    explicit Tensor(Shape s, double fill = 0.0, bool req = false)
        : shape(std::move(s)),
          data(std::make_shared<std::vector<double>>(static_cast<std::size_t>(shape.numel()), fill)),
          requires_grad(req) {
        if (req) zero_grad();  // allocate now so every copy shares the buffer
    }

    Tensor(Shape s, std::vector<double> values, bool req = false)
        : shape(std::move(s)),
          data(std::make_shared<std::vector<double>>(std::move(values))),
          requires_grad(req) {
        if (static_cast<std::int64_t>(data->size()) != shape.numel())
            throw ShapeMismatch("tensor data length " + std::to_string(data->size()) +
                                " does not match shape " + shape.str());
        if (req) zero_grad();
    }

    std::int64_t numel() const { return shape.numel(); }

    double* ptr() { return data->data(); }
    const double* ptr() const { return data->data(); }

    double& operator[](std::int64_t i) { return (*data)[static_cast<std::size_t>(i)]; }
    double operator[](std::int64_t i) const { return (*data)[static_cast<std::size_t>(i)]; }

    // Allocates (or zero-fills) the gradient buffer.
    void zero_grad() {
        if (!grad) grad = std::make_shared<std::vector<double>>(data->size(), 0.0);
        else std::fill(grad->begin(), grad->end(), 0.0);
    }

    Tensor clone() const {
        Tensor t;
        t.shape = shape;
        t.data = std::make_shared<std::vector<double>>(*data);
        if (grad) t.grad = std::make_shared<std::vector<double>>(*grad);
        t.requires_grad = requires_grad;
        return t;
    }
};

}  // namespace lfrr
