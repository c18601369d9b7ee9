#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace wi2vi::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

// Dense row-major real tensor with an optional gradient buffer.
//
// A tensor is a handle: copies share storage, so an op output captured by the
// tape and the caller's copy see the same values and gradient. The gradient is
// accumulator state and is writable through const handles.
template <class T>
class BasicTensor {
 public:
  using value_type = T;

  BasicTensor() = default;

  static BasicTensor zeros(Shape shape, bool requires_grad = false) {
    return full(std::move(shape), T(0), requires_grad);
  }
  static BasicTensor full(Shape shape, T value, bool requires_grad = false) {
    const auto n = shape_numel(shape);
    return from(std::move(shape), std::vector<T>(n, value), requires_grad);
  }
  static BasicTensor from(Shape shape, std::vector<T> values, bool requires_grad = false) {
    if (shape_numel(shape) != values.size()) {
      throw std::invalid_argument("tensor: shape " + shape_str(shape) + " does not match " +
                                  std::to_string(values.size()) + " values");
    }
    BasicTensor t;
    t.impl_ = std::make_shared<Impl>();
    t.impl_->shape = std::move(shape);
    t.impl_->values = std::move(values);
    t.impl_->requires_grad = requires_grad;
    return t;
  }
  static BasicTensor scalar(T value, bool requires_grad = false) {
    return from({}, {value}, requires_grad);
  }

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return checked().shape; }
  std::size_t dim(std::size_t axis) const {
    const auto& s = shape();
    if (axis >= s.size()) throw std::out_of_range("tensor: axis out of range");
    return s[axis];
  }
  std::size_t rank() const { return shape().size(); }
  std::size_t numel() const { return impl_ ? impl_->values.size() : 0; }

  std::span<T> data() { return checked().values; }
  std::span<const T> data() const { return checked().values; }
  T item() const {
    if (numel() != 1) throw std::invalid_argument("tensor: item() needs exactly one element");
    return impl_->values[0];
  }

  bool requires_grad() const { return impl_ && impl_->requires_grad; }
  void set_requires_grad(bool on) { checked().requires_grad = on; }

  bool has_grad() const { return impl_ && !impl_->grad.empty(); }
  // Allocates a zero gradient on first access.
  std::span<T> grad() const {
    auto& i = checked();
    if (i.grad.size() != i.values.size()) i.grad.assign(i.values.size(), T(0));
    return i.grad;
  }
  void zero_grad() const {
    if (impl_) impl_->grad.assign(impl_->values.size(), T(0));
  }

  // Deep copy of the values; the copy has no gradient and does not require one.
  BasicTensor clone() const {
    return from(shape(), std::vector<T>(data().begin(), data().end()), false);
  }
  bool same_storage(const BasicTensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<T> values;
    std::vector<T> grad;
    bool requires_grad = false;
  };

  Impl& checked() const {
    if (!impl_) throw std::logic_error("tensor: undefined");
    return *impl_;
  }

  std::shared_ptr<Impl> impl_;
};

using Tensor = BasicTensor<double>;
using TensorF = BasicTensor<float>;

// Ordered record of differentiable operations. Recording order is a
// topological order of the graph, so backward replays rules in reverse.
class Tape {
 public:
  struct Record {
    std::string op;
    std::function<void()> backward_rule;
  };

  Tape() = default;
  // A tape that records nothing; ops evaluate forward only.
  static Tape inference() {
    Tape t;
    t.recording_ = false;
    return t;
  }

  bool recording() const { return recording_; }

  // True when an op over these inputs must be recorded.
  template <class T>
  bool wants(std::initializer_list<const BasicTensor<T>*> inputs) const {
    if (!recording_) return false;
    for (const auto* t : inputs) {
      if (t && t->requires_grad()) return true;
    }
    return false;
  }

  // The backward rule owns (by capture) every tensor it reads or writes.
  void record(std::string op, std::function<void()> backward_rule) {
    records_.push_back({std::move(op), std::move(backward_rule)});
  }

  std::size_t size() const { return records_.size(); }
  const std::vector<Record>& records() const { return records_; }
  void clear() { records_.clear(); }

 private:
  bool recording_ = true;
  std::vector<Record> records_;
};

// Seeds d(loss)/d(loss) = 1 and runs every recorded rule in reverse order.
// Gradients accumulate into existing buffers; zero them between steps.
template <class T>
void backward(const BasicTensor<T>& loss, Tape& tape) {
  if (!loss.defined() || loss.numel() != 1) {
    throw std::invalid_argument("backward: loss must be a scalar tensor");
  }
  loss.grad()[0] += T(1);
  for (auto it = tape.records().rbegin(); it != tape.records().rend(); ++it) it->backward_rule();
}

}  // namespace wi2vi::ad
