#pragma once

#include <algorithm>
#include <array>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <stdexcept>

namespace bm {

// Fixed-capacity inline vector. Points, lattice positions and the short complex
// vectors of ℂ^d all fit in a handful of slots, so we never touch the heap for them.
template <class T, std::size_t Capacity>
class SmallVec {
 public:
  using value_type = T;
  using iterator = T*;
  using const_iterator = const T*;

  SmallVec() = default;

  explicit SmallVec(std::size_t size, const T& fill = T{}) : size_(size) {
    if (size > Capacity) throw std::length_error("SmallVec capacity exceeded");
    std::fill_n(data_.begin(), size, fill);
  }

  SmallVec(std::initializer_list<T> values) : size_(values.size()) {
    if (values.size() > Capacity) throw std::length_error("SmallVec capacity exceeded");
    std::copy(values.begin(), values.end(), data_.begin());
  }

  template <class U>
  static SmallVec from(std::span<const U> values) {
    SmallVec out(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) out[i] = static_cast<T>(values[i]);
    return out;
  }

  static constexpr std::size_t capacity() { return Capacity; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  void push_back(const T& value) {
    if (size_ == Capacity) throw std::length_error("SmallVec capacity exceeded");
    data_[size_++] = value;
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  iterator begin() { return data_.data(); }
  iterator end() { return data_.data() + size_; }
  const_iterator begin() const { return data_.data(); }
  const_iterator end() const { return data_.data() + size_; }

  std::span<T> span() { return {data_.data(), size_}; }
  std::span<const T> span() const { return {data_.data(), size_}; }

  friend bool operator==(const SmallVec& a, const SmallVec& b) {
    return a.size_ == b.size_ && std::equal(a.begin(), a.end(), b.begin());
  }

 private:
  std::array<T, Capacity> data_{};
  std::size_t size_ = 0;
};

// Lexicographic order, shorter prefix first. Only meaningful for ordered T.
template <class T, std::size_t C>
bool lex_less(const SmallVec<T, C>& a, const SmallVec<T, C>& b) {
  return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

}  // namespace bm
