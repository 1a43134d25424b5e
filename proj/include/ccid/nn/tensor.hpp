#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ccid/image.hpp"

namespace ccid::nn {

/// Dense row-major tensor. Activations are (channels, height, width);
/// convolution kernels are (out_ch, in_ch, kh, kw); biases are rank 1.
template <typename T>
class BasicTensor {
public:
    using value_type = T;

    BasicTensor() = default;
    explicit BasicTensor(std::vector<int> shape, T fill = T(0)) : shape_(std::move(shape)) {
        data_.assign(count(shape_), fill);
    }
    BasicTensor(std::vector<int> shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (data_.size() != count(shape_)) throw InvalidArgument("tensor data length does not match its shape");
    }

    [[nodiscard]] const std::vector<int>& shape() const noexcept { return shape_; }
    [[nodiscard]] int rank() const noexcept { return static_cast<int>(shape_.size()); }
    [[nodiscard]] int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    [[nodiscard]] T* data() noexcept { return data_.data(); }
    [[nodiscard]] const T* data() const noexcept { return data_.data(); }
    [[nodiscard]] std::vector<T>& values() noexcept { return data_; }
    [[nodiscard]] const std::vector<T>& values() const noexcept { return data_; }

    T& operator[](std::size_t i) noexcept { return data_[i]; }
    T operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Element of a rank-3 tensor.
    T& operator()(int c, int y, int x) noexcept { return data_[index(c, y, x)]; }
    T operator()(int c, int y, int x) const noexcept { return data_[index(c, y, x)]; }

    [[nodiscard]] bool same_shape(const BasicTensor& other) const noexcept { return shape_ == other.shape_; }

    void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

    template <typename U>
    [[nodiscard]] BasicTensor<U> cast() const {
        return BasicTensor<U>(shape_, std::vector<U>(data_.begin(), data_.end()));
    }

    friend bool operator==(const BasicTensor&, const BasicTensor&) = default;

    static std::size_t count(const std::vector<int>& shape) {
        std::size_t n = 1;
        for (int d : shape) {
            if (d < 1) throw InvalidArgument("tensor dimensions must be positive");
            n *= static_cast<std::size_t>(d);
        }
        return n;
    }

private:
    [[nodiscard]] std::size_t index(int c, int y, int x) const noexcept {
        return (static_cast<std::size_t>(c) * shape_[1] + y) * shape_[2] + x;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using Tensor = BasicTensor<float>;

/// Single-channel tensor view of an image, and back.
template <typename T>
[[nodiscard]] BasicTensor<T> tensor_from_image(const Image& img) {
    return BasicTensor<T>({1, img.height(), img.width()}, std::vector<T>(img.pixels().begin(), img.pixels().end()));
}

template <typename T>
[[nodiscard]] Image image_from_tensor(const BasicTensor<T>& t, int channel = 0) {
    if (t.rank() != 3) throw InvalidArgument("image_from_tensor expects a (C, H, W) tensor");
    const int h = t.dim(1);
    const int w = t.dim(2);
    const T* p = t.data() + static_cast<std::size_t>(channel) * h * w;
    return Image(h, w, std::vector<double>(p, p + static_cast<std::size_t>(h) * w));
}

template <typename T>
struct BasicNamedTensor {
    std::string name;
    BasicTensor<T> tensor;

    friend bool operator==(const BasicNamedTensor&, const BasicNamedTensor&) = default;
};

/// Ordered, uniquely named collection of tensors.
template <typename T>
class BasicParams {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    void add(std::string name, BasicTensor<T> tensor) {
        if (find(name) != nullptr) throw InvalidArgument("duplicate parameter name '" + name + "'");
        entries_.push_back({std::move(name), std::move(tensor)});
    }

    [[nodiscard]] const BasicTensor<T>* find(const std::string& name) const noexcept {
        for (const auto& e : entries_) {
            if (e.name == name) return &e.tensor;
        }
        return nullptr;
    }
    [[nodiscard]] BasicTensor<T>* find(const std::string& name) noexcept {
        return const_cast<BasicTensor<T>*>(std::as_const(*this).find(name));
    }

    [[nodiscard]] const BasicTensor<T>& at(const std::string& name) const {
        if (const auto* t = find(name)) return *t;
        throw InvalidArgument("missing parameter '" + name + "'");
    }
    [[nodiscard]] BasicTensor<T>& at(const std::string& name) {
        return const_cast<BasicTensor<T>&>(std::as_const(*this).at(name));
    }

    [[nodiscard]] std::size_t size() const noexcept { return entries_.size(); }
    [[nodiscard]] bool empty() const noexcept { return entries_.empty(); }
    [[nodiscard]] std::vector<BasicNamedTensor<T>>& entries() noexcept { return entries_; }
    [[nodiscard]] const std::vector<BasicNamedTensor<T>>& entries() const noexcept { return entries_; }

    [[nodiscard]] std::size_t element_count() const noexcept {
        std::size_t n = 0;
        for (const auto& e : entries_) n += e.tensor.size();
        return n;
    }

    /// Same names and shapes in the same order, all values zero.
    [[nodiscard]] BasicParams zeros_like() const {
        BasicParams out;
        for (const auto& e : entries_) out.entries_.push_back({e.name, BasicTensor<T>(e.tensor.shape())});
        return out;
    }

    /// Copies every declared tensor from `other`, looked up by name. Order of
    /// `other` is irrelevant; missing names or shape changes are errors.
    void assign_from(const BasicParams& other) {
        for (auto& e : entries_) {
            const auto* src = other.find(e.name);
            if (src == nullptr) throw InvalidArgument("parameter '" + e.name + "' not found");
            if (!src->same_shape(e.tensor)) throw InvalidArgument("parameter '" + e.name + "' has the wrong shape");
            e.tensor = *src;
        }
    }

    template <typename U>
    [[nodiscard]] BasicParams<U> cast() const {
        BasicParams<U> out;
        for (const auto& e : entries_) out.add(e.name, e.tensor.template cast<U>());
        return out;
    }

    friend bool operator==(const BasicParams&, const BasicParams&) = default;

private:
    std::vector<BasicNamedTensor<T>> entries_;
};

using ModelParams = BasicParams<float>;

/// FNV-1a over names, shapes and raw values; identifies a parameter set.
[[nodiscard]] std::uint64_t content_hash(const ModelParams& params);

}  // namespace ccid::nn
