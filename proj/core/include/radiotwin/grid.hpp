#pragma once

#include <cstddef>
#include <vector>

namespace rtwin {

inline constexpr int kGridSize = 512;

// Row-major 2D array. Row 0 is the northernmost row (image convention).
template <typename T>
class Grid {
public:
    Grid() : Grid(kGridSize, kGridSize) {}
    Grid(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, fill) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }

    T& at(int r, int c) { return data_[static_cast<std::size_t>(r) * cols_ + c]; }
    const T& at(int r, int c) const {
        return data_[static_cast<std::size_t>(r) * cols_ + c];
    }

    bool in_bounds(int r, int c) const {
        return r >= 0 && r < rows_ && c >= 0 && c < cols_;
    }

    std::vector<T>& data() { return data_; }
    const std::vector<T>& data() const { return data_; }

    void fill(T v) { data_.assign(data_.size(), v); }

private:
    int rows_;
    int cols_;
    std::vector<T> data_;
};

}  // namespace rtwin
