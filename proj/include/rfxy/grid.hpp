#pragma once

#include <cassert>
#include <cstdint>
#include <vector>

namespace rfxy {

/// Dense row-major 2D array indexed by (x, y) with 0 <= x < nx, 0 <= y < ny.
/// x is the first coordinate of a lattice site, y the second.
template <class T>
class Grid {
  public:
    Grid() = default;
    Grid(int nx, int ny, T fill = T{}) : nx_(nx), ny_(ny), data_(static_cast<size_t>(nx) * ny, fill) {}

    int nx() const { return nx_; }
    int ny() const { return ny_; }
    size_t size() const { return data_.size(); }

    T& operator()(int x, int y) {
        assert(x >= 0 && x < nx_ && y >= 0 && y < ny_);
        return data_[static_cast<size_t>(y) * nx_ + x];
    }
    const T& operator()(int x, int y) const {
        assert(x >= 0 && x < nx_ && y >= 0 && y < ny_);
        return data_[static_cast<size_t>(y) * nx_ + x];
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    std::vector<T>& raw() & { return data_; }
    const std::vector<T>& raw() const& { return data_; }
    std::vector<T> raw() && { return std::move(data_); }

    void fill(T v) { data_.assign(data_.size(), v); }

    bool same_shape(const Grid& o) const { return nx_ == o.nx_ && ny_ == o.ny_; }

    bool operator==(const Grid& o) const { return nx_ == o.nx_ && ny_ == o.ny_ && data_ == o.data_; }

  private:
    int nx_ = 0, ny_ = 0;
    std::vector<T> data_;
};

using GridD = Grid<double>;
using GridI = Grid<int>;
using GridB = Grid<uint8_t>;

} // namespace rfxy
