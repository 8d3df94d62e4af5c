#pragma once

#include "ccs/error.hpp"
#include "ccs/types.hpp"

#include <span>
#include <string>
#include <utility>

namespace ccs {

/// Aligned (x, y) observations drawn from one joint distribution. Row i of
/// `x` and row i of `y` form one sample.
class PairedDataset {
public:
    PairedDataset() = default;

    PairedDataset(Samples x, Samples y) : x_(std::move(x)), y_(std::move(y))
    {
        detail::require(x_.rows() == y_.rows(), "PairedDataset: x and y row counts differ");
        detail::require(x_.rows() >= 1, "PairedDataset: empty dataset");
        detail::require(x_.cols() >= 1 && y_.cols() >= 1, "PairedDataset: x and y need at least one column");
    }

    const Samples& x() const noexcept { return x_; }
    const Samples& y() const noexcept { return y_; }
    Index size() const noexcept { return x_.rows(); }
    Index dx() const noexcept { return x_.cols(); }
    Index dy() const noexcept { return y_.cols(); }

    /// Rows as concatenated [x y] vectors.
    Samples joint() const { return hconcat(x_, y_); }

    PairedDataset subset(std::span<const Index> rows) const
    {
        return {take_rows(x_, rows), take_rows(y_, rows)};
    }

    friend PairedDataset pool(const PairedDataset& a, const PairedDataset& b)
    {
        detail::require(a.dx() == b.dx() && a.dy() == b.dy(), "pool: datasets differ in dimension");
        return {vconcat(a.x_, b.x_), vconcat(a.y_, b.y_)};
    }

    friend bool operator==(const PairedDataset& a, const PairedDataset& b)
    {
        return a.x_.rows() == b.x_.rows() && a.x_.cols() == b.x_.cols() && a.y_.cols() == b.y_.cols() &&
               a.x_ == b.x_ && a.y_ == b.y_;
    }

private:
    Samples x_;
    Samples y_;
};

inline void require_same_dims(const PairedDataset& s, const PairedDataset& t, const char* what)
{
    detail::require(s.dx() == t.dx() && s.dy() == t.dy(), std::string(what) + ": datasets differ in dimension");
}

} // namespace ccs
