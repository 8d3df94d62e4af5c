#pragma once

#include "ccs/dataset.hpp"
#include "ccs/divergences.hpp"
#include "ccs/error.hpp"
#include "ccs/types.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ccs::rl {

/// One transition; states are whatever representation the caller chose
/// (the agents store kernel features).
struct Trio {
    Vector next_state;
    Vector state;
    int action = 0;
};

/// FIFO of trios with fixed capacity. Position 0 is the oldest entry. The old
/// half is the first size/2 entries, the new half the rest.
class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : slots_(capacity)
    {
        ccs::detail::require(capacity >= 2, "ReplayBuffer: capacity must be at least 2");
    }

    std::size_t capacity() const noexcept { return slots_.size(); }
    std::size_t size() const noexcept { return size_; }
    bool full() const noexcept { return size_ == slots_.size(); }
    std::size_t old_count() const noexcept { return size_ / 2; }
    std::size_t new_count() const noexcept { return size_ - size_ / 2; }

    /// Storage slot written by the most recent push.
    std::size_t last_slot() const noexcept { return (head_ + size_ - 1) % slots_.size(); }

    /// Storage slot of the entry at age position `pos`.
    std::size_t slot(std::size_t pos) const { return (head_ + pos) % slots_.size(); }

    const Trio& operator[](std::size_t pos) const
    {
        ccs::detail::require(pos < size_, "ReplayBuffer: position out of range");
        return slots_[slot(pos)];
    }

    const Trio& at_slot(std::size_t s) const { return slots_[s]; }

    void push(Trio t)
    {
        if (full()) {
            slots_[head_] = std::move(t);
            head_ = (head_ + 1) % slots_.size();
        }
        else {
            slots_[slot(size_)] = std::move(t);
            ++size_;
        }
    }

    std::vector<Trio> old_half() const { return range(0, old_count()); }
    std::vector<Trio> new_half() const { return range(old_count(), size_); }

private:
    std::vector<Trio> range(std::size_t from, std::size_t to) const
    {
        std::vector<Trio> out;
        for (std::size_t p = from; p < to; ++p) {
            out.push_back((*this)[p]);
        }
        return out;
    }

    std::vector<Trio> slots_;
    std::size_t head_ = 0;
    std::size_t size_ = 0;
};

enum class DivergenceKind { cs, kl, mmd };

inline std::string_view kind_name(DivergenceKind k)
{
    switch (k) {
    case DivergenceKind::cs: return "cs";
    case DivergenceKind::kl: return "kl";
    case DivergenceKind::mmd: return "mmd";
    }
    return "cs";
}

inline DivergenceKind parse_kind(std::string_view s)
{
    if (s == "cs") {
        return DivergenceKind::cs;
    }
    if (s == "kl") {
        return DivergenceKind::kl;
    }
    if (s == "mmd") {
        return DivergenceKind::mmd;
    }
    throw InvalidArgument("unknown divergence kind '" + std::string(s) + "' (expected cs, kl or mmd)");
}

struct DivergenceSettings {
    DivergenceKind kind = DivergenceKind::cs;
    double width_x = 0.1;
    double width_y = 0.1;
    /// The action enters x as action * action_spacing.
    double action_spacing = 1.0;
    int neighbors = 3;
    double ridge = 1e-3;
};

struct DivergenceReading {
    double value = 0.0;
    bool warm_up = false;
};

inline Vector encode_x(const Trio& t, double action_spacing)
{
    Vector x(t.state.size() + 1);
    x << t.state, t.action * action_spacing;
    return x;
}

/// Halves as PairedDatasets with x = [state, action], y = next state.
inline PairedDataset half_dataset(const std::vector<Trio>& trios, double action_spacing)
{
    ccs::detail::require(!trios.empty(), "half_dataset: empty half");
    const auto n = static_cast<Index>(trios.size());
    const Index ds = trios.front().state.size();
    Samples x(n, ds + 1);
    Samples y(n, trios.front().next_state.size());
    for (Index i = 0; i < n; ++i) {
        const Trio& t = trios[static_cast<std::size_t>(i)];
        x.row(i) = encode_x(t, action_spacing).transpose();
        y.row(i) = t.next_state.transpose();
    }
    return {std::move(x), std::move(y)};
}

/// D(p_new(s'|s,a); p_old(s'|s,a)) between the buffer halves. Buffers with
/// fewer than four trios report 0 with the warm-up flag set.
inline DivergenceReading buffer_divergence(const ReplayBuffer& buffer, const DivergenceSettings& cfg)
{
    if (buffer.size() < 4) {
        return {0.0, true};
    }
    const PairedDataset fresh = half_dataset(buffer.new_half(), cfg.action_spacing);
    const PairedDataset stale = half_dataset(buffer.old_half(), cfg.action_spacing);
    switch (cfg.kind) {
    case DivergenceKind::cs: return {conditional_cs(fresh, stale, cfg.width_x, cfg.width_y), false};
    case DivergenceKind::kl: return {conditional_kl(fresh, stale, KnnConfig{cfg.neighbors}).value, false};
    case DivergenceKind::mmd:
        return {conditional_mmd(fresh, stale, CmmdConfig{cfg.ridge, cfg.width_x, cfg.width_y}), false};
    }
    return {0.0, true};
}

/// Slot-indexed x-Gram K and product K .* L over a replay buffer, updated one
/// row per push so the CS reading costs O(B^2) additions instead of kernel
/// evaluations.
class BufferGram {
public:
    BufferGram(std::size_t capacity, double width_x, double width_y)
        : k_(Matrix::Zero(static_cast<Index>(capacity), static_cast<Index>(capacity))),
          kl_(Matrix::Zero(static_cast<Index>(capacity), static_cast<Index>(capacity))),
          xs_(capacity), ys_(capacity), scale_x_(-0.5 / (width_x * width_x)), scale_y_(-0.5 / (width_y * width_y))
    {
        ccs::detail::require(width_x > 0.0 && width_y > 0.0, "BufferGram: widths must be positive");
    }

    /// Call right after buffer.push(trio).
    void update(const ReplayBuffer& buffer, double action_spacing)
    {
        const std::size_t s = buffer.last_slot();
        xs_[s] = encode_x(buffer.at_slot(s), action_spacing);
        ys_[s] = buffer.at_slot(s).next_state;
        const auto sq = [](const Vector& a, const Vector& b) {
            double acc = 0.0;
            for (Index i = 0; i < a.size(); ++i) {
                const double d = a(i) - b(i);
                acc += d * d;
            }
            return acc;
        };
        for (std::size_t pos = 0; pos < buffer.size(); ++pos) {
            const std::size_t o = buffer.slot(pos);
            const double kx = o == s ? 1.0 : std::exp(scale_x_ * sq(xs_[s], xs_[o]));
            const double ly = o == s ? 1.0 : std::exp(scale_y_ * sq(ys_[s], ys_[o]));
            const auto a = static_cast<Index>(s);
            const auto b = static_cast<Index>(o);
            k_(a, b) = k_(b, a) = kx;
            kl_(a, b) = kl_(b, a) = kx * ly;
        }
    }

    /// Same value as conditional_cs on the halves (new half as p, old as q).
    /// One pass over the upper triangles of K and K .* L.
    DivergenceReading conditional_cs(const ReplayBuffer& buffer) const
    {
        if (buffer.size() < 4) {
            return {0.0, true};
        }
        const std::size_t cap = buffer.capacity();
        std::vector<int> group(cap, -1);
        for (std::size_t pos = 0; pos < buffer.size(); ++pos) {
            group[buffer.slot(pos)] = pos < buffer.old_count() ? 1 : 0;
        }
        // sums[g][i]: row i of K (or K .* L) summed over the columns of group g
        std::vector<double> k_sum[2] = {std::vector<double>(cap, 0.0), std::vector<double>(cap, 0.0)};
        std::vector<double> kl_sum[2] = {std::vector<double>(cap, 0.0), std::vector<double>(cap, 0.0)};
        for (std::size_t j = 0; j < cap; ++j) {
            const int gj = group[j];
            if (gj < 0) {
                continue;
            }
            const double* kc = k_.col(static_cast<Index>(j)).data();
            const double* klc = kl_.col(static_cast<Index>(j)).data();
            double* kj = k_sum[gj].data();
            double* klj = kl_sum[gj].data();
            for (std::size_t i = 0; i < j; ++i) {
                const int gi = group[i];
                if (gi < 0) {
                    continue;
                }
                kj[i] += kc[i];
                klj[i] += klc[i];
                k_sum[gi][j] += kc[i];
                kl_sum[gi][j] += klc[i];
            }
            kj[j] += kc[j];
            klj[j] += klc[j];
        }
        ccs::detail::SplitRowSums r;
        const auto fill = [&](int g, Vector& own, Vector& cross, Vector& num_own, Vector& num_cross, Index count) {
            own.resize(count);
            cross.resize(count);
            num_own.resize(count);
            num_cross.resize(count);
            Index at = 0;
            for (std::size_t pos = 0; pos < buffer.size(); ++pos) {
                const std::size_t i = buffer.slot(pos);
                if (group[i] != g) {
                    continue;
                }
                own(at) = k_sum[g][i];
                cross(at) = k_sum[1 - g][i];
                num_own(at) = kl_sum[g][i];
                num_cross(at) = kl_sum[1 - g][i];
                ++at;
            }
        };
        fill(0, r.p_own, r.p_cross, r.p_num_own, r.p_num_cross, static_cast<Index>(buffer.new_count()));
        fill(1, r.q_own, r.q_cross, r.q_num_own, r.q_num_cross, static_cast<Index>(buffer.old_count()));
        return {ccs::detail::combine_conditional_cs(r), false};
    }

private:
    Matrix k_;
    Matrix kl_;
    std::vector<Vector> xs_;
    std::vector<Vector> ys_;
    double scale_x_;
    double scale_y_;
};

} // namespace ccs::rl
