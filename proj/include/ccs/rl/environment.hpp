#pragma once

#include "ccs/error.hpp"
#include "ccs/random.hpp"
#include "ccs/types.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <queue>
#include <string>
#include <utility>
#include <vector>

namespace ccs::rl {

using State = Vector;

struct StepResult {
    State next;
    bool at_goal = false;
};

struct PlaneBounds {
    std::array<double, 2> lo;
    std::array<double, 2> hi;
};

/// Deterministic-transition environment with a finite ordered action set.
/// The state is passed in and out explicitly; environments hold no episode state.
class Environment {
public:
    virtual ~Environment() = default;

    virtual std::string name() const = 0;
    virtual int state_dim() const = 0;
    virtual int action_count() const = 0;
    virtual State reset(Rng& rng) const = 0;
    virtual StepResult step(const State& s, int action) const = 0;

    /// State rescaled to roughly [0, 1] per coordinate, the space kernels act on.
    virtual Vector features(const State& s) const = 0;

    /// 2-D projection used for occupancy plots, with its bounding box.
    virtual std::array<double, 2> plane(const State& s) const = 0;
    virtual PlaneBounds plane_bounds() const = 0;

    /// Discretization for tabular learners.
    virtual std::size_t cell_count() const = 0;
    virtual std::size_t cell(const State& s) const = 0;
};

namespace detail {

inline std::size_t bin(double v, double lo, double hi, std::size_t bins)
{
    const double t = (v - lo) / (hi - lo);
    const auto b = static_cast<std::ptrdiff_t>(std::floor(t * static_cast<double>(bins)));
    return static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1));
}

} // namespace detail

// ---------------------------------------------------------------------------

/// Perfect maze on a width x height grid carved by randomized depth-first
/// search. Start is cell (0, 0), the exit is (width-1, height-1).
/// Actions: 0 left, 1 right, 2 up (y+1), 3 down (y-1). Bumping a wall is a no-op.
class MazeEnv final : public Environment {
public:
    enum Move : int { left = 0, right = 1, up = 2, down = 3 };

    MazeEnv(int width, int height, std::uint64_t layout_seed) : width_(width), height_(height), seed_(layout_seed)
    {
        ccs::detail::require(width >= 2 && height >= 2, "maze: width and height must be at least 2");
        open_.assign(static_cast<std::size_t>(width * height), 0);
        carve();
    }

    std::string name() const override { return "maze" + std::to_string(width_) + "x" + std::to_string(height_); }
    int state_dim() const override { return 2; }
    int action_count() const override { return 4; }
    int width() const { return width_; }
    int height() const { return height_; }
    std::uint64_t layout_seed() const { return seed_; }

    State reset(Rng&) const override { return start(); }
    State start() const { return State{{0.0, 0.0}}; }
    State exit() const { return State{{static_cast<double>(width_ - 1), static_cast<double>(height_ - 1)}}; }

    bool is_open(int x, int y, int move) const
    {
        return (open_[index(x, y)] & (1u << static_cast<unsigned>(move))) != 0;
    }

    StepResult step(const State& s, int action) const override
    {
        ccs::detail::require(action >= 0 && action < 4, "maze: action out of range");
        auto x = static_cast<int>(s(0));
        auto y = static_cast<int>(s(1));
        if (is_open(x, y, action)) {
            x += kDx[static_cast<std::size_t>(action)];
            y += kDy[static_cast<std::size_t>(action)];
        }
        return {State{{static_cast<double>(x), static_cast<double>(y)}}, x == width_ - 1 && y == height_ - 1};
    }

    Vector features(const State& s) const override
    {
        return Vector{{s(0) / (width_ - 1), s(1) / (height_ - 1)}};
    }

    std::array<double, 2> plane(const State& s) const override { return {s(0), s(1)}; }
    PlaneBounds plane_bounds() const override { return {{-0.5, -0.5}, {width_ - 0.5, height_ - 0.5}}; }
    std::size_t cell_count() const override { return open_.size(); }
    std::size_t cell(const State& s) const override { return index(static_cast<int>(s(0)), static_cast<int>(s(1))); }

    /// BFS distance from start to exit; -1 if unreachable.
    int shortest_path() const
    {
        std::vector<int> dist(open_.size(), -1);
        std::queue<std::pair<int, int>> frontier;
        dist[0] = 0;
        frontier.emplace(0, 0);
        while (!frontier.empty()) {
            const auto [x, y] = frontier.front();
            frontier.pop();
            for (int m = 0; m < 4; ++m) {
                if (!is_open(x, y, m)) {
                    continue;
                }
                const int nx = x + kDx[static_cast<std::size_t>(m)];
                const int ny = y + kDy[static_cast<std::size_t>(m)];
                if (dist[index(nx, ny)] < 0) {
                    dist[index(nx, ny)] = dist[index(x, y)] + 1;
                    frontier.emplace(nx, ny);
                }
            }
        }
        return dist[index(width_ - 1, height_ - 1)];
    }

    friend bool operator==(const MazeEnv& a, const MazeEnv& b)
    {
        return a.width_ == b.width_ && a.height_ == b.height_ && a.open_ == b.open_;
    }

private:
    static constexpr std::array<int, 4> kDx{-1, 1, 0, 0};
    static constexpr std::array<int, 4> kDy{0, 0, 1, -1};
    static constexpr std::array<int, 4> kOpposite{right, left, down, up};

    std::size_t index(int x, int y) const { return static_cast<std::size_t>(y * width_ + x); }

    void carve()
    {
        Rng rng(stream_seed(seed_, 0, 51));
        std::vector<bool> seen(open_.size(), false);
        std::vector<std::pair<int, int>> stack{{0, 0}};
        seen[0] = true;
        while (!stack.empty()) {
            const auto [x, y] = stack.back();
            std::array<int, 4> moves{};
            std::size_t count = 0;
            for (int m = 0; m < 4; ++m) {
                const int nx = x + kDx[static_cast<std::size_t>(m)];
                const int ny = y + kDy[static_cast<std::size_t>(m)];
                if (nx >= 0 && nx < width_ && ny >= 0 && ny < height_ && !seen[index(nx, ny)]) {
                    moves[count++] = m;
                }
            }
            if (count == 0) {
                stack.pop_back();
                continue;
            }
            const int m = moves[uniform_index(rng, count)];
            const int nx = x + kDx[static_cast<std::size_t>(m)];
            const int ny = y + kDy[static_cast<std::size_t>(m)];
            open_[index(x, y)] |= static_cast<std::uint8_t>(1u << static_cast<unsigned>(m));
            open_[index(nx, ny)] |=
                static_cast<std::uint8_t>(1u << static_cast<unsigned>(kOpposite[static_cast<std::size_t>(m)]));
            seen[index(nx, ny)] = true;
            stack.emplace_back(nx, ny);
        }
    }

    int width_;
    int height_;
    std::uint64_t seed_;
    std::vector<std::uint8_t> open_;
};

inline MazeEnv maze_env(int width = 20, int height = 20, std::uint64_t layout_seed = 0)
{
    return {width, height, layout_seed};
}

// ---------------------------------------------------------------------------

/// Classic mountain car: force 0.001, gravity 0.0025 with cos(3p) slope,
/// |v| <= 0.07, p in [-1.2, 0.6] with an inelastic left wall, goal p >= 0.5.
/// Start position uniform in [-0.6, -0.4] at rest. Actions 0, 1, 2 push -1, 0, +1.
class MountainCarEnv final : public Environment {
public:
    static constexpr double kMinPosition = -1.2;
    static constexpr double kMaxPosition = 0.6;
    static constexpr double kMaxSpeed = 0.07;
    static constexpr double kGoal = 0.5;
    static constexpr double kForce = 0.001;
    static constexpr double kGravity = 0.0025;
    static constexpr std::size_t kBins = 20;

    std::string name() const override { return "mountain-car"; }
    int state_dim() const override { return 2; }
    int action_count() const override { return 3; }

    State reset(Rng& rng) const override { return State{{-0.6 + 0.2 * uniform01(rng), 0.0}}; }

    StepResult step(const State& s, int action) const override
    {
        ccs::detail::require(action >= 0 && action < 3, "mountain car: action out of range");
        double v = s(1) + (action - 1) * kForce - kGravity * std::cos(3.0 * s(0));
        v = std::clamp(v, -kMaxSpeed, kMaxSpeed);
        double p = std::clamp(s(0) + v, kMinPosition, kMaxPosition);
        if (p == kMinPosition && v < 0.0) {
            v = 0.0;
        }
        return {State{{p, v}}, p >= kGoal};
    }

    Vector features(const State& s) const override
    {
        return Vector{{(s(0) - kMinPosition) / (kMaxPosition - kMinPosition), (s(1) + kMaxSpeed) / (2.0 * kMaxSpeed)}};
    }

    std::array<double, 2> plane(const State& s) const override { return {s(0), s(1)}; }
    PlaneBounds plane_bounds() const override { return {{kMinPosition, -kMaxSpeed}, {kMaxPosition, kMaxSpeed}}; }
    std::size_t cell_count() const override { return kBins * kBins; }
    std::size_t cell(const State& s) const override
    {
        return detail::bin(s(0), kMinPosition, kMaxPosition, kBins) * kBins +
               detail::bin(s(1), -kMaxSpeed, kMaxSpeed, kBins);
    }
};

inline MountainCarEnv mountain_car_env() { return {}; }

// ---------------------------------------------------------------------------

/// Pendulum with theta measured from upright: g = 10, m = l = 1, dt = 0.05,
/// |omega| <= 8, viscous damping 0.1, torque levels evenly spaced in [-1, 1].
/// State (cos theta, sin theta, omega, steps held upright); starts hanging at
/// rest. Goal: |theta| < 0.1 for 10 consecutive steps.
class PendulumEnv final : public Environment {
public:
    static constexpr double kGravity = 10.0;
    static constexpr double kDt = 0.05;
    static constexpr double kMaxSpeed = 8.0;
    static constexpr double kDamping = 0.1;
    static constexpr double kUprightTolerance = 0.1;
    static constexpr int kHoldSteps = 10;
    static constexpr std::size_t kBins = 20;

    explicit PendulumEnv(int torque_levels = 5) : levels_(torque_levels)
    {
        ccs::detail::require(torque_levels >= 2, "pendulum: need at least two torque levels");
    }

    std::string name() const override { return "pendulum"; }
    int state_dim() const override { return 3; }
    int action_count() const override { return levels_; }

    double torque(int action) const { return -1.0 + 2.0 * action / (levels_ - 1); }

    static State make_state(double theta, double omega, int held = 0)
    {
        return State{{std::cos(theta), std::sin(theta), omega, static_cast<double>(held)}};
    }
    static double angle(const State& s) { return std::atan2(s(1), s(0)); }

    State reset(Rng&) const override { return make_state(std::numbers::pi, 0.0); }

    StepResult step(const State& s, int action) const override
    {
        ccs::detail::require(action >= 0 && action < levels_, "pendulum: action out of range");
        const double theta = angle(s);
        double omega = s(2) + (1.5 * kGravity * std::sin(theta) + 3.0 * torque(action) - kDamping * s(2)) * kDt;
        omega = std::clamp(omega, -kMaxSpeed, kMaxSpeed);
        const double next = theta + omega * kDt;
        const int held = std::abs(std::remainder(next, 2.0 * std::numbers::pi)) < kUprightTolerance
                             ? static_cast<int>(s(3)) + 1
                             : 0;
        return {make_state(next, omega, held), held >= kHoldSteps};
    }

    Vector features(const State& s) const override
    {
        return Vector{{0.5 * (s(0) + 1.0), 0.5 * (s(1) + 1.0), (s(2) + kMaxSpeed) / (2.0 * kMaxSpeed)}};
    }

    /// Position of the free end.
    std::array<double, 2> plane(const State& s) const override { return {s(1), s(0)}; }
    PlaneBounds plane_bounds() const override { return {{-1.0, -1.0}, {1.0, 1.0}}; }
    std::size_t cell_count() const override { return kBins * kBins; }
    std::size_t cell(const State& s) const override
    {
        return detail::bin(angle(s), -std::numbers::pi, std::numbers::pi, kBins) * kBins +
               detail::bin(s(2), -kMaxSpeed, kMaxSpeed, kBins);
    }

private:
    int levels_;
};

inline PendulumEnv pendulum_env(int torque_levels = 5) { return PendulumEnv(torque_levels); }

/// Environments by CLI name: maze<N> (N x N, layout seeded), mountain-car, pendulum.
inline std::unique_ptr<Environment> make_environment(const std::string& name, std::uint64_t layout_seed = 0)
{
    if (name == "mountain-car") {
        return std::make_unique<MountainCarEnv>();
    }
    if (name == "pendulum") {
        return std::make_unique<PendulumEnv>();
    }
    if (name.starts_with("maze") && name.size() > 4 &&
        std::all_of(name.begin() + 4, name.end(), [](char c) { return c >= '0' && c <= '9'; })) {
        const int side = std::stoi(name.substr(4));
        if (side >= 2 && side <= 1000) {
            return std::make_unique<MazeEnv>(side, side, layout_seed);
        }
    }
    throw InvalidArgument("unknown environment '" + name + "' (expected mazeN, mountain-car or pendulum)");
}

} // namespace ccs::rl
