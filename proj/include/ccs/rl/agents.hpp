#pragma once

#include "ccs/error.hpp"
#include "ccs/random.hpp"
#include "ccs/rl/buffer.hpp"
#include "ccs/rl/environment.hpp"
#include "ccs/rl/value_function.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace ccs::rl {

struct DtgConfig {
    double discount = 0.99;
    double learning_rate = 1e-3;
    double epsilon = 0.1;
    /// Episode length: the environment is reset every rollout_steps steps
    /// while the value function and buffer persist. 0 never resets.
    int rollout_steps = 1000;
    std::size_t buffer_capacity = 2000;
    double kernel_width = 0.1;
    DivergenceKind divergence_kind = DivergenceKind::cs;
    /// Defaults to kernel_width / 2.
    std::optional<double> dictionary_threshold;
    /// Steps between divergence recomputations; the last value is reused in between.
    int refresh_interval = 10;

    void validate() const
    {
        ccs::detail::require(discount >= 0.0 && discount < 1.0, "dtg: discount must lie in [0, 1)");
        ccs::detail::require(learning_rate > 0.0, "dtg: learning rate must be positive");
        ccs::detail::require(epsilon >= 0.0 && epsilon <= 1.0, "dtg: epsilon must lie in [0, 1]");
        ccs::detail::require(rollout_steps >= 0, "dtg: rollout_steps must be non-negative");
        ccs::detail::require(buffer_capacity >= 4, "dtg: buffer capacity must be at least 4");
        ccs::detail::require(kernel_width > 0.0, "dtg: kernel width must be positive");
        ccs::detail::require(refresh_interval >= 1, "dtg: refresh interval must be positive");
    }
};

struct EpisodeLog {
    std::string agent;
    std::string environment;
    std::uint64_t seed = 0;
    int steps_taken = 0;
    std::optional<int> steps_to_goal;
    bool success = false;
    /// Plane projection of every state entered, one per step.
    std::vector<std::array<double, 2>> visits;
    PlaneBounds bounds{};

    /// Steps to goal, or the step cap for failures.
    int cost(int max_steps) const { return steps_to_goal.value_or(max_steps); }
};

/// Replaces the buffer divergence, e.g. to stub it out in tests.
using DivergenceSource = std::function<double(const ReplayBuffer&)>;

/// Kernel TD learner on the divergence between new and old buffer halves.
class DtgAgent {
public:
    struct StepOutcome {
        State next;
        bool at_goal = false;
        int action = 0;
        double divergence = 0.0;
        bool warm_up = false;
        double td_error = 0.0;
    };

    DtgAgent(const Environment& env, const DtgConfig& cfg, std::uint64_t seed, DivergenceSource source = {})
        : env_(&env), cfg_(cfg), values_(cfg.kernel_width, cfg.dictionary_threshold.value_or(cfg.kernel_width / 2.0)),
          buffer_(cfg.buffer_capacity), gram_(cfg.buffer_capacity, cfg.kernel_width, cfg.kernel_width),
          source_(std::move(source)), rng_(stream_seed(seed, 0, 61)),
          spacing_(env.action_count() > 1 ? 1.0 / (env.action_count() - 1) : 0.0)
    {
        cfg.validate();
    }

    Vector encode(const State& s, int action) const
    {
        const Vector f = env_->features(s);
        Vector z(f.size() + 1);
        z << f, action * spacing_;
        return z;
    }

    double value(const State& s, int action) const { return values_(encode(s, action)); }

    double max_value(const State& s) const
    {
        double best = value(s, 0);
        for (int a = 1; a < env_->action_count(); ++a) {
            best = std::max(best, value(s, a));
        }
        return best;
    }

    /// Argmax with ties to the lowest action index.
    int greedy(const State& s) const
    {
        int best = 0;
        double top = value(s, 0);
        for (int a = 1; a < env_->action_count(); ++a) {
            const double v = value(s, a);
            if (v > top) {
                top = v;
                best = a;
            }
        }
        return best;
    }

    StepOutcome step(const State& s)
    {
        StepOutcome out;
        out.action = uniform01(rng_) < cfg_.epsilon
                         ? static_cast<int>(uniform_index(rng_, static_cast<std::size_t>(env_->action_count())))
                         : greedy(s);
        StepResult r = env_->step(s, out.action);
        buffer_.push(Trio{env_->features(r.next), env_->features(s), out.action});
        if (!source_ && cfg_.divergence_kind == DivergenceKind::cs) {
            gram_.update(buffer_, spacing_);
        }
        refresh_divergence();
        out.divergence = divergence_;
        out.warm_up = warm_up_;
        const Vector z = encode(s, out.action);
        out.td_error = divergence_ + cfg_.discount * max_value(r.next) - values_(z);
        values_.update(z, cfg_.learning_rate * out.td_error);
        out.next = std::move(r.next);
        out.at_goal = r.at_goal;
        return out;
    }

    const KernelValueFunction& values() const noexcept { return values_; }
    const ReplayBuffer& buffer() const noexcept { return buffer_; }
    const DtgConfig& config() const noexcept { return cfg_; }
    double action_spacing() const noexcept { return spacing_; }
    Rng& rng() noexcept { return rng_; }

private:
    void refresh_divergence()
    {
        ++since_refresh_;
        if (!warm_up_ && since_refresh_ < cfg_.refresh_interval && computed_) {
            return;
        }
        since_refresh_ = 0;
        computed_ = true;
        if (source_) {
            divergence_ = source_(buffer_);
            warm_up_ = false;
            return;
        }
        DivergenceReading reading;
        if (cfg_.divergence_kind == DivergenceKind::cs) {
            reading = gram_.conditional_cs(buffer_);
        }
        else {
            reading = buffer_divergence(buffer_, DivergenceSettings{cfg_.divergence_kind, cfg_.kernel_width,
                                                                    cfg_.kernel_width, spacing_});
        }
        divergence_ = reading.value;
        warm_up_ = reading.warm_up;
    }

    const Environment* env_;
    DtgConfig cfg_;
    KernelValueFunction values_;
    ReplayBuffer buffer_;
    BufferGram gram_;
    DivergenceSource source_;
    Rng rng_;
    double spacing_;
    double divergence_ = 0.0;
    bool warm_up_ = true;
    bool computed_ = false;
    int since_refresh_ = 0;
};

namespace detail {

template <class Policy>
EpisodeLog run_loop(const Environment& env, std::string agent, int max_steps, int rollout_steps, std::uint64_t seed,
                    Rng& rng, Policy&& act)
{
    ccs::detail::require(max_steps >= 1, "run: max_steps must be positive");
    ccs::detail::require(rollout_steps >= 0, "run: rollout_steps must be non-negative");
    EpisodeLog log;
    log.agent = std::move(agent);
    log.environment = env.name();
    log.seed = seed;
    log.bounds = env.plane_bounds();
    log.visits.reserve(static_cast<std::size_t>(max_steps));
    State s = env.reset(rng);
    for (int t = 0; t < max_steps; ++t) {
        StepResult r = act(s);
        log.visits.push_back(env.plane(r.next));
        log.steps_taken = t + 1;
        if (r.at_goal) {
            log.success = true;
            log.steps_to_goal = t + 1;
            break;
        }
        s = std::move(r.next);
        if (rollout_steps > 0 && (t + 1) % rollout_steps == 0) {
            s = env.reset(rng);
        }
    }
    return log;
}

} // namespace detail

/// Runs until the goal is first reached or max_steps elapse.
inline EpisodeLog run_dtg(const Environment& env, const DtgConfig& cfg, int max_steps, std::uint64_t seed,
                          DivergenceSource source = {})
{
    DtgAgent agent(env, cfg, seed, std::move(source));
    return detail::run_loop(env, "dtg-" + std::string(kind_name(cfg.divergence_kind)), max_steps, cfg.rollout_steps,
                            seed, agent.rng(), [&](const State& s) {
                                DtgAgent::StepOutcome o = agent.step(s);
                                return StepResult{std::move(o.next), o.at_goal};
                            });
}

struct QLearningConfig {
    double discount = 0.99;
    double learning_rate = 1e-3;
    double epsilon = 0.5;
    int rollout_steps = 1000;
};

/// Tabular Q-learning on env.cell(); reward 1 at the goal and 0 elsewhere.
inline EpisodeLog run_qlearning(const Environment& env, const QLearningConfig& cfg, int max_steps, std::uint64_t seed)
{
    ccs::detail::require(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0, "qlearning: epsilon must lie in [0, 1]");
    const auto actions = static_cast<std::size_t>(env.action_count());
    std::vector<double> q(env.cell_count() * actions, 0.0);
    Rng rng(stream_seed(seed, 0, 62));
    const auto row = [&](const State& s) { return q.begin() + static_cast<std::ptrdiff_t>(env.cell(s) * actions); };
    return detail::run_loop(env, "qlearning", max_steps, cfg.rollout_steps, seed, rng, [&](const State& s) {
        const auto qs = row(s);
        std::size_t a = 0;
        if (uniform01(rng) < cfg.epsilon) {
            a = uniform_index(rng, actions);
        }
        else {
            for (std::size_t b = 1; b < actions; ++b) {
                if (qs[static_cast<std::ptrdiff_t>(b)] > qs[static_cast<std::ptrdiff_t>(a)]) {
                    a = b;
                }
            }
        }
        StepResult r = env.step(s, static_cast<int>(a));
        const double reward = r.at_goal ? 1.0 : 0.0;
        const auto qn = row(r.next);
        double best = qn[0];
        for (std::size_t b = 1; b < actions; ++b) {
            best = std::max(best, qn[static_cast<std::ptrdiff_t>(b)]);
        }
        const double target = r.at_goal ? reward : reward + cfg.discount * best;
        qs[static_cast<std::ptrdiff_t>(a)] += cfg.learning_rate * (target - qs[static_cast<std::ptrdiff_t>(a)]);
        return r;
    });
}

/// Uniformly random actions under the same episode protocol.
inline EpisodeLog run_random(const Environment& env, int max_steps, std::uint64_t seed, int rollout_steps = 1000,
                             std::vector<int>* actions_taken = nullptr)
{
    Rng rng(stream_seed(seed, 0, 63));
    const auto actions = static_cast<std::size_t>(env.action_count());
    return detail::run_loop(env, "random", max_steps, rollout_steps, seed, rng, [&](const State& s) {
        const int a = static_cast<int>(uniform_index(rng, actions));
        if (actions_taken != nullptr) {
            actions_taken->push_back(a);
        }
        return env.step(s, a);
    });
}

// ---------------------------------------------------------------------------

struct OccupancyGrid {
    /// counts(i, j): bin i along the first plane axis, j along the second.
    Matrix counts;

    double total() const { return counts.sum(); }
};

inline OccupancyGrid occupancy_grid(const EpisodeLog& log, int bins_x, int bins_y)
{
    ccs::detail::require(bins_x >= 1 && bins_y >= 1, "occupancy_grid: bin counts must be positive");
    OccupancyGrid g{Matrix::Zero(bins_x, bins_y)};
    for (const auto& v : log.visits) {
        const std::size_t i = detail::bin(v[0], log.bounds.lo[0], log.bounds.hi[0], static_cast<std::size_t>(bins_x));
        const std::size_t j = detail::bin(v[1], log.bounds.lo[1], log.bounds.hi[1], static_cast<std::size_t>(bins_y));
        g.counts(static_cast<Index>(i), static_cast<Index>(j)) += 1.0;
    }
    return g;
}

/// log((count + 1) / (total + cells)).
inline Matrix log_occupancy(const OccupancyGrid& g)
{
    const double denom = g.total() + static_cast<double>(g.counts.size());
    return ((g.counts.array() + 1.0) / denom).log().matrix();
}

/// Shannon entropy (nats) of the empirical occupancy distribution.
inline double visitation_entropy(const OccupancyGrid& g)
{
    const double total = g.total();
    if (total <= 0.0) {
        return 0.0;
    }
    double h = 0.0;
    for (Index i = 0; i < g.counts.size(); ++i) {
        const double p = g.counts.data()[i] / total;
        if (p > 0.0) {
            h -= p * std::log(p);
        }
    }
    return h;
}

} // namespace ccs::rl
