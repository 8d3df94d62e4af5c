#include "ccs/rl.hpp"

#include <catch_amalgamated.hpp>

#include <numbers>
#include <set>

using namespace ccs;
using namespace ccs::rl;
using Catch::Approx;

namespace {

Trio trio(double s, int a, double next)
{
    return {Vector::Constant(1, next), Vector::Constant(1, s), a};
}

/// Buffer whose old half follows next = s + shift_old and new half next = s + shift_new.
ReplayBuffer two_kernel_buffer(std::size_t half, double shift_old, double shift_new, std::uint64_t seed)
{
    Rng rng(seed);
    ReplayBuffer b(2 * half);
    for (std::size_t i = 0; i < 2 * half; ++i) {
        const double s = uniform01(rng);
        const double shift = i < half ? shift_old : shift_new;
        b.push(trio(s, 0, s + shift + 0.05 * standard_normal(rng)));
    }
    return b;
}

} // namespace

TEST_CASE("maze generation")
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const MazeEnv m = maze_env(10, 7, seed);
        CHECK(m.shortest_path() >= 15);
        int edges = 0;
        for (int x = 0; x < 10; ++x) {
            for (int y = 0; y < 7; ++y) {
                edges += (m.is_open(x, y, MazeEnv::right) ? 1 : 0) + (m.is_open(x, y, MazeEnv::up) ? 1 : 0);
            }
        }
        CHECK(edges == 10 * 7 - 1); // spanning tree
    }
    CHECK(maze_env(10, 10, 3) == maze_env(10, 10, 3));
    CHECK_FALSE(maze_env(10, 10, 3) == maze_env(10, 10, 4));
    CHECK_THROWS_AS(maze_env(1, 5, 0), InvalidArgument);

    const MazeEnv m = maze_env(6, 6, 2);
    for (int x = 0; x < 6; ++x) {
        for (int y = 0; y < 6; ++y) {
            const State s{{static_cast<double>(x), static_cast<double>(y)}};
            for (int a = 0; a < 4; ++a) {
                const StepResult r = m.step(s, a);
                if (!m.is_open(x, y, a)) {
                    CHECK(r.next == s);
                }
                else {
                    CHECK((r.next - s).cwiseAbs().sum() == 1.0);
                }
                CHECK(r.at_goal == (r.next(0) == 5.0 && r.next(1) == 5.0));
            }
        }
    }
    CHECK_FALSE(m.is_open(0, 0, MazeEnv::left));
    CHECK_FALSE(m.is_open(0, 0, MazeEnv::down));
}

TEST_CASE("mountain car dynamics")
{
    const MountainCarEnv car = mountain_car_env();
    const double bottom = -std::numbers::pi / 6.0;
    State s{{bottom, 0.0}};
    for (int t = 0; t < 500; ++t) {
        s = car.step(s, 1).next;
        CHECK(std::abs(s(1)) <= MountainCarEnv::kGravity + 1e-12);
    }

    State push{{-0.5, 0.0}};
    bool reached = false;
    for (int t = 0; t < 200; ++t) {
        const StepResult r = car.step(push, 2);
        reached = reached || r.at_goal;
        push = r.next;
    }
    CHECK_FALSE(reached);

    CHECK(car.step(State{{0.45, 0.07}}, 1).at_goal);
    CHECK_FALSE(car.step(State{{0.40, 0.05}}, 1).at_goal);
    const StepResult wall = car.step(State{{-1.19, -0.07}}, 0);
    CHECK(wall.next(0) == MountainCarEnv::kMinPosition);
    CHECK(wall.next(1) == 0.0);

    Rng rng(1);
    for (int i = 0; i < 50; ++i) {
        const State r = car.reset(rng);
        CHECK(r(0) >= -0.6);
        CHECK(r(0) <= -0.4);
        CHECK(r(1) == 0.0);
    }
}

TEST_CASE("pendulum dynamics")
{
    const PendulumEnv p = pendulum_env(5);
    CHECK(p.torque(0) == -1.0);
    CHECK(p.torque(2) == 0.0);
    CHECK(p.torque(4) == 1.0);
    CHECK_THROWS_AS(pendulum_env(1), InvalidArgument);

    Rng rng(0);
    State s = p.reset(rng);
    for (int t = 0; t < 1000; ++t) {
        s = p.step(s, 2).next;
    }
    CHECK(std::abs(std::abs(PendulumEnv::angle(s)) - std::numbers::pi) < 1e-6);

    // released from horizontal, damping makes successive swing peaks shrink
    State swing = PendulumEnv::make_state(std::numbers::pi / 2.0, 0.0);
    std::vector<double> peaks;
    double prev = 0.0;
    double prev2 = 0.0;
    for (int t = 0; t < 2000; ++t) {
        swing = p.step(swing, 2).next;
        const double w = std::abs(swing(2));
        if (prev > prev2 && prev >= w) {
            peaks.push_back(prev);
        }
        prev2 = prev;
        prev = w;
        CHECK(swing.head(2).squaredNorm() == Approx(1.0).epsilon(1e-12));
    }
    REQUIRE(peaks.size() >= 4);
    for (std::size_t i = 1; i < peaks.size(); ++i) {
        CHECK(peaks[i] <= peaks[i - 1] + 1e-12);
    }

    // holding upright for ten steps reaches the goal
    State up = PendulumEnv::make_state(0.0, 0.0);
    int goal_at = -1;
    for (int t = 0; t < 10 && goal_at < 0; ++t) {
        const StepResult r = p.step(up, 2);
        if (r.at_goal) {
            goal_at = t + 1;
        }
        up = r.next;
    }
    CHECK(goal_at == 10);
}

TEST_CASE("environment registry")
{
    CHECK(make_environment("maze10", 1)->cell_count() == 100);
    CHECK(make_environment("mountain-car")->action_count() == 3);
    CHECK(make_environment("pendulum")->state_dim() == 3);
    CHECK_THROWS_AS(make_environment("maze"), InvalidArgument);
    CHECK_THROWS_AS(make_environment("cartpole"), InvalidArgument);
}

TEST_CASE("replay buffer fifo and halves")
{
    ReplayBuffer b(4);
    for (int i = 0; i < 3; ++i) {
        b.push(trio(i, 0, i));
    }
    CHECK(b.old_count() == 1);
    CHECK(b.new_count() == 2);
    for (int i = 3; i < 5; ++i) {
        b.push(trio(i, 0, i));
    }
    CHECK(b.size() == 4);
    CHECK(b[0].state(0) == 1.0); // trio 0 was evicted
    const auto old = b.old_half();
    const auto fresh = b.new_half();
    REQUIRE(old.size() == 2);
    REQUIRE(fresh.size() == 2);
    CHECK(old[0].state(0) == 1.0);
    CHECK(old[1].state(0) == 2.0);
    CHECK(fresh[0].state(0) == 3.0);
    CHECK(fresh[1].state(0) == 4.0);
    CHECK_THROWS_AS(ReplayBuffer(1), InvalidArgument);
}

TEST_CASE("buffer divergence")
{
    ReplayBuffer small(10);
    small.push(trio(0.1, 0, 0.2));
    small.push(trio(0.3, 1, 0.4));
    small.push(trio(0.5, 0, 0.6));
    CHECK(buffer_divergence(small, {}).warm_up);
    CHECK(buffer_divergence(small, {}).value == 0.0);

    ReplayBuffer same(6);
    for (int rep = 0; rep < 2; ++rep) {
        same.push(trio(0.1, 0, 0.2));
        same.push(trio(0.4, 1, 0.3));
        same.push(trio(0.7, 0, 0.9));
    }
    DivergenceSettings cs;
    cs.width_x = cs.width_y = 0.3;
    CHECK(buffer_divergence(same, cs).value == 0.0);

    int larger = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        const double shifted = buffer_divergence(two_kernel_buffer(60, 0.0, 0.3, stream_seed(r, 0)), cs).value;
        const double steady = buffer_divergence(two_kernel_buffer(60, 0.0, 0.0, stream_seed(r, 1)), cs).value;
        larger += shifted > steady ? 1 : 0;
    }
    CHECK(larger >= 18);

    // the backend switch leaves the halves untouched
    const ReplayBuffer b = two_kernel_buffer(30, 0.0, 0.3, 9);
    DivergenceSettings kl = cs;
    kl.kind = DivergenceKind::kl;
    DivergenceSettings mmd = cs;
    mmd.kind = DivergenceKind::mmd;
    const PairedDataset fresh = half_dataset(b.new_half(), 1.0);
    const PairedDataset stale = half_dataset(b.old_half(), 1.0);
    CHECK(buffer_divergence(b, cs).value == conditional_cs(fresh, stale, 0.3, 0.3));
    CHECK(buffer_divergence(b, kl).value == conditional_kl(fresh, stale, KnnConfig{3}).value);
    CHECK(buffer_divergence(b, mmd).value == conditional_mmd(fresh, stale, CmmdConfig{1e-3, 0.3, 0.3}));
    CHECK(parse_kind("mmd") == DivergenceKind::mmd);
    CHECK_THROWS_AS(parse_kind("js"), InvalidArgument);
}

TEST_CASE("incremental buffer gram matches the direct estimator")
{
    Rng rng(5);
    ReplayBuffer b(12);
    BufferGram g(12, 0.4, 0.3);
    for (int t = 0; t < 40; ++t) {
        const Vector s = Vector::Random(2);
        const int a = static_cast<int>(uniform_index(rng, 3));
        b.push(Trio{s * 0.5 + Vector::Constant(2, 0.1 * a), s, a});
        g.update(b, 0.5);
        const DivergenceReading fast = g.conditional_cs(b);
        const DivergenceReading direct = buffer_divergence(b, DivergenceSettings{DivergenceKind::cs, 0.4, 0.3, 0.5});
        CHECK(fast.warm_up == direct.warm_up);
        CHECK(fast.value == Approx(direct.value).margin(1e-10));
    }
}

TEST_CASE("kernel value function")
{
    KernelValueFunction v(0.5, 0.0);
    const Vector z1 = Vector::Constant(2, 0.1);
    const Vector z2 = Vector::Constant(2, 0.7);
    const Vector q{{0.3, 0.2}};
    CHECK(v(q) == 0.0);
    v.update(z1, 2.0);
    v.update(z2, -1.0);
    const double expected =
        2.0 * std::exp(-(q - z1).squaredNorm() / 0.5) - std::exp(-(q - z2).squaredNorm() / 0.5);
    CHECK(v(q) == Approx(expected).epsilon(1e-14));
    const double before = v(q);
    v.update(Vector::Constant(2, 0.4), 0.0);
    CHECK(v(q) == before);
    CHECK(v.size() == 3);

    KernelValueFunction merged(0.5, 0.1);
    merged.update(z1, 1.0);
    merged.update(z1 + Vector::Constant(2, 0.05), 1.0);
    CHECK(merged.size() == 1);
    CHECK(merged.coefficients()[0] == 2.0);
    merged.update(z2, 1.0);
    CHECK(merged.size() == 2);
}

TEST_CASE("dtg step")
{
    const MazeEnv maze = maze_env(5, 5, 1);
    DtgConfig cfg;
    cfg.epsilon = 0.0;
    const DivergenceSource constant = [](const ReplayBuffer&) { return 0.7; };

    DtgAgent agent(maze, cfg, 0, constant);
    const State start = maze.start();
    CHECK(agent.greedy(start) == 0);
    const DtgAgent::StepOutcome o = agent.step(start);
    CHECK(o.action == 0);
    CHECK(o.divergence == 0.7);
    CHECK(agent.value(start, 0) == Approx(cfg.learning_rate * 0.7).epsilon(1e-14));
    CHECK(agent.buffer().size() == 1);

    // with no discount the error is D - v(s, a)
    DtgConfig myopic = cfg;
    myopic.discount = 0.0;
    DtgAgent m(maze, myopic, 0, constant);
    m.step(start);
    const double v = m.value(start, 0);
    const DtgAgent::StepOutcome second = m.step(start);
    CHECK(second.td_error == Approx(0.7 - v).epsilon(1e-14));

    // a divergence stuck at zero never moves the values
    DtgConfig noisy = cfg;
    noisy.epsilon = 0.3;
    DtgAgent still(maze, noisy, 4, [](const ReplayBuffer&) { return 0.0; });
    State s = start;
    for (int t = 0; t < 300; ++t) {
        s = still.step(s).next;
    }
    for (double c : still.values().coefficients()) {
        CHECK(c == 0.0);
    }

    DtgConfig bad = cfg;
    bad.discount = 1.0;
    CHECK_THROWS_AS(DtgAgent(maze, bad, 0), InvalidArgument);
    bad = cfg;
    bad.refresh_interval = 0;
    CHECK_THROWS_AS(DtgAgent(maze, bad, 0), InvalidArgument);
}

TEST_CASE("divergence refresh cadence")
{
    const MazeEnv maze = maze_env(5, 5, 1);
    DtgConfig cfg;
    cfg.refresh_interval = 5;
    int calls = 0;
    DtgAgent agent(maze, cfg, 2, [&](const ReplayBuffer&) { return static_cast<double>(++calls); });
    State s = maze.start();
    std::vector<double> seen;
    for (int t = 0; t < 12; ++t) {
        const auto o = agent.step(s);
        seen.push_back(o.divergence);
        s = o.next;
    }
    CHECK(calls == 3);
    CHECK(seen[0] == 1.0);
    CHECK(seen[4] == 1.0);
    CHECK(seen[5] == 2.0);
    CHECK(seen[11] == 3.0);
}

TEST_CASE("runners are deterministic")
{
    const MazeEnv maze = maze_env(6, 6, 0);
    DtgConfig cfg;
    const EpisodeLog a = run_dtg(maze, cfg, 400, 3);
    const EpisodeLog b = run_dtg(maze, cfg, 400, 3);
    CHECK(a.visits == b.visits);
    CHECK(a.steps_taken == b.steps_taken);
    CHECK(run_random(maze, 500, 2).visits == run_random(maze, 500, 2).visits);
    CHECK(run_qlearning(maze, {}, 500, 2).visits == run_qlearning(maze, {}, 500, 2).visits);
    CHECK_FALSE(run_random(maze, 500, 2).visits == run_random(maze, 500, 3).visits);

    const MountainCarEnv car;
    CHECK(run_dtg(car, cfg, 200, 1).visits == run_dtg(car, cfg, 200, 1).visits);
    CHECK_THROWS_AS(run_random(maze, 0, 1), InvalidArgument);
}

TEST_CASE("episode logs")
{
    const MazeEnv tiny = maze_env(2, 2, 0);
    const EpisodeLog r = run_random(tiny, 10000, 1);
    REQUIRE(r.success);
    CHECK(*r.steps_to_goal == r.steps_taken);
    CHECK(r.visits.size() == static_cast<std::size_t>(r.steps_taken));
    CHECK(r.cost(10000) == r.steps_taken);

    // greedy Q-learning with all-zero values keeps pushing left from the start
    QLearningConfig greedy;
    greedy.epsilon = 0.0;
    const EpisodeLog q = run_qlearning(maze_env(4, 4, 0), greedy, 300, 0);
    CHECK_FALSE(q.success);
    CHECK_FALSE(q.steps_to_goal.has_value());
    CHECK(q.cost(300) == 300);
    for (const auto& v : q.visits) {
        CHECK(v == std::array<double, 2>{0.0, 0.0});
    }

    // after reaching the goal once, the reward propagates into Q
    QLearningConfig fast;
    fast.learning_rate = 1.0;
    CHECK(run_qlearning(tiny, fast, 10000, 4).success);
}

TEST_CASE("random policy action frequencies")
{
    const MazeEnv maze = maze_env(8, 8, 0);
    std::vector<int> actions;
    run_random(maze, 8000, 6, 0, &actions);
    REQUIRE(actions.size() >= 1000);
    std::vector<double> counts(4, 0.0);
    for (int a : actions) {
        counts[static_cast<std::size_t>(a)] += 1.0;
    }
    const double expected = static_cast<double>(actions.size()) / 4.0;
    double chi2 = 0.0;
    for (double c : counts) {
        chi2 += (c - expected) * (c - expected) / expected;
    }
    CHECK(chi2 < 16.27); // 3 degrees of freedom, 0.1% level
}

TEST_CASE("occupancy grids")
{
    EpisodeLog single;
    single.bounds = {{0.0, 0.0}, {1.0, 1.0}};
    single.visits.assign(25, {0.3, 0.8});
    single.steps_taken = 25;
    const OccupancyGrid g = occupancy_grid(single, 4, 4);
    CHECK(g.total() == 25.0);
    CHECK(g.counts(1, 3) == 25.0);
    CHECK(visitation_entropy(g) == 0.0);
    const Matrix lp = log_occupancy(g);
    CHECK(lp(1, 3) == Approx(std::log(26.0 / 41.0)));
    CHECK(lp(0, 0) == Approx(std::log(1.0 / 41.0)));
    CHECK(lp.array().exp().sum() == Approx(1.0));

    EpisodeLog spread;
    spread.bounds = {{-0.5, -0.5}, {1.5, 1.5}};
    spread.visits = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
    CHECK(visitation_entropy(occupancy_grid(spread, 2, 2)) == Approx(std::log(4.0)));

    const MazeEnv maze = maze_env(5, 5, 1);
    const EpisodeLog r = run_random(maze, 700, 2);
    CHECK(occupancy_grid(r, 5, 5).total() == static_cast<double>(r.steps_taken));
    CHECK_THROWS_AS(occupancy_grid(r, 0, 5), InvalidArgument);
}
