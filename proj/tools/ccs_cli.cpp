// Command-line front end. Every command writes its artifacts plus a
// manifest.json into --out-dir; exit codes: 0 ok, 1 usage, 2 data, 3 numerical.

#include "ccs/ccs.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace ccs;
using io::Json;

namespace {

struct Context {
    std::string out_dir = "ccs_out";
    std::uint64_t seed = 0;
    std::vector<std::string> artifacts;

    fs::path path(const std::string& name) const { return fs::path(out_dir) / name; }

    void write(const std::string& name, const std::string& content)
    {
        io::write_atomic(path(name), content);
        artifacts.push_back(path(name).string());
    }
};

/// Every option of the subcommand as given (or its default), keyed by name.
Json option_record(const CLI::App& sub)
{
    Json out = Json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        const std::string name = opt->get_single_name();
        if (name == "help" || name == "out-dir" || name == "seed") {
            continue;
        }
        if (opt->count() == 0) {
            out[name] = opt->get_default_str().empty() ? Json(nullptr) : Json(opt->get_default_str());
        }
        else if (opt->get_expected_max() > 1 || opt->results().size() > 1) {
            out[name] = opt->results();
        }
        else {
            out[name] = opt->results().front();
        }
    }
    return out;
}

double finite_or_throw(double v, const std::string& what)
{
    if (!std::isfinite(v)) {
        throw NumericalError(what + ": result is not finite");
    }
    return v;
}

// ---------------------------------------------------------------------------
// divergence

struct DivergenceArgs {
    std::string first;
    std::string second;
    std::string measure = "cond-cs";
    std::string x_cols;
    bool header = false;
    std::string sigma = "median";
    std::string sigma_y;
    int permutations = 0;
    double significance = 0.05;
    int neighbors = 3;
    double ridge = 1e-3;
};

double resolve_sigma(const std::string& spec, const Samples& pooled, const std::string& flag)
{
    if (spec == "median") {
        return median_bandwidth(pooled, 1000);
    }
    double v = 0.0;
    try {
        std::size_t used = 0;
        v = std::stod(spec, &used);
        if (used != spec.size()) {
            throw std::invalid_argument(spec);
        }
    }
    catch (const std::exception&) {
        throw InvalidArgument(flag + ": expected 'median' or a positive number, got '" + spec + "'");
    }
    if (!(v > 0.0)) {
        throw InvalidArgument(flag + ": width must be positive");
    }
    return v;
}

PairedDataset load_paired(const std::string& path, const DivergenceArgs& a)
{
    const io::CsvTable t = io::load_csv(path, io::CsvOptions{a.header, ','});
    if (a.x_cols.empty()) {
        // No split declared: every column is y; x is a constant placeholder
        // that the marginal measures never read.
        return PairedDataset(Samples::Zero(t.values.rows(), 1), t.values);
    }
    return io::split_columns(t.values, io::parse_column_range(a.x_cols), path);
}

void cmd_divergence(const DivergenceArgs& a, Context& ctx, Json& params)
{
    const bool marginal = a.measure == "cs" || a.measure == "mmd";
    std::optional<MeasureKind> kind;
    if (!marginal) {
        if (!a.measure.starts_with("cond-")) {
            throw InvalidArgument("--measure: unknown measure '" + a.measure +
                                  "' (expected cs, mmd, cond-cs, cond-kl, cond-mmd, cond-vn)");
        }
        kind = parse_measure(a.measure);
        if (a.x_cols.empty()) {
            throw InvalidArgument("--x-cols is required for conditional measures");
        }
    }
    const PairedDataset s = load_paired(a.first, a);
    const PairedDataset t = load_paired(a.second, a);
    if (s.dx() != t.dx() || s.dy() != t.dy()) {
        throw DataError(a.second + ": column layout differs from " + a.first);
    }
    const PairedDataset pooled = pool(s, t);

    Json config = Json::object();
    Measure measure;
    bool uses_widths = true;
    if (marginal) {
        const double w = resolve_sigma(a.sigma_y.empty() ? a.sigma : a.sigma_y, pooled.y(), "--sigma");
        config["width_y"] = w;
        if (a.measure == "cs") {
            measure = [w](const PairedDataset& p, const PairedDataset& q) { return cs_divergence(p.y(), q.y(), w); };
        }
        else {
            measure = [w](const PairedDataset& p, const PairedDataset& q) { return mmd(p.y(), q.y(), w); };
        }
    }
    else {
        uses_widths = *kind == MeasureKind::conditional_cs || *kind == MeasureKind::conditional_mmd;
        Widths w;
        if (uses_widths) {
            w.x = resolve_sigma(a.sigma, pooled.x(), "--sigma");
            w.y = resolve_sigma(a.sigma_y.empty() ? a.sigma : a.sigma_y, pooled.y(), "--sigma-y");
            config["width_x"] = w.x;
            config["width_y"] = w.y;
        }
        if (*kind == MeasureKind::conditional_kl) {
            config["neighbors"] = a.neighbors;
        }
        if (*kind == MeasureKind::conditional_mmd) {
            config["ridge"] = a.ridge;
        }
        measure = make_measure(*kind, w, a.neighbors, a.ridge);
    }
    config["sigma_mode"] = uses_widths ? Json(a.sigma == "median" ? "median" : "fixed") : Json(nullptr);

    const double value = finite_or_throw(measure(s, t), a.measure);
    Json result{{"measure", a.measure}, {"value", value}, {"config", config}};
    std::cout << a.measure << " = " << io::format_double(value) << "\n";

    if (a.permutations > 0) {
        PermutationConfig pc{a.permutations, a.significance, ctx.seed};
        const PermutationResult r =
            kind == MeasureKind::conditional_cs
                ? permutation_test_cs(s, t, config["width_x"].get<double>(), config["width_y"].get<double>(), pc)
                : permutation_test(s, t, measure, pc);
        result["permutation"] = Json{{"permutations", a.permutations},
                                     {"p_value", r.p_value},
                                     {"reject", r.reject},
                                     {"significance", a.significance}};
        std::cout << "p = " << io::format_double(r.p_value) << (r.reject ? " (significant)" : "") << "\n";
    }
    params["resolved"] = config;
    ctx.write("divergence.json", io::dump(result));
}

// ---------------------------------------------------------------------------
// power

struct PowerArgs {
    std::vector<std::string> measures{"cond-cs"};
    Index n = 500;
    Index p = 10;
    int permutations = 100;
    int trials = 20;
    double significance = 0.05;
};

void cmd_power(const PowerArgs& a, Context& ctx)
{
    std::vector<MeasureKind> kinds;
    for (const auto& m : a.measures) {
        kinds.push_back(parse_measure(m));
    }
    const std::vector<std::string> sets{"a", "b", "c", "d", "e"};
    Json summary = Json::object();
    for (auto kind : kinds) {
        PowerConfig pc;
        pc.n = a.n;
        pc.p = a.p;
        pc.trials = a.trials;
        pc.seed = ctx.seed;
        pc.permutation = PermutationConfig{a.permutations, a.significance, ctx.seed};
        const PowerMatrix pm = power_matrix(kind, pc);
        const std::string name(measure_name(kind));
        ctx.write("power_" + name + ".csv", io::to_csv(pm.entries, sets));
        Json rows = Json::array();
        for (Index i = 0; i < 5; ++i) {
            std::vector<double> row(pm.entries.row(i).begin(), pm.entries.row(i).end());
            rows.push_back(row);
        }
        summary[name] = Json{{"trials", pm.trials}, {"entries", rows}};
        std::cout << name << " (rows/cols a..e, " << pm.trials << " trials)\n";
        for (Index i = 0; i < 5; ++i) {
            std::cout << "  " << sets[static_cast<std::size_t>(i)];
            for (Index j = 0; j < 5; ++j) {
                std::cout << ' ' << std::fixed << std::setprecision(2) << pm.entries(i, j);
            }
            std::cout << '\n';
        }
        std::cout.unsetf(std::ios::floatfield);
    }
    ctx.write("power.json", io::dump(summary));
}

// ---------------------------------------------------------------------------
// cluster

struct ClusterArgs {
    std::string input;
    std::string format = "ucr";
    std::string generate;
    bool header = false;
    Index order = 10;
    int clusters = 0;
    std::string method = "spectral";
    std::vector<double> b_grid;
};

void cmd_cluster(const ClusterArgs& a, Context& ctx, Json& params)
{
    std::vector<TimeSeries> collection;
    if (!a.generate.empty()) {
        if (a.generate != "ar") {
            throw InvalidArgument("--generate: unknown generator '" + a.generate + "' (expected ar)");
        }
        collection = ar_benchmark_collection(ctx.seed);
    }
    else if (a.input.empty()) {
        throw InvalidArgument("one of --input or --generate is required");
    }
    else if (a.format == "ucr") {
        collection = load_ucr(a.input);
    }
    else if (a.format == "csv") {
        const io::CsvTable t = io::load_csv(a.input, io::CsvOptions{a.header, ','});
        for (Index i = 0; i < t.values.rows(); ++i) {
            const Vector row = t.values.row(i).transpose();
            collection.push_back(TimeSeries::univariate(std::span<const double>(row.data(), row.size())));
        }
    }
    else {
        throw InvalidArgument("--format: expected ucr or csv, got '" + a.format + "'");
    }

    const bool labelled = std::all_of(collection.begin(), collection.end(), [](const auto& ts) { return ts.label; });
    std::vector<int> truth;
    if (labelled) {
        truth = labels_of(collection);
    }
    int k = a.clusters;
    if (k == 0) {
        if (!labelled) {
            throw InvalidArgument("--clusters is required when the series carry no labels");
        }
        k = static_cast<int>(std::set<int>(truth.begin(), truth.end()).size());
    }
    const ClusterMethod method = a.method == "kmedoids" ? ClusterMethod::kmedoids : ClusterMethod::spectral;
    if (a.method != "spectral" && a.method != "kmedoids") {
        throw InvalidArgument("--method: expected spectral or kmedoids, got '" + a.method + "'");
    }
    const std::vector<double>& grid = a.b_grid.empty() ? default_affinity_grid() : a.b_grid;

    PairwiseConfig pc;
    pc.order = a.order;
    const DissimilarityMatrix dm = pairwise_matrix(collection, pc);
    const ClusterReport rep = cluster_dissimilarity(dm.entries, k, method, grid, ctx.seed, labelled ? &truth : nullptr);

    Matrix table(static_cast<Index>(collection.size()), 3);
    for (Index i = 0; i < table.rows(); ++i) {
        const auto u = static_cast<std::size_t>(i);
        table(i, 0) = static_cast<double>(i);
        table(i, 1) = labelled ? truth[u] : -1;
        table(i, 2) = rep.assignment.labels[u];
    }
    ctx.write("assignments.csv", io::to_csv(table, {"series", "label", "cluster"}));
    ctx.write("dissimilarity.csv", io::to_csv(dm.entries));
    Json failures = Json::array();
    for (const auto& [i, j] : dm.failures) {
        failures.push_back({i, j});
    }
    Json result{{"series", collection.size()},
                {"clusters", k},
                {"method", a.method},
                {"order", a.order},
                {"failed_pairs", failures}};
    result["b"] = method == ClusterMethod::spectral ? Json(rep.b) : Json(nullptr);
    result["nmi"] = rep.nmi ? Json(*rep.nmi) : Json(nullptr);
    params["clusters_resolved"] = k;
    ctx.write("cluster.json", io::dump(result));
    std::cout << collection.size() << " series, " << k << " clusters (" << a.method << ")";
    if (method == ClusterMethod::spectral) {
        std::cout << ", b = " << rep.b;
    }
    if (rep.nmi) {
        std::cout << ", NMI = " << io::format_double(*rep.nmi);
    }
    std::cout << "\n";
}

// ---------------------------------------------------------------------------
// causal

struct CausalArgs {
    std::string generate;
    std::vector<int> pair{1, 2};
    Index n = 1024;
    double coupling = 0.3;
    std::string input;
    std::vector<Index> columns{0, 1};
    bool header = false;
    int delay = 1;
    int dim_x = 1;
    int dim_y = 1;
    int surrogates = 100;
    double alpha = 0.05;
    double width_scale = 0.5;
    Index min_offset = 512;
};

void cmd_causal(const CausalArgs& a, Context& ctx, Json& params)
{
    Series x;
    Series y;
    Index window = 0;
    if (!a.generate.empty()) {
        // Sources of twice the analysed length leave room for offset surrogates.
        std::vector<Series> chain;
        if (a.generate == "henon") {
            HenonConfig hc;
            hc.n = 2 * a.n;
            hc.coupling = a.coupling;
            hc.seed = ctx.seed;
            chain = henon_generate(hc);
        }
        else if (a.generate == "nlvar3") {
            Nlvar3Config nc;
            nc.n = 2 * a.n;
            nc.seed = ctx.seed;
            chain = nlvar3_generate(nc);
        }
        else if (a.generate == "noise") {
            chain = noise_pair_generate(2 * a.n, ctx.seed);
        }
        else {
            throw InvalidArgument("--generate: unknown generator '" + a.generate + "' (expected henon, nlvar3, noise)");
        }
        const auto pick = [&](int i) {
            if (i < 1 || i > static_cast<int>(chain.size())) {
                throw InvalidArgument("--pair: index " + std::to_string(i) + " outside 1.." +
                                      std::to_string(chain.size()));
            }
            return chain[static_cast<std::size_t>(i - 1)];
        };
        x = pick(a.pair.at(0));
        y = pick(a.pair.at(1));
        window = a.n;
    }
    else if (!a.input.empty()) {
        const io::CsvTable t = io::load_csv(a.input, io::CsvOptions{a.header, ','});
        for (Index c : a.columns) {
            if (c < 0 || c >= t.values.cols()) {
                throw DataError(a.input + ": column " + std::to_string(c) + " not present (" +
                                std::to_string(t.values.cols()) + " columns)");
            }
        }
        x.assign(t.values.col(a.columns.at(0)).begin(), t.values.col(a.columns.at(0)).end());
        y.assign(t.values.col(a.columns.at(1)).begin(), t.values.col(a.columns.at(1)).end());
    }
    else {
        throw InvalidArgument("one of --generate or --input is required");
    }

    CausalTestConfig cfg;
    cfg.spec = EmbeddingSpec{a.delay, a.dim_x, a.dim_y};
    cfg.width_scale = a.width_scale;
    cfg.window = window;
    cfg.min_offset = a.min_offset;
    cfg.surrogates = a.surrogates;
    cfg.alpha = a.alpha;
    cfg.seed = ctx.seed;
    const EmbeddingSpec& spec = cfg.spec;
    if (static_cast<Index>(x.size()) <= static_cast<Index>(std::max(spec.dim_x, spec.dim_y)) * spec.delay) {
        throw InvalidArgument("embedding dimension times delay exceeds the series length " + std::to_string(x.size()));
    }
    const CausalWidths widths = resolve_causal_widths(x, y, cfg.spec, {}, cfg.width_scale);
    cfg.widths = widths;
    const CausalResult r = causal_test(x, y, cfg);
    finite_or_throw(r.score, "causal score");

    Json result{{"score", r.score}, {"p_value", r.p_value}, {"direction", std::string(direction_name(r.direction))}};
    result["widths"] = Json{{"x_past", *widths.x_past},
                            {"y_past", *widths.y_past},
                            {"x_future", *widths.x_future},
                            {"y_future", *widths.y_future}};
    params["length"] = x.size();
    ctx.write("causal.json", io::dump(result));
    std::cout << "score = " << io::format_double(r.score) << ", p = " << io::format_double(r.p_value)
              << ", direction = " << direction_name(r.direction) << "\n";
}

// ---------------------------------------------------------------------------
// rl

struct RlArgs {
    std::string env = "maze10";
    std::vector<std::string> agents{"dtg-cs", "random"};
    int seeds = 1;
    int max_steps = 10000;
    int rollout = 1000;
    std::optional<std::uint64_t> layout_seed;
    double learning_rate = 1e-3;
    double epsilon = 0.1;
    std::size_t buffer = 2000;
    double kernel_width = 0.1;
};

struct AgentSummary {
    int runs = 0;
    int successes = 0;
    double cost = 0.0;
    double steps_success = 0.0;
    double entropy = 0.0;
};

rl::EpisodeLog run_agent(const std::string& agent, const rl::Environment& env, const RlArgs& a, std::uint64_t seed)
{
    if (agent == "random") {
        return rl::run_random(env, a.max_steps, seed, a.rollout);
    }
    if (agent == "qlearning") {
        rl::QLearningConfig qc;
        qc.rollout_steps = a.rollout;
        return rl::run_qlearning(env, qc, a.max_steps, seed);
    }
    if (agent.starts_with("dtg-")) {
        rl::DtgConfig dc;
        dc.divergence_kind = rl::parse_kind(agent.substr(4));
        dc.rollout_steps = a.rollout;
        dc.learning_rate = a.learning_rate;
        dc.epsilon = a.epsilon;
        dc.buffer_capacity = a.buffer;
        dc.kernel_width = a.kernel_width;
        rl::EpisodeLog log = rl::run_dtg(env, dc, a.max_steps, seed);
        log.agent = agent;
        return log;
    }
    throw InvalidArgument("unknown agent '" + agent + "' (expected dtg-cs, dtg-kl, dtg-mmd, random, qlearning)");
}

void cmd_rl(const RlArgs& a, Context& ctx)
{
    if (a.seeds < 1 || a.max_steps < 1) {
        throw InvalidArgument("--seeds and --max-steps must be positive");
    }
    // Validate names before any long run starts.
    rl::make_environment(a.env, 0);
    for (const auto& agent : a.agents) {
        if (agent != "random" && agent != "qlearning") {
            if (!agent.starts_with("dtg-")) {
                throw InvalidArgument("unknown agent '" + agent + "' (expected dtg-cs, dtg-kl, dtg-mmd, random, qlearning)");
            }
            rl::parse_kind(agent.substr(4));
        }
    }
    std::map<std::string, AgentSummary> summary;
    for (int k = 0; k < a.seeds; ++k) {
        const std::uint64_t seed = ctx.seed + static_cast<std::uint64_t>(k);
        const auto env = rl::make_environment(a.env, a.layout_seed.value_or(seed));
        int bx = 20;
        int by = 20;
        if (const auto* maze = dynamic_cast<const rl::MazeEnv*>(env.get())) {
            bx = maze->width();
            by = maze->height();
        }
        for (const auto& agent : a.agents) {
            const rl::EpisodeLog log = run_agent(agent, *env, a, seed);
            const rl::OccupancyGrid grid = rl::occupancy_grid(log, bx, by);
            const double h = rl::visitation_entropy(grid);
            const std::string stem = agent + "_seed" + std::to_string(seed);
            Json j = io::to_json(log);
            j["visitation_entropy"] = h;
            ctx.write("episodes/" + stem + ".json", io::dump(j));
            ctx.write("occupancy/" + stem + ".csv", io::to_csv(grid.counts));
            AgentSummary& s = summary[agent];
            ++s.runs;
            s.successes += log.success ? 1 : 0;
            s.cost += log.cost(a.max_steps);
            s.steps_success += log.steps_to_goal.value_or(0);
            s.entropy += h;
        }
    }
    Json out = Json::object();
    std::ostringstream csv;
    csv << "agent,runs,success_rate,mean_cost,mean_steps_to_goal,mean_entropy\n";
    std::cout << std::left << std::setw(12) << "agent" << std::setw(10) << "success" << std::setw(12) << "mean_cost"
              << "entropy\n";
    for (const auto& agent : a.agents) {
        const AgentSummary& s = summary[agent];
        const double rate = static_cast<double>(s.successes) / s.runs;
        const double cost = s.cost / s.runs;
        const double entropy = s.entropy / s.runs;
        const Json steps = s.successes > 0 ? Json(s.steps_success / s.successes) : Json(nullptr);
        out[agent] = Json{{"runs", s.runs},
                          {"success_rate", rate},
                          {"mean_cost", cost},
                          {"mean_steps_to_goal", steps},
                          {"mean_entropy", entropy}};
        csv << agent << ',' << s.runs << ',' << io::format_double(rate) << ',' << io::format_double(cost) << ','
            << (s.successes > 0 ? io::format_double(s.steps_success / s.successes) : "") << ','
            << io::format_double(entropy) << '\n';
        std::cout << std::left << std::setw(12) << agent << std::setw(10) << rate << std::setw(12) << cost << entropy
                  << '\n';
    }
    ctx.write("summary.csv", csv.str());
    ctx.write("summary.json", io::dump(Json{{"environment", a.env}, {"max_steps", a.max_steps}, {"agents", out}}));
}

// ---------------------------------------------------------------------------
// bench

struct BenchArgs {
    std::vector<Index> sizes{250, 500, 1000, 2000};
    std::vector<Index> dims{5};
    int repeats = 3;
    bool no_cmmd = false;
};

void cmd_bench(const BenchArgs& a, Context& ctx)
{
    BenchConfig cfg;
    cfg.sizes = a.sizes;
    cfg.dims = a.dims;
    cfg.repeats = a.repeats;
    cfg.include_cmmd = !a.no_cmmd;
    cfg.seed = ctx.seed;
    const std::vector<BenchRow> rows = run_bench(cfg);
    // One row per (n, dim); the CMMD column is empty with --no-cmmd.
    std::map<std::pair<Index, Index>, std::map<std::string, double>> table;
    for (const BenchRow& r : rows) {
        table[{r.dim, r.n}][r.measure] = r.seconds;
    }
    std::ostringstream csv;
    csv << "n,dim,cond_cs_seconds,cond_mmd_seconds\n";
    for (const auto& [key, cells] : table) {
        csv << key.second << ',' << key.first << ',' << io::format_double(cells.at("cond-cs")) << ',';
        if (const auto it = cells.find("cond-mmd"); it != cells.end()) {
            csv << io::format_double(it->second);
        }
        csv << '\n';
    }
    std::cout << csv.str();
    ctx.write("bench.csv", csv.str());
    Json exponents = Json::object();
    if (std::set<Index>(a.sizes.begin(), a.sizes.end()).size() >= 2) {
        for (Index d : a.dims) {
            for (const std::string m : {"cond-cs", "cond-mmd"}) {
                if (m == "cond-mmd" && a.no_cmmd) {
                    continue;
                }
                const double e = scaling_exponent(rows, m, d);
                exponents[m + "/d" + std::to_string(d)] = e;
                std::cout << "exponent " << m << " (d=" << d << "): " << io::format_double(e) << "\n";
            }
        }
    }
    ctx.write("bench.json", io::dump(Json{{"exponents", exponents}}));
}

int exit_code_for(const std::exception& e)
{
    if (dynamic_cast<const InvalidArgument*>(&e) != nullptr) {
        return 1;
    }
    if (dynamic_cast<const DataError*>(&e) != nullptr) {
        return 2;
    }
    if (dynamic_cast<const NumericalError*>(&e) != nullptr) {
        return 3;
    }
    if (dynamic_cast<const fs::filesystem_error*>(&e) != nullptr) {
        return 2;
    }
    return 3;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Conditional Cauchy-Schwarz divergence toolkit"};
    app.require_subcommand(1);
    Context ctx;
    const auto common = [&](CLI::App* sub) {
        sub->add_option("--out-dir", ctx.out_dir, "Directory for outputs and manifest.json")->capture_default_str();
        sub->add_option("--seed", ctx.seed, "Random seed")->capture_default_str();
    };
    std::function<void(Json&)> run;

    DivergenceArgs div;
    CLI::App* sub_div = app.add_subcommand("divergence", "Divergence between two CSV datasets");
    sub_div->add_option("first", div.first, "First CSV file")->required();
    sub_div->add_option("second", div.second, "Second CSV file")->required();
    sub_div->add_option("--measure", div.measure, "cs, mmd, cond-cs, cond-kl, cond-mmd or cond-vn")->capture_default_str();
    sub_div->add_option("--x-cols", div.x_cols, "Zero-based inclusive x columns a..b; the rest are y");
    sub_div->add_flag("--header", div.header, "First row holds column names");
    sub_div->add_option("--sigma", div.sigma, "'median' or a kernel width")->capture_default_str();
    sub_div->add_option("--sigma-y", div.sigma_y, "y width if different from --sigma");
    sub_div->add_option("--permutations", div.permutations, "Permutation test size (0 = off)")->capture_default_str();
    sub_div->add_option("--significance", div.significance, "Test level")->capture_default_str();
    sub_div->add_option("--neighbors", div.neighbors, "k for cond-kl")->capture_default_str();
    sub_div->add_option("--ridge", div.ridge, "Ridge for cond-mmd")->capture_default_str();
    common(sub_div);
    sub_div->callback([&] { run = [&](Json& p) { cmd_divergence(div, ctx, p); }; });

    PowerArgs pow;
    CLI::App* sub_pow = app.add_subcommand("power", "Power matrix of the two-sample test on the five synthetic regression sets");
    sub_pow->add_option("--measure", pow.measures, "Measures (repeatable)")->capture_default_str();
    sub_pow->add_option("--n", pow.n, "Samples per set")->capture_default_str();
    sub_pow->add_option("--p", pow.p, "Input dimension")->capture_default_str();
    sub_pow->add_option("--permutations", pow.permutations, "Permutations per test")->capture_default_str();
    sub_pow->add_option("--trials", pow.trials, "Trials per entry")->capture_default_str();
    sub_pow->add_option("--significance", pow.significance, "Test level")->capture_default_str();
    common(sub_pow);
    sub_pow->callback([&] { run = [&](Json&) { cmd_power(pow, ctx); }; });

    ClusterArgs clu;
    CLI::App* sub_clu = app.add_subcommand("cluster", "Cluster a time-series collection");
    sub_clu->add_option("--input", clu.input, "Series file");
    sub_clu->add_option("--format", clu.format, "ucr (label first) or csv (one unlabelled series per row)")
        ->capture_default_str();
    sub_clu->add_option("--generate", clu.generate, "Use a built-in collection instead: ar");
    sub_clu->add_flag("--header", clu.header, "csv format: skip a header row");
    sub_clu->add_option("--order", clu.order, "Embedding order K")->capture_default_str();
    sub_clu->add_option("--clusters", clu.clusters, "Number of clusters (default: number of labels)");
    sub_clu->add_option("--method", clu.method, "spectral or kmedoids")->capture_default_str();
    sub_clu->add_option("--b", clu.b_grid, "Affinity scale grid (repeatable)");
    common(sub_clu);
    sub_clu->callback([&] { run = [&](Json& p) { cmd_cluster(clu, ctx, p); }; });

    CausalArgs cau;
    CLI::App* sub_cau = app.add_subcommand("causal", "Causal direction test between two series");
    sub_cau->add_option("--generate", cau.generate, "henon, nlvar3 or noise");
    sub_cau->add_option("--pair", cau.pair, "One-based indices of x and y in the generated system")
        ->expected(2)
        ->capture_default_str();
    sub_cau->add_option("--n", cau.n, "Analysed length for generated data")->capture_default_str();
    sub_cau->add_option("--coupling", cau.coupling, "Henon coupling")->capture_default_str();
    sub_cau->add_option("--input", cau.input, "CSV file holding both series as columns");
    sub_cau->add_option("--columns", cau.columns, "Zero-based x and y columns")->expected(2)->capture_default_str();
    sub_cau->add_flag("--header", cau.header, "First row holds column names");
    sub_cau->add_option("--delay", cau.delay, "Embedding delay")->capture_default_str();
    sub_cau->add_option("--dim-x", cau.dim_x, "Embedding dimension of x")->capture_default_str();
    sub_cau->add_option("--dim-y", cau.dim_y, "Embedding dimension of y")->capture_default_str();
    sub_cau->add_option("--surrogates", cau.surrogates, "Surrogate count")->capture_default_str();
    sub_cau->add_option("--alpha", cau.alpha, "Test level")->capture_default_str();
    sub_cau->add_option("--width-scale", cau.width_scale, "Multiplier on the median widths")->capture_default_str();
    sub_cau->add_option("--min-offset", cau.min_offset, "Minimum surrogate window offset")->capture_default_str();
    common(sub_cau);
    sub_cau->callback([&] { run = [&](Json& p) { cmd_causal(cau, ctx, p); }; });

    RlArgs rla;
    CLI::App* sub_rl = app.add_subcommand("rl", "Exploration runs");
    sub_rl->add_option("--env", rla.env, "mazeN, mountain-car or pendulum")->capture_default_str();
    sub_rl->add_option("--agent", rla.agents, "dtg-cs, dtg-kl, dtg-mmd, random, qlearning (repeatable)")
        ->capture_default_str();
    sub_rl->add_option("--seeds", rla.seeds, "Number of seeds, starting at --seed")->capture_default_str();
    sub_rl->add_option("--max-steps", rla.max_steps, "Step cap per run")->capture_default_str();
    sub_rl->add_option("--rollout", rla.rollout, "Steps between environment resets (0 = never)")->capture_default_str();
    sub_rl->add_option("--layout-seed", rla.layout_seed, "Fixed maze layout (default: the run seed)");
    sub_rl->add_option("--learning-rate", rla.learning_rate, "DTG learning rate")->capture_default_str();
    sub_rl->add_option("--epsilon", rla.epsilon, "DTG exploration rate")->capture_default_str();
    sub_rl->add_option("--buffer", rla.buffer, "DTG replay buffer capacity")->capture_default_str();
    sub_rl->add_option("--kernel-width", rla.kernel_width, "DTG kernel width")->capture_default_str();
    common(sub_rl);
    sub_rl->callback([&] { run = [&](Json&) { cmd_rl(rla, ctx); }; });

    BenchArgs ben;
    CLI::App* sub_ben = app.add_subcommand("bench", "Wall-time scaling of conditional CS and CMMD");
    sub_ben->add_option("--size", ben.sizes, "Sample sizes (repeatable)")->capture_default_str();
    sub_ben->add_option("--dim", ben.dims, "x dimensions (repeatable)")->capture_default_str();
    sub_ben->add_option("--repeats", ben.repeats, "Timing repeats; the minimum is kept")->capture_default_str();
    sub_ben->add_flag("--no-cmmd", ben.no_cmmd, "Skip CMMD");
    common(sub_ben);
    sub_ben->callback([&] { run = [&](Json&) { cmd_bench(ben, ctx); }; });

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    const CLI::App* sub = app.get_subcommands().front();
    const auto t0 = std::chrono::steady_clock::now();
    try {
        Json params = option_record(*sub);
        run(params);
        io::RunManifest m;
        m.command = sub->get_name();
        m.parameters = params;
        m.seed = ctx.seed;
        m.artifacts = ctx.artifacts;
        m.duration_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        io::write_atomic(ctx.path("manifest.json"), io::dump(m.to_json()));
    }
    catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return 0;
}
