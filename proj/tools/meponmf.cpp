// Command-line front end: data generation, fitting, model-selection sweeps,
// and benchmark tables. Messages go to stderr; data goes to files only.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 solver error,
// 4 too few transitions for a persistence estimate.

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "meponmf/meponmf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace meponmf;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSolver = 3;
constexpr int kExitNoTransitions = 4;

// Incoherent flag combinations, distinct from bad data files.
struct UsageError : Error {
    using Error::Error;
};

std::string utc_now() {
    std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::string fmt17(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// Shared solver flags for fit/true-k/bench.
struct SolverFlags {
    int k_max = 1;
    std::string orthogonal = "h";
    std::string variant = "optimal";
    std::vector<double> capacities;
    double beta_init = 0.0;
    double beta_max = 0.0;
    double growth = 1.05;
    double tol = 1e-8;
    int inner_max_iters = 500;
    double delta = 1e-4;
    std::uint64_t seed = 0;

    void attach(CLI::App* cmd, bool with_kmax = true) {
        if (with_kmax)
            cmd->add_option("--k-max", k_max, "Feature budget")->required();
        cmd->add_option("--orthogonal", orthogonal, "Orthogonal factor: h or w")
            ->check(CLI::IsMember({"h", "w"}));
        cmd->add_option("--variant", variant, "optimal or capacity")
            ->check(CLI::IsMember({"optimal", "capacity"}));
        cmd->add_option("--capacities", capacities,
                        "Comma-separated per-feature capacities (capacity variant)")
            ->delimiter(',');
        cmd->add_option("--beta-init", beta_init, "Initial temperature (0 = from data)");
        cmd->add_option("--beta-max", beta_max, "Final temperature (0 = 1e6 * beta_init)");
        cmd->add_option("--growth", growth, "Geometric temperature growth factor");
        cmd->add_option("--tol", tol, "Inner-loop free-energy tolerance");
        cmd->add_option("--inner-max-iters", inner_max_iters, "Inner-loop iteration cap");
        cmd->add_option("--delta", delta, "Split perturbation magnitude");
        cmd->add_option("--seed", seed, "Random seed");
    }

    // Throws UsageError on incoherent combinations.
    SolverConfig to_config() const {
        SolverConfig cfg;
        cfg.k_max = k_max;
        cfg.orientation = orthogonal == "w" ? Orientation::WOrthogonal : Orientation::HOrthogonal;
        cfg.variant =
            variant == "capacity" ? Variant::CapacityConstrained : Variant::OptimallyWeighted;
        if (cfg.variant == Variant::CapacityConstrained) {
            if (capacities.empty())
                throw UsageError("--variant capacity requires --capacities");
            cfg.capacities = Eigen::Map<const Vector>(capacities.data(),
                                                      static_cast<Index>(capacities.size()));
        } else if (!capacities.empty()) {
            throw UsageError("--capacities requires --variant capacity");
        }
        cfg.beta_init = beta_init;
        cfg.beta_max = beta_max;
        cfg.gamma = growth;
        cfg.inner_tol = tol;
        cfg.inner_max_iters = inner_max_iters;
        cfg.perturb_delta = delta;
        cfg.seed = seed;

        // Validate everything that does not depend on the data.
        SolverConfig probe = cfg;
        if (probe.beta_init <= 0.0) probe.beta_init = 1.0;
        if (probe.beta_max <= 0.0) probe.beta_max = 1e6 * probe.beta_init;
        try {
            probe.validate();
        } catch (const DomainError& e) {
            throw UsageError(e.what());
        }
        return cfg;
    }
};

json config_json(const SolverConfig& cfg, Orientation user_orientation) {
    json j;
    j["k_max"] = cfg.k_max;
    j["beta_init"] = cfg.beta_init;
    j["beta_max"] = cfg.beta_max;
    j["growth"] = cfg.gamma;
    j["tol"] = cfg.inner_tol;
    j["inner_max_iters"] = cfg.inner_max_iters;
    j["delta"] = cfg.perturb_delta;
    j["variant"] = to_string(cfg.variant);
    j["orthogonal"] = to_string(user_orientation);
    j["seed"] = cfg.seed;
    if (cfg.capacities) {
        std::vector<double> c(cfg.capacities->data(),
                              cfg.capacities->data() + cfg.capacities->size());
        j["capacities"] = c;
    }
    return j;
}

void write_json(const fs::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path.string());
    out << j.dump(2) << '\n';
}

// critical_betas.csv: one row per recorded transition. `m` is the feature
// count after the split (the (m-1)-th split), and log_ratio on row m is
// ln(beta_cr(m+1)/beta_cr(m)) = ln delta(m), empty on the last row.
void write_critical_betas(const fs::path& path, const TransitionLog& log) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot open file for writing: " + path.string());
    out << "m,beta_cr,log_ratio\n";
    const auto& e = log.entries;
    for (std::size_t i = 0; i < e.size(); ++i) {
        out << e[i].m << ',' << fmt17(e[i].beta_cr) << ',';
        if (i + 1 < e.size()) out << fmt17(std::log(e[i + 1].beta_cr / e[i].beta_cr));
        out << '\n';
    }
}

json metrics_json(const OnmfResult& result, const SolverFlags& flags) {
    json j;
    j["E_pct"] = result.metrics.recon_error_pct;
    j["O_pct"] = result.metrics.orthogonality_pct;
    j["S_pct"] = result.metrics.sparsity_pct;
    j["T_sec"] = result.metrics.elapsed_seconds;
    j["k"] = result.factors.W.cols();
    j["variant"] = flags.variant;
    j["orientation"] = flags.orthogonal;
    j["seed"] = flags.seed;
    j["constrained_factor"] = flags.orthogonal == "w" ? "W" : "H";
    if (flags.variant == "capacity") {
        const Vector& r = result.details.final_capacity_residuals;
        j["capacity_residuals"] = std::vector<double>(r.data(), r.data() + r.size());
        j["capacity_residual_max_run"] = result.details.max_capacity_residual;
    }
    return j;
}

DataMatrix load_input(const std::string& input, const std::string& weights) {
    return load_matrix(input, weights.empty() ? std::nullopt : std::optional<std::string>(weights));
}

int run_fit(const std::string& input, const std::string& weights, const std::string& out_dir,
            const SolverFlags& flags) {
    SolverConfig cfg = flags.to_config();
    DataMatrix X = load_input(input, weights);
    const std::string created = utc_now();

    OnmfResult result = fit(X, cfg);

    fs::create_directories(out_dir);
    write_csv_matrix((fs::path(out_dir) / "W.csv").string(), result.factors.W);
    write_csv_matrix((fs::path(out_dir) / "H.csv").string(), result.factors.H);
    write_json(fs::path(out_dir) / "metrics.json", metrics_json(result, flags));
    write_critical_betas(fs::path(out_dir) / "critical_betas.csv", result.transitions);

    json manifest;
    manifest["tool"] = "meponmf";
    manifest["version"] = kVersion;
    manifest["created_utc"] = created;
    manifest["finished_utc"] = utc_now();
    manifest["input"] = input;
    if (!weights.empty()) manifest["weights"] = weights;
    manifest["output_dir"] = out_dir;
    manifest["config"] = config_json(result.details.config, cfg.orientation);
    write_json(fs::path(out_dir) / "manifest.json", manifest);
    return 0;
}

int run_true_k(const std::string& input, const std::string& weights, const std::string& out_dir,
               const SolverFlags& flags) {
    if (flags.k_max < 2) throw UsageError("true-k requires --k-max >= 2");
    SolverConfig cfg = flags.to_config();
    DataMatrix X = load_input(input, weights);

    OnmfResult result = fit(X, cfg);
    fs::create_directories(out_dir);
    write_critical_betas(fs::path(out_dir) / "critical_betas.csv", result.transitions);

    PersistenceReport rep;
    try {
        rep = persistence(result.transitions);
    } catch (const InsufficientTransitions& e) {
        std::cerr << "true-k: " << e.what()
                  << " (the data shows no resolvable sub-structure below beta-max)\n";
        return kExitNoTransitions;
    }
    json j;
    j["deltas"] = json::array();
    for (const auto& d : rep.deltas) j["deltas"].push_back({{"m", d.m}, {"delta", d.delta}});
    j["m_star"] = rep.m_star;
    write_json(fs::path(out_dir) / "persistence.json", j);
    return 0;
}

struct BenchRow {
    std::string method;
    double e = 0, o = 0, s = 0, t = 0;
    int count = 0;
    void add(double e_, double o_, double s_, double t_) {
        e += e_; o += o_; s += s_; t += t_; ++count;
    }
};

int run_bench(const std::string& input, const std::string& out_file, Index gamma_d, Index gamma_n,
              double gamma_alpha, double gamma_theta, double noise, Index k, int reps,
              int mu_iters, const SolverFlags& flags_in) {
    SolverFlags flags = flags_in;
    flags.k_max = static_cast<int>(k);
    SolverConfig base_cfg = flags.to_config();  // validates capacity coherence

    DataMatrix X = [&] {
        if (!input.empty()) return load_input(input, "");
        GammaSpec spec;
        spec.d = gamma_d;
        spec.n = gamma_n;
        spec.shape_alpha = gamma_alpha;
        spec.scale_theta = gamma_theta;
        spec.noise_amplitude = noise;
        spec.seed = flags.seed;
        return gamma_synthetic(spec);
    }();

    BenchRow mep{"MEP_ONMF"};
    BenchRow cap{"MEP_ONMF_capacity"};
    BenchRow nmf{"NMF"};
    const bool with_capacity = !flags.capacities.empty();
    for (int rep = 0; rep < reps; ++rep) {
        SolverConfig cfg = base_cfg;
        cfg.seed = flags.seed + static_cast<std::uint64_t>(rep);
        cfg.variant = Variant::OptimallyWeighted;
        cfg.capacities.reset();
        OnmfResult r = fit(X, cfg);
        mep.add(r.metrics.recon_error_pct, r.metrics.orthogonality_pct, r.metrics.sparsity_pct,
                r.metrics.elapsed_seconds);

        if (with_capacity) {
            SolverConfig ccfg = base_cfg;
            ccfg.seed = cfg.seed;
            ccfg.variant = Variant::CapacityConstrained;
            OnmfResult rc = fit(X, ccfg);
            cap.add(rc.metrics.recon_error_pct, rc.metrics.orthogonality_pct,
                    rc.metrics.sparsity_pct, rc.metrics.elapsed_seconds);
        }

        auto [fp, secs] = timed([&] { return mu_nmf(X, k, mu_iters, cfg.seed); });
        double e = 100.0 * recon_error(X.values, fp.W, fp.H);
        double o = 100.0 * orthogonality(fp.H);
        double s = 100.0 * sparsity(fp.H, X.count());
        nmf.add(e, o, s, secs);
    }

    fs::path out_path(out_file);
    if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
    std::ofstream out(out_path);
    if (!out) throw ParseError("cannot open file for writing: " + out_file);
    out << "method,E_pct,O_pct,S_pct,T_sec\n";
    for (const BenchRow* row : {&mep, &cap, &nmf}) {
        if (row->count == 0) continue;
        double n = row->count;
        out << row->method << ',' << fmt17(row->e / n) << ',' << fmt17(row->o / n) << ','
            << fmt17(row->s / n) << ',' << fmt17(row->t / n) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Orthogonal nonnegative matrix factorization by deterministic annealing"};
    app.require_subcommand(1);

    // --- fit ---
    auto* fit_cmd = app.add_subcommand("fit", "Factor a matrix and write W, H, and metrics");
    std::string fit_input, fit_weights, fit_out;
    SolverFlags fit_flags;
    fit_cmd->add_option("--input", fit_input, "Input matrix CSV")->required();
    fit_cmd->add_option("--weights", fit_weights, "Optional column-weights CSV (single line)");
    fit_cmd->add_option("--out", fit_out, "Output directory")->required();
    fit_flags.attach(fit_cmd);

    // --- true-k ---
    auto* tk_cmd = app.add_subcommand("true-k", "Estimate the persistent number of features");
    std::string tk_input, tk_weights, tk_out;
    SolverFlags tk_flags;
    tk_cmd->add_option("--input", tk_input, "Input matrix CSV")->required();
    tk_cmd->add_option("--weights", tk_weights, "Optional column-weights CSV");
    tk_cmd->add_option("--out", tk_out, "Output directory")->required();
    tk_flags.attach(tk_cmd);

    // --- bench ---
    auto* bench_cmd = app.add_subcommand("bench", "Compare against the multiplicative-update baseline");
    std::string bench_input, bench_out = "bench.csv";
    Index bench_gd = 10, bench_gn = 1000;
    double bench_alpha = 10.0, bench_theta = 1.0, bench_noise = 1.0;
    Index bench_k = 0;
    int bench_reps = 5, bench_mu_iters = 2000;
    SolverFlags bench_flags;
    bench_cmd->add_option("--input", bench_input, "Input matrix CSV (overrides --gamma-*)");
    bench_cmd->add_option("--gamma-d", bench_gd, "Rows of the generated Gamma matrix");
    bench_cmd->add_option("--gamma-n", bench_gn, "Columns of the generated Gamma matrix");
    bench_cmd->add_option("--gamma-alpha", bench_alpha, "Gamma shape");
    bench_cmd->add_option("--gamma-theta", bench_theta, "Gamma scale");
    bench_cmd->add_option("--noise", bench_noise, "Uniform noise amplitude");
    bench_cmd->add_option("--k", bench_k, "Inner dimension")->required();
    bench_cmd->add_option("--reps", bench_reps, "Repetitions averaged per method");
    bench_cmd->add_option("--mu-iters", bench_mu_iters, "Baseline iteration count");
    bench_cmd->add_option("--out", bench_out, "Output CSV path");
    bench_flags.attach(bench_cmd, /*with_kmax=*/false);

    // --- datagen ---
    auto* dg_cmd = app.add_subcommand("datagen", "Generate synthetic matrices");
    dg_cmd->require_subcommand(1);
    auto* dg_gamma = dg_cmd->add_subcommand("gamma", "i.i.d. Gamma entries plus uniform noise");
    GammaSpec gspec;
    std::string dg_out;
    dg_gamma->add_option("--d", gspec.d, "Rows")->required();
    dg_gamma->add_option("--n", gspec.n, "Columns")->required();
    dg_gamma->add_option("--alpha", gspec.shape_alpha, "Gamma shape");
    dg_gamma->add_option("--theta", gspec.scale_theta, "Gamma scale");
    dg_gamma->add_option("--noise", gspec.noise_amplitude, "Uniform noise amplitude");
    dg_gamma->add_option("--seed", gspec.seed, "Random seed");
    dg_gamma->add_option("--out", dg_out, "Output CSV path")->required();

    auto* dg_clusters = dg_cmd->add_subcommand("clusters", "Clustered columns with ground truth");
    Index cl_d = 2, cl_n = 300;
    int cl_centers = 3, cl_sub = 0;
    double cl_spread = 0.05, cl_sub_offset = 0.0, cl_center_scale = 10.0;
    std::uint64_t cl_seed = 0;
    std::string cl_out;
    dg_clusters->add_option("--d", cl_d, "Dimensions");
    dg_clusters->add_option("--n", cl_n, "Columns");
    dg_clusters->add_option("--centers", cl_centers, "Number of top-level centers")->required();
    dg_clusters->add_option("--sub", cl_sub, "Sub-clusters per center (0 = flat)");
    dg_clusters->add_option("--spread", cl_spread, "Per-point Gaussian radius");
    dg_clusters->add_option("--sub-offset", cl_sub_offset, "Sub-center displacement");
    dg_clusters->add_option("--center-scale", cl_center_scale, "Centers drawn in [0, scale)^d");
    dg_clusters->add_option("--seed", cl_seed, "Random seed");
    dg_clusters->add_option("--out", cl_out, "Output CSV path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : kExitUsage;
    }

    try {
        if (*fit_cmd) return run_fit(fit_input, fit_weights, fit_out, fit_flags);
        if (*tk_cmd) return run_true_k(tk_input, tk_weights, tk_out, tk_flags);
        if (*bench_cmd)
            return run_bench(bench_input, bench_out, bench_gd, bench_gn, bench_alpha, bench_theta,
                             bench_noise, bench_k, bench_reps, bench_mu_iters, bench_flags);
        if (*dg_gamma) {
            DataMatrix X = gamma_synthetic(gspec);
            fs::path out_path(dg_out);
            if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
            write_csv_matrix(dg_out, X.values);
            json side;
            side["type"] = "gamma";
            side["d"] = gspec.d;
            side["n"] = gspec.n;
            side["alpha"] = gspec.shape_alpha;
            side["theta"] = gspec.scale_theta;
            side["noise"] = gspec.noise_amplitude;
            side["seed"] = gspec.seed;
            write_json(dg_out + ".json", side);
            return 0;
        }
        if (*dg_clusters) {
            if (cl_centers < 1) throw UsageError("--centers must be >= 1");
            ClusterSpec spec;
            spec.d = cl_d;
            spec.n = cl_n;
            spec.spread = cl_spread;
            spec.sub_count = cl_sub;
            spec.sub_offset = cl_sub_offset;
            spec.seed = cl_seed;
            CounterRng rng(CounterRng::substream(cl_seed, 0xC11C11ull));
            for (int c = 0; c < cl_centers; ++c) {
                Vector center(cl_d);
                for (Index r = 0; r < cl_d; ++r) center[r] = rng.uniform(cl_center_scale);
                spec.centers.push_back(center);
            }
            ClusteredData data = clustered_synthetic(spec);
            fs::path out_path(cl_out);
            if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
            write_csv_matrix(cl_out, data.matrix.values);
            json side;
            side["type"] = "clusters";
            side["d"] = cl_d;
            side["n"] = cl_n;
            side["centers"] = cl_centers;
            side["sub"] = cl_sub;
            side["spread"] = cl_spread;
            side["sub_offset"] = cl_sub_offset;
            side["center_scale"] = cl_center_scale;
            side["seed"] = cl_seed;
            side["labels"] = data.labels;
            side["sub_labels"] = data.sub_labels;
            write_json(cl_out + ".json", side);
            return 0;
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ParseError& e) {
        std::cerr << "data error (ParseError): " << e.what() << '\n';
        return kExitData;
    } catch (const WeightError& e) {
        std::cerr << "data error (WeightError): " << e.what() << '\n';
        return kExitData;
    } catch (const DomainError& e) {
        std::cerr << "data error (DomainError): " << e.what() << '\n';
        return kExitData;
    } catch (const RejectionOverflow& e) {
        std::cerr << "data error (RejectionOverflow): " << e.what() << '\n';
        return kExitData;
    } catch (const Error& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitUsage;
}
