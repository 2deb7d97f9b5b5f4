#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "CLI11.hpp"

#include "bconcord/bhsc.hpp"
#include "bconcord/bssc.hpp"
#include "bconcord/errors.hpp"
#include "bconcord/exact.hpp"
#include "bconcord/io.hpp"
#include "bconcord/refit.hpp"
#include "bconcord/rng.hpp"
#include "bconcord/simulate.hpp"
#include "bconcord/types.hpp"
#include "bconcord/version.hpp"

namespace {

using namespace bconcord;

using InputList = std::vector<std::pair<std::string, std::string>>;

// ---------------------------------------------------------------- helpers

int resolve_threads(int flag_value) {
    if (flag_value > 0) return flag_value;
    if (const char* env = std::getenv("BCONCORD_THREADS")) {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (end == env || *end != '\0' || v < 1)
            throw InvalidInput("BCONCORD_THREADS must be a positive integer");
        return static_cast<int>(v);
    }
    const unsigned hc = std::thread::hardware_concurrency();
    return hc > 0 ? static_cast<int>(hc) : 1;
}

Json parse_json_file(const std::string& path) {
    try {
        return Json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InvalidInput(path + ": " + e.what());
    }
}

SparsityPattern load_pattern_file(const std::string& path) {
    const Json j = parse_json_file(path);
    if (j.contains("edges")) return pattern_from_json(j);
    if (j.contains("selected") && j.contains("p")) {
        const int p = j.at("p").get<int>();
        if (p < 2) throw InvalidInput(path + ": dimension must be at least 2");
        const Json& sel = j.at("selected");
        if (sel.size() != pair_count(p))
            throw InvalidInput(path + ": selected array has the wrong length");
        SparsityPattern pat(p);
        std::size_t f = 0;
        for (const auto& b : sel) pat.set(f++, b.get<int>() != 0);
        return pat;
    }
    throw InvalidInput(path +
                       ": expected a pattern {p, edges} or a fit result with 'selected'");
}

PrecisionState state_from_fields(const Json& j, const std::string& path) {
    if (!j.contains("diag") || !j.contains("offdiag"))
        throw InvalidInput(path + ": expected 'diag' and 'offdiag' arrays");
    PrecisionState st;
    st.diag = vector_from_json(j.at("diag"));
    st.offdiag = vector_from_json(j.at("offdiag"));
    st.p = static_cast<int>(st.diag.size());
    if (st.p < 2) throw InvalidInput(path + ": dimension must be at least 2");
    if (static_cast<std::size_t>(st.offdiag.size()) != pair_count(st.p))
        throw InvalidInput(path + ": offdiag array has the wrong length");
    for (int i = 0; i < st.p; ++i)
        if (!(st.diag[i] > 0.0))
            throw InvalidInput(path + ": diagonal entries must be positive");
    return st;
}

PrecisionState load_estimate_file(const std::string& path) {
    const Json j = parse_json_file(path);
    if (j.contains("estimate")) return state_from_fields(j.at("estimate"), path);
    if (j.contains("mean") && j.at("mean").is_object())
        return state_from_fields(j.at("mean"), path);
    return state_from_fields(j, path);
}

SampleCovariance load_cov(const std::string& path, bool header) {
    const Matrix m = read_csv_matrix(path, header);
    if (m.rows() != m.cols())
        throw InvalidInput(path + ": covariance matrix must be square");
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw InvalidInput(path + ": covariance matrix is not symmetric");
    for (Eigen::Index j = 0; j < m.rows(); ++j)
        if (!(m(j, j) > 0.0))
            throw InvalidInput(path + ": covariance diagonal must be positive");
    return SampleCovariance(((m + m.transpose()) * 0.5).eval());
}

struct DataInput {
    SampleCovariance S;
    int n = 0;
};

DataInput load_input(const std::string& data_path, const std::string& cov_path,
                     int n_flag, bool header, bool center, InputList& inputs) {
    if (!data_path.empty() && !cov_path.empty())
        throw InvalidInput("choose one of --data or --cov, not both");
    if (data_path.empty() && cov_path.empty())
        throw InvalidInput("either --data or --cov required");
    DataInput out;
    if (!data_path.empty()) {
        if (n_flag > 0) throw InvalidInput("--n only applies with --cov");
        const Matrix y = read_csv_matrix(data_path, header);
        out.n = static_cast<int>(y.rows());
        out.S = sample_covariance(y, center);
        inputs.emplace_back(data_path, file_digest(data_path));
    } else {
        if (n_flag <= 0) throw InvalidInput("--cov requires --n");
        out.S = load_cov(cov_path, header);
        out.n = n_flag;
        inputs.emplace_back(cov_path, file_digest(cov_path));
    }
    return out;
}

Json state_json(const PrecisionState& st) {
    Json j = Json::object();
    j["diag"] = vector_to_json(st.diag);
    j["offdiag"] = vector_to_json(st.offdiag);
    return j;
}

Json bits_json(const SparsityPattern& pat) {
    Json a = Json::array();
    const std::size_t m = pair_count(pat.p);
    for (std::size_t f = 0; f < m; ++f) a.push_back(pat.test(f) ? 1 : 0);
    return a;
}

Json timing_stats(std::vector<double> xs) {
    Json s = Json::object();
    s["count"] = xs.size();
    if (xs.empty()) {
        s["mean"] = 0.0;
        s["p50"] = 0.0;
        s["p95"] = 0.0;
        return s;
    }
    double mean = 0.0;
    for (double v : xs) mean += v;
    mean /= static_cast<double>(xs.size());
    std::sort(xs.begin(), xs.end());
    auto quant = [&xs](double prob) {
        const double pos = prob * static_cast<double>(xs.size() - 1);
        const auto lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= xs.size()) return xs.back();
        const double frac = pos - static_cast<double>(lo);
        return xs[lo] * (1.0 - frac) + xs[lo + 1] * frac;
    };
    s["mean"] = mean;
    s["p50"] = quant(0.5);
    s["p95"] = quant(0.95);
    return s;
}

Json make_manifest(const std::string& command, const Json& config, std::uint64_t seed,
                   const InputList& inputs, const Json* timing) {
    Json m = Json::object();
    m["command"] = command;
    m["version"] = kVersion;
    m["seed"] = seed;
    m["config"] = config;
    Json in = Json::object();
    for (const auto& [path, digest] : inputs) in[path] = digest;
    m["inputs"] = in;
    if (timing) m["timing"] = *timing;
    return m;
}

void emit(const std::string& path, const Json& doc) {
    std::string text = doc.dump(2);
    text.push_back('\n');
    if (path.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_file(path, text);
}

std::string join_prefix(const std::string& prefix, const std::string& name) {
    if (prefix.empty()) return name;
    const char c = prefix.back();
    if (c == '/' || c == '_' || c == '-' || c == '.') return prefix + name;
    return prefix + "_" + name;
}

// Config-file fallback: a CLI flag the user did not pass takes its value from
// "<section>.<key>" (or bare "<key>") when the TOML table has it.
struct TomlCfg {
    TomlTable t;
    std::string section;
    bool loaded = false;

    void load(const std::string& path, InputList& inputs) {
        if (path.empty()) return;
        t = read_toml(path);
        inputs.emplace_back(path, file_digest(path));
        loaded = true;
    }
    bool find(const std::string& key, std::string& full) const {
        if (!loaded) return false;
        if (toml_has(t, section + "." + key)) {
            full = section + "." + key;
            return true;
        }
        if (toml_has(t, key)) {
            full = key;
            return true;
        }
        return false;
    }
    template <class Int>
    void num(const CLI::Option* o, Int& v, const std::string& key) const {
        std::string full;
        if (o->count() == 0 && find(key, full))
            v = static_cast<Int>(toml_int(t, full, static_cast<long long>(v)));
    }
    void real(const CLI::Option* o, double& v, const std::string& key) const {
        std::string full;
        if (o->count() == 0 && find(key, full)) v = toml_double(t, full, v);
    }
    void flag(const CLI::Option* o, bool& v, const std::string& key) const {
        std::string full;
        if (o->count() == 0 && find(key, full)) v = toml_bool(t, full, v);
    }
    void str(const CLI::Option* o, std::string& v, const std::string& key) const {
        std::string full;
        if (o->count() == 0 && find(key, full)) v = toml_string(t, full, v);
    }
};

DiagMode diag_mode_from(const std::string& name) {
    if (name == "pointmass") return DiagMode::PointMass;
    if (name == "discretized") return DiagMode::Discretized;
    throw InvalidInput("unknown diagonal mode '" + name +
                       "' (expected pointmass or discretized)");
}

// ---------------------------------------------------------------- simulate

struct SimulateOpts {
    int p = 0, n = 0;
    double density = 0.0, mag_lo = 0.4, mag_hi = 0.6;
    std::uint64_t seed = 0;
    std::string out_prefix, config_path;
    CLI::Option *p_o, *n_o, *density_o, *mag_lo_o, *mag_hi_o, *seed_o, *prefix_o;
};

void run_simulate(SimulateOpts& o) {
    InputList inputs;
    TomlCfg cfg;
    cfg.section = "simulate";
    cfg.load(o.config_path, inputs);
    cfg.num(o.p_o, o.p, "p");
    cfg.num(o.n_o, o.n, "n");
    cfg.real(o.density_o, o.density, "density");
    cfg.real(o.mag_lo_o, o.mag_lo, "mag_lo");
    cfg.real(o.mag_hi_o, o.mag_hi, "mag_hi");
    cfg.num(o.seed_o, o.seed, "seed");
    cfg.str(o.prefix_o, o.out_prefix, "out_prefix");
    if (o.p < 2) throw InvalidInput("--p must be at least 2");
    if (o.n < 2) throw InvalidInput("--n must be at least 2");

    TruthSpec ts;
    ts.p = o.p;
    ts.density = o.density;
    ts.mag_lo = o.mag_lo;
    ts.mag_hi = o.mag_hi;
    ts.validate();

    SeededRng truth_rng(o.seed, 0);
    const PrecisionState truth = generate_truth(ts, truth_rng);
    SeededRng data_rng(o.seed, 1);
    const Matrix data = sample_mvn(truth, o.n, data_rng);

    const std::string truth_path = join_prefix(o.out_prefix, "truth.csv");
    const std::string data_path = join_prefix(o.out_prefix, "data.csv");
    const std::string pattern_path = join_prefix(o.out_prefix, "truth_pattern.json");
    write_csv_matrix(truth_path, truth.dense());
    write_csv_matrix(data_path, data);

    Json config = Json::object();
    config["p"] = o.p;
    config["n"] = o.n;
    config["density"] = o.density;
    config["mag_lo"] = o.mag_lo;
    config["mag_hi"] = o.mag_hi;
    config["seed"] = o.seed;
    config["out_prefix"] = o.out_prefix;

    Json doc = pattern_to_json(pattern_of(truth));
    doc["config"] = config;
    doc["manifest"] = make_manifest("simulate", config, o.seed, inputs, nullptr);
    emit(pattern_path, doc);
}

// ---------------------------------------------------------------- fit

struct FitOpts {
    std::string data_path, cov_path, prior = "spikeslab", diag = "pointmass";
    std::string out_path, config_path;
    int n = 0, burnin = 2000, keep = 2000, thin = 1, chains = 1, threads = 0;
    long long tau = -1;
    double q = 0.5, lambda = 1.0, gamma = 1.0, r = 1e-4, s = 1e-8;
    double threshold = 0.5, ci = 0.95;
    std::uint64_t seed = 0;
    bool header = false, center = false, hyper = false, fix_diag = false, timing = false;
    CLI::Option *n_o, *burnin_o, *keep_o, *thin_o, *chains_o, *threads_o, *tau_o;
    CLI::Option *q_o, *lambda_o, *gamma_o, *r_o, *s_o, *threshold_o, *ci_o;
    CLI::Option *seed_o, *prior_o, *diag_o, *header_o, *center_o, *hyper_o, *fix_diag_o;
};

void run_fit(FitOpts& o) {
    InputList inputs;
    TomlCfg cfg;
    cfg.section = "fit";
    cfg.load(o.config_path, inputs);
    cfg.str(o.prior_o, o.prior, "prior");
    cfg.num(o.burnin_o, o.burnin, "burnin");
    cfg.num(o.keep_o, o.keep, "keep");
    cfg.num(o.thin_o, o.thin, "thin");
    cfg.num(o.chains_o, o.chains, "chains");
    cfg.num(o.threads_o, o.threads, "threads");
    cfg.num(o.tau_o, o.tau, "tau");
    cfg.real(o.q_o, o.q, "q");
    cfg.real(o.lambda_o, o.lambda, "lambda");
    cfg.real(o.gamma_o, o.gamma, "gamma");
    cfg.real(o.r_o, o.r, "r");
    cfg.real(o.s_o, o.s, "s");
    cfg.real(o.threshold_o, o.threshold, "threshold");
    cfg.real(o.ci_o, o.ci, "ci");
    cfg.num(o.seed_o, o.seed, "seed");
    cfg.str(o.diag_o, o.diag, "diag");
    cfg.flag(o.header_o, o.header, "header");
    cfg.flag(o.center_o, o.center, "center");
    cfg.flag(o.hyper_o, o.hyper, "hyper");
    cfg.flag(o.fix_diag_o, o.fix_diag, "fix_diag");

    const DataInput in = load_input(o.data_path, o.cov_path, o.n, o.header, o.center, inputs);
    const int threads = resolve_threads(o.threads);
    const bool hyper_on = o.hyper || o.r_o->count() > 0 || o.s_o->count() > 0;
    const auto t0 = std::chrono::steady_clock::now();

    if (o.prior == "horseshoe") {
        if (o.chains_o->count() > 0 && o.chains != 1)
            throw InvalidInput("the horseshoe fit runs a single chain");
        HorseshoeConfig hc;
        hc.burn_in = o.burnin;
        hc.keep = o.keep;
        hc.thin = o.thin;
        hc.ci_level = o.ci;
        hc.gamma0 = o.gamma;
        hc.diag_mode = diag_mode_from(o.diag);
        hc.update_diagonals = !o.fix_diag;
        hc.validate();

        const HorseshoeSummary summ =
            run_chain_bhsc(in.S, in.n, hc, SeededRng(o.seed, 1));

        Json config = Json::object();
        config["prior"] = "horseshoe";
        config["burnin"] = o.burnin;
        config["keep"] = o.keep;
        config["thin"] = o.thin;
        config["ci"] = o.ci;
        config["gamma"] = o.gamma;
        config["diag"] = o.diag;
        config["update_diagonals"] = !o.fix_diag;
        config["center"] = o.center;
        config["seed"] = o.seed;

        Json doc = Json::object();
        doc["p"] = in.S.p;
        doc["n"] = in.n;
        doc["mean"] = vector_to_json(summ.offdiag_mean);
        doc["ci_lo"] = vector_to_json(summ.offdiag_ci_lo);
        doc["ci_hi"] = vector_to_json(summ.offdiag_ci_hi);
        doc["diag_mean"] = vector_to_json(summ.diag_mean);
        doc["diag_ci_lo"] = vector_to_json(summ.diag_ci_lo);
        doc["diag_ci_hi"] = vector_to_json(summ.diag_ci_hi);
        doc["estimate"] = state_json(summ.mean_state());
        doc["selected"] = bits_json(summ.selected);
        doc["pairs"] = pair_table(in.S.p);
        doc["config"] = config;
        doc["seed"] = o.seed;
        Json timing;
        const Json* tptr = nullptr;
        if (o.timing) {
            timing = Json::object();
            timing["duration_seconds"] =
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
            tptr = &timing;
        }
        doc["manifest"] = make_manifest("fit", config, o.seed, inputs, tptr);
        emit(o.out_path, doc);
        return;
    }
    if (o.prior != "spikeslab")
        throw InvalidInput("unknown prior '" + o.prior +
                           "' (expected spikeslab or horseshoe)");

    SpikeSlabConfig sc;
    sc.q = o.q;
    sc.lambda0 = o.lambda;
    sc.gamma0 = o.gamma;
    sc.burn_in = o.burnin;
    sc.keep = o.keep;
    sc.thin = o.thin;
    sc.diag_mode = diag_mode_from(o.diag);
    sc.update_diagonals = !o.fix_diag;
    if (o.tau >= 0) sc.tau = static_cast<std::size_t>(o.tau);
    if (hyper_on) sc.hyper = GammaHyper{o.r, o.s};
    sc.validate(in.S.p);

    RunOptions ropts;
    ropts.collect_timing = o.timing;
    const ChainTrace trace =
        run_chains(in.S, in.n, sc, o.chains, threads, o.seed, 1, ropts);
    const PosteriorSummary summ = summarize(trace, trace.diag_mean(), o.threshold);

    Json config = Json::object();
    config["prior"] = "spikeslab";
    config["burnin"] = o.burnin;
    config["keep"] = o.keep;
    config["thin"] = o.thin;
    config["q"] = o.q;
    config["lambda"] = o.lambda;
    config["gamma"] = o.gamma;
    if (hyper_on) {
        Json h = Json::object();
        h["r"] = o.r;
        h["s"] = o.s;
        config["hyper"] = h;
    } else {
        config["hyper"] = nullptr;
    }
    if (o.tau >= 0)
        config["tau"] = o.tau;
    else
        config["tau"] = nullptr;
    config["threshold"] = o.threshold;
    config["chains"] = o.chains;
    config["diag"] = o.diag;
    config["update_diagonals"] = !o.fix_diag;
    config["center"] = o.center;
    config["seed"] = o.seed;

    Json doc = Json::object();
    doc["p"] = in.S.p;
    doc["n"] = in.n;
    doc["inclusion"] = vector_to_json(summ.inclusion);
    doc["estimate"] = state_json(summ.estimate);
    doc["selected"] = bits_json(summ.selected);
    doc["pairs"] = pair_table(in.S.p);
    doc["config"] = config;
    doc["seed"] = o.seed;
    Json timing;
    const Json* tptr = nullptr;
    if (o.timing) {
        timing = Json::object();
        timing["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        timing["per_sweep"] = timing_stats(trace.sweep_seconds);
        tptr = &timing;
    }
    doc["manifest"] = make_manifest("fit", config, o.seed, inputs, tptr);
    emit(o.out_path, doc);
}

// ---------------------------------------------------------------- refit

struct RefitOpts {
    std::string data_path, cov_path, graph_path, out_path, config_path;
    int n = 0, sweeps = 4000;
    double eps = 1e-6, ci = 0.95;
    std::uint64_t seed = 0;
    bool header = false, center = false, timing = false;
    CLI::Option *n_o, *sweeps_o, *eps_o, *ci_o, *seed_o, *graph_o, *header_o, *center_o;
};

void run_refit(RefitOpts& o) {
    InputList inputs;
    TomlCfg cfg;
    cfg.section = "refit";
    cfg.load(o.config_path, inputs);
    cfg.num(o.n_o, o.n, "n");
    cfg.num(o.sweeps_o, o.sweeps, "sweeps");
    cfg.real(o.eps_o, o.eps, "eps");
    cfg.real(o.ci_o, o.ci, "ci");
    cfg.num(o.seed_o, o.seed, "seed");
    cfg.str(o.graph_o, o.graph_path, "graph");
    cfg.flag(o.header_o, o.header, "header");
    cfg.flag(o.center_o, o.center, "center");
    if (o.graph_path.empty()) throw InvalidInput("--graph is required");
    if (!(o.eps > 0.0)) throw InvalidInput("--eps must be positive");

    const DataInput in = load_input(o.data_path, o.cov_path, o.n, o.header, o.center, inputs);
    const SparsityPattern pat = load_pattern_file(o.graph_path);
    inputs.emplace_back(o.graph_path, file_digest(o.graph_path));
    if (pat.p != in.S.p)
        throw InvalidInput("graph dimension does not match the data");
    const GraphConstraint G(pat);

    const auto t0 = std::chrono::steady_clock::now();
    const RefitResult res =
        refit_gibbs(in.S, G, in.n, o.sweeps, SeededRng(o.seed, 1), o.ci);

    Json config = Json::object();
    config["graph"] = o.graph_path;
    config["sweeps"] = o.sweeps;
    config["eps"] = o.eps;
    config["ci"] = o.ci;
    config["center"] = o.center;
    config["seed"] = o.seed;

    Json doc = Json::object();
    doc["p"] = in.S.p;
    doc["n"] = in.n;
    doc["edges"] = pattern_to_json(pat)["edges"];
    doc["mode"] = state_json(res.mode);
    doc["mean"] = state_json(res.mean);
    doc["offdiag_ci_lo"] = vector_to_json(res.offdiag_ci_lo);
    doc["offdiag_ci_hi"] = vector_to_json(res.offdiag_ci_hi);
    doc["diag_ci_lo"] = vector_to_json(res.diag_ci_lo);
    doc["diag_ci_hi"] = vector_to_json(res.diag_ci_hi);
    doc["min_eigenvalue"] = res.min_eigenvalue;
    if (res.min_eigenvalue <= 0.0)
        doc["projected"] = state_json(project_pd(res.mean, o.eps));
    else
        doc["projected"] = nullptr;
    doc["pairs"] = pair_table(in.S.p);
    doc["config"] = config;
    doc["seed"] = o.seed;
    Json timing;
    const Json* tptr = nullptr;
    if (o.timing) {
        timing = Json::object();
        timing["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        tptr = &timing;
    }
    doc["manifest"] = make_manifest("refit", config, o.seed, inputs, tptr);
    emit(o.out_path, doc);
}

// ---------------------------------------------------------------- enumerate

struct EnumerateOpts {
    std::string cov_path, diag_path, out_path, config_path;
    int n = 0;
    long long tau = -1;
    double q = 0.5, lambda = 1.0;
    bool header = false;
    CLI::Option *n_o, *q_o, *lambda_o, *tau_o, *cov_o, *diag_o, *header_o;
};

void run_enumerate(EnumerateOpts& o) {
    InputList inputs;
    TomlCfg cfg;
    cfg.section = "enumerate";
    cfg.load(o.config_path, inputs);
    cfg.num(o.n_o, o.n, "n");
    cfg.real(o.q_o, o.q, "q");
    cfg.real(o.lambda_o, o.lambda, "lambda");
    cfg.num(o.tau_o, o.tau, "tau");
    cfg.str(o.cov_o, o.cov_path, "cov");
    cfg.str(o.diag_o, o.diag_path, "diag");
    if (o.cov_path.empty()) throw InvalidInput("--cov is required");
    if (o.diag_path.empty()) throw InvalidInput("--diag is required");
    if (o.n < 2) throw InvalidInput("--n must be at least 2");

    const SampleCovariance S = load_cov(o.cov_path, o.header);
    inputs.emplace_back(o.cov_path, file_digest(o.cov_path));
    const Vector diag = read_csv_vector(o.diag_path);
    inputs.emplace_back(o.diag_path, file_digest(o.diag_path));
    if (static_cast<int>(diag.size()) != S.p)
        throw InvalidInput("--diag length does not match the covariance dimension");

    SpikeSlabConfig sc;
    sc.q = o.q;
    sc.lambda0 = o.lambda;
    if (o.tau >= 0) sc.tau = static_cast<std::size_t>(o.tau);
    sc.validate(S.p);

    const PatternPosterior post = enumerate_patterns(S, o.n, diag, sc);
    const Vector marg = marginal_inclusion(post);

    // rank admissible patterns, ties broken by mask for a stable listing
    const std::size_t tau_cap = sc.effective_tau(S.p);
    std::vector<std::uint32_t> order;
    order.reserve(post.prob.size());
    for (std::uint32_t mask = 0; mask < post.prob.size(); ++mask)
        if (static_cast<std::size_t>(__builtin_popcount(mask)) <= tau_cap)
            order.push_back(mask);
    std::sort(order.begin(), order.end(), [&post](std::uint32_t a, std::uint32_t b) {
        if (post.prob[a] != post.prob[b]) return post.prob[a] > post.prob[b];
        return a < b;
    });
    if (order.size() > 50) order.resize(50);

    Json patterns = Json::array();
    for (const std::uint32_t mask : order) {
        Json entry = Json::object();
        Json edges = Json::array();
        for (std::size_t f = 0; f < post.n_pairs; ++f)
            if (mask & (std::uint32_t{1} << f)) {
                const PairIndex pr = pair_from_flat(f, S.p);
                edges.push_back(Json::array({pr.j + 1, pr.k + 1}));
            }
        entry["edges"] = edges;
        entry["size"] = __builtin_popcount(mask);
        entry["prob"] = post.prob[mask];
        patterns.push_back(entry);
    }

    Json config = Json::object();
    config["n"] = o.n;
    config["q"] = o.q;
    config["lambda"] = o.lambda;
    if (o.tau >= 0)
        config["tau"] = o.tau;
    else
        config["tau"] = nullptr;

    Json doc = Json::object();
    doc["p"] = S.p;
    doc["n"] = o.n;
    doc["n_pairs"] = post.n_pairs;
    doc["pairs"] = pair_table(S.p);
    doc["marginal"] = vector_to_json(marg);
    doc["patterns"] = patterns;
    doc["config"] = config;
    doc["manifest"] = make_manifest("enumerate", config, 0, inputs, nullptr);
    emit(o.out_path, doc);
}

// ---------------------------------------------------------------- eval

struct EvalOpts {
    std::string selected_path, truth_path, est_path, truth_matrix_path;
    std::string out_path, config_path;
    bool header = false;
};

void run_eval(EvalOpts& o) {
    InputList inputs;
    if (o.selected_path.empty() || o.truth_path.empty())
        throw InvalidInput("--selected and --truth are both required");
    if (o.est_path.empty() != o.truth_matrix_path.empty())
        throw InvalidInput("--est and --truth-matrix must be given together");

    const SparsityPattern selected = load_pattern_file(o.selected_path);
    inputs.emplace_back(o.selected_path, file_digest(o.selected_path));
    const SparsityPattern truth = load_pattern_file(o.truth_path);
    inputs.emplace_back(o.truth_path, file_digest(o.truth_path));

    AccuracyReport rep = accuracy(selected, truth);
    if (!o.est_path.empty()) {
        const PrecisionState est = load_estimate_file(o.est_path);
        inputs.emplace_back(o.est_path, file_digest(o.est_path));
        const Matrix tm = read_csv_matrix(o.truth_matrix_path, o.header);
        inputs.emplace_back(o.truth_matrix_path, file_digest(o.truth_matrix_path));
        rep.rel_frobenius = relative_frobenius(est, PrecisionState::from_dense(tm));
    }

    Json config = Json::object();
    config["selected"] = o.selected_path;
    config["truth"] = o.truth_path;
    if (!o.est_path.empty()) {
        config["est"] = o.est_path;
        config["truth_matrix"] = o.truth_matrix_path;
    }

    Json doc = Json::object();
    doc["p"] = truth.p;
    doc["tp"] = rep.tp;
    doc["tn"] = rep.tn;
    doc["fp"] = rep.fp;
    doc["fn"] = rep.fn;
    doc["sp"] = rep.sp;
    doc["se"] = rep.se;
    doc["mcc"] = rep.mcc;
    if (rep.rel_frobenius) doc["rel_frobenius"] = *rep.rel_frobenius;
    doc["config"] = config;
    doc["manifest"] = make_manifest("eval", config, 0, inputs, nullptr);
    emit(o.out_path, doc);
}

// ---------------------------------------------------------------- bench

struct BenchOpts {
    std::string spec_path, out_path;
    int threads = 0;
    std::uint64_t seed = 0;
    bool timing = false;
    CLI::Option *threads_o, *seed_o;
};

Json accuracy_json(const AccuracyReport& a) {
    Json j = Json::object();
    j["tp"] = a.tp;
    j["tn"] = a.tn;
    j["fp"] = a.fp;
    j["fn"] = a.fn;
    j["sp"] = a.sp;
    j["se"] = a.se;
    j["mcc"] = a.mcc;
    if (a.rel_frobenius) j["rel_frobenius"] = *a.rel_frobenius;
    return j;
}

void run_bench(BenchOpts& o) {
    InputList inputs;
    if (o.spec_path.empty()) throw InvalidInput("--spec is required");
    const TomlTable t = read_toml(o.spec_path);
    inputs.emplace_back(o.spec_path, file_digest(o.spec_path));
    auto key = [&t](const char* k) {
        const std::string pref = std::string("bench.") + k;
        return toml_has(t, pref) ? pref : std::string(k);
    };

    BenchSpec spec;
    spec.p = static_cast<int>(toml_int(t, key("p"), spec.p));
    spec.n = static_cast<int>(toml_int(t, key("n"), spec.n));
    spec.density = toml_double(t, key("density"), spec.density);
    spec.reps = static_cast<int>(toml_int(t, key("reps"), spec.reps));
    spec.method = method_from_name(toml_string(t, key("method"), "spikeslab"));
    spec.seed = static_cast<std::uint64_t>(toml_int(t, key("seed"), 0));
    spec.chains = static_cast<int>(toml_int(t, key("chains"), spec.chains));
    spec.threads = static_cast<int>(toml_int(t, key("threads"), 0));
    spec.threshold = toml_double(t, key("threshold"), spec.threshold);
    spec.refit_sweeps = static_cast<int>(toml_int(t, key("refit_sweeps"), spec.refit_sweeps));

    spec.fit.q = toml_double(t, "fit.q", spec.fit.q);
    spec.fit.lambda0 = toml_double(t, "fit.lambda", spec.fit.lambda0);
    spec.fit.gamma0 = toml_double(t, "fit.gamma", spec.fit.gamma0);
    spec.fit.burn_in = static_cast<int>(toml_int(t, "fit.burnin", spec.fit.burn_in));
    spec.fit.keep = static_cast<int>(toml_int(t, "fit.keep", spec.fit.keep));
    spec.fit.thin = static_cast<int>(toml_int(t, "fit.thin", spec.fit.thin));
    spec.fit.diag_mode = diag_mode_from(toml_string(t, "fit.diag", "pointmass"));
    if (toml_has(t, "fit.tau"))
        spec.fit.tau = static_cast<std::size_t>(toml_int(t, "fit.tau", 0));
    if (toml_bool(t, "fit.hyper", false))
        spec.fit.hyper = GammaHyper{toml_double(t, "fit.r", 1e-4),
                                    toml_double(t, "fit.s", 1e-8)};

    spec.hs.burn_in = static_cast<int>(toml_int(t, "horseshoe.burnin", spec.hs.burn_in));
    spec.hs.keep = static_cast<int>(toml_int(t, "horseshoe.keep", spec.hs.keep));
    spec.hs.thin = static_cast<int>(toml_int(t, "horseshoe.thin", spec.hs.thin));
    spec.hs.ci_level = toml_double(t, "horseshoe.ci", spec.hs.ci_level);
    spec.hs.gamma0 = toml_double(t, "horseshoe.gamma", spec.hs.gamma0);
    spec.hs.diag_mode = diag_mode_from(toml_string(t, "horseshoe.diag", "pointmass"));

    if (o.seed_o->count() > 0) spec.seed = o.seed;
    if (o.threads_o->count() > 0)
        spec.threads = o.threads;
    else
        spec.threads = resolve_threads(spec.threads);

    const auto t0 = std::chrono::steady_clock::now();
    const BenchReport report = replicate(spec, o.timing);

    Json config = Json::object();
    config["p"] = spec.p;
    config["n"] = spec.n;
    config["density"] = spec.density;
    config["reps"] = spec.reps;
    config["method"] = method_name(spec.method);
    config["seed"] = spec.seed;
    config["chains"] = spec.chains;
    config["threshold"] = spec.threshold;
    config["refit_sweeps"] = spec.refit_sweeps;
    Json fitc = Json::object();
    fitc["q"] = spec.fit.q;
    fitc["lambda"] = spec.fit.lambda0;
    fitc["gamma"] = spec.fit.gamma0;
    fitc["burnin"] = spec.fit.burn_in;
    fitc["keep"] = spec.fit.keep;
    fitc["thin"] = spec.fit.thin;
    if (spec.fit.hyper) {
        Json h = Json::object();
        h["r"] = spec.fit.hyper->r;
        h["s"] = spec.fit.hyper->s;
        fitc["hyper"] = h;
    } else {
        fitc["hyper"] = nullptr;
    }
    config["fit"] = fitc;
    Json hsc = Json::object();
    hsc["burnin"] = spec.hs.burn_in;
    hsc["keep"] = spec.hs.keep;
    hsc["thin"] = spec.hs.thin;
    hsc["ci"] = spec.hs.ci_level;
    hsc["gamma"] = spec.hs.gamma0;
    config["horseshoe"] = hsc;

    Json per_rep = Json::array();
    for (const RepResult& r : report.per_rep) {
        Json row = Json::object();
        row["rep"] = r.rep;
        row["ok"] = r.ok;
        if (!r.ok) {
            row["error"] = r.error;
        } else {
            row["accuracy"] = accuracy_json(r.acc);
            if (r.refit_rel_frobenius)
                row["refit_rel_frobenius"] = *r.refit_rel_frobenius;
        }
        if (o.timing) row["seconds"] = r.seconds;
        per_rep.push_back(row);
    }

    Json agg = Json::object();
    agg["n_ok"] = report.n_ok;
    agg["sp"] = report.sp;
    agg["se"] = report.se;
    agg["mcc"] = report.mcc;
    agg["rel_frobenius"] = report.rel_frobenius;
    if (report.refit_rel_frobenius)
        agg["refit_rel_frobenius"] = *report.refit_rel_frobenius;

    Json doc = Json::object();
    doc["truth"] = pattern_to_json(report.truth_pattern);
    doc["per_rep"] = per_rep;
    doc["aggregate"] = agg;
    doc["config"] = config;
    Json timing;
    const Json* tptr = nullptr;
    if (o.timing) {
        timing = Json::object();
        timing["duration_seconds"] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        tptr = &timing;
    }
    doc["manifest"] = make_manifest("bench", config, spec.seed, inputs, tptr);
    emit(o.out_path, doc);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bayesian sparse precision-matrix selection under the CONCORD "
                 "pseudo-likelihood"};
    app.require_subcommand(1);

    SimulateOpts sim;
    CLI::App* sim_cmd = app.add_subcommand("simulate", "Generate a synthetic truth and dataset");
    sim.p_o = sim_cmd->add_option("--p", sim.p, "Dimension");
    sim.n_o = sim_cmd->add_option("--n", sim.n, "Sample size");
    sim.density_o = sim_cmd->add_option("--density", sim.density, "Fraction of active pairs");
    sim.mag_lo_o = sim_cmd->add_option("--mag-lo", sim.mag_lo, "Smallest nonzero magnitude");
    sim.mag_hi_o = sim_cmd->add_option("--mag-hi", sim.mag_hi, "Largest nonzero magnitude");
    sim.seed_o = sim_cmd->add_option("--seed", sim.seed, "RNG seed");
    sim.prefix_o = sim_cmd->add_option("--out-prefix", sim.out_prefix,
                                       "Prefix for truth.csv, data.csv, truth_pattern.json");
    sim_cmd->add_option("--config", sim.config_path, "TOML config file");

    FitOpts fit;
    CLI::App* fit_cmd = app.add_subcommand("fit", "Run the posterior sampler");
    fit_cmd->add_option("--data", fit.data_path, "Observation CSV, rows = samples");
    fit_cmd->add_option("--cov", fit.cov_path, "Sample covariance CSV (with --n)");
    fit.n_o = fit_cmd->add_option("--n", fit.n, "Sample size behind --cov");
    fit.prior_o = fit_cmd->add_option("--prior", fit.prior, "spikeslab or horseshoe")
                      ->check(CLI::IsMember({"spikeslab", "horseshoe"}));
    fit.burnin_o = fit_cmd->add_option("--burnin", fit.burnin, "Burn-in sweeps");
    fit.keep_o = fit_cmd->add_option("--keep", fit.keep, "Retained sweeps");
    fit.thin_o = fit_cmd->add_option("--thin", fit.thin, "Thinning stride");
    fit.q_o = fit_cmd->add_option("--q", fit.q, "Slab mixture weight");
    fit.lambda_o = fit_cmd->add_option("--lambda", fit.lambda, "Slab precision");
    fit.gamma_o = fit_cmd->add_option("--gamma", fit.gamma, "Diagonal exponential rate");
    fit.hyper_o = fit_cmd->add_flag("--hyper", fit.hyper, "Resample lambda/gamma each sweep");
    fit.r_o = fit_cmd->add_option("--r", fit.r, "Hyperprior shape (implies --hyper)");
    fit.s_o = fit_cmd->add_option("--s", fit.s, "Hyperprior rate (implies --hyper)");
    fit.tau_o = fit_cmd->add_option("--tau", fit.tau, "Pattern-density cap");
    fit.threshold_o = fit_cmd->add_option("--threshold", fit.threshold, "Inclusion cutoff");
    fit.chains_o = fit_cmd->add_option("--chains", fit.chains, "Independent chains");
    fit.threads_o = fit_cmd->add_option("--threads", fit.threads, "Worker threads");
    fit.ci_o = fit_cmd->add_option("--ci", fit.ci, "Credible level (horseshoe)");
    fit.seed_o = fit_cmd->add_option("--seed", fit.seed, "RNG seed");
    fit.diag_o = fit_cmd->add_option("--diag", fit.diag, "pointmass or discretized")
                     ->check(CLI::IsMember({"pointmass", "discretized"}));
    fit.fix_diag_o = fit_cmd->add_flag("--fix-diag", fit.fix_diag,
                                       "Keep diagonals at their initial values");
    fit.header_o = fit_cmd->add_flag("--header", fit.header, "CSV input has a header row");
    fit.center_o = fit_cmd->add_flag("--center", fit.center, "Column-center the data");
    fit_cmd->add_flag("--timing", fit.timing, "Record wall-clock and per-sweep timings");
    fit_cmd->add_option("--out", fit.out_path, "Result JSON path (stdout if omitted)");
    fit_cmd->add_option("--config", fit.config_path, "TOML config file");

    RefitOpts ref;
    CLI::App* ref_cmd = app.add_subcommand("refit", "Re-estimate on a fixed graph");
    ref_cmd->add_option("--data", ref.data_path, "Observation CSV, rows = samples");
    ref_cmd->add_option("--cov", ref.cov_path, "Sample covariance CSV (with --n)");
    ref.n_o = ref_cmd->add_option("--n", ref.n, "Sample size behind --cov");
    ref.graph_o = ref_cmd->add_option("--graph", ref.graph_path,
                                      "Pattern JSON {p, edges} or a fit result");
    ref.sweeps_o = ref_cmd->add_option("--sweeps", ref.sweeps, "Gibbs sweeps (1/4 burn-in)");
    ref.eps_o = ref_cmd->add_option("--eps", ref.eps, "Eigenvalue floor for projection");
    ref.ci_o = ref_cmd->add_option("--ci", ref.ci, "Credible level");
    ref.seed_o = ref_cmd->add_option("--seed", ref.seed, "RNG seed");
    ref.header_o = ref_cmd->add_flag("--header", ref.header, "CSV input has a header row");
    ref.center_o = ref_cmd->add_flag("--center", ref.center, "Column-center the data");
    ref_cmd->add_flag("--timing", ref.timing, "Record wall-clock timing");
    ref_cmd->add_option("--out", ref.out_path, "Result JSON path (stdout if omitted)");
    ref_cmd->add_option("--config", ref.config_path, "TOML config file");

    EnumerateOpts enu;
    CLI::App* enu_cmd =
        app.add_subcommand("enumerate", "Exact pattern posterior at fixed diagonals");
    enu.cov_o = enu_cmd->add_option("--cov", enu.cov_path, "Sample covariance CSV");
    enu.n_o = enu_cmd->add_option("--n", enu.n, "Sample size");
    enu.diag_o = enu_cmd->add_option("--diag", enu.diag_path, "Fixed diagonal CSV vector");
    enu.q_o = enu_cmd->add_option("--q", enu.q, "Slab mixture weight");
    enu.lambda_o = enu_cmd->add_option("--lambda", enu.lambda, "Slab precision");
    enu.tau_o = enu_cmd->add_option("--tau", enu.tau, "Pattern-density cap");
    enu.header_o = enu_cmd->add_flag("--header", enu.header, "CSV input has a header row");
    enu_cmd->add_option("--out", enu.out_path, "Result JSON path (stdout if omitted)");
    enu_cmd->add_option("--config", enu.config_path, "TOML config file");

    EvalOpts ev;
    CLI::App* ev_cmd = app.add_subcommand("eval", "Score a selection against the truth");
    ev_cmd->add_option("--selected", ev.selected_path, "Selected pattern JSON");
    ev_cmd->add_option("--truth", ev.truth_path, "True pattern JSON");
    ev_cmd->add_option("--est", ev.est_path, "Estimate JSON (needs --truth-matrix)");
    ev_cmd->add_option("--truth-matrix", ev.truth_matrix_path, "True precision CSV");
    ev_cmd->add_flag("--header", ev.header, "CSV input has a header row");
    ev_cmd->add_option("--out", ev.out_path, "Report JSON path (stdout if omitted)");

    BenchOpts ben;
    CLI::App* ben_cmd = app.add_subcommand("bench", "Replicated simulation study");
    ben_cmd->add_option("--spec", ben.spec_path, "Bench TOML spec");
    ben.threads_o = ben_cmd->add_option("--threads", ben.threads, "Worker threads");
    ben.seed_o = ben_cmd->add_option("--seed", ben.seed, "RNG seed override");
    ben_cmd->add_flag("--timing", ben.timing, "Record wall-clock timing");
    ben_cmd->add_option("--out", ben.out_path, "Report JSON path (stdout if omitted)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }

    try {
        if (sim_cmd->parsed()) run_simulate(sim);
        if (fit_cmd->parsed()) run_fit(fit);
        if (ref_cmd->parsed()) run_refit(ref);
        if (enu_cmd->parsed()) run_enumerate(enu);
        if (ev_cmd->parsed()) run_eval(ev);
        if (ben_cmd->parsed()) run_bench(ben);
    } catch (const InvalidInput& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const NumericalError& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 2;
    }
    return 0;
}
