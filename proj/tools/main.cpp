// slope-designer: design SLOPE penalty sequences, solve SLOPE problems, run
// AMP recursions and reproduce the synthetic experiment protocols.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "slope/amp.hpp"
#include "slope/csv.hpp"
#include "slope/data.hpp"
#include "slope/design.hpp"
#include "slope/parallel.hpp"
#include "slope/solver.hpp"
#include "slope/sorted_l1.hpp"

namespace fs = std::filesystem;
using namespace slope;

namespace {

constexpr const char* kVersion = "0.1.0";

struct RunContext {
    std::string command;
    std::string name;
    fs::path out_dir = ".";
    std::uint64_t seed = 1;
    std::size_t jobs = 1;
    Config config;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();

    fs::path path(const std::string& suffix) const { return out_dir / (name + "_" + suffix); }

    void note_output(const fs::path& p) { outputs.push_back(p.filename().string()); }

    void write_manifest() {
        const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
        const fs::path p = out_dir / (name + "_manifest.txt");
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write manifest " + p.string());
        out << "command=" << command << "\n"
            << "name=" << name << "\n"
            << "version=" << kVersion << "\n"
            << "seed=" << seed << "\n"
            << "jobs=" << jobs << "\n"
            << "wall_clock_seconds=" << format_number(elapsed.count()) << "\n";
        for (const auto& [k, v] : config.entries()) out << "config." << k << "=" << v << "\n";
        for (const auto& o : outputs) out << "output=" << o << "\n";
    }
};

std::vector<double> parse_inline_vector(const std::string& text) {
    std::string t = text;
    std::erase_if(t, [](char c) { return c == '(' || c == ')' || c == '[' || c == ']' || c == ' '; });
    std::vector<double> out;
    for (const auto& item : split_list(t)) {
        try {
            out.push_back(std::stod(item));
        } catch (const std::exception&) {
            throw std::runtime_error("cannot parse '" + item + "' as a number in vector '" + text +
                                     "'");
        }
    }
    if (out.empty()) throw std::runtime_error("empty vector: '" + text + "'");
    return out;
}

std::vector<double> load_vector_csv(const std::string& path) {
    const auto table = read_csv(path);
    std::vector<double> out;
    out.reserve(table.nrows());
    for (const auto& row : table.rows) out.push_back(row[0]);
    return out;
}

void write_vector_csv(const fs::path& path, const std::string& column,
                      const std::vector<double>& values) {
    std::vector<std::vector<double>> rows;
    rows.reserve(values.size());
    for (double v : values) rows.push_back({v});
    write_csv(path.string(), {column}, rows);
}

Prior prior_from_config(const Config& cfg) {
    const std::string kind = cfg.get_or("prior.kind", "bernoulli");
    if (kind == "bernoulli") {
        return Prior::bernoulli(cfg.get_double_or("prior.eps", 0.5),
                                cfg.get_double_or("prior.value", 1.0));
    }
    if (kind == "gauss_bernoulli") {
        return Prior::gauss_bernoulli(cfg.get_double_or("prior.nonzero_prob", 0.5),
                                      cfg.get_double_or("prior.sigma_b", 1.0));
    }
    if (kind == "gaussian_binomial") {
        return Prior::gaussian_binomial(static_cast<int>(cfg.get_int_or("prior.trials", 5)),
                                        cfg.get_double_or("prior.prob", 0.3));
    }
    throw std::runtime_error("unknown prior.kind '" + kind + "'");
}

AmpConfig amp_from_config(const Config& cfg, std::uint64_t seed) {
    AmpConfig amp;
    amp.p = static_cast<std::size_t>(cfg.get_int_or("amp.p", 1000));
    amp.delta = cfg.get_double_or("amp.delta", 0.3);
    amp.sigma_w = cfg.get_double_or("amp.sigma_w", 0.0);
    amp.mc_samples = static_cast<std::size_t>(cfg.get_int_or("amp.mc_samples", 64));
    amp.tol = cfg.get_double_or("amp.tol", 1e-10);
    amp.max_iters = static_cast<std::size_t>(cfg.get_int_or("amp.max_iters", 400));
    amp.seed = seed;
    return amp;
}

ExperimentSpec spec_from_config(const Config& cfg) {
    ExperimentSpec spec;
    const std::string design = cfg.get_or("data.design", "gaussian");
    if (design == "gaussian" || design == "gaussian_iid") {
        spec.design = ExperimentSpec::Design::gaussian_iid;
    } else if (design == "arma" || design == "arma11") {
        spec.design = ExperimentSpec::Design::arma11;
    } else {
        throw std::runtime_error("unknown data.design '" + design + "'");
    }
    spec.n = static_cast<std::size_t>(cfg.get_int_or("data.n", 300));
    spec.p = static_cast<std::size_t>(cfg.get_int_or("data.p", 1000));
    spec.ar = cfg.get_double_or("data.ar", 0.8);
    spec.ma = cfg.get_double_or("data.ma", 0.8);
    spec.sigma_w = cfg.get_double_or("data.sigma_w", 0.0);
    spec.prior = prior_from_config(cfg);
    return spec;
}

Dataset dataset_from_config(const Config& cfg, std::uint64_t seed) {
    const std::string source = cfg.get_or("data.source", "synthetic");
    if (source == "synthetic") return make_dataset(spec_from_config(cfg), seed);
    if (source == "csv") {
        std::optional<std::size_t> top_m;
        if (cfg.has("data.screen_top_m"))
            top_m = static_cast<std::size_t>(cfg.get_int("data.screen_top_m"));
        return load_csv(cfg.get("data.csv_path"), cfg.get_or("data.response", "y"), top_m);
    }
    throw std::runtime_error("unknown data.source '" + source + "'");
}

SolverConfig solver_from_config(const Config& cfg) {
    SolverConfig s;
    s.max_iters = static_cast<std::size_t>(cfg.get_int_or("solver.max_iters", 20000));
    s.rel_tolerance = cfg.get_double_or("solver.rel_tolerance", 1e-10);
    s.fixed_point_tol = cfg.get_double_or("solver.fixed_point_tol", 1e-8);
    s.acceleration = cfg.get_or("solver.acceleration", "fista") == "none"
                         ? SolverConfig::Acceleration::none
                         : SolverConfig::Acceleration::fista;
    s.intercept = cfg.get_int_or("solver.intercept", 0) != 0;
    return s;
}

// penalty spec strings: "const:0.5", "bh:0.1,2.0", "klevel:7,5,1;2,3",
// "file:path.csv", "zero"
PenaltySequence penalty_from_spec(const std::string& spec, std::size_t p) {
    const auto colon = spec.find(':');
    const std::string kind = spec.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
    if (kind == "zero") return PenaltySequence::zeros(p);
    if (kind == "const") return PenaltySequence::constant(p, std::stod(arg));
    if (kind == "bh") {
        const auto parts = split_list(arg);
        if (parts.size() != 2) throw std::runtime_error("bh penalty needs q,scale");
        return bh_sequence(p, std::stod(parts[0]), std::stod(parts[1]));
    }
    if (kind == "klevel") {
        const auto semi = arg.find(';');
        const auto mags = parse_inline_vector(arg.substr(0, semi));
        std::vector<std::size_t> splits;
        if (semi != std::string::npos) {
            for (double v : parse_inline_vector(arg.substr(semi + 1)))
                splits.push_back(static_cast<std::size_t>(v));
        }
        return expand_k_level(KLevelPenalty::validated(mags, splits, p));
    }
    if (kind == "file") {
        auto v = load_vector_csv(arg);
        if (v.size() != p) throw std::runtime_error("penalty file length != p");
        return PenaltySequence::validated(std::move(v));
    }
    throw std::runtime_error("unknown penalty spec '" + spec + "'");
}

SearchConfig search_from_config(const Config& cfg) {
    SearchConfig s;
    s.golden_evals = static_cast<std::size_t>(cfg.get_int_or("cd.golden_evals", 30));
    s.split_stride_divisor = static_cast<std::size_t>(cfg.get_int_or("cd.split_stride_divisor", 32));
    s.exhaustive_splits = cfg.get_int_or("cd.exhaustive_splits", 0) != 0;
    s.max_sweeps = static_cast<std::size_t>(cfg.get_int_or("cd.max_sweeps", 60));
    s.magnitudes_first = cfg.get_or("cd.order", "magnitudes_first") != "interleaved";
    return s;
}

PgdConfig pgd_from_config(const Config& cfg) {
    PgdConfig pgd;
    pgd.step = cfg.get_double_or("pgd.step", 0.4);
    pgd.max_iters = static_cast<std::size_t>(cfg.get_int_or("pgd.max_iters", 300));
    pgd.tol = cfg.get_double_or("pgd.tol", 1e-7);
    pgd.patience = static_cast<std::size_t>(cfg.get_int_or("pgd.patience", 50));
    pgd.momentum_coef = cfg.get_double_or("pgd.momentum_coef", 0.9);
    const std::string mom = cfg.get_or("pgd.momentum", "none");
    pgd.momentum = mom == "heavy_ball"  ? Momentum::heavy_ball
                   : mom == "nesterov" ? Momentum::nesterov
                                       : Momentum::none;
    pgd.d_mode = cfg.get_or("pgd.d_mode", "unit") == "exact" ? DMode::exact : DMode::unit;
    pgd.step_mode = cfg.get_or("pgd.step_mode", "constant") == "scaled_by_abs_d"
                        ? StepMode::scaled_by_abs_d
                        : StepMode::constant;
    if (cfg.has("pgd.init_file")) pgd.init_alpha = load_vector_csv(cfg.get("pgd.init_file"));
    pgd.lasso_scan_points = static_cast<std::size_t>(cfg.get_int_or("pgd.lasso_scan_points", 40));
    pgd.lasso_scan_lo = cfg.get_double_or("pgd.lasso_scan_lo", 0.05);
    pgd.lasso_scan_hi = cfg.get_double_or("pgd.lasso_scan_hi", 50.0);
    return pgd;
}

// ---------------------------------------------------------------------------

int cmd_prox_or_project(RunContext& ctx, const std::string& input, const std::string& input_file,
                        const std::string& theta_spec, bool is_prox) {
    std::vector<double> y;
    if (!input.empty()) {
        y = parse_inline_vector(input);
    } else if (!input_file.empty()) {
        y = load_vector_csv(input_file);
    } else {
        throw std::runtime_error("need --input or --input-file");
    }
    std::vector<double> result;
    if (is_prox) {
        const auto theta = penalty_from_spec(theta_spec, y.size());
        result = prox_sorted_l1(y, theta);
        std::printf("sorted_l1_norm(result) = %s\n",
                    format_number(sorted_l1_norm(result, theta)).c_str());
        double quad = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) quad += (y[i] - result[i]) * (y[i] - result[i]);
        std::printf("objective = %s\n",
                    format_number(0.5 * quad + sorted_l1_norm(result, theta)).c_str());
    } else {
        result = project_on_S(y);
        double dist = 0.0;
        for (std::size_t i = 0; i < y.size(); ++i) dist += (y[i] - result[i]) * (y[i] - result[i]);
        std::printf("distance = %s\n", format_number(std::sqrt(dist)).c_str());
    }
    const auto out = ctx.path("result.csv");
    write_vector_csv(out, "value", result);
    ctx.note_output(out);
    ctx.write_manifest();
    return 0;
}

int cmd_solve(RunContext& ctx) {
    const auto& cfg = ctx.config;
    const auto data = dataset_from_config(cfg, ctx.seed);
    const auto lambda = penalty_from_spec(cfg.get_or("penalty.spec", "const:0.1"), data.p());
    const auto solver = solver_from_config(cfg);
    const std::string task = cfg.get_or("data.task", "linear");

    const FitResult fit = task == "logistic" ? fit_slope_logistic(data, lambda, solver)
                                             : fit_slope(data, lambda, solver);
    std::printf("objective = %s\niterations = %zu\nconverged = %d\n",
                format_number(fit.objective).c_str(), fit.iterations, fit.converged ? 1 : 0);
    if (fit.separable_warning) std::printf("warning: data appear separable, fit diverges\n");
    if (task == "logistic") {
        const auto labels = predict_labels(data, fit.beta, fit.intercept);
        std::printf("train_accuracy = %s\n",
                    format_number(classification_accuracy(data.y, labels)).c_str());
    } else {
        const auto yhat = predict(data, fit.beta);
        std::printf("prediction_mse = %s\n", format_number(prediction_mse(data.y, yhat)).c_str());
        if (data.beta_true)
            std::printf("estimation_mse = %s\n",
                        format_number(estimation_mse(*data.beta_true, fit.beta)).c_str());
    }
    const auto out = ctx.path("beta.csv");
    write_vector_csv(out, "beta", fit.beta);
    ctx.note_output(out);
    ctx.write_manifest();
    return 0;
}

int cmd_amp(RunContext& ctx) {
    const auto& cfg = ctx.config;
    const auto data = dataset_from_config(cfg, ctx.seed);
    const auto prior = prior_from_config(cfg);
    AmpConfig amp = amp_from_config(cfg, ctx.seed);
    amp.p = data.p();
    amp.delta = static_cast<double>(data.n()) / static_cast<double>(data.p());
    if (cfg.has("data.sigma_w")) amp.sigma_w = cfg.get_double("data.sigma_w");

    AmpOptions opts;
    opts.iters = static_cast<std::size_t>(cfg.get_int_or("amp.iters", 40));
    opts.tau_tracking = cfg.get_or("amp.tau_tracking", "empirical") == "state_evolution"
                            ? TauTracking::state_evolution
                            : TauTracking::empirical;

    const auto methods = split_list(cfg.get_or("amp.methods", "lasso-amp,slope-amp,mmse-amp"));
    std::vector<std::string> columns{"t"};
    std::vector<std::vector<double>> table(opts.iters + 1);
    for (std::size_t t = 0; t <= opts.iters; ++t) table[t].push_back(static_cast<double>(t));

    for (const auto& method : methods) {
        AmpTrajectory traj;
        if (method == "lasso-amp") {
            double tau = 0.0;
            const double a = cfg.has("amp.lasso_alpha")
                                 ? cfg.get_double("amp.lasso_alpha")
                                 : tuned_lasso_alpha(prior, amp, 40, 0.05, 50.0, &tau);
            traj = run_slope_amp(data, PenaltySequence::constant(data.p(), a), opts, amp, &prior);
        } else if (method == "slope-amp") {
            const std::string aspec = cfg.get_or("amp.slope_alpha", "pgd");
            PenaltySequence alpha;
            if (aspec == "pgd") {
                alpha = pgd_design(prior, amp, pgd_from_config(cfg)).alpha;
            } else if (aspec == "cd2" || aspec == "cd") {
                const std::size_t k = static_cast<std::size_t>(cfg.get_int_or("cd.k", 2));
                alpha = cd_design_se_tau(prior, amp, k, search_from_config(cfg)).alpha;
            } else {
                alpha = penalty_from_spec(aspec, data.p());
            }
            traj = run_slope_amp(data, alpha, opts, amp, &prior);
        } else if (method == "mmse-amp") {
            AmpOptions mopts = opts;
            mopts.tau_tracking =
                cfg.get_or("amp.mmse_tau_tracking", "state_evolution") == "empirical"
                    ? TauTracking::empirical
                    : TauTracking::state_evolution;
            traj = run_mmse_amp(data, prior, mopts, amp);
        } else {
            throw std::runtime_error("unknown amp method '" + method + "'");
        }
        columns.push_back(method + "_mse");
        columns.push_back(method + "_tau");
        columns.push_back(method + "_diverged");
        for (std::size_t t = 0; t <= opts.iters; ++t) {
            const auto& it = traj.iterates[std::min(t, traj.iterates.size() - 1)];
            table[t].push_back(it.mse);
            table[t].push_back(it.tau);
            table[t].push_back(traj.diverged ? 1.0 : 0.0);
        }
        std::printf("%s: final mse = %s, tau = %s%s\n", method.c_str(),
                    format_number(traj.iterates.back().mse).c_str(),
                    format_number(traj.tau_final).c_str(), traj.diverged ? " (diverged)" : "");
    }
    const auto out = ctx.path("amp.csv");
    write_csv(out.string(), columns, table);
    ctx.note_output(out);
    ctx.write_manifest();
    return 0;
}

int cmd_design_pgd(RunContext& ctx) {
    const auto& cfg = ctx.config;
    const auto prior = prior_from_config(cfg);
    const auto amp = amp_from_config(cfg, ctx.seed);
    const auto pgd = pgd_from_config(cfg);
    const auto res = pgd_design(prior, amp, pgd);

    std::printf("tuned_lasso: alpha = %s, tau = %s, asymptotic_mse = %s\n",
                format_number(res.lasso_alpha).c_str(), format_number(res.lasso_tau).c_str(),
                format_number(res.lasso_tau > 0 ? asymptotic_mse(res.lasso_tau, amp) : 0.0).c_str());
    std::printf("pgd: tau = %s, asymptotic_mse = %s, iterations = %zu, stop = %s\n",
                format_number(res.tau).c_str(), format_number(asymptotic_mse(res.tau, amp)).c_str(),
                res.iterations, res.stop_reason.c_str());
    if (res.aborted) {
        std::fprintf(stderr, "error: calibration domain failure at the first iterate (%s)\n",
                     res.stop_reason.c_str());
        return 1;
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t t = 0; t < res.tau_trajectory.size(); ++t) {
        const double tau = res.tau_trajectory[t];
        rows.push_back({static_cast<double>(t), tau, asymptotic_mse(tau, amp)});
    }
    const auto traj = ctx.path("trajectory.csv");
    write_csv(traj.string(), {"iteration", "tau", "asymptotic_mse"}, rows);
    ctx.note_output(traj);
    const auto af = ctx.path("alpha.csv");
    write_vector_csv(af, "alpha", res.alpha.values());
    ctx.note_output(af);
    const auto lf = ctx.path("lambda.csv");
    write_vector_csv(lf, "lambda", res.lambda.values());
    ctx.note_output(lf);
    ctx.write_manifest();
    return 0;
}

int cmd_design_cd(RunContext& ctx) {
    const auto& cfg = ctx.config;
    const std::string objective = cfg.get_or("cd.objective", "se_tau");
    const std::size_t k = static_cast<std::size_t>(cfg.get_int_or("cd.k", 2));
    const auto search = search_from_config(cfg);

    CdResult cd;
    PenaltySequence lambda_full;
    double lasso_value = 0.0;
    std::string value_name = "objective";

    if (objective == "se_tau") {
        const auto prior = prior_from_config(cfg);
        const auto amp = amp_from_config(cfg, ctx.seed);
        const auto res = cd_design_se_tau(prior, amp, k, search);
        double lasso_tau = 0.0;
        tuned_lasso_alpha(prior, amp, 40, 0.05, 50.0, &lasso_tau);
        lasso_value = asymptotic_mse(lasso_tau, amp);
        cd = res.cd;
        lambda_full = res.lambda;
        for (auto& e : cd.evaluations) {
            e.objective = e.objective < 1e6 ? asymptotic_mse(e.objective, amp) : e.objective;
        }
        for (auto& v : cd.accepted_trajectory) v = asymptotic_mse(v, amp);
        cd.objective = asymptotic_mse(cd.objective, amp);
        value_name = "asymptotic_mse";
    } else {
        const auto data = dataset_from_config(cfg, ctx.seed);
        const auto solver = solver_from_config(cfg);
        const std::size_t folds = static_cast<std::size_t>(cfg.get_int_or("cd.folds", 10));
        std::unique_ptr<ObjectiveFn> fn;
        if (objective == "estimation_mse") {
            fn = std::make_unique<EstimationMseObjective>(data, solver);
            value_name = "estimation_mse";
        } else if (objective == "cv_prediction_mse") {
            fn = std::make_unique<CvObjective>(data, folds, CvObjective::Metric::prediction_mse,
                                               solver, ctx.seed);
            value_name = "cv_prediction_mse";
        } else if (objective == "cv_accuracy") {
            fn = std::make_unique<CvObjective>(data, folds, CvObjective::Metric::accuracy, solver,
                                               ctx.seed);
            value_name = "one_minus_cv_accuracy";
        } else {
            throw std::runtime_error("unknown cd.objective '" + objective + "'");
        }
        // tuned-lasso baseline on the same objective (40-point geometric grid)
        const double cap = fn->magnitude_cap();
        double best_lam = cap;
        lasso_value = std::numeric_limits<double>::infinity();
        for (int g = 0; g < 40; ++g) {
            const double lam = cap * std::pow(1e-4, double(g) / 39.0);
            const double v = (*fn)(KLevelPenalty::validated({lam}, {}, data.p()));
            if (v < lasso_value) {
                lasso_value = v;
                best_lam = lam;
            }
        }
        KLevelPenalty init;
        init.p = data.p();
        init.magnitudes.assign(k, best_lam);
        for (std::size_t i = 1; i < k; ++i) init.splits.push_back(i * data.p() / k);
        cd = cd_design(*fn, init, search);
        lambda_full = expand_k_level(cd.penalty);
    }

    std::printf("lasso %s = %s\n", value_name.c_str(), format_number(lasso_value).c_str());
    std::printf("cd k=%zu %s = %s (sweeps = %zu%s)\n", k, value_name.c_str(),
                format_number(cd.objective).c_str(), cd.sweeps,
                cd.any_eval_failed ? ", some evaluations failed" : "");

    std::vector<std::vector<double>> evals;
    for (const auto& e : cd.evaluations)
        evals.push_back({static_cast<double>(e.index), e.objective});
    const auto ef = ctx.path("evaluations.csv");
    write_csv(ef.string(), {"evaluation", value_name}, evals);
    ctx.note_output(ef);

    std::vector<std::vector<double>> acc;
    for (std::size_t i = 0; i < cd.accepted_trajectory.size(); ++i)
        acc.push_back({static_cast<double>(i), cd.accepted_trajectory[i]});
    const auto af = ctx.path("accepted.csv");
    write_csv(af.string(), {"step", value_name}, acc);
    ctx.note_output(af);

    std::vector<std::vector<double>> lev;
    for (std::size_t i = 0; i < cd.penalty.levels(); ++i) {
        const double split_after =
            i + 1 < cd.penalty.levels() ? static_cast<double>(cd.penalty.splits[i]) : 0.0;
        lev.push_back({static_cast<double>(i + 1), cd.penalty.magnitudes[i], split_after});
    }
    const auto pf = ctx.path("penalty.csv");
    write_csv(pf.string(), {"level", "magnitude", "split_after"}, lev);
    ctx.note_output(pf);

    const auto lf = ctx.path("lambda.csv");
    write_vector_csv(lf, "lambda", lambda_full.values());
    ctx.note_output(lf);

    std::vector<std::vector<double>> summary{{1.0, lasso_value},
                                             {static_cast<double>(k), cd.objective}};
    const auto sf = ctx.path("summary.csv");
    write_csv(sf.string(), {"levels", value_name}, summary);
    ctx.note_output(sf);
    ctx.write_manifest();
    return 0;
}

// one method evaluation for cmd_experiment; returns the metric value
double experiment_method(const Config& cfg, const std::string& method, std::uint64_t seed) {
    const std::string regime = cfg.get_or("experiment.regime", "amp");
    const auto prior = prior_from_config(cfg);
    if (regime == "amp") {
        AmpConfig amp = amp_from_config(cfg, seed);
        if (method == "lasso") {
            double tau = 0.0;
            tuned_lasso_alpha(prior, amp, 40, 0.05, 50.0, &tau);
            return asymptotic_mse(tau, amp);
        }
        if (method == "pgd") {
            const auto res = pgd_design(prior, amp, pgd_from_config(cfg));
            return asymptotic_mse(res.tau, amp);
        }
        if (method.rfind("cd:", 0) == 0) {
            const std::size_t k = std::stoul(method.substr(3));
            const auto res = cd_design_se_tau(prior, amp, k, search_from_config(cfg));
            return asymptotic_mse(res.tau, amp);
        }
        if (method == "mmse") {
            const auto se = mmse_se_fixed_point(prior, amp);
            return asymptotic_mse(se.tau, amp);
        }
        throw std::runtime_error("method '" + method + "' not available in the amp regime");
    }
    // data regime: synthetic data, cross-validated prediction metrics
    const auto data = dataset_from_config(cfg, seed);
    const auto solver = solver_from_config(cfg);
    const std::size_t folds = static_cast<std::size_t>(cfg.get_int_or("experiment.folds", 10));
    const std::string metric = cfg.get_or("experiment.metric", "prediction_mse");
    const auto m = metric == "accuracy" ? CvObjective::Metric::accuracy
                                        : CvObjective::Metric::prediction_mse;
    CvObjective obj(data, folds, m, solver, seed);
    const auto search = search_from_config(cfg);
    const double cap = obj.magnitude_cap();

    auto grid_best_lasso = [&](double* best_lam_out) {
        double best_lam = cap, best = std::numeric_limits<double>::infinity();
        for (int g = 0; g < 40; ++g) {
            const double lam = cap * std::pow(1e-4, double(g) / 39.0);
            const double v = obj(KLevelPenalty::validated({lam}, {}, data.p()));
            if (v < best) {
                best = v;
                best_lam = lam;
            }
        }
        if (best_lam_out != nullptr) *best_lam_out = best_lam;
        return best;
    };

    if (method == "lasso") return grid_best_lasso(nullptr);
    if (method == "bh") {
        // scale a q=0.1 BH shape over the same 40-point grid
        const auto shape = bh_sequence(data.p(), 0.1, 1.0);
        const double top = shape[0] > 0 ? shape[0] : 1.0;
        double best = std::numeric_limits<double>::infinity();
        for (int g = 0; g < 40; ++g) {
            const double scale = cap / top * std::pow(1e-4, double(g) / 39.0);
            const auto kp = compress_to_k_level(shape.scaled(scale));
            best = std::min(best, obj(kp));
        }
        return best;
    }
    if (method.rfind("cd:", 0) == 0) {
        const std::size_t k = std::stoul(method.substr(3));
        double best_lam = cap;
        grid_best_lasso(&best_lam);
        KLevelPenalty init;
        init.p = data.p();
        init.magnitudes.assign(k, best_lam);
        for (std::size_t i = 1; i < k; ++i) init.splits.push_back(i * data.p() / k);
        return cd_design(obj, init, search).objective;
    }
    throw std::runtime_error("method '" + method + "' not available in the data regime");
}

int cmd_experiment(RunContext& ctx) {
    const auto& cfg = ctx.config;
    const auto seed_items = split_list(cfg.get_or("experiment.seeds", ""));
    if (seed_items.empty()) throw std::runtime_error("experiment.seeds is empty");
    std::vector<std::uint64_t> seeds;
    for (const auto& s : seed_items) seeds.push_back(std::stoull(s));
    const auto methods = split_list(cfg.get_or("experiment.methods", "lasso,cd:2"));
    if (methods.empty()) throw std::runtime_error("experiment.methods is empty");

    std::vector<std::vector<double>> per_seed_rows;
    std::vector<std::vector<double>> agg_rows;
    std::vector<std::string> failures;
    for (std::size_t mi = 0; mi < methods.size(); ++mi) {
        std::vector<double> values;
        for (const auto seed : seeds) {
            double v = std::numeric_limits<double>::quiet_NaN();
            try {
                v = experiment_method(cfg, methods[mi], seed);
            } catch (const std::exception& e) {
                failures.push_back(methods[mi] + "@" + std::to_string(seed) + ": " + e.what());
            }
            per_seed_rows.push_back({static_cast<double>(mi), static_cast<double>(seed), v});
            if (std::isfinite(v)) values.push_back(v);
        }
        double mean = std::numeric_limits<double>::quiet_NaN(), sd = 0.0;
        if (!values.empty()) {
            mean = 0.0;
            for (double v : values) mean += v;
            mean /= static_cast<double>(values.size());
            for (double v : values) sd += (v - mean) * (v - mean);
            sd = values.size() > 1 ? std::sqrt(sd / static_cast<double>(values.size() - 1)) : 0.0;
        }
        agg_rows.push_back({static_cast<double>(mi), mean, sd, static_cast<double>(values.size())});
        std::printf("%s: mean = %s, std = %s, runs = %zu/%zu\n", methods[mi].c_str(),
                    format_number(mean).c_str(), format_number(sd).c_str(), values.size(),
                    seeds.size());
    }
    for (const auto& f : failures) std::fprintf(stderr, "failed: %s\n", f.c_str());

    const auto pf = ctx.path("per_seed.csv");
    write_csv(pf.string(), {"method_index", "seed", "value"}, per_seed_rows);
    ctx.note_output(pf);
    const auto outp = ctx.path("experiment.csv");
    write_csv(outp.string(), {"method_index", "mean", "std", "runs"}, agg_rows);
    ctx.note_output(outp);
    const auto legend = ctx.out_dir / (ctx.name + "_methods.txt");
    {
        std::ofstream out(legend);
        for (std::size_t mi = 0; mi < methods.size(); ++mi) out << mi << "=" << methods[mi] << "\n";
    }
    ctx.outputs.push_back(legend.filename().string());
    ctx.write_manifest();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SLOPE penalty sequence designer"};
    app.require_subcommand(1);

    std::string config_path, out_dir = ".", name, input, input_file, theta_spec = "zero";
    std::uint64_t seed = 0;
    bool seed_set = false;
    std::size_t jobs = 0;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "config file (key=value sections)");
        sub->add_option("--out", out_dir, "output directory")->capture_default_str();
        sub->add_option("--name", name, "output file prefix (default: command name)");
        sub->add_option("--seed", seed, "master seed override")->each([&](const std::string&) {
            seed_set = true;
        });
        sub->add_option("--jobs", jobs, "worker threads (env SLOPE_DESIGNER_THREADS overrides)");
    };

    auto* prox = app.add_subcommand("prox", "sorted-l1 proximal operator");
    prox->add_option("--input", input, "inline vector, e.g. \"(1,3)\"");
    prox->add_option("--input-file", input_file, "single-column CSV");
    prox->add_option("--theta", theta_spec, "penalty spec: const:c | bh:q,s | klevel:... | file:p");
    add_common(prox);

    auto* project = app.add_subcommand("project", "projection onto non-negative decreasing vectors");
    project->add_option("--input", input, "inline vector");
    project->add_option("--input-file", input_file, "single-column CSV");
    add_common(project);

    add_common(app.add_subcommand("solve", "fit SLOPE (linear or logistic) on a dataset"));
    add_common(app.add_subcommand("amp", "run AMP recursions (lasso/slope/mmse)"));
    add_common(app.add_subcommand("design-pgd", "projected gradient descent penalty design"));
    add_common(app.add_subcommand("design-cd", "k-level coordinate descent penalty design"));
    add_common(app.add_subcommand("experiment", "seed-aggregated method comparisons"));

    CLI11_PARSE(app, argc, argv);

    try {
        RunContext ctx;
        ctx.command = app.get_subcommands().front()->get_name();
        ctx.name = name.empty() ? ctx.command : name;
        ctx.out_dir = out_dir;
        fs::create_directories(ctx.out_dir);
        if (!config_path.empty()) ctx.config = Config::parse_file(config_path);
        ctx.seed = seed_set ? seed : static_cast<std::uint64_t>(ctx.config.get_int_or("run.seed", 1));
        const std::size_t cfg_jobs =
            jobs > 0 ? jobs : static_cast<std::size_t>(ctx.config.get_int_or("run.jobs", 1));
        ctx.jobs = jobs_from_env(cfg_jobs);
        set_jobs(ctx.jobs);

        const std::string& cmd = ctx.command;
        if (cmd == "prox") return cmd_prox_or_project(ctx, input, input_file, theta_spec, true);
        if (cmd == "project") return cmd_prox_or_project(ctx, input, input_file, "", false);
        if (cmd == "solve") return cmd_solve(ctx);
        if (cmd == "amp") return cmd_amp(ctx);
        if (cmd == "design-pgd") return cmd_design_pgd(ctx);
        if (cmd == "design-cd") return cmd_design_cd(ctx);
        if (cmd == "experiment") return cmd_experiment(ctx);
        std::fprintf(stderr, "error: unknown command\n");
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
