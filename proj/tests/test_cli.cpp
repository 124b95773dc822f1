#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "slope/csv.hpp"

namespace fs = std::filesystem;
using slope::read_csv;

namespace {

struct RunResult {
    int exit_code = -1;
    std::string output;
};

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    const fs::path dir = fs::temp_directory_path() / "slope_cli_tests";
    fs::create_directories(dir);
    const fs::path log = dir / ("log" + std::to_string(counter++) + ".txt");
    const std::string cmd = env_prefix + CLI_BIN " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
}

fs::path work_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "slope_cli_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("prox and project on inline vectors") {
    const auto dir = work_dir("inline");
    auto res = run_cli("project --input \"(1,3)\" --out " + dir.string());
    CHECK(res.exit_code == 0);
    const auto table = read_csv((dir / "project_result.csv").string());
    CHECK(table.rows[0][0] == doctest::Approx(2.0));
    CHECK(table.rows[1][0] == doctest::Approx(2.0));

    res = run_cli("prox --input \"(3,1,-2)\" --theta const:1 --out " + dir.string());
    CHECK(res.exit_code == 0);
    const auto prox = read_csv((dir / "prox_result.csv").string());
    CHECK(prox.rows[0][0] == doctest::Approx(2.0));
    CHECK(prox.rows[1][0] == doctest::Approx(0.0));
    CHECK(prox.rows[2][0] == doctest::Approx(-1.0));

    // zero theta: identity
    res = run_cli("prox --input \"(0.5,-0.25)\" --theta zero --out " + dir.string());
    CHECK(res.exit_code == 0);
    const auto ident = read_csv((dir / "prox_result.csv").string());
    CHECK(ident.rows[0][0] == doctest::Approx(0.5));
    CHECK(ident.rows[1][0] == doctest::Approx(-0.25));
}

TEST_CASE("malformed csv input names the offending line and exits nonzero") {
    const auto dir = work_dir("badcsv");
    const auto bad = dir / "bad.csv";
    std::ofstream(bad) << "value\n1.0\noops\n";
    const auto res = run_cli("prox --input-file " + bad.string() + " --theta const:1 --out " +
                             dir.string());
    CHECK(res.exit_code != 0);
    CHECK(res.output.find(":3:") != std::string::npos);
}

TEST_CASE("solve writes beta and a manifest referencing it") {
    const auto dir = work_dir("solve");
    const auto cfgp = dir / "solve.cfg";
    std::ofstream(cfgp) << "[data]\nsource = synthetic\ndesign = gaussian\nn = 40\np = 12\n"
                           "sigma_w = 0.1\n[prior]\nkind = gauss_bernoulli\nnonzero_prob = 0.5\n"
                           "sigma_b = 1.0\n[penalty]\nspec = const:0.05\n";
    const auto res = run_cli("solve --config " + cfgp.string() + " --seed 3 --out " + dir.string());
    CHECK(res.exit_code == 0);
    CHECK(fs::exists(dir / "solve_beta.csv"));
    const auto manifest = slurp(dir / "solve_manifest.txt");
    CHECK(manifest.find("output=solve_beta.csv") != std::string::npos);
    CHECK(manifest.find("command=solve") != std::string::npos);
    CHECK(manifest.find("seed=3") != std::string::npos);
    CHECK(res.output.find("objective") != std::string::npos);
}

TEST_CASE("design-pgd writes trajectory, sequences; zero iterations echoes the initialization") {
    const auto dir = work_dir("pgd");
    const auto cfgp = dir / "pgd.cfg";
    std::ofstream(cfgp) << "[amp]\np = 60\ndelta = 0.3\nsigma_w = 0\nmc_samples = 8\n"
                           "[prior]\nkind = bernoulli\neps = 0.5\nvalue = 1\n"
                           "[pgd]\nmax_iters = 4\nstep = 0.4\n";
    auto res = run_cli("design-pgd --config " + cfgp.string() + " --seed 2 --out " + dir.string());
    CHECK(res.exit_code == 0);
    const auto traj = read_csv((dir / "design-pgd_trajectory.csv").string());
    CHECK(traj.columns == std::vector<std::string>{"iteration", "tau", "asymptotic_mse"});
    CHECK(traj.nrows() >= 2);
    CHECK(fs::exists(dir / "design-pgd_alpha.csv"));
    CHECK(fs::exists(dir / "design-pgd_lambda.csv"));

    const auto cfg0 = dir / "pgd0.cfg";
    std::ofstream(cfg0) << "[amp]\np = 60\ndelta = 0.3\nsigma_w = 0\nmc_samples = 8\n"
                           "[prior]\nkind = bernoulli\neps = 0.5\nvalue = 1\n"
                           "[pgd]\nmax_iters = 0\n";
    res = run_cli("design-pgd --config " + cfg0.string() + " --seed 2 --name pgd0 --out " +
                  dir.string());
    CHECK(res.exit_code == 0);
    const auto t0 = read_csv((dir / "pgd0_trajectory.csv").string());
    CHECK(t0.nrows() == 1);  // just the tuned-lasso initialization
    const auto a0 = read_csv((dir / "pgd0_alpha.csv").string());
    // initialization unchanged: constant tuned-lasso alpha
    CHECK(a0.rows[0][0] == doctest::Approx(a0.rows[a0.nrows() - 1][0]));
}

TEST_CASE("design-cd trajectory is non-increasing and identical reruns match bit for bit") {
    const auto dir = work_dir("cd");
    const auto cfgp = dir / "cd.cfg";
    std::ofstream(cfgp) << "[amp]\np = 60\ndelta = 0.3\nsigma_w = 0\nmc_samples = 8\n"
                           "[prior]\nkind = gauss_bernoulli\nnonzero_prob = 0.5\nsigma_b = 1\n"
                           "[cd]\nobjective = se_tau\nk = 2\ngolden_evals = 8\nmax_sweeps = 2\n";
    auto res = run_cli("design-cd --config " + cfgp.string() + " --seed 5 --out " + dir.string());
    CHECK(res.exit_code == 0);
    const auto acc = read_csv((dir / "design-cd_accepted.csv").string());
    for (std::size_t i = 1; i < acc.nrows(); ++i) {
        CHECK(acc.rows[i][1] <= acc.rows[i - 1][1] + 1e-12);
    }
    CHECK(fs::exists(dir / "design-cd_penalty.csv"));
    CHECK(fs::exists(dir / "design-cd_summary.csv"));
    const std::string first = slurp(dir / "design-cd_lambda.csv");

    res = run_cli("design-cd --config " + cfgp.string() + " --seed 5 --name rerun --out " +
                  dir.string());
    CHECK(res.exit_code == 0);
    CHECK(slurp(dir / "rerun_lambda.csv") == first);
}

TEST_CASE("amp command emits per-method columns with divergence flags") {
    const auto dir = work_dir("amp");
    const auto cfgp = dir / "amp.cfg";
    std::ofstream(cfgp) << "[data]\nsource = synthetic\ndesign = gaussian\nn = 60\np = 120\n"
                           "sigma_w = 0.1\n[prior]\nkind = gauss_bernoulli\nnonzero_prob = 0.3\n"
                           "sigma_b = 1\n[amp]\niters = 12\nmethods = lasso-amp,mmse-amp\n"
                           "mc_samples = 8\n";
    const auto res = run_cli("amp --config " + cfgp.string() + " --seed 7 --out " + dir.string());
    CHECK(res.exit_code == 0);
    const auto table = read_csv((dir / "amp_amp.csv").string());
    CHECK(table.columns == std::vector<std::string>{"t", "lasso-amp_mse", "lasso-amp_tau",
                                                    "lasso-amp_diverged", "mmse-amp_mse",
                                                    "mmse-amp_tau", "mmse-amp_diverged"});
    CHECK(table.nrows() == 13);
    CHECK(table.rows[0][0] == 0.0);
}

TEST_CASE("experiment aggregates over seeds and rejects an empty seed list") {
    const auto dir = work_dir("exp");
    const auto cfgp = dir / "exp.cfg";
    std::ofstream(cfgp) << "[experiment]\nregime = amp\nseeds = 1,2\nmethods = lasso,mmse\n"
                           "[amp]\np = 60\ndelta = 0.3\nsigma_w = 0\nmc_samples = 8\n"
                           "[prior]\nkind = gauss_bernoulli\nnonzero_prob = 0.5\nsigma_b = 1\n";
    auto res = run_cli("experiment --config " + cfgp.string() + " --out " + dir.string());
    CHECK(res.exit_code == 0);
    const auto agg = read_csv((dir / "experiment_experiment.csv").string());
    CHECK(agg.nrows() == 2);
    CHECK(agg.rows[0][3] == 2.0);  // runs per method
    const auto per = read_csv((dir / "experiment_per_seed.csv").string());
    CHECK(per.nrows() == 4);

    const auto cfge = dir / "empty.cfg";
    std::ofstream(cfge) << "[experiment]\nseeds =\nmethods = lasso\n";
    res = run_cli("experiment --config " + cfge.string() + " --out " + dir.string());
    CHECK(res.exit_code != 0);
    CHECK(res.output.find("seeds") != std::string::npos);
}

TEST_CASE("worker count does not change results") {
    const auto dir = work_dir("jobs");
    const auto cfgp = dir / "cd.cfg";
    std::ofstream(cfgp) << "[amp]\np = 50\ndelta = 0.4\nsigma_w = 0\nmc_samples = 8\n"
                           "[prior]\nkind = bernoulli\neps = 0.5\nvalue = 1\n"
                           "[cd]\nobjective = se_tau\nk = 2\ngolden_evals = 6\nmax_sweeps = 1\n";
    auto res = run_cli("design-cd --config " + cfgp.string() + " --seed 9 --name j1 --out " +
                       dir.string() + " --jobs 1");
    CHECK(res.exit_code == 0);
    res = run_cli("design-cd --config " + cfgp.string() + " --seed 9 --name j2 --out " +
                  dir.string(),
                  "SLOPE_DESIGNER_THREADS=2 ");
    CHECK(res.exit_code == 0);
    CHECK(slurp(dir / "j1_lambda.csv") == slurp(dir / "j2_lambda.csv"));
    CHECK(slurp(dir / "j2_manifest.txt").find("jobs=2") != std::string::npos);
}

}  // TEST_SUITE
