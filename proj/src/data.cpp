#include "slope/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "slope/csv.hpp"
#include "slope/kernels.hpp"
#include "slope/rng.hpp"

namespace slope {
namespace {

constexpr std::size_t kArmaBurnIn = 100;

}  // namespace

Matrix gen_gaussian_design(std::size_t n, std::size_t p, std::uint64_t seed) {
    if (n < 1 || p < 1) throw std::invalid_argument("gen_gaussian_design: n, p must be >= 1");
    Matrix X(n, p);
    const double sd = 1.0 / std::sqrt(static_cast<double>(n));
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = substream(seed, i);
        double* row = X.row(i);
        for (std::size_t j = 0; j < p; ++j) row[j] = sd * gauss(rng);
    }
    return X;
}

Matrix gen_arma_design(std::size_t n, std::size_t p, double ar, double ma, std::uint64_t seed) {
    if (n < 1 || p < 1) throw std::invalid_argument("gen_arma_design: n, p must be >= 1");
    if (std::fabs(ar) >= 1.0) throw std::invalid_argument("gen_arma_design: |ar| must be < 1");
    Matrix X(n, p);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto rng = substream(seed, i);
        double x_prev = 0.0, e_prev = 0.0;
        for (std::size_t t = 0; t < kArmaBurnIn + p; ++t) {
            const double e = gauss(rng);
            const double x = e + ar * x_prev + ma * e_prev;
            if (t >= kArmaBurnIn) X(i, t - kArmaBurnIn) = x;
            x_prev = x;
            e_prev = e;
        }
    }
    return X;
}

std::vector<double> sample_prior(const Prior& prior, std::size_t p, std::uint64_t seed) {
    std::vector<double> out(p);
    auto rng = substream(seed, 0x5157);
    prior.sample(rng, out);
    return out;
}

std::vector<double> sample_noise(double sigma_w, std::size_t n, std::uint64_t seed) {
    if (sigma_w < 0.0) throw std::invalid_argument("sample_noise: sigma_w must be >= 0");
    std::vector<double> out(n, 0.0);
    if (sigma_w == 0.0) return out;
    auto rng = substream(seed, 0x2301);
    std::normal_distribution<double> gauss(0.0, sigma_w);
    for (double& x : out) x = gauss(rng);
    return out;
}

Dataset make_dataset(const ExperimentSpec& spec, std::uint64_t seed) {
    Dataset data;
    data.X = spec.design == ExperimentSpec::Design::gaussian_iid
                 ? gen_gaussian_design(spec.n, spec.p, splitmix64(seed))
                 : gen_arma_design(spec.n, spec.p, spec.ar, spec.ma, splitmix64(seed));
    data.beta_true = sample_prior(spec.prior, spec.p, splitmix64(seed + 1));
    data.sigma_w = spec.sigma_w;
    const auto noise = sample_noise(spec.sigma_w, spec.n, splitmix64(seed + 2));
    data.y = matvec(data.X, *data.beta_true);
    kernels::axpy(1.0, noise.data(), data.y.data(), spec.n);
    data.check();
    return data;
}

double estimation_mse(std::span<const double> beta, std::span<const double> beta_hat) {
    if (beta.size() != beta_hat.size()) throw std::invalid_argument("estimation_mse: length mismatch");
    if (beta.empty()) return 0.0;
    return kernels::squared_distance(beta.data(), beta_hat.data(), beta.size()) /
           static_cast<double>(beta.size());
}

double prediction_mse(std::span<const double> y, std::span<const double> y_hat) {
    if (y.size() != y_hat.size()) throw std::invalid_argument("prediction_mse: length mismatch");
    if (y.empty()) return 0.0;
    return kernels::squared_distance(y.data(), y_hat.data(), y.size()) /
           static_cast<double>(y.size());
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw std::invalid_argument("fold_assignment: folds must be >= 2");
    if (folds > n) throw std::invalid_argument("fold_assignment: folds > n");
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    auto rng = substream(seed, 0xf01d);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::size_t> fold_of(n);
    // contiguous blocks of the permutation, sizes as equal as possible
    const std::size_t base = n / folds, extra = n % folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        const std::size_t len = base + (f < extra ? 1 : 0);
        for (std::size_t k = 0; k < len; ++k) fold_of[perm[pos + k]] = f;
        pos += len;
    }
    return fold_of;
}

std::pair<Dataset, Dataset> split_fold(const Dataset& data, const std::vector<std::size_t>& fold_of,
                                       std::size_t fold) {
    if (fold_of.size() != data.n()) throw std::invalid_argument("split_fold: assignment size");
    std::size_t n_test = 0;
    for (auto f : fold_of) n_test += f == fold ? 1 : 0;
    const std::size_t n_train = data.n() - n_test;
    Dataset train, test;
    train.X = Matrix(n_train, data.p());
    test.X = Matrix(n_test, data.p());
    train.y.resize(n_train);
    test.y.resize(n_test);
    train.beta_true = data.beta_true;
    test.beta_true = data.beta_true;
    train.sigma_w = data.sigma_w;
    test.sigma_w = data.sigma_w;
    std::size_t it = 0, iv = 0;
    for (std::size_t i = 0; i < data.n(); ++i) {
        if (fold_of[i] == fold) {
            std::copy(data.X.row(i), data.X.row(i) + data.p(), test.X.row(iv));
            test.y[iv++] = data.y[i];
        } else {
            std::copy(data.X.row(i), data.X.row(i) + data.p(), train.X.row(it));
            train.y[it++] = data.y[i];
        }
    }
    return {std::move(train), std::move(test)};
}

CvResult kfold_cv(const Dataset& data, std::size_t folds, const PenaltySequence& lambda, Task task,
                  const SolverConfig& solver, std::uint64_t seed) {
    data.check();
    const auto fold_of = fold_assignment(data.n(), folds, seed);
    CvResult res;
    res.fold_values.resize(folds);
    for (std::size_t f = 0; f < folds; ++f) {
        auto [train, test] = split_fold(data, fold_of, f);
        if (train.n() == 0 || test.n() == 0)
            throw std::invalid_argument("kfold_cv: degenerate (empty) fold split");
        if (task == Task::logistic) {
            const auto fit = fit_slope_logistic(train, lambda, solver);
            const auto labels = predict_labels(test, fit.beta, fit.intercept);
            res.fold_values[f] = classification_accuracy(test.y, labels);
        } else {
            const auto fit = fit_slope(train, lambda, solver);
            const auto yhat = predict(test, fit.beta);
            res.fold_values[f] = prediction_mse(test.y, yhat);
        }
    }
    res.mean = std::accumulate(res.fold_values.begin(), res.fold_values.end(), 0.0) /
               static_cast<double>(folds);
    double ss = 0.0;
    for (double v : res.fold_values) ss += (v - res.mean) * (v - res.mean);
    res.stddev = folds > 1 ? std::sqrt(ss / static_cast<double>(folds - 1)) : 0.0;
    return res;
}

namespace {

struct Screened {
    std::vector<std::size_t> keep;  // column indices into the feature list
    std::vector<std::size_t> feature_cols;
    std::size_t response = 0;
};

Screened screen(const CsvTable& table, const std::string& response_column,
                std::optional<std::size_t> top_m) {
    Screened s;
    s.response = table.column_index(response_column);
    for (std::size_t j = 0; j < table.ncols(); ++j) {
        if (j != s.response) s.feature_cols.push_back(j);
    }
    const std::size_t n = table.nrows();
    if (n < 2) throw std::runtime_error("load_csv: need at least 2 rows");
    const std::size_t m = top_m.value_or(s.feature_cols.size());
    if (m > s.feature_cols.size())
        throw std::runtime_error("load_csv: screen_top_m exceeds the number of features");

    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = table.rows[i][s.response];
    const double ymean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
    double yss = 0.0;
    for (double v : y) yss += (v - ymean) * (v - ymean);

    std::vector<double> score(s.feature_cols.size(), 0.0);
    for (std::size_t c = 0; c < s.feature_cols.size(); ++c) {
        const std::size_t j = s.feature_cols[c];
        double xmean = 0.0;
        for (std::size_t i = 0; i < n; ++i) xmean += table.rows[i][j];
        xmean /= static_cast<double>(n);
        double xy = 0.0, xss = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xc = table.rows[i][j] - xmean;
            xy += xc * (y[i] - ymean);
            xss += xc * xc;
        }
        score[c] = (xss > 0.0 && yss > 0.0) ? std::fabs(xy) / std::sqrt(xss * yss) : 0.0;
    }
    std::vector<std::size_t> order(s.feature_cols.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return score[a] > score[b]; });
    s.keep.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(m));
    std::sort(s.keep.begin(), s.keep.end());  // keep original column order
    return s;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& response_column,
                 std::optional<std::size_t> screen_top_m) {
    const auto table = read_csv(path);
    const auto s = screen(table, response_column, screen_top_m);
    const std::size_t n = table.nrows();
    const std::size_t p = s.keep.size();
    Dataset data;
    data.X = Matrix(n, p);
    data.y.resize(n);
    for (std::size_t i = 0; i < n; ++i) data.y[i] = table.rows[i][s.response];
    for (std::size_t c = 0; c < p; ++c) {
        const std::size_t j = s.feature_cols[s.keep[c]];
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += table.rows[i][j];
        mean /= static_cast<double>(n);
        double norm2 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double v = table.rows[i][j] - mean;
            data.X(i, c) = v;
            norm2 += v * v;
        }
        if (norm2 > 0.0) {
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t i = 0; i < n; ++i) data.X(i, c) *= inv;
        }
    }
    data.check();
    return data;
}

std::vector<std::string> screened_columns(const std::string& path,
                                          const std::string& response_column,
                                          std::optional<std::size_t> screen_top_m) {
    const auto table = read_csv(path);
    const auto s = screen(table, response_column, screen_top_m);
    std::vector<std::string> names;
    names.reserve(s.keep.size());
    for (auto c : s.keep) names.push_back(table.columns[s.feature_cols[c]]);
    return names;
}

void save_dataset_csv(const Dataset& data, const std::string& path, const std::string& meta_path,
                      std::uint64_t seed, const std::string& spec_description) {
    std::vector<std::string> columns;
    columns.push_back("y");
    for (std::size_t j = 0; j < data.p(); ++j) columns.push_back("x" + std::to_string(j + 1));
    std::vector<std::vector<double>> rows(data.n());
    for (std::size_t i = 0; i < data.n(); ++i) {
        rows[i].reserve(data.p() + 1);
        rows[i].push_back(data.y[i]);
        for (std::size_t j = 0; j < data.p(); ++j) rows[i].push_back(data.X(i, j));
    }
    write_csv(path, columns, rows);
    std::ofstream meta(meta_path);
    if (!meta) throw std::runtime_error("save_dataset_csv: cannot write '" + meta_path + "'");
    meta << "n=" << data.n() << "\n"
         << "p=" << data.p() << "\n"
         << "seed=" << seed << "\n"
         << "spec=" << spec_description << "\n";
}

}  // namespace slope
