#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "slope/amp.hpp"
#include "slope/solver.hpp"
#include "slope/types.hpp"

namespace slope {

struct ExperimentSpec {
    enum class Design { gaussian_iid, arma11 };
    Design design = Design::gaussian_iid;
    std::size_t n = 300;
    std::size_t p = 1000;
    double ar = 0.8;
    double ma = 0.8;
    Prior prior = Prior::gauss_bernoulli(0.5, 1.0);
    double sigma_w = 0.0;
};

/// n x p with i.i.d. N(0, 1/n) entries.
Matrix gen_gaussian_design(std::size_t n, std::size_t p, std::uint64_t seed);

/// Each row is an ARMA(1,1) path across the p features,
/// X_t = eps_t + ar X_{t-1} + ma eps_{t-1}, 100 burn-in steps discarded.
Matrix gen_arma_design(std::size_t n, std::size_t p, double ar, double ma, std::uint64_t seed);

std::vector<double> sample_prior(const Prior& prior, std::size_t p, std::uint64_t seed);
std::vector<double> sample_noise(double sigma_w, std::size_t n, std::uint64_t seed);

Dataset make_dataset(const ExperimentSpec& spec, std::uint64_t seed);

/// ||u - v||^2 / len.
double estimation_mse(std::span<const double> beta, std::span<const double> beta_hat);
double prediction_mse(std::span<const double> y, std::span<const double> y_hat);

/// Seeded permutation, then contiguous blocks. Returns fold id per row.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

struct CvResult {
    std::vector<double> fold_values;
    double mean = 0.0;
    double stddev = 0.0;
};

enum class Task { linear, logistic };

CvResult kfold_cv(const Dataset& data, std::size_t folds, const PenaltySequence& lambda, Task task,
                  const SolverConfig& solver, std::uint64_t seed);

/// Train/test split by fold id (test = rows with fold_of[i] == fold).
std::pair<Dataset, Dataset> split_fold(const Dataset& data, const std::vector<std::size_t>& fold_of,
                                       std::size_t fold);

/// Numeric CSV with a header row. Optional screening keeps the m columns with
/// the largest |Pearson correlation| against the response (ties by column
/// order); kept columns are centered and scaled to unit l2 norm.
Dataset load_csv(const std::string& path, const std::string& response_column,
                 std::optional<std::size_t> screen_top_m = std::nullopt);

/// Column names of the features kept by the screening step of load_csv.
std::vector<std::string> screened_columns(const std::string& path,
                                          const std::string& response_column,
                                          std::optional<std::size_t> screen_top_m);

void save_dataset_csv(const Dataset& data, const std::string& path, const std::string& meta_path,
                      std::uint64_t seed, const std::string& spec_description);

}  // namespace slope
