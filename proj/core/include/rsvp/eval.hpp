#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "rsvp/classifiers.hpp"
#include "rsvp/features.hpp"
#include "rsvp/recording.hpp"
#include "rsvp/spatial_filters.hpp"

namespace rsvp {

// Pipeline composition and evaluation: ranking AUC, block-held-out splits,
// stratified k-fold cross validation, random hyperparameter search and
// one-way ANOVA. Every stochastic choice derives from (seed, stream), so
// results are identical under any scheduling or thread count.

/// Rank-based (Mann-Whitney) AUC with midrank tie handling. Labels are 0/1
/// and both classes must be present.
double auc(const Eigen::VectorXd& scores, const std::vector<int>& labels);

/// The same quantity via explicit ROC trapezoidal integration; equals auc()
/// exactly and exists as an internal cross-check.
double auc_trapezoid(const Eigen::VectorXd& scores, const std::vector<int>& labels);

struct SplitResult {
  EpochSet train;
  EpochSet test;
};

/// Holds out whole presentation blocks: per task, `test_blocks_per_task`
/// blocks are chosen deterministically from the seed. No block straddles the
/// split.
SplitResult block_split(const EpochSet& epochs, int test_blocks_per_task,
                        std::uint64_t seed);

/// Per-pipeline hyperparameters. n_f is the spatial filter count (window
/// count for the beamformer, filter pairs for CSP); alpha/beta belong to BLR
/// and lambda to LR. Exactly the fields a pipeline needs may be set.
struct Hyperparams {
  std::optional<int> n_f;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> lambda;

  bool operator==(const Hyperparams&) const = default;
};

struct PipelineSpec {
  FilterMethod filter = FilterMethod::None;
  ModelKind classifier = ModelKind::Lda;
  Hyperparams hyper;
};

std::string pipeline_name(FilterMethod filter, ModelKind classifier);

/// Random-search ranges: filter counts are uniform integers, scale
/// parameters log-uniform.
struct SearchSpace {
  int n_f_min = 1;
  int n_f_max = 10;
  int pairs_min = 1;
  int pairs_max = 8;
  double scale_lo = 1e-4;
  double scale_hi = 1e4;
};

struct FittedPipeline {
  std::optional<SpatialFilterBank> bank;  // absent for the no-filter pipelines
  SeriesPcaModel pca;
  LinearModel model;
};

/// Fits spatial filters (when configured), the per-series PCA and the
/// classifier on the given training set. Validates that the hyperparameter
/// fields match the pipeline exactly.
FittedPipeline fit_pipeline(const PipelineSpec& spec, const EpochSet& train);

/// Decision scores of a fitted pipeline on an epoch set.
Eigen::VectorXd score_pipeline(const FittedPipeline& fit, const EpochSet& epochs);

/// Deterministic stratified fold assignment (values in [0, k)); every fold
/// receives both classes or a DataError is thrown.
std::vector<int> stratified_folds(const std::vector<EventLabel>& labels, int k,
                                  std::uint64_t seed);

struct CvResult {
  double mean_auc = 0.0;
  std::vector<double> fold_aucs;
};

/// Stratified k-fold cross validation of one pipeline; the held-out fold is
/// never seen by any fitting stage (filters included).
CvResult kfold_cv(const PipelineSpec& spec, const EpochSet& train, int k,
                  std::uint64_t fold_seed);

/// Same evaluation with a caller-supplied fold assignment (values in [0, k)
/// for k = max + 1); every fold must contain both classes.
CvResult kfold_cv(const PipelineSpec& spec, const EpochSet& train,
                  const std::vector<int>& fold_of_epoch);

struct Candidate {
  Hyperparams hyper;
  double mean_cv_auc = 0.0;
  std::vector<double> fold_aucs;
};

/// Shares fitted (spatial filter, PCA) transforms across candidates and
/// pipelines that agree on (fold, method, filter count). Entries are
/// computed at most once and results do not depend on which thread computed
/// them.
class TransformCache {
 public:
  struct Entry {
    std::optional<SpatialFilterBank> bank;
    SeriesPcaModel pca;
  };

  std::shared_ptr<const Entry> get_or_fit(int fold, FilterMethod method, int hyper,
                                          const std::function<Entry()>& fit);

 private:
  struct Slot {
    std::once_flag once;
    std::shared_ptr<const Entry> value;
  };
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, std::shared_ptr<Slot>> slots_;
};

struct SearchResult {
  PipelineSpec best;
  std::size_t best_index = 0;
  std::vector<Candidate> table;  // one row per candidate, draw order
};

/// Fold seed used by random_search, exposed so kfold_cv can reproduce a
/// candidate row exactly.
std::uint64_t search_fold_seed(std::uint64_t master_seed);

/// Samples `budget` hyperparameter candidates (candidate i draws only from
/// (master_seed, i)), scores each by stratified k-fold CV and returns the
/// candidate maximizing mean CV AUC. Ties break to the smaller filter count,
/// then the smaller candidate index. Results are identical for any thread
/// count.
SearchResult random_search(const SearchSpace& space, FilterMethod filter,
                           ModelKind classifier, const EpochSet& train, int budget,
                           int k, std::uint64_t master_seed, int threads = 1,
                           TransformCache* cache = nullptr);

struct AnovaResult {
  double f = 0.0;
  double p = 1.0;
  std::size_t group_count = 0;
  std::size_t df_between = 0;
  std::size_t df_within = 0;
};

/// Classic one-way fixed-effects ANOVA with upper-tail p-value. Needs at
/// least two groups of at least two values; throws DataError when the
/// within-group variance vanishes everywhere.
AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups);

}  // namespace rsvp
