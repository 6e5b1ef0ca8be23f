#include "rsvp/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <set>
#include <thread>

#include <boost/math/distributions/fisher_f.hpp>

#include "rsvp/errors.hpp"
#include "rsvp/rng.hpp"

namespace rsvp {

namespace {

// Stream tags keeping the deterministic RNG uses disjoint.
constexpr std::uint64_t kCandidateStream = 0x100000;
constexpr std::uint64_t kFoldStream = 0x200000;
constexpr std::uint64_t kBlockStream = 0x300000;

void check_scores(const Eigen::VectorXd& scores, const std::vector<int>& labels,
                  const char* who) {
  if (static_cast<std::size_t>(scores.size()) != labels.size()) {
    throw ParamError(std::string(who) + ": score and label counts differ");
  }
  std::size_t pos = 0;
  for (int v : labels) {
    if (v != 0 && v != 1) throw ParamError(std::string(who) + ": labels must be 0/1");
    pos += static_cast<std::size_t>(v);
  }
  if (pos == 0 || pos == labels.size()) {
    throw DataError(std::string(who) + ": both classes required");
  }
}

/// Runs `fn(unit)` for every unit index on up to `threads` workers. Units
/// write disjoint output slots, so results are scheduling-independent. The
/// first exception wins and is rethrown after all workers drain.
void parallel_units(std::size_t unit_count, int threads,
                    const std::function<void(std::size_t)>& fn) {
  const int workers =
      std::max(1, std::min<int>(threads, static_cast<int>(unit_count)));
  if (workers == 1) {
    for (std::size_t u = 0; u < unit_count; ++u) fn(u);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mu;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (;;) {
        const std::size_t u = next.fetch_add(1);
        if (u >= unit_count) return;
        try {
          fn(u);
        } catch (...) {
          std::lock_guard lock(error_mu);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

void validate_hyper(const PipelineSpec& spec) {
  const bool filtered = spec.filter != FilterMethod::None;
  if (filtered != spec.hyper.n_f.has_value()) {
    throw ParamError("pipeline " + pipeline_name(spec.filter, spec.classifier) +
                     (filtered ? ": missing filter count" : ": stray filter count"));
  }
  const bool needs_ab = spec.classifier == ModelKind::Blr;
  if (needs_ab != (spec.hyper.alpha.has_value() && spec.hyper.beta.has_value()) ||
      (!needs_ab && (spec.hyper.alpha || spec.hyper.beta))) {
    throw ParamError("pipeline " + pipeline_name(spec.filter, spec.classifier) +
                     ": alpha/beta only belong to BLR");
  }
  const bool needs_lambda = spec.classifier == ModelKind::Lr;
  if (needs_lambda != spec.hyper.lambda.has_value()) {
    throw ParamError("pipeline " + pipeline_name(spec.filter, spec.classifier) +
                     ": lambda only belongs to LR");
  }
}

std::vector<int> to_binary_labels(const std::vector<EventLabel>& labels) {
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    y[i] = labels[i] == EventLabel::Target ? 1 : 0;
  }
  return y;
}

EpochSet subset(const EpochSet& all, const std::vector<std::size_t>& idx) {
  EpochSet out;
  out.rate = all.rate;
  out.window_start = all.window_start;
  out.window_end = all.window_end;
  out.channels = all.channels;
  out.epochs.reserve(idx.size());
  out.labels.reserve(idx.size());
  out.provenance.reserve(idx.size());
  for (const auto i : idx) {
    out.epochs.push_back(all.epochs[i]);
    out.labels.push_back(all.labels[i]);
    out.provenance.push_back(all.provenance[i]);
  }
  return out;
}

std::optional<SpatialFilterBank> fit_bank(FilterMethod method, int n_f,
                                          const EpochSet& train) {
  switch (method) {
    case FilterMethod::None: return std::nullopt;
    case FilterMethod::Mtwlb: return fit_mtwlb(train, n_f);
    case FilterMethod::Xdawn: return fit_xdawn(train, n_f);
    case FilterMethod::Csp: return fit_csp(train, n_f);
  }
  return std::nullopt;
}

Eigen::MatrixXd features_of(const std::optional<SpatialFilterBank>& bank,
                            const SeriesPcaModel& pca, const EpochSet& epochs) {
  if (bank) return transform_features(pca, project_epochs(*bank, epochs));
  return transform_features(pca, epochs.epochs);
}

LinearModel fit_classifier(ModelKind kind, const Hyperparams& hyper,
                           const Eigen::MatrixXd& x, const std::vector<int>& y) {
  switch (kind) {
    case ModelKind::Lda: return fit_lda(x, y);
    case ModelKind::Blr: return fit_blr(x, y, *hyper.alpha, *hyper.beta);
    case ModelKind::Lr: return fit_lr(x, y, *hyper.lambda);
  }
  throw ParamError("unknown classifier kind");
}

/// CV evaluation of many candidates sharing a filter method: per fold, the
/// (filter, PCA) transform is fitted once per distinct filter count and the
/// candidates' classifiers are fitted on the shared features. Used by both
/// kfold_cv and random_search so their numbers agree bit for bit.
void evaluate_candidates(const EpochSet& train, const std::vector<int>& folds, int k,
                         FilterMethod filter, ModelKind classifier,
                         std::vector<Candidate>& table, int threads,
                         TransformCache* cache) {
  for (auto& c : table) c.fold_aucs.assign(static_cast<std::size_t>(k), 0.0);

  for (int f = 0; f < k; ++f) {
    std::vector<std::size_t> fit_idx, val_idx;
    for (std::size_t i = 0; i < folds.size(); ++i) {
      (folds[i] == f ? val_idx : fit_idx).push_back(i);
    }
    const EpochSet fit_set = subset(train, fit_idx);
    const EpochSet val_set = subset(train, val_idx);
    const std::vector<int> y_fit = to_binary_labels(fit_set.labels);
    const std::vector<int> y_val = to_binary_labels(val_set.labels);

    // Group candidates by the hyperparameter that changes the transform.
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t c = 0; c < table.size(); ++c) {
      groups[table[c].hyper.n_f.value_or(0)].push_back(c);
    }
    std::vector<std::pair<int, std::vector<std::size_t>>> units(groups.begin(),
                                                                groups.end());

    parallel_units(units.size(), threads, [&](std::size_t u) {
      const int n_f = units[u].first;
      auto fit_transform = [&]() -> TransformCache::Entry {
        TransformCache::Entry e;
        e.bank = fit_bank(filter, n_f, fit_set);
        e.pca = e.bank ? fit_series_pca(project_epochs(*e.bank, fit_set))
                       : fit_series_pca(fit_set.epochs);
        return e;
      };
      std::shared_ptr<const TransformCache::Entry> entry;
      if (cache) {
        entry = cache->get_or_fit(f, filter, n_f, fit_transform);
      } else {
        entry = std::make_shared<TransformCache::Entry>(fit_transform());
      }

      const Eigen::MatrixXd x_fit = features_of(entry->bank, entry->pca, fit_set);
      const Eigen::MatrixXd x_val = features_of(entry->bank, entry->pca, val_set);

      for (const auto c : units[u].second) {
        const LinearModel model =
            fit_classifier(classifier, table[c].hyper, x_fit, y_fit);
        table[c].fold_aucs[static_cast<std::size_t>(f)] =
            auc(predict_scores(model, x_val), y_val);
      }
    });
  }

  for (auto& c : table) {
    c.mean_cv_auc = std::accumulate(c.fold_aucs.begin(), c.fold_aucs.end(), 0.0) /
                    static_cast<double>(k);
  }
}

}  // namespace

double auc(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  check_scores(scores, labels, "auc");
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[static_cast<Eigen::Index>(a)] < scores[static_cast<Eigen::Index>(b)]; });

  double rank_sum_pos = 0.0;
  double n1 = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && scores[static_cast<Eigen::Index>(order[j + 1])] ==
                            scores[static_cast<Eigen::Index>(order[i])]) {
      ++j;
    }
    const double midrank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
    for (std::size_t t = i; t <= j; ++t) {
      if (labels[order[t]] == 1) {
        rank_sum_pos += midrank;
        n1 += 1.0;
      }
    }
    i = j + 1;
  }
  const double n0 = static_cast<double>(n) - n1;
  return (rank_sum_pos - n1 * (n1 + 1.0) / 2.0) / (n1 * n0);
}

double auc_trapezoid(const Eigen::VectorXd& scores, const std::vector<int>& labels) {
  check_scores(scores, labels, "auc_trapezoid");
  const auto n = static_cast<std::size_t>(scores.size());
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[static_cast<Eigen::Index>(a)] > scores[static_cast<Eigen::Index>(b)];
  });

  double tp = 0.0, fp = 0.0, area = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    double d_tp = 0.0, d_fp = 0.0;
    while (j < n && scores[static_cast<Eigen::Index>(order[j])] ==
                        scores[static_cast<Eigen::Index>(order[i])]) {
      if (labels[order[j]] == 1) {
        d_tp += 1.0;
      } else {
        d_fp += 1.0;
      }
      ++j;
    }
    area += d_fp * (tp + 0.5 * d_tp);  // trapezoid over the tie group
    tp += d_tp;
    fp += d_fp;
    i = j;
  }
  return area / (tp * fp);
}

SplitResult block_split(const EpochSet& epochs, int test_blocks_per_task,
                        std::uint64_t seed) {
  if (test_blocks_per_task < 1) {
    throw ParamError("block_split: need at least one test block per task");
  }

  std::map<std::int32_t, std::set<std::int32_t>> task_blocks;
  for (const auto& p : epochs.provenance) task_blocks[p.task_id].insert(p.block_id);

  std::map<std::int32_t, std::set<std::int32_t>> test_blocks;
  for (const auto& [task, blocks] : task_blocks) {
    if (static_cast<int>(blocks.size()) <= test_blocks_per_task) {
      throw ParamError("block_split: task " + std::to_string(task) + " has only " +
                       std::to_string(blocks.size()) + " blocks, cannot hold out " +
                       std::to_string(test_blocks_per_task));
    }
    std::vector<std::int32_t> ids(blocks.begin(), blocks.end());
    Rng rng(seed, kBlockStream + static_cast<std::uint64_t>(static_cast<std::uint32_t>(task)));
    rng.shuffle(ids);
    test_blocks[task] = {ids.begin(), ids.begin() + test_blocks_per_task};
  }

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const auto& p = epochs.provenance[i];
    if (test_blocks[p.task_id].count(p.block_id)) {
      test_idx.push_back(i);
    } else {
      train_idx.push_back(i);
    }
  }
  return {subset(epochs, train_idx), subset(epochs, test_idx)};
}

std::string pipeline_name(FilterMethod filter, ModelKind classifier) {
  return std::string(to_string(filter)) + "_" + to_string(classifier);
}

FittedPipeline fit_pipeline(const PipelineSpec& spec, const EpochSet& train) {
  validate_hyper(spec);
  FittedPipeline fit;
  fit.bank = fit_bank(spec.filter, spec.hyper.n_f.value_or(0), train);
  fit.pca = fit.bank ? fit_series_pca(project_epochs(*fit.bank, train))
                     : fit_series_pca(train.epochs);
  const Eigen::MatrixXd x = features_of(fit.bank, fit.pca, train);
  fit.model = fit_classifier(spec.classifier, spec.hyper, x, to_binary_labels(train.labels));
  return fit;
}

Eigen::VectorXd score_pipeline(const FittedPipeline& fit, const EpochSet& epochs) {
  return predict_scores(fit.model, features_of(fit.bank, fit.pca, epochs));
}

std::vector<int> stratified_folds(const std::vector<EventLabel>& labels, int k,
                                  std::uint64_t seed) {
  if (k < 2) throw ParamError("stratified_folds: k must be at least 2");
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == EventLabel::Target ? pos : neg).push_back(i);
  }
  if (pos.size() < static_cast<std::size_t>(k) || neg.size() < static_cast<std::size_t>(k)) {
    throw DataError("stratified_folds: a class has fewer epochs than folds");
  }

  std::vector<int> fold(labels.size(), 0);
  Rng rng_pos(seed, 1);
  Rng rng_neg(seed, 2);
  rng_pos.shuffle(pos);
  rng_neg.shuffle(neg);
  for (std::size_t i = 0; i < pos.size(); ++i) fold[pos[i]] = static_cast<int>(i % k);
  for (std::size_t i = 0; i < neg.size(); ++i) fold[neg[i]] = static_cast<int>(i % k);
  return fold;
}

CvResult kfold_cv(const PipelineSpec& spec, const EpochSet& train, int k,
                  std::uint64_t fold_seed) {
  validate_hyper(spec);
  return kfold_cv(spec, train, stratified_folds(train.labels, k, fold_seed));
}

CvResult kfold_cv(const PipelineSpec& spec, const EpochSet& train,
                  const std::vector<int>& fold_of_epoch) {
  validate_hyper(spec);
  if (fold_of_epoch.size() != train.size()) {
    throw ParamError("kfold_cv: fold assignment size mismatch");
  }
  int k = 0;
  for (const int f : fold_of_epoch) {
    if (f < 0) throw ParamError("kfold_cv: negative fold index");
    k = std::max(k, f + 1);
  }
  if (k < 2) throw ParamError("kfold_cv: need at least two folds");
  std::vector<Candidate> table(1);
  table[0].hyper = spec.hyper;
  evaluate_candidates(train, fold_of_epoch, k, spec.filter, spec.classifier, table, 1,
                      nullptr);
  return {table[0].mean_cv_auc, std::move(table[0].fold_aucs)};
}

std::shared_ptr<const TransformCache::Entry> TransformCache::get_or_fit(
    int fold, FilterMethod method, int hyper, const std::function<Entry()>& fit) {
  std::shared_ptr<Slot> slot;
  {
    std::lock_guard lock(mu_);
    auto& s = slots_[{fold, static_cast<int>(method), hyper}];
    if (!s) s = std::make_shared<Slot>();
    slot = s;
  }
  std::call_once(slot->once, [&] { slot->value = std::make_shared<Entry>(fit()); });
  return slot->value;
}

std::uint64_t search_fold_seed(std::uint64_t master_seed) {
  return Rng::mix(master_seed, kFoldStream);
}

SearchResult random_search(const SearchSpace& space, FilterMethod filter,
                           ModelKind classifier, const EpochSet& train, int budget,
                           int k, std::uint64_t master_seed, int threads,
                           TransformCache* cache) {
  if (budget < 1) throw ParamError("random_search: budget must be at least 1");
  if (space.n_f_min > space.n_f_max || space.pairs_min > space.pairs_max ||
      !(space.scale_lo > 0.0) || space.scale_lo > space.scale_hi) {
    throw ParamError("random_search: empty search space");
  }

  SearchResult result;
  result.table.resize(static_cast<std::size_t>(budget));
  for (int i = 0; i < budget; ++i) {
    Rng rng(master_seed, kCandidateStream + static_cast<std::uint64_t>(i));
    Hyperparams h;
    if (filter == FilterMethod::Csp) {
      h.n_f = static_cast<int>(rng.uniform_int(space.pairs_min, space.pairs_max));
    } else if (filter != FilterMethod::None) {
      h.n_f = static_cast<int>(rng.uniform_int(space.n_f_min, space.n_f_max));
    }
    if (classifier == ModelKind::Blr) {
      h.beta = rng.log_uniform(space.scale_lo, space.scale_hi);
      h.alpha = rng.log_uniform(space.scale_lo, space.scale_hi);
    } else if (classifier == ModelKind::Lr) {
      h.lambda = rng.log_uniform(space.scale_lo, space.scale_hi);
    }
    result.table[static_cast<std::size_t>(i)].hyper = h;
  }

  const auto folds = stratified_folds(train.labels, k, search_fold_seed(master_seed));
  evaluate_candidates(train, folds, k, filter, classifier, result.table, threads, cache);

  std::size_t best = 0;
  for (std::size_t c = 1; c < result.table.size(); ++c) {
    const auto& cur = result.table[c];
    const auto& inc = result.table[best];
    if (cur.mean_cv_auc > inc.mean_cv_auc) {
      best = c;
    } else if (cur.mean_cv_auc == inc.mean_cv_auc &&
               cur.hyper.n_f.value_or(0) < inc.hyper.n_f.value_or(0)) {
      best = c;
    }
  }
  result.best_index = best;
  result.best = {filter, classifier, result.table[best].hyper};
  return result;
}

AnovaResult one_way_anova(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ParamError("one_way_anova: need at least two groups");
  std::size_t total_n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw ParamError("one_way_anova: every group needs at least two values");
    total_n += g.size();
  }

  double grand = 0.0;
  for (const auto& g : groups) grand = std::accumulate(g.begin(), g.end(), grand);
  grand /= static_cast<double>(total_n);

  double ssb = 0.0, ssw = 0.0;
  for (const auto& g : groups) {
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    ssb += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (const double v : g) ssw += (v - mean) * (v - mean);
  }

  AnovaResult out;
  out.group_count = groups.size();
  out.df_between = groups.size() - 1;
  out.df_within = total_n - groups.size();
  if (ssw == 0.0) {
    throw DataError("one_way_anova: zero within-group variance everywhere");
  }
  out.f = (ssb / static_cast<double>(out.df_between)) /
          (ssw / static_cast<double>(out.df_within));
  const boost::math::fisher_f dist(static_cast<double>(out.df_between),
                                   static_cast<double>(out.df_within));
  out.p = boost::math::cdf(boost::math::complement(dist, out.f));
  return out;
}

}  // namespace rsvp
