#include "rsvp/runner.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "rsvp/data_io.hpp"
#include "rsvp/errors.hpp"
#include "rsvp/preprocess.hpp"
#include "rsvp/rng.hpp"
#include "rsvp/topomap.hpp"

namespace rsvp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;
using ordered = nlohmann::ordered_json;

constexpr std::uint64_t kSplitStream = 0x400000;

/// Shortest round-trip decimal form, shared by report.json and results.csv so
/// both artifacts carry the exact same bytes per value.
std::string num(double v) { return json(v).dump(); }

[[noreturn]] void bad_config(const std::string& what) {
  throw ParamError("config: " + what);
}

void reject_unknown_keys(const json& obj, const std::set<std::string>& known,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    if (!known.count(key)) bad_config("unknown key '" + key + "' in " + where);
  }
}

double require_number(const json& obj, const std::string& key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number()) {
    bad_config("'" + key + "' in " + where + " must be a number");
  }
  return obj[key].get<double>();
}

SynthConfig parse_synth(const json& j) {
  reject_unknown_keys(j,
                      {"seed", "channels", "rate_hz", "stimulus_rate_hz", "blocks",
                       "images_per_block", "targets_per_block", "min_target_gap",
                       "templates", "noise", "eog"},
                      "synth");
  SynthConfig cfg;
  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();
  if (j.contains("channels")) cfg.channels = j["channels"].get<int>();
  if (j.contains("rate_hz")) cfg.rate = require_number(j, "rate_hz", "synth");
  if (j.contains("stimulus_rate_hz")) {
    cfg.stimulus_rate = require_number(j, "stimulus_rate_hz", "synth");
  }
  if (j.contains("blocks")) cfg.blocks = j["blocks"].get<int>();
  if (j.contains("images_per_block")) cfg.images_per_block = j["images_per_block"].get<int>();
  if (j.contains("targets_per_block")) {
    cfg.targets_per_block = j["targets_per_block"].get<int>();
  }
  if (j.contains("min_target_gap")) cfg.min_target_gap = j["min_target_gap"].get<int>();
  if (j.contains("noise")) {
    const auto& n = j["noise"];
    reject_unknown_keys(n, {"background_std_uv", "pink_exponent"}, "synth.noise");
    if (n.contains("background_std_uv")) {
      cfg.noise.background_std_uv = require_number(n, "background_std_uv", "synth.noise");
    }
    if (n.contains("pink_exponent")) {
      cfg.noise.pink_exponent = require_number(n, "pink_exponent", "synth.noise");
    }
  }
  if (j.contains("eog")) {
    const auto& e = j["eog"];
    reject_unknown_keys(e, {"blink_rate_hz", "amplitude_uv"}, "synth.eog");
    if (e.contains("blink_rate_hz")) {
      cfg.eog.blink_rate_hz = require_number(e, "blink_rate_hz", "synth.eog");
    }
    if (e.contains("amplitude_uv")) {
      cfg.eog.amplitude_uv = require_number(e, "amplitude_uv", "synth.eog");
    }
  }
  if (j.contains("templates")) {
    if (!j["templates"].is_array()) bad_config("synth.templates must be an array");
    for (const auto& t : j["templates"]) {
      reject_unknown_keys(
          t, {"latency_s", "width_s", "amplitude_uv", "center", "spread", "sign", "topography"},
          "synth.templates[]");
      ErpTemplate tpl;
      tpl.latency_s = require_number(t, "latency_s", "template");
      tpl.width_s = require_number(t, "width_s", "template");
      tpl.amplitude_uv = require_number(t, "amplitude_uv", "template");
      if (t.contains("topography")) {
        const auto vals = t["topography"].get<std::vector<double>>();
        tpl.topography = Eigen::Map<const Eigen::VectorXd>(vals.data(),
                                                           static_cast<Eigen::Index>(vals.size()));
      } else {
        const std::string center = t.value("center", "Pz");
        const double spread = t.value("spread", 0.55);
        const double sign = t.value("sign", 1.0);
        const auto names = synth_channel_names(cfg.channels, false);
        const auto& layout = standard_layout();
        std::array<double, 2> c{0.0, 0.0};
        if (!layout_position(layout, center, c)) {
          bad_config("template center '" + center + "' is not in the standard layout");
        }
        tpl.topography = Eigen::VectorXd::Zero(cfg.channels);
        for (int i = 0; i < cfg.channels; ++i) {
          std::array<double, 2> p{0.0, 0.0};
          if (!layout_position(layout, names[static_cast<std::size_t>(i)], p)) continue;
          const double d2 = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]);
          tpl.topography[i] = sign * std::exp(-d2 / (spread * spread));
        }
      }
      cfg.erp_templates.push_back(std::move(tpl));
    }
  }
  return cfg;
}

PreprocessConfig parse_preprocess(const json& j) {
  reject_unknown_keys(j,
                      {"car", "car_first", "band_hz", "resample_hz", "epoch_window_s",
                       "eog_channels", "reject_threshold_uv"},
                      "preprocess");
  PreprocessConfig pre;
  if (j.contains("car")) pre.car = j["car"].get<bool>();
  if (j.contains("car_first")) pre.car_first = j["car_first"].get<bool>();
  if (j.contains("band_hz")) {
    const auto band = j["band_hz"].get<std::vector<double>>();
    if (band.size() != 2) bad_config("preprocess.band_hz must be [lo, hi]");
    pre.band_lo = band[0];
    pre.band_hi = band[1];
  }
  if (j.contains("resample_hz")) pre.resample_hz = require_number(j, "resample_hz", "preprocess");
  if (j.contains("epoch_window_s")) {
    const auto win = j["epoch_window_s"].get<std::vector<double>>();
    if (win.size() != 2) bad_config("preprocess.epoch_window_s must be [start, end]");
    pre.epoch_start = win[0];
    pre.epoch_end = win[1];
  }
  if (j.contains("eog_channels")) {
    pre.eog_channels = j["eog_channels"].get<std::vector<std::string>>();
  }
  if (j.contains("reject_threshold_uv")) {
    pre.reject_threshold_uv = require_number(j, "reject_threshold_uv", "preprocess");
  }
  return pre;
}

std::pair<FilterMethod, ModelKind> parse_pipeline_name(const std::string& s) {
  const auto colon = s.find(':');
  if (colon == std::string::npos) {
    bad_config("pipeline '" + s + "' must look like FILTER:CLASSIFIER");
  }
  const auto filter = filter_method_from_string(s.substr(0, colon));
  const auto clf = model_kind_from_string(s.substr(colon + 1));
  if (!filter || !clf) bad_config("unknown pipeline '" + s + "'");
  return {*filter, *clf};
}

template <typename F>
auto stage(const char* name, F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    throw Error(std::string("[") + name + "] " + e.what());
  }
}

ordered hyper_to_json(const Hyperparams& h) {
  ordered j = ordered::object();
  if (h.n_f) j["n_f"] = *h.n_f;
  if (h.alpha) j["alpha"] = *h.alpha;
  if (h.beta) j["beta"] = *h.beta;
  if (h.lambda) j["lambda"] = *h.lambda;
  return j;
}

ordered model_to_json(const LinearModel& m) {
  ordered j;
  j["kind"] = to_string(m.kind);
  j["bias"] = m.bias;
  std::vector<double> w(m.weights.data(), m.weights.data() + m.weights.size());
  j["weights"] = w;
  if (m.alpha) j["alpha"] = *m.alpha;
  if (m.beta) j["beta"] = *m.beta;
  if (m.lambda) j["lambda"] = *m.lambda;
  return j;
}

std::string dataset_dir(const std::string& out_dir, const EvaluationReport& report,
                        const std::string& dataset) {
  if (report.datasets.size() <= 1) return out_dir;
  const fs::path sub = fs::path(out_dir) / dataset;
  fs::create_directories(sub);
  return sub.string();
}

void write_text(const std::string& path, const std::string& text,
                std::vector<std::string>& written) {
  std::ofstream f(path, std::ios::trunc | std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("write to '" + path + "' failed");
  written.push_back(path);
}

void write_erp_diff_csv(const std::string& path, const EpochSet& train,
                        std::vector<std::string>& written) {
  const Eigen::MatrixXd diff = difference_erp(train);
  std::ostringstream out;
  out << "channel";
  for (Eigen::Index t = 0; t < diff.cols(); ++t) {
    out << ',' << num(train.window_start + static_cast<double>(t) / train.rate);
  }
  out << '\n';
  for (Eigen::Index c = 0; c < diff.rows(); ++c) {
    out << (c < static_cast<Eigen::Index>(train.channels.size())
                ? train.channels[static_cast<std::size_t>(c)]
                : "ch" + std::to_string(c));
    for (Eigen::Index t = 0; t < diff.cols(); ++t) out << ',' << num(diff(c, t));
    out << '\n';
  }
  write_text(path, out.str(), written);
}

std::string topomap_name(const SpatialFilterBank& bank, Eigen::Index j) {
  std::string name = std::string("topomap_") + to_string(bank.method) + "_" +
                     std::to_string(j + 1);
  const auto& meta = bank.meta[static_cast<std::size_t>(j)];
  if (meta.window) {
    name += "_" + std::to_string(std::lround(meta.window->first * 1000.0)) + "ms-" +
            std::to_string(std::lround(meta.window->second * 1000.0)) + "ms";
  }
  return name + ".svg";
}

}  // namespace

std::vector<std::pair<FilterMethod, ModelKind>> full_pipeline_grid() {
  std::vector<std::pair<FilterMethod, ModelKind>> grid;
  for (const auto filter : {FilterMethod::Mtwlb, FilterMethod::Xdawn, FilterMethod::Csp,
                            FilterMethod::None}) {
    for (const auto clf : {ModelKind::Lda, ModelKind::Blr, ModelKind::Lr}) {
      grid.emplace_back(filter, clf);
    }
  }
  return grid;
}

SynthConfig parse_synth_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad_config(std::string("invalid JSON: ") + e.what());
  }
  return parse_synth(j);
}

PreprocessConfig parse_preprocess_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad_config(std::string("invalid JSON: ") + e.what());
  }
  return parse_preprocess(j);
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad_config(std::string("invalid JSON: ") + e.what());
  }
  if (!j.is_object()) bad_config("top level must be an object");
  reject_unknown_keys(j,
                      {"seed", "inputs", "synth", "preprocess", "pipelines", "search",
                       "test_blocks_per_task", "threads", "topomap_resolution"},
                      "run config");

  RunConfig cfg;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) bad_config("'seed' must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
    cfg.seed_set = true;
  }
  if (j.contains("inputs")) cfg.recordings = j["inputs"].get<std::vector<std::string>>();
  if (j.contains("synth")) {
    cfg.synth = parse_synth(j["synth"]);
    if (!j["synth"].contains("seed")) cfg.synth->seed = cfg.seed;
  }
  if (j.contains("preprocess")) cfg.preprocess = parse_preprocess(j["preprocess"]);
  if (j.contains("pipelines")) {
    if (j["pipelines"].is_string() && j["pipelines"] == "all") {
      cfg.pipelines = full_pipeline_grid();
    } else if (j["pipelines"].is_array()) {
      for (const auto& p : j["pipelines"]) {
        cfg.pipelines.push_back(parse_pipeline_name(p.get<std::string>()));
      }
    } else {
      bad_config("'pipelines' must be \"all\" or an array of FILTER:CLASSIFIER names");
    }
  } else {
    cfg.pipelines = full_pipeline_grid();
  }
  if (j.contains("search")) {
    const auto& s = j["search"];
    reject_unknown_keys(s, {"budget", "k", "n_f", "pairs", "scale"}, "search");
    if (s.contains("budget")) cfg.budget = s["budget"].get<int>();
    if (s.contains("k")) cfg.k = s["k"].get<int>();
    if (s.contains("n_f")) {
      const auto r = s["n_f"].get<std::vector<int>>();
      if (r.size() != 2) bad_config("search.n_f must be [min, max]");
      cfg.space.n_f_min = r[0];
      cfg.space.n_f_max = r[1];
    }
    if (s.contains("pairs")) {
      const auto r = s["pairs"].get<std::vector<int>>();
      if (r.size() != 2) bad_config("search.pairs must be [min, max]");
      cfg.space.pairs_min = r[0];
      cfg.space.pairs_max = r[1];
    }
    if (s.contains("scale")) {
      const auto r = s["scale"].get<std::vector<double>>();
      if (r.size() != 2) bad_config("search.scale must be [lo, hi]");
      cfg.space.scale_lo = r[0];
      cfg.space.scale_hi = r[1];
    }
  }
  if (j.contains("test_blocks_per_task")) {
    cfg.test_blocks_per_task = j["test_blocks_per_task"].get<int>();
  }
  if (j.contains("threads")) cfg.threads = j["threads"].get<int>();
  if (j.contains("topomap_resolution")) {
    cfg.topomap_resolution = j["topomap_resolution"].get<int>();
  }
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open config '" + path + "'");
  std::ostringstream text;
  text << f.rdbuf();
  return parse_run_config(text.str());
}

EpochSet preprocess_recording(const ContinuousRecording& rec, const PreprocessConfig& pre) {
  ContinuousRecording cur = rec;
  if (pre.car && pre.car_first) cur = common_average_reference(cur);
  if (pre.band_lo > 0.0) cur = bandpass(cur, pre.band_lo, pre.band_hi);
  if (pre.car && !pre.car_first) cur = common_average_reference(cur);
  if (pre.resample_hz > 0.0 && pre.resample_hz != cur.rate) {
    cur = resample(cur, pre.resample_hz);
  }
  EpochSet epochs = epoch(cur, pre.epoch_start, pre.epoch_end).epochs;
  if (pre.reject_threshold_uv > 0.0 && !pre.eog_channels.empty()) {
    epochs = reject_trials(epochs, pre.eog_channels, pre.reject_threshold_uv).kept;
  }
  return epochs;
}

namespace {

void validate_run_config(const RunConfig& cfg) {
  if (!cfg.seed_set) bad_config("'seed' is required (runs must be reproducible)");
  if (cfg.pipelines.empty()) bad_config("at least one pipeline is required");
  if (cfg.recordings.empty() == !cfg.synth.has_value()) {
    bad_config("exactly one of 'inputs' and 'synth' must be given");
  }
  if (cfg.budget < 1) bad_config("search budget must be at least 1");
  if (cfg.k < 2) bad_config("k must be at least 2");
  if (cfg.test_blocks_per_task < 1) bad_config("test_blocks_per_task must be at least 1");
  if (cfg.threads < 1) bad_config("threads must be at least 1");
}

}  // namespace

EvaluationReport run(const RunConfig& config, const std::string& out_dir) {
  validate_run_config(config);
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  try {
    // Assemble the datasets.
    std::vector<std::pair<std::string, EpochSet>> datasets;
    if (config.synth) {
      auto [rec, truth] = stage("synth", [&] { return synth_rsvp(*config.synth); });
      (void)truth;
      datasets.emplace_back("synth", stage("preprocess", [&] {
                              return preprocess_recording(rec, config.preprocess);
                            }));
    }
    for (const auto& base : config.recordings) {
      auto rec = stage("read", [&] { return read_recording(base); });
      datasets.emplace_back(fs::path(base).filename().string(), stage("preprocess", [&] {
                              return preprocess_recording(rec, config.preprocess);
                            }));
    }

    EvaluationReport report;
    for (const auto& [name, unused] : datasets) report.datasets.push_back(name);

    report.pipelines.resize(config.pipelines.size());
    for (std::size_t p = 0; p < config.pipelines.size(); ++p) {
      report.pipelines[p].filter = config.pipelines[p].first;
      report.pipelines[p].classifier = config.pipelines[p].second;
    }

    for (std::size_t d = 0; d < datasets.size(); ++d) {
      const auto& [ds_name, epochs] = datasets[d];
      const std::string ds_dir = dataset_dir(out_dir, report, ds_name);

      const SplitResult split = stage("split", [&] {
        return block_split(epochs, config.test_blocks_per_task,
                           Rng::mix(config.seed, kSplitStream + d));
      });
      stage("artifacts", [&] {
        write_erp_diff_csv((fs::path(ds_dir) / "erp_diff.csv").string(), split.train, written);
        return 0;
      });
      const std::vector<int> y_test = [&] {
        std::vector<int> y(split.test.labels.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
          y[i] = split.test.labels[i] == EventLabel::Target ? 1 : 0;
        }
        return y;
      }();

      TransformCache cache;
      std::map<FilterMethod, std::pair<double, SpatialFilterBank>> best_banks;

      for (std::size_t p = 0; p < config.pipelines.size(); ++p) {
        const auto [filter, clf] = config.pipelines[p];
        const SearchResult search = stage("search", [&] {
          return random_search(config.space, filter, clf, split.train, config.budget,
                               config.k, config.seed, config.threads, &cache);
        });
        const FittedPipeline fitted =
            stage("refit", [&] { return fit_pipeline(search.best, split.train); });
        const double test_auc = stage("test", [&] {
          return auc(score_pipeline(fitted, split.test), y_test);
        });

        DatasetOutcome outcome;
        outcome.dataset = ds_name;
        outcome.best_hyper = search.best.hyper;
        outcome.candidates = search.table;
        outcome.test_auc = test_auc;
        outcome.model = fitted.model;
        report.pipelines[p].per_dataset.push_back(std::move(outcome));

        if (fitted.bank) {
          auto it = best_banks.find(filter);
          if (it == best_banks.end() || test_auc > it->second.first) {
            best_banks[filter] = {test_auc, *fitted.bank};
          }
        }
      }

      stage("artifacts", [&] {
        for (const auto& [method, scored] : best_banks) {
          (void)method;
          const auto& bank = scored.second;
          for (Eigen::Index jf = 0; jf < bank.filter_count(); ++jf) {
            const std::string path = (fs::path(ds_dir) / topomap_name(bank, jf)).string();
            emit_topomap(path, bank.patterns.col(jf), epochs.channels, standard_layout(),
                         config.topomap_resolution);
            written.push_back(path);
          }
        }
        return 0;
      });
    }

    for (auto& pl : report.pipelines) {
      double sum = 0.0;
      for (const auto& o : pl.per_dataset) sum += o.test_auc;
      pl.mean_test_auc = sum / static_cast<double>(pl.per_dataset.size());
    }

    // Method comparison across datasets, when there are enough datasets.
    if (report.datasets.size() >= 2) {
      std::vector<std::vector<double>> groups;
      for (const auto method : {FilterMethod::Mtwlb, FilterMethod::Xdawn, FilterMethod::Csp,
                                FilterMethod::None}) {
        std::vector<double> per_dataset(report.datasets.size(), 0.0);
        int members = 0;
        for (const auto& pl : report.pipelines) {
          if (pl.filter != method) continue;
          ++members;
          for (std::size_t d = 0; d < per_dataset.size(); ++d) {
            per_dataset[d] += pl.per_dataset[d].test_auc;
          }
        }
        if (members == 0) continue;
        for (auto& v : per_dataset) v /= members;
        groups.push_back(std::move(per_dataset));
      }
      if (groups.size() >= 2) {
        try {
          report.anova = one_way_anova(groups);
        } catch (const Error&) {
          report.anova.reset();  // degenerate spread; report goes out without it
        }
      }
    }

    stage("report", [&] {
      write_text((fs::path(out_dir) / "results.csv").string(), report_to_csv(report), written);
      write_text((fs::path(out_dir) / "report.json").string(),
                 report_to_json(report, config), written);
      return 0;
    });
    return report;
  } catch (const Error& e) {
    std::string msg = e.what();
    if (!written.empty()) {
      msg += "; partial artifacts:";
      for (const auto& w : written) msg += " " + w;
    }
    throw Error(msg);
  }
}

std::string report_to_json(const EvaluationReport& report, const RunConfig& config) {
  ordered j;
  j["format"] = "rsvp-report";
  j["version"] = 1;

  ordered cfg;
  cfg["seed"] = config.seed;
  cfg["budget"] = config.budget;
  cfg["k"] = config.k;
  cfg["test_blocks_per_task"] = config.test_blocks_per_task;
  {
    std::vector<std::string> names;
    for (const auto& [f, c] : config.pipelines) names.push_back(pipeline_name(f, c));
    cfg["pipelines"] = names;
  }
  ordered pre;
  pre["car"] = config.preprocess.car;
  pre["car_first"] = config.preprocess.car_first;
  pre["band_hz"] = std::vector<double>{config.preprocess.band_lo, config.preprocess.band_hi};
  pre["resample_hz"] = config.preprocess.resample_hz;
  pre["epoch_window_s"] =
      std::vector<double>{config.preprocess.epoch_start, config.preprocess.epoch_end};
  pre["eog_channels"] = config.preprocess.eog_channels;
  pre["reject_threshold_uv"] = config.preprocess.reject_threshold_uv;
  cfg["preprocess"] = pre;
  ordered space;
  space["n_f"] = std::vector<int>{config.space.n_f_min, config.space.n_f_max};
  space["pairs"] = std::vector<int>{config.space.pairs_min, config.space.pairs_max};
  space["scale"] = std::vector<double>{config.space.scale_lo, config.space.scale_hi};
  cfg["search_space"] = space;
  j["config"] = cfg;

  j["datasets"] = report.datasets;

  ordered pipelines = ordered::array();
  for (const auto& pl : report.pipelines) {
    ordered e;
    e["pipeline"] = pipeline_name(pl.filter, pl.classifier);
    e["filter"] = to_string(pl.filter);
    e["classifier"] = to_string(pl.classifier);
    e["mean_test_auc"] = pl.mean_test_auc;
    ordered per_ds = ordered::array();
    for (const auto& o : pl.per_dataset) {
      ordered de;
      de["dataset"] = o.dataset;
      de["test_auc"] = o.test_auc;
      de["best_hyper"] = hyper_to_json(o.best_hyper);
      ordered cands = ordered::array();
      for (const auto& c : o.candidates) {
        ordered ce;
        ce["hyper"] = hyper_to_json(c.hyper);
        ce["mean_cv_auc"] = c.mean_cv_auc;
        ce["fold_aucs"] = c.fold_aucs;
        cands.push_back(std::move(ce));
      }
      de["candidates"] = std::move(cands);
      de["model"] = model_to_json(o.model);
      per_ds.push_back(std::move(de));
    }
    e["per_dataset"] = std::move(per_ds);
    pipelines.push_back(std::move(e));
  }
  j["pipelines"] = std::move(pipelines);

  if (report.anova) {
    ordered a;
    a["f"] = report.anova->f;
    a["p"] = report.anova->p;
    a["groups"] = report.anova->group_count;
    a["df_between"] = report.anova->df_between;
    a["df_within"] = report.anova->df_within;
    j["anova"] = std::move(a);
  } else {
    j["anova"] = nullptr;
  }
  return j.dump(2) + "\n";
}

std::string report_to_csv(const EvaluationReport& report) {
  std::ostringstream out;
  out << "pipeline";
  for (const auto& ds : report.datasets) out << ',' << ds;
  out << ",mean\n";
  for (const auto& pl : report.pipelines) {
    out << pipeline_name(pl.filter, pl.classifier);
    for (const auto& o : pl.per_dataset) out << ',' << num(o.test_auc);
    out << ',' << num(pl.mean_test_auc) << '\n';
  }
  return out.str();
}

}  // namespace rsvp
