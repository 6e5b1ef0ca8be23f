// Command line front end: synthesize recordings, preprocess them into epoch
// files, run the full evaluation batch, or re-render tables from a report.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "rsvp/data_io.hpp"
#include "rsvp/errors.hpp"
#include "rsvp/runner.hpp"

namespace {

std::string slurp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw rsvp::Error("cannot open '" + path + "'");
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

int cmd_synth(const std::string& config_path, const std::string& out_base,
              std::optional<std::uint64_t> seed) {
  rsvp::SynthConfig cfg;
  if (!config_path.empty()) cfg = rsvp::parse_synth_config(slurp(config_path));
  if (seed) cfg.seed = *seed;

  auto [rec, truth] = rsvp::synth_rsvp(cfg);
  rsvp::write_recording(out_base, rec);

  std::size_t targets = 0;
  for (const auto& ev : rec.events) targets += ev.label == rsvp::EventLabel::Target;
  std::printf("wrote %s.{json,f32,events.csv}: %lld channels, %lld samples at %g Hz, "
              "%zu events (%zu targets), %zu injected responses\n",
              out_base.c_str(), static_cast<long long>(rec.channel_count()),
              static_cast<long long>(rec.sample_count()), rec.rate, rec.events.size(),
              targets, truth.instances.size());
  return 0;
}

int cmd_preprocess(const std::string& config_path, const std::string& in_base,
                   const std::string& out_path) {
  rsvp::PreprocessConfig pre;
  if (!config_path.empty()) {
    const auto text = slurp(config_path);
    const auto j = nlohmann::json::parse(text, nullptr, true, true);
    pre = rsvp::parse_preprocess_config(
        j.contains("preprocess") ? j["preprocess"].dump() : text);
  }
  const auto rec = rsvp::read_recording(in_base);
  const auto epochs = rsvp::preprocess_recording(rec, pre);
  rsvp::write_epochs(out_path, epochs);
  std::printf("wrote %s: %zu epochs (%zu targets) of %lldx%lld at %g Hz\n",
              out_path.c_str(), epochs.size(), epochs.count(rsvp::EventLabel::Target),
              static_cast<long long>(epochs.channel_count()),
              static_cast<long long>(epochs.samples_per_epoch()), epochs.rate);
  return 0;
}

void print_report_tables(const rsvp::EvaluationReport& report) {
  std::printf("%-12s", "pipeline");
  for (const auto& ds : report.datasets) std::printf(" %10s", ds.c_str());
  std::printf(" %10s\n", "mean");
  for (const auto& pl : report.pipelines) {
    std::printf("%-12s", rsvp::pipeline_name(pl.filter, pl.classifier).c_str());
    for (const auto& o : pl.per_dataset) std::printf(" %10.4f", o.test_auc);
    std::printf(" %10.4f\n", pl.mean_test_auc);
  }
  if (report.anova) {
    std::printf("anova across filter methods: F(%zu, %zu) = %.4f, p = %.4f\n",
                report.anova->df_between, report.anova->df_within, report.anova->f,
                report.anova->p);
  }
}

int cmd_run(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed, std::optional<int> threads) {
  auto cfg = rsvp::load_run_config(config_path);
  if (seed) {
    cfg.seed = *seed;
    cfg.seed_set = true;
    if (cfg.synth) cfg.synth->seed = *seed;
  }
  if (threads) cfg.threads = *threads;

  const auto report = rsvp::run(cfg, out_dir);
  print_report_tables(report);
  std::printf("report written to %s/report.json\n", out_dir.c_str());
  return 0;
}

int cmd_report(const std::string& report_path, const std::string& csv_out) {
  const auto j = nlohmann::json::parse(slurp(report_path));
  rsvp::EvaluationReport report;
  report.datasets = j.at("datasets").get<std::vector<std::string>>();
  for (const auto& pj : j.at("pipelines")) {
    rsvp::PipelineOutcome pl;
    pl.filter = *rsvp::filter_method_from_string(pj.at("filter").get<std::string>());
    pl.classifier = *rsvp::model_kind_from_string(pj.at("classifier").get<std::string>());
    pl.mean_test_auc = pj.at("mean_test_auc").get<double>();
    for (const auto& dj : pj.at("per_dataset")) {
      rsvp::DatasetOutcome o;
      o.dataset = dj.at("dataset").get<std::string>();
      o.test_auc = dj.at("test_auc").get<double>();
      pl.per_dataset.push_back(std::move(o));
    }
    report.pipelines.push_back(std::move(pl));
  }
  if (j.contains("anova") && !j.at("anova").is_null()) {
    rsvp::AnovaResult a;
    a.f = j["anova"].at("f").get<double>();
    a.p = j["anova"].at("p").get<double>();
    a.group_count = j["anova"].at("groups").get<std::size_t>();
    a.df_between = j["anova"].at("df_between").get<std::size_t>();
    a.df_within = j["anova"].at("df_within").get<std::size_t>();
    report.anova = a;
  }
  print_report_tables(report);
  if (!csv_out.empty()) {
    std::ofstream f(csv_out, std::ios::trunc);
    if (!f) throw rsvp::Error("cannot open '" + csv_out + "'");
    f << rsvp::report_to_csv(report);
    std::printf("csv written to %s\n", csv_out.c_str());
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Single-trial RSVP-EEG classification pipelines"};
  app.require_subcommand(1);

  std::string config_path, out_path, in_path, csv_out;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;

  auto* synth = app.add_subcommand("synth", "generate a synthetic RSVP recording");
  synth->add_option("--config", config_path, "synthesis config JSON");
  synth->add_option("--out", out_path, "output base path")->required();
  synth->add_option("--seed", seed, "seed override");

  auto* pre = app.add_subcommand("preprocess", "recording -> epoch file");
  pre->add_option("--config", config_path, "preprocess config JSON");
  pre->add_option("--in", in_path, "recording base path")->required();
  pre->add_option("--out", out_path, "epoch file path")->required();

  auto* runc = app.add_subcommand("run", "full evaluation batch");
  runc->add_option("--config", config_path, "run config JSON")->required();
  runc->add_option("--out", out_path, "output directory")->required();
  runc->add_option("--seed", seed, "seed override");
  runc->add_option("--threads", threads, "worker thread override");

  auto* rep = app.add_subcommand("report", "print tables from a report.json");
  rep->add_option("--in", in_path, "report.json path")->required();
  rep->add_option("--csv", csv_out, "also write results.csv here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) return cmd_synth(config_path, out_path, seed);
    if (pre->parsed()) return cmd_preprocess(config_path, in_path, out_path);
    if (runc->parsed()) return cmd_run(config_path, out_path, seed, threads);
    if (rep->parsed()) return cmd_report(in_path, csv_out);
  } catch (const rsvp::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
