#include "rsvp/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "iir.hpp"
#include "rsvp/errors.hpp"
#include "rsvp/rng.hpp"
#include "rsvp/topomap.hpp"

namespace rsvp {

namespace {

constexpr const char* k1020Names[32] = {
    "Fp1", "Fp2", "F7",  "F3",  "Fz",  "F4",  "F8",  "FC5", "FC1", "FC2", "FC6",
    "T7",  "C3",  "Cz",  "C4",  "T8",  "TP9", "CP5", "CP1", "CP2", "CP6", "TP10",
    "P7",  "P3",  "Pz",  "P4",  "P8",  "PO9", "O1",  "Oz",  "O2",  "PO10"};

/// Smooth scalp topography centered on a named electrode.
Eigen::VectorXd gaussian_topography(int n_eeg, const std::string& center, double spread,
                                    double sign) {
  const auto names = synth_channel_names(n_eeg, false);
  const auto& layout = standard_layout();
  std::array<double, 2> c{0.0, 0.0};
  layout_position(layout, center, c);

  Eigen::VectorXd topo = Eigen::VectorXd::Zero(n_eeg);
  for (int i = 0; i < n_eeg; ++i) {
    std::array<double, 2> p{0.0, 0.0};
    if (!layout_position(layout, names[i], p)) continue;  // EXT channels stay 0
    const double d2 = (p[0] - c[0]) * (p[0] - c[0]) + (p[1] - c[1]) * (p[1] - c[1]);
    topo[i] = sign * std::exp(-d2 / (spread * spread));
  }
  return topo;
}

/// First-order pole/zero cascade shaping white noise to a 1/f^alpha power
/// spectrum. Pole frequencies are log-spaced; each zero sits a fixed factor
/// above its pole so the per-decade drop matches the requested exponent.
struct PinkShaper {
  struct Section {
    double b0, b1, a1;  // y[n] = b0 x[n] + b1 x[n-1] - a1 y[n-1]
    double zx = 0.0, zy = 0.0;
    double step(double x) {
      const double y = b0 * x + b1 * zx - a1 * zy;
      zx = x;
      zy = y;
      return y;
    }
    void reset() { zx = zy = 0.0; }
  };

  std::vector<Section> sections;

  PinkShaper(double alpha, double rate) {
    if (alpha <= 0.0) return;
    const double f_lo = 0.1;
    const double f_hi = 0.45 * rate;
    const double per_decade = 2.0;
    const double k = 2.0 * rate;
    const int n = std::max(1, static_cast<int>(std::ceil(
                                  std::log10(f_hi / f_lo) * per_decade)));
    const double zero_over_pole = std::pow(10.0, alpha / (2.0 * per_decade));
    for (int i = 0; i < n; ++i) {
      const double fp = f_lo * std::pow(10.0, i / per_decade);
      const double fz = std::min(fp * zero_over_pole, 0.49 * rate);
      const double wp = k * std::tan(3.14159265358979323846 * fp / rate);
      const double wz = k * std::tan(3.14159265358979323846 * fz / rate);
      // Bilinear transform of (1 + s/wz)/(1 + s/wp), unit DC gain.
      const double a0 = 1.0 + k / wp;
      Section s{};
      s.b0 = (1.0 + k / wz) / a0;
      s.b1 = (1.0 - k / wz) / a0;
      s.a1 = (1.0 - k / wp) / a0;
      sections.push_back(s);
    }
  }

  double step(double x) {
    for (auto& s : sections) x = s.step(x);
    return x;
  }

  void reset() {
    for (auto& s : sections) s.reset();
  }

  /// RMS gain for unit-variance white input, from impulse response energy.
  double rms_gain() {
    if (sections.empty()) return 1.0;
    reset();
    double energy = 0.0;
    for (int i = 0; i < 16384; ++i) {
      const double h = step(i == 0 ? 1.0 : 0.0);
      energy += h * h;
    }
    reset();
    return std::sqrt(energy);
  }
};

/// Uniformly samples `count` positions from [0, range) with pairwise distance
/// >= gap, via the standard bijection onto unconstrained combinations.
std::vector<int> sample_spaced_positions(Rng& rng, int range, int count, int gap) {
  const int slack = range - (gap - 1) * (count - 1);
  if (count < 1 || slack < count) {
    throw ParamError("synth_rsvp: cannot place " + std::to_string(count) +
                     " targets with gap " + std::to_string(gap) + " in " +
                     std::to_string(range) + " images");
  }
  // Draw `count` distinct values from [0, slack) by partial Fisher-Yates.
  std::vector<int> pool(slack);
  std::iota(pool.begin(), pool.end(), 0);
  for (int i = 0; i < count; ++i) {
    const auto j = static_cast<int>(rng.uniform_int(i, slack - 1));
    std::swap(pool[i], pool[j]);
  }
  std::vector<int> picks(pool.begin(), pool.begin() + count);
  std::sort(picks.begin(), picks.end());
  for (int i = 0; i < count; ++i) picks[i] += i * (gap - 1);
  return picks;
}

void validate(const SynthConfig& cfg) {
  if (cfg.channels < 1) throw ParamError("synth_rsvp: need at least one channel");
  if (cfg.rate <= 0.0 || cfg.stimulus_rate <= 0.0) {
    throw ParamError("synth_rsvp: rates must be positive");
  }
  if (cfg.blocks < 1 || cfg.images_per_block < 1) {
    throw ParamError("synth_rsvp: need at least one block and one image");
  }
  if (cfg.targets_per_block >= cfg.images_per_block) {
    throw ParamError("synth_rsvp: targets_per_block must be below images_per_block");
  }
  if (cfg.targets_per_block < 1) throw ParamError("synth_rsvp: need at least one target");
  if (cfg.min_target_gap < 1) throw ParamError("synth_rsvp: min_target_gap must be >= 1");
  for (const auto& t : cfg.erp_templates) {
    if (t.amplitude_uv < 0.0) throw ParamError("synth_rsvp: template amplitude must be >= 0");
    if (!(t.latency_s >= 0.0 && t.latency_s < 1.0)) {
      throw ParamError("synth_rsvp: template latency must lie in [0, 1) s");
    }
    if (t.width_s <= 0.0) throw ParamError("synth_rsvp: template width must be positive");
  }
}

}  // namespace

std::vector<std::string> synth_channel_names(int n_eeg, bool with_eog) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n_eeg) + (with_eog ? 2 : 0));
  for (int i = 0; i < n_eeg; ++i) {
    if (i < 32) {
      names.emplace_back(k1020Names[i]);
    } else {
      names.push_back("EXT" + std::to_string(i - 31));
    }
  }
  if (with_eog) {
    names.emplace_back("HEOG");
    names.emplace_back("VEOG");
  }
  return names;
}

std::vector<ErpTemplate> default_erp_templates(int n_eeg) {
  ErpTemplate p3;
  p3.latency_s = 0.40;
  p3.width_s = 0.08;
  p3.amplitude_uv = 5.0;
  p3.topography = gaussian_topography(n_eeg, "Pz", 0.55, +1.0);

  ErpTemplate n2;
  n2.latency_s = 0.20;
  n2.width_s = 0.05;
  n2.amplitude_uv = 3.0;
  n2.topography = gaussian_topography(n_eeg, "Fz", 0.50, -1.0);

  return {p3, n2};
}

std::pair<ContinuousRecording, GroundTruth> synth_rsvp(const SynthConfig& cfg) {
  validate(cfg);

  const bool with_eog = cfg.eog.amplitude_uv > 0.0;
  const int n_eeg = cfg.channels;
  const int n_ch = n_eeg + (with_eog ? 2 : 0);

  std::vector<ErpTemplate> templates =
      cfg.erp_templates.empty() ? default_erp_templates(n_eeg) : cfg.erp_templates;
  for (auto& t : templates) {
    if (t.topography.size() == 0) t.topography = gaussian_topography(n_eeg, "Pz", 0.55, 1.0);
    if (t.topography.size() != n_eeg) {
      throw ParamError("synth_rsvp: topography has " + std::to_string(t.topography.size()) +
                       " entries for " + std::to_string(n_eeg) + " EEG channels");
    }
    // Expand to the full channel count; EOG rows carry no evoked response.
    Eigen::VectorXd full = Eigen::VectorXd::Zero(n_ch);
    full.head(n_eeg) = t.topography;
    t.topography = std::move(full);
  }

  const double samples_per_image = cfg.rate / cfg.stimulus_rate;
  const auto block_len = static_cast<std::int64_t>(
      std::ceil((cfg.images_per_block * samples_per_image) + 1.5 * cfg.rate));
  const std::int64_t total = block_len * cfg.blocks;

  ContinuousRecording rec;
  rec.rate = cfg.rate;
  rec.channels = synth_channel_names(n_eeg, with_eog);
  rec.data = Eigen::MatrixXd::Zero(n_ch, total);

  GroundTruth truth;
  truth.clean = Eigen::MatrixXd::Zero(n_ch, total);
  truth.templates = templates;

  // Independent deterministic streams so that e.g. changing a template
  // amplitude leaves the noise realization untouched.
  Rng rng_placement(cfg.seed, 1);
  Rng rng_noise(cfg.seed, 2);
  Rng rng_eog(cfg.seed, 3);

  // Stimulus timeline and target placement.
  for (int b = 0; b < cfg.blocks; ++b) {
    const auto targets = sample_spaced_positions(rng_placement, cfg.images_per_block,
                                                 cfg.targets_per_block, cfg.min_target_gap);
    std::size_t next_target = 0;
    for (int img = 0; img < cfg.images_per_block; ++img) {
      const auto onset =
          b * block_len + static_cast<std::int64_t>(std::llround(img * samples_per_image));
      Event ev;
      ev.sample = onset;
      ev.block_id = b;
      ev.task_id = 0;
      const bool is_target =
          next_target < targets.size() && targets[next_target] == img;
      if (is_target) {
        ev.label = EventLabel::Target;
        ++next_target;
        for (std::size_t ti = 0; ti < templates.size(); ++ti) {
          truth.instances.push_back({onset, ti});
        }
      }
      rec.events.push_back(ev);
    }
  }

  // Evoked responses: Gaussian bump times topography. The bump is evaluated
  // out to 40 sigma, where exp() underflows to an exact zero, so test oracles
  // can reconstruct epochs from the same expression without truncation edges.
  for (std::size_t ti = 0; ti < templates.size(); ++ti) {
    const auto& t = templates[ti];
    const auto lo = static_cast<std::int64_t>(
        std::floor((t.latency_s - 40.0 * t.width_s) * cfg.rate));
    const auto hi = static_cast<std::int64_t>(
        std::ceil((t.latency_s + 40.0 * t.width_s) * cfg.rate));
    Eigen::VectorXd bump(hi - lo + 1);
    for (std::int64_t s = lo; s <= hi; ++s) {
      const double dt = s / cfg.rate - t.latency_s;
      bump[s - lo] = t.amplitude_uv * std::exp(-0.5 * (dt / t.width_s) * (dt / t.width_s));
    }
    for (const auto& inst : truth.instances) {
      if (inst.template_index != ti) continue;
      for (std::int64_t s = lo; s <= hi; ++s) {
        const std::int64_t at = inst.onset + s;
        if (at < 0 || at >= total) continue;
        truth.clean.col(at) += bump[s - lo] * t.topography;
      }
    }
  }
  rec.data = truth.clean;

  // Pink background noise, one independent stream per channel.
  if (cfg.noise.background_std_uv > 0.0) {
    PinkShaper shaper(cfg.noise.pink_exponent, cfg.rate);
    const double scale = cfg.noise.background_std_uv / shaper.rms_gain();
    for (int c = 0; c < n_ch; ++c) {
      shaper.reset();
      auto row = rec.data.row(c);
      for (std::int64_t s = 0; s < total; ++s) {
        row[s] += scale * shaper.step(rng_noise.normal());
      }
    }
  }

  // EOG transients: blinks on VEOG, slower horizontal deflections on HEOG,
  // with a small frontal leak so rejection actually protects the EEG.
  if (with_eog) {
    const auto heog_row = static_cast<Eigen::Index>(n_ch - 2);
    const auto veog_row = static_cast<Eigen::Index>(n_ch - 1);
    const Eigen::Index fp1 = 0;
    const Eigen::Index fp2 = n_eeg > 1 ? 1 : 0;

    auto add_bumps = [&](Eigen::Index target_row, double rate_hz, double amp,
                         double width_s, double leak) {
      if (rate_hz <= 0.0) return;
      double t = -std::log(1.0 - rng_eog.uniform()) / rate_hz;
      while (t * cfg.rate < static_cast<double>(total)) {
        const auto center = static_cast<std::int64_t>(t * cfg.rate);
        const auto half = static_cast<std::int64_t>(std::ceil(4.0 * width_s * cfg.rate));
        for (std::int64_t s = std::max<std::int64_t>(0, center - half);
             s < std::min(total, center + half + 1); ++s) {
          const double dt = (s - center) / cfg.rate;
          const double v = amp * std::exp(-0.5 * (dt / width_s) * (dt / width_s));
          rec.data(target_row, s) += v;
          if (leak > 0.0) {
            rec.data(fp1, s) += leak * v;
            rec.data(fp2, s) += leak * v;
          }
        }
        t += -std::log(1.0 - rng_eog.uniform()) / rate_hz;
      }
    };

    add_bumps(veog_row, cfg.eog.blink_rate_hz, cfg.eog.amplitude_uv, 0.06, 0.12);
    add_bumps(heog_row, 0.5 * cfg.eog.blink_rate_hz, 0.6 * cfg.eog.amplitude_uv, 0.12, 0.0);
  }

  return {std::move(rec), std::move(truth)};
}

}  // namespace rsvp
