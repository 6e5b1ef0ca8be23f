#include "rsvp/data_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rsvp/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "file formats are little-endian; byte swapping is not implemented");

namespace rsvp {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr std::uint32_t kRecordingVersion = 1;
constexpr char kEpochMagic[7] = {'R', 'S', 'V', 'P', 'E', 'P', 'O'};
constexpr std::uint8_t kEpochVersion = 1;

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + p.string() + "' for writing");
  return f;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw Error("cannot open '" + p.string() + "' for reading");
  return f;
}

template <typename T>
void put(std::ofstream& f, const T& v) {
  f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

/// Reads sizeof(T) bytes or throws a FormatError carrying the offset where
/// the file ran out.
template <typename T>
T take(std::ifstream& f, const char* context) {
  T v;
  const auto at = static_cast<std::uint64_t>(f.tellg());
  f.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!f) {
    throw FormatError(std::string("unexpected end of file while reading ") + context +
                          " at byte " + std::to_string(at),
                      at);
  }
  return v;
}

void take_bytes(std::ifstream& f, void* dst, std::uint64_t len, const char* context) {
  const auto at = static_cast<std::uint64_t>(f.tellg());
  f.read(static_cast<char*>(dst), static_cast<std::streamsize>(len));
  if (!f) {
    throw FormatError(std::string("unexpected end of file while reading ") + context +
                          " at byte " + std::to_string(at),
                      at);
  }
}

}  // namespace

void write_recording(const std::string& base_path, const ContinuousRecording& rec) {
  if (static_cast<Eigen::Index>(rec.channels.size()) != rec.channel_count()) {
    throw ParamError("write_recording: channel name count does not match data rows");
  }
  const fs::path base(base_path);
  const fs::path payload = fs::path(base).concat(".f32");
  const fs::path events = fs::path(base).concat(".events.csv");
  const fs::path sidecar = fs::path(base).concat(".json");

  {
    auto f = open_out(payload);
    std::vector<float> row(static_cast<std::size_t>(rec.sample_count()));
    for (Eigen::Index c = 0; c < rec.channel_count(); ++c) {
      for (Eigen::Index s = 0; s < rec.sample_count(); ++s) {
        row[static_cast<std::size_t>(s)] = static_cast<float>(rec.data(c, s));
      }
      f.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
    }
  }

  {
    auto f = open_out(events);
    f << "sample_index,label,block_id,task_id\n";
    for (const auto& ev : rec.events) {
      f << ev.sample << ',' << to_string(ev.label) << ',' << ev.block_id << ','
        << ev.task_id << '\n';
    }
  }

  {
    json j;
    j["format"] = "rsvp-recording";
    j["version"] = kRecordingVersion;
    j["rate_hz"] = rec.rate;
    j["units"] = "uV";
    j["channels"] = rec.channels;
    j["samples"] = rec.sample_count();
    j["payload"] = payload.filename().string();
    j["events"] = events.filename().string();
    auto f = open_out(sidecar);
    f << j.dump(2) << '\n';
  }
}

ContinuousRecording read_recording(const std::string& base_path) {
  const fs::path sidecar = fs::path(base_path).concat(".json");
  json j;
  {
    auto f = open_in(sidecar);
    try {
      j = json::parse(f);
    } catch (const json::parse_error& e) {
      throw FormatError("malformed recording sidecar '" + sidecar.string() +
                            "': " + e.what(),
                        static_cast<std::uint64_t>(e.byte));
    }
  }
  if (!j.is_object() || j.value("format", "") != "rsvp-recording") {
    throw FormatError("'" + sidecar.string() + "' is not a recording sidecar");
  }
  const auto version = j.value("version", std::uint32_t{0});
  if (version != kRecordingVersion) {
    throw FormatError("unsupported recording version " + std::to_string(version) +
                      " (reader supports " + std::to_string(kRecordingVersion) + ")");
  }

  ContinuousRecording rec;
  try {
    rec.rate = j.at("rate_hz").get<double>();
    rec.channels = j.at("channels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw FormatError("recording sidecar missing required fields: " + std::string(e.what()));
  }
  const auto samples = j.at("samples").get<std::uint64_t>();
  const auto n_ch = rec.channels.size();

  const fs::path dir = fs::path(base_path).parent_path();
  const fs::path payload = dir / j.at("payload").get<std::string>();
  const fs::path events = dir / j.at("events").get<std::string>();

  {
    const std::uint64_t expected = samples * n_ch * sizeof(float);
    const std::uint64_t actual = fs::exists(payload) ? fs::file_size(payload) : 0;
    if (actual != expected) {
      throw FormatError("payload '" + payload.string() + "' has " + std::to_string(actual) +
                            " bytes, expected " + std::to_string(expected),
                        actual);
    }
    auto f = open_in(payload);
    rec.data.resize(static_cast<Eigen::Index>(n_ch), static_cast<Eigen::Index>(samples));
    std::vector<float> row(samples);
    for (std::size_t c = 0; c < n_ch; ++c) {
      take_bytes(f, row.data(), samples * sizeof(float), "payload row");
      for (std::size_t s = 0; s < samples; ++s) {
        rec.data(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(s)) = row[s];
      }
    }
  }

  {
    auto f = open_in(events);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(f, line)) {
      ++line_no;
      if (line_no == 1) {
        if (line != "sample_index,label,block_id,task_id") {
          throw FormatError("events file '" + events.string() + "' line 1: bad header");
        }
        continue;
      }
      if (line.empty()) continue;
      Event ev;
      std::size_t pos = 0;
      auto next_field = [&](const char* what) {
        const auto comma = line.find(',', pos);
        const auto field = line.substr(pos, comma == std::string::npos
                                                ? std::string::npos
                                                : comma - pos);
        if (field.empty()) {
          throw FormatError("events file line " + std::to_string(line_no) + ": empty " +
                            what);
        }
        pos = comma == std::string::npos ? line.size() : comma + 1;
        return field;
      };
      try {
        ev.sample = std::stoll(next_field("sample_index"));
        const auto label = next_field("label");
        if (label == "target") {
          ev.label = EventLabel::Target;
        } else if (label == "standard") {
          ev.label = EventLabel::Standard;
        } else {
          throw FormatError("events file line " + std::to_string(line_no) +
                            ": unknown label '" + label + "'");
        }
        ev.block_id = static_cast<std::int32_t>(std::stol(next_field("block_id")));
        ev.task_id = static_cast<std::int32_t>(std::stol(next_field("task_id")));
      } catch (const std::invalid_argument&) {
        throw FormatError("events file line " + std::to_string(line_no) +
                          ": malformed numeric field");
      } catch (const std::out_of_range&) {
        throw FormatError("events file line " + std::to_string(line_no) +
                          ": numeric field out of range");
      }
      if (ev.sample < 0 || static_cast<std::uint64_t>(ev.sample) >= samples) {
        throw FormatError("events file line " + std::to_string(line_no) +
                          ": sample index out of recording range");
      }
      rec.events.push_back(ev);
    }
  }
  return rec;
}

void write_epochs(const std::string& path, const EpochSet& epochs) {
  auto f = open_out(path);
  f.write(kEpochMagic, sizeof(kEpochMagic));
  put(f, kEpochVersion);

  const auto n = static_cast<std::uint32_t>(epochs.size());
  const auto n_c = static_cast<std::uint32_t>(epochs.channel_count());
  const auto n_t = static_cast<std::uint32_t>(epochs.samples_per_epoch());
  put(f, n);
  put(f, n_c);
  put(f, n_t);
  put(f, epochs.rate);
  put(f, epochs.window_start);
  put(f, epochs.window_end);

  for (const auto& e : epochs.epochs) {
    if (e.rows() != static_cast<Eigen::Index>(n_c) ||
        e.cols() != static_cast<Eigen::Index>(n_t)) {
      throw ParamError("write_epochs: ragged epoch stack");
    }
    for (Eigen::Index c = 0; c < e.rows(); ++c) {
      for (Eigen::Index s = 0; s < e.cols(); ++s) put(f, e(c, s));
    }
  }
  for (const auto l : epochs.labels) put(f, static_cast<std::uint8_t>(l));
  for (const auto& p : epochs.provenance) {
    put(f, p.block_id);
    put(f, p.task_id);
  }
  const auto n_names = static_cast<std::uint32_t>(epochs.channels.size());
  put(f, n_names);
  for (const auto& name : epochs.channels) {
    put(f, static_cast<std::uint32_t>(name.size()));
    f.write(name.data(), static_cast<std::streamsize>(name.size()));
  }
  if (!f) throw Error("write_epochs: write to '" + path + "' failed");
}

EpochSet read_epochs(const std::string& path) {
  auto f = open_in(path);

  char magic[sizeof(kEpochMagic)];
  take_bytes(f, magic, sizeof(magic), "magic");
  if (std::memcmp(magic, kEpochMagic, sizeof(magic)) != 0) {
    throw FormatError("'" + path + "' is not an epoch file (bad magic)", 0);
  }
  const auto version = take<std::uint8_t>(f, "version");
  if (version != kEpochVersion) {
    throw FormatError("unsupported epoch file version " + std::to_string(version) +
                          " (reader supports " + std::to_string(kEpochVersion) + ")",
                      sizeof(magic));
  }

  EpochSet out;
  const auto n = take<std::uint32_t>(f, "epoch count");
  const auto n_c = take<std::uint32_t>(f, "channel count");
  const auto n_t = take<std::uint32_t>(f, "samples per epoch");
  out.rate = take<double>(f, "rate");
  out.window_start = take<double>(f, "window start");
  out.window_end = take<double>(f, "window end");

  out.epochs.reserve(n);
  std::vector<double> buf(static_cast<std::size_t>(n_c) * n_t);
  for (std::uint32_t i = 0; i < n; ++i) {
    take_bytes(f, buf.data(), buf.size() * sizeof(double), "epoch payload");
    Eigen::MatrixXd e(n_c, n_t);
    for (std::uint32_t c = 0; c < n_c; ++c) {
      for (std::uint32_t s = 0; s < n_t; ++s) {
        e(c, s) = buf[static_cast<std::size_t>(c) * n_t + s];
      }
    }
    out.epochs.push_back(std::move(e));
  }
  out.labels.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto b = take<std::uint8_t>(f, "label");
    if (b > 1) {
      throw FormatError("epoch file '" + path + "': label byte " + std::to_string(b) +
                        " is not 0 or 1");
    }
    out.labels.push_back(static_cast<EventLabel>(b));
  }
  out.provenance.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Provenance p;
    p.block_id = take<std::int32_t>(f, "provenance block");
    p.task_id = take<std::int32_t>(f, "provenance task");
    out.provenance.push_back(p);
  }
  const auto n_names = take<std::uint32_t>(f, "channel name count");
  for (std::uint32_t i = 0; i < n_names; ++i) {
    const auto len = take<std::uint32_t>(f, "channel name length");
    std::string name(len, '\0');
    if (len > 0) take_bytes(f, name.data(), len, "channel name");
    out.channels.push_back(std::move(name));
  }
  return out;
}

bool bit_equal(const ContinuousRecording& a, const ContinuousRecording& b) {
  if (a.rate != b.rate || a.channels != b.channels) return false;
  if (a.data.rows() != b.data.rows() || a.data.cols() != b.data.cols()) return false;
  if (std::memcmp(a.data.data(), b.data.data(),
                  sizeof(double) * static_cast<std::size_t>(a.data.size())) != 0) {
    return false;
  }
  if (a.events.size() != b.events.size()) return false;
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    const auto& x = a.events[i];
    const auto& y = b.events[i];
    if (x.sample != y.sample || x.label != y.label || x.block_id != y.block_id ||
        x.task_id != y.task_id) {
      return false;
    }
  }
  return true;
}

bool bit_equal(const EpochSet& a, const EpochSet& b) {
  if (a.size() != b.size() || a.labels != b.labels || a.channels != b.channels) return false;
  if (a.rate != b.rate || a.window_start != b.window_start || a.window_end != b.window_end) {
    return false;
  }
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a.epochs[i].rows() != b.epochs[i].rows() ||
        a.epochs[i].cols() != b.epochs[i].cols()) {
      return false;
    }
    if (std::memcmp(a.epochs[i].data(), b.epochs[i].data(),
                    sizeof(double) * static_cast<std::size_t>(a.epochs[i].size())) != 0) {
      return false;
    }
  }
  if (a.provenance.size() != b.provenance.size()) return false;
  for (std::size_t i = 0; i < a.provenance.size(); ++i) {
    if (a.provenance[i].block_id != b.provenance[i].block_id ||
        a.provenance[i].task_id != b.provenance[i].task_id) {
      return false;
    }
  }
  return true;
}

}  // namespace rsvp
