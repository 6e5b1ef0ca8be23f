#pragma once

#include <string>

#include "rsvp/recording.hpp"

namespace rsvp {

// Native on-disk formats. A recording is three files sharing a base path:
//   <base>.json        sidecar (version, rate, channel names, units,
//                      payload/event file references, sample count)
//   <base>.f32         little-endian float32 payload, channel-major
//   <base>.events.csv  sample_index,label,block_id,task_id
// An epoch set is a single versioned binary file. Readers reject unknown
// versions and report the byte offset of structural failures.

/// Writes <base>.json, <base>.f32 and <base>.events.csv. Sample values are
/// stored as float32 (storage precision; values already representable in
/// float32 round-trip bit-exactly).
void write_recording(const std::string& base_path, const ContinuousRecording& rec);

ContinuousRecording read_recording(const std::string& base_path);

void write_epochs(const std::string& path, const EpochSet& epochs);

/// Reads an epoch file. An empty set (n = 0) is returned as-is; supervised
/// consumers fail later on their own class-presence preconditions.
EpochSet read_epochs(const std::string& path);

/// Field-by-field bitwise equality, used by round-trip and determinism tests.
bool bit_equal(const ContinuousRecording& a, const ContinuousRecording& b);
bool bit_equal(const EpochSet& a, const EpochSet& b);

}  // namespace rsvp
