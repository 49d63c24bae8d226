#pragma once

#include "skd/config.hpp"
#include "skd/parameters.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace skd {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ParameterStore params;
  RunConfig config;
  int version = kCheckpointVersion;
};

/// Single-file container:
///   8-byte magic "SKDCKPT\0" | u64 header length | JSON header |
///   little-endian float32 blobs | u32 CRC-32 of everything before it.
/// The header holds the store metadata, the config snapshot and a tensor
/// table (name, shape, trainable, offset, count).
std::vector<std::uint8_t> serialize_checkpoint(const ParameterStore& params, const RunConfig& config);
Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin = "<memory>");

// Writes to a temporary sibling then renames over `path`.
void save_checkpoint(const std::string& path, const ParameterStore& params, const RunConfig& config);
Checkpoint load_checkpoint(const std::string& path);

/// Throws CheckpointError listing the key diff when the stored parameters do
/// not match the layout `arch` would declare. Encoder keys are expected only
/// when the checkpoint has them.
void check_compatible(const ParameterStore& params, const ArchitectureConfig& arch);

struct AdoptionReport {
  std::vector<std::string> adopted;      // copied from the source
  std::vector<std::string> initialized;  // absent in the source, left as declared
  std::vector<std::string> ignored;      // in the source only
};

// Copies every key of `target` that `source` holds with the same shape.
// A shape conflict throws CheckpointError.
AdoptionReport adopt_parameters(ParameterStore& target, const ParameterStore& source);

// Drops every key under a removable prefix; returns how many were erased.
std::size_t strip_removable(ParameterStore& params);

enum class SequenceKind { video, still };

struct SequenceEntry {
  std::string name;
  SequenceKind kind = SequenceKind::video;
  std::vector<std::string> frames;
  std::vector<std::string> masks;  // aligned with frames; empty string when unlabeled

  std::size_t labeled_count() const;
};

struct DatasetIndex {
  std::string root;
  std::string layout;
  std::vector<SequenceEntry> sequences;
  // Frames without an annotation ("<sequence>/<stem>").
  std::vector<std::string> exceptions;

  std::size_t frame_count() const;
};

/// Indexes a dataset root. `davis` reads JPEGImages/<res>/<seq> (or
/// JPEGImages/<seq>) with the matching Annotations tree; `flat_pairs` reads
/// frames/ and masks/, where subdirectories are video sequences and loose
/// files are still images. `auto` picks whichever tree exists. Frames are
/// ordered lexicographically and paired with masks by exact stem.
DatasetIndex index_dataset(const std::string& root, const std::string& layout = "auto",
                           const std::string& resolution = "480p");

// Relative roots are looked up under $SKD_DATA_ROOT when they do not exist as given.
std::string resolve_data_root(const std::string& root);

bool is_image_file(const std::string& path);

}  // namespace skd
