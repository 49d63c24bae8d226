#pragma once

#include "skd/metrics.hpp"
#include "skd/model.hpp"
#include "skd/persistence.hpp"
#include "skd/training.hpp"

#include <string>
#include <vector>

namespace skd {

/// sigmoid(P2) of one RGB frame (1 x 3 x h x w in [0, 1]), bilinearly
/// upsampled to h x w. Only the spatial branch runs.
Tensorf infer_frame(const Tensorf& rgb, ParameterStore& params, const ArchitectureConfig& arch);

// sigmoid(P3) from the encoder branch, with `previous` as the reference frame.
Tensorf infer_frame_temporal(const Tensorf& rgb, const Tensorf& previous, ParameterStore& params,
                             const ArchitectureConfig& arch);

// True when the checkpoint was trained with the encoder kept for test time.
bool uses_temporal_inference(const ParameterStore& params);

struct TimingReport {
  std::vector<double> seconds;       // per processed frame
  std::vector<std::string> skipped;  // unreadable frames
  double mean = 0;
  double median = 0;
  double stddev = 0;
  std::size_t written = 0;
};

TimingReport summarize_timing(std::vector<double> seconds);

/// Writes `<out_dir>/<stem>.png` for every readable frame of the sequence.
/// Temporal checkpoints pair frame k with frame k-1 (the first frame with itself).
TimingReport infer_sequence(const SequenceEntry& sequence, ParameterStore& params, const ArchitectureConfig& arch,
                            const std::string& out_dir);

std::string timing_report_json(const TimingReport& r);

/// Runs inference over in-memory sequences, quantizes each map to 8 bits as
/// the exporter does, and evaluates against the masks.
EvalResult evaluate_sequences(const std::vector<TrainingSequence>& sequences, ParameterStore& params,
                              const ArchitectureConfig& arch, double beta2 = 0.3);

}  // namespace skd
