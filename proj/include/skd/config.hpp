#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace skd {

enum class Backbone { resnet50, tiny };
enum class FusionKind { add, multiply, concat, mutual };

// Which temporal objective the second frame of a pair is trained with:
// none = spatial loss only, plain = three-phase temporal loss,
// encoded = four-phase temporal loss through the inter-frame encoder.
enum class TemporalMode { none, plain, encoded };

std::string to_string(Backbone b);
std::string to_string(FusionKind f);
std::string to_string(TemporalMode m);
FusionKind parse_fusion(const std::string& s);
Backbone parse_backbone(const std::string& s);

/// Ablation switches: spatial distillation, temporal distillation, and the
/// inter-frame encoder used only in training (fe_o) or also at test time (fe_t).
struct AblationFlags {
  bool sd = false;
  bool td = false;
  bool fe_o = false;
  bool fe_t = false;

  bool encoder() const { return fe_o || fe_t; }
  TemporalMode temporal_mode() const;
  void validate() const;
  // Canonical `+`-joined form, "bs" when no flag is set.
  std::string str() const;
  // Accepts `bs`, `full`, or flags joined by `+` (e.g. `sd+td+fe_o`).
  static AblationFlags parse(const std::string& text);

  bool operator==(const AblationFlags&) const = default;
};

struct ArchitectureConfig {
  Backbone backbone = Backbone::resnet50;
  int low_channels = 64;
  int high_channels = 256;
  int embed_channels = 64;
  int aspp_channels = 256;
  // Atrous rates of the three dilated ASPP branches (DeepLabv3's output-stride-16 set).
  std::vector<int> aspp_rates{6, 12, 18};
  std::string pretrained;  // optional backbone weights file
  std::array<float, 3> mean{0.485f, 0.456f, 0.406f};
  std::array<float, 3> stddev{0.229f, 0.224f, 0.225f};
  FusionKind fusion = FusionKind::mutual;

  bool operator==(const ArchitectureConfig&) const = default;
};

struct LossConfig {
  double alpha = 0.7;
  TemporalMode temporal_mode = TemporalMode::encoded;
  bool spatial_distill = true;
  bool temporal_distill = true;
  // Weight of the temporal objective in the stage-2 sum L_s + w * L_t.
  double temporal_weight = 1.0;
};

struct StageSchedule {
  double base_lr;
  double momentum;
  int max_iter;
};

struct TrainConfig {
  int stage = 1;
  StageSchedule stage1{1e-3, 0.9, 40000};
  StageSchedule stage2{1e-4, 0.95, 40000};
  double weight_decay = 5e-4;
  double poly_power = 0.9;
  int batch_size = 8;
  int crop = 473;
  double rotation_deg = 10.0;
  bool flip = true;
  int t0_max = 3;
  std::uint64_t seed = 0;
  AblationFlags ablation{true, true, true, false};
  int checkpoint_interval = 1000;
  double grad_clip = 0.0;  // 0 disables clipping

  const StageSchedule& schedule() const { return stage == 2 ? stage2 : stage1; }
};

struct DataConfig {
  std::string layout = "auto";  // auto | davis | flat_pairs
  std::string resolution = "480p";
};

struct RunConfig {
  ArchitectureConfig arch;
  LossConfig loss;
  TrainConfig train;
  DataConfig data;
  double beta2 = 0.3;

  // Flat dotted-key view covering every schema key.
  std::map<std::string, std::string> to_key_values() const;
  // Loss settings implied by the alpha key and the ablation flags.
  LossConfig loss_for_flags(const AblationFlags& flags) const;
};

/// Parses `key = value` lines (`#` starts a comment). Missing keys keep their
/// defaults; unknown keys, duplicates and out-of-range values throw ConfigError
/// naming the key.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
std::string format_config(const RunConfig& cfg);
void validate(const RunConfig& cfg);

// Schema keys in file order.
const std::vector<std::string>& config_keys();

}  // namespace skd
