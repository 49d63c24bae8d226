#include "skd/config.hpp"

#include "skd/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace skd {

std::string to_string(Backbone b) { return b == Backbone::tiny ? "tiny" : "resnet50"; }

std::string to_string(FusionKind f) {
  switch (f) {
    case FusionKind::add: return "add";
    case FusionKind::multiply: return "multiply";
    case FusionKind::concat: return "concat";
    case FusionKind::mutual: return "mutual";
  }
  return "mutual";
}

std::string to_string(TemporalMode m) {
  switch (m) {
    case TemporalMode::none: return "none";
    case TemporalMode::plain: return "plain";
    case TemporalMode::encoded: return "encoded";
  }
  return "none";
}

FusionKind parse_fusion(const std::string& s) {
  if (s == "add") return FusionKind::add;
  if (s == "multiply") return FusionKind::multiply;
  if (s == "concat") return FusionKind::concat;
  if (s == "mutual") return FusionKind::mutual;
  throw ConfigError("unknown fusion variant '" + s + "' (expected add, multiply, concat or mutual)");
}

Backbone parse_backbone(const std::string& s) {
  if (s == "resnet50") return Backbone::resnet50;
  if (s == "tiny") return Backbone::tiny;
  throw ConfigError("unknown backbone '" + s + "' (expected resnet50 or tiny)");
}

TemporalMode AblationFlags::temporal_mode() const {
  if (encoder()) return TemporalMode::encoded;
  if (td) return TemporalMode::plain;
  return TemporalMode::none;
}

void AblationFlags::validate() const {
  if (td && !sd) throw ConfigError("ablation: temporal distillation (td) requires spatial distillation (sd)");
  if (fe_o && fe_t) throw ConfigError("ablation: fe_o and fe_t are mutually exclusive");
  if (encoder() && !sd) throw ConfigError("ablation: the inter-frame encoder requires spatial distillation (sd)");
}

std::string AblationFlags::str() const {
  std::string out;
  auto push = [&out](bool on, const char* name) {
    if (!on) return;
    if (!out.empty()) out += "+";
    out += name;
  };
  push(sd, "sd");
  push(td, "td");
  push(fe_o, "fe_o");
  push(fe_t, "fe_t");
  return out.empty() ? "bs" : out;
}

AblationFlags AblationFlags::parse(const std::string& text) {
  AblationFlags f;
  if (text == "bs" || text.empty()) return f;
  if (text == "full") return AblationFlags{true, true, true, false};
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "sd") f.sd = true;
    else if (part == "td") f.td = true;
    else if (part == "fe_o") f.fe_o = true;
    else if (part == "fe_t") f.fe_t = true;
    else throw ConfigError("unknown ablation flag '" + part + "' in '" + text + "'");
  }
  f.validate();
  return f;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  auto [end, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || end != v.data() + v.size())
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(trim(part));
  return out;
}

std::array<float, 3> to_triple(const std::string& key, const std::string& v) {
  auto parts = split_list(v);
  if (parts.size() != 3) throw ConfigError(key + ": expected three comma-separated numbers");
  return {float(to_double(key, parts[0])), float(to_double(key, parts[1])), float(to_double(key, parts[2]))};
}

template <typename Seq>
std::string join(const Seq& values) {
  std::string out;
  for (const auto& v : values) {
    if (!out.empty()) out += ",";
    out += fmt(double(v));
  }
  return out;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define SKD_FIELD(KEY, SETTER, GETTER)                                                       \
  Field {                                                                                    \
    KEY, [](RunConfig& c, const std::string& v) { [[maybe_unused]] const std::string k = KEY; SETTER; }, \
        [](const RunConfig& c) -> std::string { return GETTER; }                             \
  }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields{
      SKD_FIELD("arch.backbone", c.arch.backbone = parse_backbone(v), to_string(c.arch.backbone)),
      SKD_FIELD("arch.low_channels", c.arch.low_channels = int(to_int(k, v)), fmt(c.arch.low_channels)),
      SKD_FIELD("arch.high_channels", c.arch.high_channels = int(to_int(k, v)), fmt(c.arch.high_channels)),
      SKD_FIELD("arch.embed_channels", c.arch.embed_channels = int(to_int(k, v)), fmt(c.arch.embed_channels)),
      SKD_FIELD("arch.aspp_channels", c.arch.aspp_channels = int(to_int(k, v)), fmt(c.arch.aspp_channels)),
      SKD_FIELD("arch.aspp_rates",
                {
                  c.arch.aspp_rates.clear();
                  for (const auto& p : split_list(v)) c.arch.aspp_rates.push_back(int(to_int(k, p)));
                },
                join(c.arch.aspp_rates)),
      SKD_FIELD("arch.pretrained", c.arch.pretrained = v, c.arch.pretrained),
      SKD_FIELD("arch.norm_mean", c.arch.mean = to_triple(k, v), join(c.arch.mean)),
      SKD_FIELD("arch.norm_std", c.arch.stddev = to_triple(k, v), join(c.arch.stddev)),
      SKD_FIELD("arch.fusion", c.arch.fusion = parse_fusion(v), to_string(c.arch.fusion)),
      SKD_FIELD("loss.alpha", c.loss.alpha = to_double(k, v), fmt(c.loss.alpha)),
      SKD_FIELD("loss.temporal_weight", c.loss.temporal_weight = to_double(k, v), fmt(c.loss.temporal_weight)),
      SKD_FIELD("train.stage1.base_lr", c.train.stage1.base_lr = to_double(k, v), fmt(c.train.stage1.base_lr)),
      SKD_FIELD("train.stage1.momentum", c.train.stage1.momentum = to_double(k, v), fmt(c.train.stage1.momentum)),
      SKD_FIELD("train.stage1.max_iter", c.train.stage1.max_iter = int(to_int(k, v)), fmt(c.train.stage1.max_iter)),
      SKD_FIELD("train.stage2.base_lr", c.train.stage2.base_lr = to_double(k, v), fmt(c.train.stage2.base_lr)),
      SKD_FIELD("train.stage2.momentum", c.train.stage2.momentum = to_double(k, v), fmt(c.train.stage2.momentum)),
      SKD_FIELD("train.stage2.max_iter", c.train.stage2.max_iter = int(to_int(k, v)), fmt(c.train.stage2.max_iter)),
      SKD_FIELD("train.weight_decay", c.train.weight_decay = to_double(k, v), fmt(c.train.weight_decay)),
      SKD_FIELD("train.poly_power", c.train.poly_power = to_double(k, v), fmt(c.train.poly_power)),
      SKD_FIELD("train.batch_size", c.train.batch_size = int(to_int(k, v)), fmt(c.train.batch_size)),
      SKD_FIELD("train.crop", c.train.crop = int(to_int(k, v)), fmt(c.train.crop)),
      SKD_FIELD("train.rotation_deg", c.train.rotation_deg = to_double(k, v), fmt(c.train.rotation_deg)),
      SKD_FIELD("train.flip", c.train.flip = to_bool(k, v), c.train.flip ? "true" : "false"),
      SKD_FIELD("train.t0_max", c.train.t0_max = int(to_int(k, v)), fmt(c.train.t0_max)),
      SKD_FIELD("train.seed", c.train.seed = std::uint64_t(to_int(k, v)), std::to_string(c.train.seed)),
      SKD_FIELD("train.ablation", c.train.ablation = AblationFlags::parse(v), c.train.ablation.str()),
      SKD_FIELD("train.checkpoint_interval", c.train.checkpoint_interval = int(to_int(k, v)),
                fmt(c.train.checkpoint_interval)),
      SKD_FIELD("train.grad_clip", c.train.grad_clip = to_double(k, v), fmt(c.train.grad_clip)),
      SKD_FIELD("data.layout", c.data.layout = v, c.data.layout),
      SKD_FIELD("data.resolution", c.data.resolution = v, c.data.resolution),
      SKD_FIELD("eval.beta2", c.beta2 = to_double(k, v), fmt(c.beta2)),
  };
  return fields;
}

#undef SKD_FIELD

void check(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError(key + ": " + what);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& f : schema()) out.push_back(f.key);
    return out;
  }();
  return keys;
}

std::map<std::string, std::string> RunConfig::to_key_values() const {
  std::map<std::string, std::string> out;
  for (const auto& f : schema()) out[f.key] = f.get(*this);
  return out;
}

LossConfig RunConfig::loss_for_flags(const AblationFlags& flags) const {
  LossConfig out = loss;
  out.temporal_mode = flags.temporal_mode();
  out.spatial_distill = flags.sd;
  out.temporal_distill = flags.td;
  return out;
}

void validate(const RunConfig& c) {
  check(c.arch.low_channels > 0, "arch.low_channels", "must be positive");
  check(c.arch.high_channels > 0, "arch.high_channels", "must be positive");
  check(c.arch.embed_channels > 0, "arch.embed_channels", "must be positive");
  check(c.arch.aspp_channels > 0, "arch.aspp_channels", "must be positive");
  check(!c.arch.aspp_rates.empty(), "arch.aspp_rates", "needs at least one rate");
  for (int r : c.arch.aspp_rates) check(r >= 1, "arch.aspp_rates", "rates must be >= 1");
  for (float s : c.arch.stddev) check(s > 0, "arch.norm_std", "must be positive");
  check(c.loss.alpha >= 0 && c.loss.alpha <= 1, "loss.alpha", "must lie in [0, 1], got " + fmt(c.loss.alpha));
  check(c.loss.temporal_weight >= 0, "loss.temporal_weight", "must be non-negative");
  for (const auto& [name, s] : {std::pair{"train.stage1", c.train.stage1}, std::pair{"train.stage2", c.train.stage2}}) {
    check(s.base_lr > 0, std::string(name) + ".base_lr", "must be positive");
    check(s.momentum >= 0 && s.momentum < 1, std::string(name) + ".momentum", "must lie in [0, 1)");
    check(s.max_iter >= 1, std::string(name) + ".max_iter", "must be at least 1");
  }
  check(c.train.weight_decay >= 0, "train.weight_decay", "must be non-negative");
  check(c.train.poly_power > 0, "train.poly_power", "must be positive");
  check(c.train.batch_size >= 1, "train.batch_size", "must be at least 1");
  check(c.train.crop >= 64, "train.crop", "must be at least 64");
  check(c.train.rotation_deg >= 0 && c.train.rotation_deg <= 180, "train.rotation_deg", "must lie in [0, 180]");
  check(c.train.t0_max >= 1 && c.train.t0_max <= 3, "train.t0_max", "must lie in [1, 3]");
  check(c.train.checkpoint_interval >= 1, "train.checkpoint_interval", "must be at least 1");
  check(c.train.grad_clip >= 0, "train.grad_clip", "must be non-negative");
  check(c.data.layout == "auto" || c.data.layout == "davis" || c.data.layout == "flat_pairs", "data.layout",
        "must be auto, davis or flat_pairs");
  check(c.beta2 > 0, "eval.beta2", "must be positive");
  try {
    c.train.ablation.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("train.ablation: ") + e.what());
  }
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::map<std::string, const Field*> by_key;
  for (const auto& f : schema()) by_key[f.key] = &f;
  std::set<std::string> seen;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = by_key.find(key);
    if (it == by_key.end()) throw ConfigError(key + ": unknown configuration key");
    if (!seen.insert(key).second) throw ConfigError(key + ": duplicate key");
    try {
      it->second->set(cfg, value);
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      throw ConfigError(msg.starts_with(key) ? msg : key + ": " + msg);
    }
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const RunConfig& cfg) {
  std::string out;
  for (const auto& f : schema()) out += f.key + " = " + f.get(cfg) + "\n";
  return out;
}

}  // namespace skd
