#include "skd/persistence.hpp"

#include "skd/error.hpp"
#include "skd/model.hpp"

#include <json.hpp>
#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <set>

namespace fs = std::filesystem;

namespace skd {

namespace {

constexpr char kMagic[8] = {'S', 'K', 'D', 'C', 'K', 'P', 'T', '\0'};
constexpr const char* kFormat = "skd-checkpoint";

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

std::uint64_t get_u64(const std::uint8_t* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= std::uint64_t(p[i]) << (8 * i);
  return v;
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(p[i]) << (8 * i);
  return v;
}

std::uint32_t crc(const std::uint8_t* data, std::size_t n) {
  uLong c = crc32(0L, Z_NULL, 0);
  while (n > 0) {
    const uInt chunk = uInt(std::min<std::size_t>(n, 1u << 30));
    c = crc32(c, data, chunk);
    data += chunk;
    n -= chunk;
  }
  return std::uint32_t(c);
}

nlohmann::json metadata_json(const StoreMetadata& m) {
  return {{"stage", m.stage},
          {"ablation", m.ablation},
          {"iteration", m.iteration},
          {"removable_prefixes", m.removable_prefixes}};
}

StoreMetadata metadata_from(const nlohmann::json& j) {
  StoreMetadata m;
  m.stage = j.at("stage").get<int>();
  m.ablation = j.at("ablation").get<std::string>();
  m.iteration = j.at("iteration").get<std::int64_t>();
  m.removable_prefixes = j.at("removable_prefixes").get<std::vector<std::string>>();
  return m;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::string stem_of(const fs::path& p) { return p.stem().string(); }

std::vector<fs::path> sorted_images(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path().string())) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<fs::path> sorted_dirs(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

SequenceEntry pair_sequence(const std::string& name, SequenceKind kind, const std::vector<fs::path>& frames,
                            const fs::path& mask_dir, std::vector<std::string>& exceptions) {
  std::map<std::string, fs::path> masks;
  if (fs::is_directory(mask_dir))
    for (const auto& m : sorted_images(mask_dir)) masks.emplace(stem_of(m), m);
  SequenceEntry seq;
  seq.name = name;
  seq.kind = kind;
  for (const auto& f : frames) {
    seq.frames.push_back(f.string());
    auto it = masks.find(stem_of(f));
    if (it == masks.end()) {
      seq.masks.emplace_back();
      exceptions.push_back(name + "/" + stem_of(f));
    } else {
      seq.masks.push_back(it->second.string());
    }
  }
  return seq;
}

DatasetIndex index_davis(const fs::path& root, const std::string& resolution) {
  DatasetIndex index;
  fs::path images = root / "JPEGImages";
  fs::path annotations = root / "Annotations";
  if (fs::is_directory(images / resolution)) {
    images /= resolution;
    annotations /= resolution;
  }
  for (const auto& dir : sorted_dirs(images)) {
    auto frames = sorted_images(dir);
    if (frames.empty()) continue;
    const std::string name = dir.filename().string();
    index.sequences.push_back(pair_sequence(name, SequenceKind::video, frames, annotations / name, index.exceptions));
  }
  return index;
}

DatasetIndex index_flat_pairs(const fs::path& root) {
  DatasetIndex index;
  const fs::path frames = root / "frames";
  const fs::path masks = root / "masks";
  for (const auto& dir : sorted_dirs(frames)) {
    auto files = sorted_images(dir);
    if (files.empty()) continue;
    const std::string name = dir.filename().string();
    index.sequences.push_back(pair_sequence(name, SequenceKind::video, files, masks / name, index.exceptions));
  }
  for (const auto& f : sorted_images(frames))
    index.sequences.push_back(pair_sequence(stem_of(f), SequenceKind::still, {f}, masks, index.exceptions));
  return index;
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const ParameterStore& params, const RunConfig& config) {
  nlohmann::json tensors = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, entry] : params.entries()) {
    const Shape s = entry.node->value.shape();
    const auto count = std::uint64_t(s.numel());
    tensors.push_back({{"name", name},
                       {"shape", {s.n, s.c, s.h, s.w}},
                       {"trainable", entry.trainable},
                       {"offset", offset},
                       {"count", count}});
    offset += count;
  }
  nlohmann::json header = {{"format", kFormat},
                           {"version", kCheckpointVersion},
                           {"metadata", metadata_json(params.metadata())},
                           {"config", config.to_key_values()},
                           {"tensors", tensors}};
  const std::string text = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(16 + text.size() + offset * 4 + 4);
  out.insert(out.end(), kMagic, kMagic + 8);
  put_u64(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& [name, entry] : params.entries()) {
    const auto& a = entry.node->value.array();
    for (Eigen::Index i = 0; i < a.size(); ++i) put_u32(out, std::bit_cast<std::uint32_t>(a[i]));
  }
  put_u32(out, crc(out.data(), out.size()));
  return out;
}

Checkpoint parse_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& origin) {
  if (bytes.size() < 20 || std::memcmp(bytes.data(), kMagic, 8) != 0)
    throw CheckpointError("'" + origin + "' is not a checkpoint file");
  const std::size_t body = bytes.size() - 4;
  if (crc(bytes.data(), body) != get_u32(bytes.data() + body))
    throw CheckpointError("'" + origin + "' failed its checksum (truncated or corrupt)");
  const std::uint64_t header_len = get_u64(bytes.data() + 8);
  if (header_len > body - 16) throw CheckpointError("'" + origin + "' has a malformed header length");

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + 16, bytes.begin() + 16 + std::ptrdiff_t(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("'" + origin + "' header: " + e.what());
  }

  Checkpoint ck;
  try {
    if (header.at("format").get<std::string>() != kFormat)
      throw CheckpointError("'" + origin + "' has an unknown format tag");
    ck.version = header.at("version").get<int>();
    if (ck.version != kCheckpointVersion)
      throw CheckpointError("'" + origin + "' has format version " + std::to_string(ck.version) + ", expected " +
                            std::to_string(kCheckpointVersion));
    std::string cfg_text;
    for (const auto& [k, v] : header.at("config").items()) cfg_text += k + " = " + v.get<std::string>() + "\n";
    ck.config = parse_config(cfg_text);

    const std::uint8_t* blobs = bytes.data() + 16 + header_len;
    const std::uint64_t available = (body - 16 - header_len) / 4;
    for (const auto& t : header.at("tensors")) {
      const auto dims = t.at("shape").get<std::vector<int>>();
      if (dims.size() != 4) throw CheckpointError("'" + origin + "' tensor with rank != 4");
      const Shape s{dims[0], dims[1], dims[2], dims[3]};
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto count = t.at("count").get<std::uint64_t>();
      if (count != std::uint64_t(s.numel()) || offset + count > available)
        throw CheckpointError("'" + origin + "' tensor '" + t.at("name").get<std::string>() + "' is out of bounds");
      Tensorf value(s);
      for (std::uint64_t i = 0; i < count; ++i)
        value.data()[i] = std::bit_cast<float>(get_u32(blobs + 4 * (offset + i)));
      ck.params.insert(t.at("name").get<std::string>(), std::move(value), t.at("trainable").get<bool>());
    }
    ck.params.metadata() = metadata_from(header.at("metadata"));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError("'" + origin + "' header: " + e.what());
  } catch (const ConfigError& e) {
    throw CheckpointError("'" + origin + "' config snapshot: " + e.what());
  }
  return ck;
}

void save_checkpoint(const std::string& path, const ParameterStore& params, const RunConfig& config) {
  const auto bytes = serialize_checkpoint(params, config);
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path temp = target.string() + ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write '" + temp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
    if (!out) throw CheckpointError("short write to '" + temp.string() + "'");
  }
  fs::rename(temp, target);
}

Checkpoint load_checkpoint(const std::string& path) { return parse_checkpoint(read_file(path), path); }

void check_compatible(const ParameterStore& params, const ArchitectureConfig& arch) {
  const ParameterStore reference = build_parameters(arch, has_encoder(params), 0);
  const KeyDiff diff = diff_layout(params, reference);
  if (!diff.empty()) throw CheckpointError("checkpoint does not match the architecture config:\n" + diff.str());
}

AdoptionReport adopt_parameters(ParameterStore& target, const ParameterStore& source) {
  AdoptionReport report;
  for (const auto& key : target.keys()) {
    if (!source.contains(key)) {
      report.initialized.push_back(key);
      continue;
    }
    const Tensorf& src = source.tensor(key);
    if (!(src.shape() == target.tensor(key).shape()))
      throw CheckpointError("parameter '" + key + "' has shape " + src.shape().str() + ", expected " +
                            target.tensor(key).shape().str());
    target.tensor(key) = src;
    report.adopted.push_back(key);
  }
  for (const auto& key : source.keys())
    if (!target.contains(key)) report.ignored.push_back(key);
  return report;
}

std::size_t strip_removable(ParameterStore& params) {
  std::size_t erased = 0;
  for (const auto& prefix : params.metadata().removable_prefixes) erased += params.erase_prefix(prefix);
  return erased;
}

std::size_t SequenceEntry::labeled_count() const {
  return std::size_t(std::count_if(masks.begin(), masks.end(), [](const std::string& m) { return !m.empty(); }));
}

std::size_t DatasetIndex::frame_count() const {
  std::size_t n = 0;
  for (const auto& s : sequences) n += s.frames.size();
  return n;
}

bool is_image_file(const std::string& path) {
  static const std::set<std::string> kExt{".jpg", ".jpeg", ".png", ".bmp"};
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return char(std::tolower(c)); });
  return kExt.count(ext) != 0;
}

std::string resolve_data_root(const std::string& root) {
  const fs::path p(root);
  if (fs::exists(p) || p.is_absolute()) return root;
  if (const char* env = std::getenv("SKD_DATA_ROOT"); env && *env) {
    const fs::path candidate = fs::path(env) / p;
    if (fs::exists(candidate)) return candidate.string();
  }
  return root;
}

DatasetIndex index_dataset(const std::string& root_arg, const std::string& layout, const std::string& resolution) {
  const fs::path root(resolve_data_root(root_arg));
  if (!fs::is_directory(root)) throw DataError("dataset root '" + root.string() + "' does not exist");
  std::string chosen = layout;
  if (chosen == "auto") {
    if (fs::is_directory(root / "JPEGImages")) chosen = "davis";
    else if (fs::is_directory(root / "frames")) chosen = "flat_pairs";
    else throw DataError("'" + root.string() + "' has neither JPEGImages/ nor frames/");
  }
  DatasetIndex index;
  if (chosen == "davis") {
    if (!fs::is_directory(root / "JPEGImages")) throw DataError("'" + root.string() + "' lacks JPEGImages/");
    index = index_davis(root, resolution);
  } else if (chosen == "flat_pairs") {
    if (!fs::is_directory(root / "frames")) throw DataError("'" + root.string() + "' lacks frames/");
    index = index_flat_pairs(root);
  } else {
    throw ConfigError("data.layout: unknown layout '" + layout + "'");
  }
  index.root = root.string();
  index.layout = chosen;
  if (index.sequences.empty()) throw DataError("dataset '" + root.string() + "' contains no frames");
  return index;
}

}  // namespace skd
