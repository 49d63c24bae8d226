#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "support.hpp"

#include <json.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;
using namespace skd;

namespace {

int run(const std::string& args) {
  const std::string cmd = std::string(SKD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_files(const fs::path& dir, const std::string& ext) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ext) ++n;
  return n;
}

const char* kShortConfig =
    "arch.backbone = tiny\n"
    "arch.low_channels = 8\n"
    "arch.high_channels = 16\n"
    "arch.embed_channels = 8\n"
    "arch.aspp_channels = 16\n"
    "arch.aspp_rates = 2\n"
    "train.stage1.max_iter = 5\n"
    "train.stage2.max_iter = 3\n"
    "train.batch_size = 2\n"
    "train.crop = 64\n"
    "train.checkpoint_interval = 1000\n";

struct Workspace {
  test::TempDir dir{"cli"};
  std::string cfg = dir.str("short.cfg");
  std::string data = dir.str("data");
  Workspace() {
    std::ofstream(cfg) << kShortConfig;
    REQUIRE(run("synth --out " + data + " --sequences 2 --frames 3 --seed 4") == 0);
  }
};

}  // namespace

TEST_CASE("train, infer and eval end to end") {
  Workspace ws;
  const std::string out = ws.dir.str("run");
  CHECK(run("train --stage 2 --config " + ws.cfg + " --data " + ws.data + " --out " + out) == 1);
  REQUIRE(run("train --stage 1 --config " + ws.cfg + " --data " + ws.data + " --out " + out) == 0);
  CHECK(fs::exists(out + "/stage1_final.skd"));
  CHECK(fs::exists(out + "/stage1_loss.tsv"));
  REQUIRE(run("train --stage 2 --config " + ws.cfg + " --data " + ws.data + " --out " + out) == 0);
  CHECK(fs::exists(out + "/stage2_final.skd"));

  const std::string maps = ws.dir.str("maps");
  REQUIRE(run("infer --ckpt " + out + "/stage2_final.skd --data " + ws.data + " --out " + maps) == 0);
  CHECK(count_files(maps, ".png") == 6);
  CHECK(fs::exists(maps + "/seq00/00002.png"));
  const auto timing = nlohmann::json::parse(read_text(maps + "/timing.json"));
  CHECK(timing.contains("seq01"));

  CHECK(run("infer --ckpt " + out + "/stage2_final.skd --data " + ws.data + " --out " + maps +
            " --sequences nope") == 2);
  CHECK(run("infer --ckpt " + out + "/missing.skd --data " + ws.data + " --out " + maps) == 2);

  const std::string report = ws.dir.str("eval.json");
  REQUIRE(run("eval --pred " + maps + " --gt " + ws.data + "/masks --out " + report) == 0);
  const auto r = nlohmann::json::parse(read_text(report));
  CHECK(r.at("frame_count") == 6);
}

TEST_CASE("eval on ground truth and unpaired files") {
  Workspace ws;
  const std::string report = ws.dir.str("self.json");
  REQUIRE(run("eval --pred " + ws.data + "/masks --gt " + ws.data + "/masks --out " + report) == 0);
  const auto r = nlohmann::json::parse(read_text(report));
  CHECK(r.at("f_max") == 1.0);
  CHECK(r.at("mae") == 0.0);

  fs::copy(ws.data + "/masks", ws.dir.str("pred"), fs::copy_options::recursive);
  fs::remove(ws.dir.str("pred/seq01/00001.png"));
  CHECK(run("eval --pred " + ws.dir.str("pred") + " --gt " + ws.data + "/masks --out " + report) == 2);
}

TEST_CASE("seeded runs log identical losses") {
  Workspace ws;
  for (const char* name : {"a", "b"})
    REQUIRE(run("train --stage 1 --seed 7 --config " + ws.cfg + " --data " + ws.data + " --out " + ws.dir.str(name)) ==
            0);
  const std::string a = read_text(ws.dir.str("a/stage1_loss.tsv"));
  CHECK_FALSE(a.empty());
  CHECK(a == read_text(ws.dir.str("b/stage1_loss.tsv")));
}

TEST_CASE("usage and config errors") {
  Workspace ws;
  CHECK(run("") == 1);
  CHECK(run("train --stage 3 --data x --out y") == 1);
  CHECK(run("ablate --config " + ws.cfg + " --data " + ws.data + " --out " + ws.dir.str("ab") +
            " --scenarios bs,nonsense") == 1);
  std::ofstream(ws.dir.str("bad.cfg")) << "loss.alpha = 1.5\n";
  CHECK(run("train --stage 1 --config " + ws.dir.str("bad.cfg") + " --data " + ws.data + " --out " +
            ws.dir.str("bad")) == 1);
  CHECK(run("train --stage 1 --config " + ws.cfg + " --data " + ws.dir.str("nothing") + " --out " +
            ws.dir.str("bad")) == 2);
}

TEST_CASE("ablation writes a table") {
  Workspace ws;
  const std::string out = ws.dir.str("ab");
  REQUIRE(run("ablate --config " + ws.cfg + " --data " + ws.data + " --out " + out + " --scenarios bs,full") == 0);
  const std::string table = read_text(out + "/ablation.txt");
  CHECK(table.find("maxF") != std::string::npos);
  CHECK(table.find("full") != std::string::npos);
  CHECK(nlohmann::json::parse(read_text(out + "/ablation.json")).at("scenarios").size() == 2);
}
