#include <cstdlib>
#include <sstream>
#include <sys/wait.h>

#include "doctest.h"
#include "tempdir.hpp"
#include "veinseg/cli.hpp"
#include "veinseg/trainer.hpp"

using namespace veinseg;
using veinseg::testing::read_bytes;
using veinseg::testing::TempDir;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "veinseg");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string total_line(const std::string& text) {
  const auto p = text.find("total parameters:");
  return p == std::string::npos ? std::string() : text.substr(p, text.find('\n', p) - p);
}

}  // namespace

TEST_CASE("summary reports equal counts for proposed and resunet") {
  const auto a = run({"summary", "--model", "proposed", "--widths", "64,128,256,512"});
  const auto b = run({"summary", "--model", "resunet", "--widths", "64,128,256,512"});
  CHECK(a.code == 0);
  CHECK(b.code == 0);
  CHECK(total_line(a.out) == "total parameters: 8219715");
  CHECK(total_line(a.out) == total_line(b.out));
  CHECK(total_line(run({"summary", "--model", "unet"}).out) == "total parameters: 31030593");
  CHECK(a.out.find("\"bridge_dilation\": 2") != std::string::npos);
}

TEST_CASE("usage errors exit with code 1") {
  const auto missing = run({"train", "--out", "x"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--data") != std::string::npos);
  CHECK(run({"frobnicate"}).code == 1);
  CHECK(run({"summary", "--bogus"}).code == 1);
  CHECK(run({}).code == 1);
  CHECK(run({"summary", "--model", "vgg"}).code == 1);
}

TEST_CASE("synth is deterministic") {
  TempDir a("synth_a"), b("synth_b");
  CHECK(run({"synth", "--count", "4", "--size", "64", "--seed", "7", "--out", a.path().string()}).code == 0);
  CHECK(run({"synth", "--count", "4", "--size", "64", "--seed", "7", "--out", b.path().string()}).code == 0);
  int files = 0;
  for (const char* sub : {"images", "masks"})
    for (const auto& entry : std::filesystem::directory_iterator(a.path() / sub)) {
      CHECK(read_bytes(entry.path()) == read_bytes(b.path() / sub / entry.path().filename()));
      ++files;
    }
  CHECK(files == 8);
}

TEST_CASE("train eval predict overlay plot pipeline") {
  TempDir dir("pipeline");
  const auto data = (dir / "data").string();
  const auto out = (dir / "run").string();
  REQUIRE(run({"synth", "--count", "4", "--size", "32x48", "--seed", "3", "--out", data}).code == 0);
  const auto t = run({"train", "--data", data, "--out", out, "--widths", "2,4,8,16", "--epochs", "2",
                      "--batch-size", "2", "--height", "32", "--width", "48", "--lr", "1e-3"});
  REQUIRE(t.code == 0);
  CHECK(t.out.find("\"epochs\": 2") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "run/checkpoint.vseg"));
  CHECK(read_history(dir / "run/history.csv").size() == 2);
  CHECK(read_bytes(dir / "run/curves.svg").find("<polyline") != std::string::npos);

  const auto e = run({"eval", "--ckpt", out + "/checkpoint.vseg", "--data", data, "--split", "heldout"});
  CHECK(e.code == 0);
  CHECK(e.out.find("acc ") != std::string::npos);

  const auto image = data + "/images/phantom_0000.png";
  const auto p = run({"predict", "--ckpt", out + "/checkpoint.vseg", "--image", image, "--out",
                      (dir / "pred.png").string()});
  CHECK(p.code == 0);
  CHECK(load_png(dir / "pred.png").width == 48);
  CHECK(load_png16(dir / "pred_prob.png").height == 32);

  const auto o = run({"overlay", "--image", image, "--mask", data + "/masks/phantom_0000.png", "--out",
                      (dir / "ov.png").string()});
  CHECK(o.code == 0);
  CHECK(load_png(dir / "ov.png").channels == 3);

  CHECK(run({"plot", "--history", out + "/history.csv", "--out", (dir / "c.svg").string()}).code == 0);
  CHECK(read_bytes(dir / "c.svg") == read_bytes(dir / "run/curves.svg"));

  const auto r = run({"train", "--data", data, "--out", (dir / "run2").string(), "--resume",
                      out + "/checkpoint.vseg", "--widths", "2,4,8,16", "--epochs", "3", "--batch-size",
                      "2", "--height", "32", "--width", "48", "--lr", "1e-3"});
  CHECK(r.code == 0);
  CHECK(read_history(dir / "run2/history.csv").size() == 1);

  const auto bad = run({"eval", "--ckpt", (dir / "nothing.vseg").string(), "--data", data});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("nothing.vseg") != std::string::npos);
}

TEST_CASE("installed binary wiring") {
  const std::string bin = VEINSEG_CLI_PATH;
  auto status = [](const std::string& cmd) {
    const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
    return WIFEXITED(s) ? WEXITSTATUS(s) : -1;
  };
  CHECK(status(bin + " summary --model proposed --widths 4,8,16,32") == 0);
  CHECK(status(bin + " train --out /tmp/none") == 1);
  CHECK(status(bin + " --help") == 0);
}
