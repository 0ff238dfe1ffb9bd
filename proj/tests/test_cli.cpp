#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "xmm/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = 0;
  std::string out, err;
};

Outcome call(std::vector<std::string> args) {
  args.insert(args.begin(), "xmm");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  auto* old_out = std::cout.rdbuf(out.rdbuf());
  auto* old_err = std::cerr.rdbuf(err.rdbuf());
  const int code = xmm::cli::dispatch(static_cast<int>(argv.size()), argv.data());
  std::cout.rdbuf(old_out);
  std::cerr.rdbuf(old_err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("xmm_cli_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("cli: generate, cluster, match") {
  TempDir dir;
  REQUIRE(call({"generate", "--n-ids", "5", "--per-id", "8", "--dim", "8", "--seed", "3", "--out", dir / "d"}).code == 0);
  CHECK(fs::exists(dir / "d/visible.emb"));
  CHECK(fs::exists(dir / "d/manifest.txt"));

  auto c = call({"cluster", "--input", dir / "d/visible.emb", "--eps", "0.4", "--out", dir / "labels.txt"});
  CHECK(c.code == 0);
  const auto labels = slurp(dir / "labels.txt");
  CHECK(labels.rfind("#clusters 5\n", 0) == 0);

  auto m = call({"match", "--visible", dir / "d/visible.emb", "--infrared", dir / "d/infrared.emb", "--eps",
                 "0.6", "--min-pts", "4", "--mode", "mbccm", "--out", dir / "pairs.txt", "--quality-out",
                 dir / "q.txt"});
  CHECK(m.code == 0);
  std::istringstream pairs(slurp(dir / "pairs.txt"));
  int a = -1, b = -1, lines = 0;
  while (pairs >> a >> b) ++lines;
  CHECK(lines >= 1);
  CHECK(slurp(dir / "q.txt").find("pair_precision=") != std::string::npos);
}

TEST_CASE("cli: usage and data errors") {
  TempDir dir;
  REQUIRE(call({"generate", "--n-ids", "3", "--per-id", "6", "--dim", "4", "--out", dir / "d"}).code == 0);

  auto bad_mode = call({"match", "--visible", dir / "d/visible.emb", "--infrared", dir / "d/infrared.emb",
                        "--mode", "foo"});
  CHECK(bad_mode.code == 1);
  CHECK(bad_mode.err.find("--mode") != std::string::npos);
  CHECK(bad_mode.err.find("Usage") != std::string::npos);

  CHECK(call({"frobnicate"}).code == 1);
  CHECK(call({}).code == 1);
  CHECK(call({"cluster", "--eps", "abc", "--input", "x"}).code == 1);
  auto missing = call({"cluster"});
  CHECK(missing.code == 1);
  CHECK(missing.err.find("--input") != std::string::npos);

  auto io = call({"cluster", "--input", dir / "nope.emb"});
  CHECK(io.code == 2);
  CHECK(io.err.find("IoError") != std::string::npos);

  {
    std::ofstream f(dir / "bad.emb");
    f << "#dim 2\nv 1 0 0\n";
  }
  auto dim = call({"cluster", "--input", dir / "bad.emb"});
  CHECK(dim.code == 2);
  CHECK(dim.err.find("DimMismatch") != std::string::npos);

  auto noclusters = call({"cluster", "--input", dir / "d/visible.emb", "--eps", "1e-9"});
  CHECK(noclusters.code == 2);
  CHECK(noclusters.err.find("NoClusters") != std::string::npos);

  CHECK(call({"--help"}).code == 0);
  CHECK(call({"--version"}).code == 0);
}

TEST_CASE("cli: environment overrides") {
  TempDir dir;
  REQUIRE(call({"generate", "--n-ids", "3", "--per-id", "6", "--dim", "4", "--out", dir / "d"}).code == 0);
  setenv("XMM_EPS", "1e-9", 1);
  const auto r = call({"cluster", "--input", dir / "d/visible.emb"});
  unsetenv("XMM_EPS");
  CHECK(r.code == 2);  // the tiny radius came from the environment
  // The command line wins over the environment.
  setenv("XMM_EPS", "1e-9", 1);
  const auto s = call({"cluster", "--input", dir / "d/visible.emb", "--eps", "0.5", "--out", dir / "l.txt"});
  unsetenv("XMM_EPS");
  CHECK(s.code == 0);
}

TEST_CASE("cli: train, rerun from manifest, eval, hist") {
  TempDir dir;
  REQUIRE(call({"generate", "--n-ids", "5", "--per-id", "8", "--dim", "8", "--seed", "1", "--out", dir / "d"}).code == 0);
  const std::vector<std::string> train = {"train",  "--visible", dir / "d/visible.emb", "--infrared",
                                          dir / "d/infrared.emb", "--desk", "--epochs", "4",
                                          "--pretrain-epochs", "2", "--lr", "0.05", "--eps", "0.4",
                                          "--out", dir / "run1"};
  auto t = call(train);
  REQUIRE(t.code == 0);
  for (const char* f : {"manifest.txt", "metrics.log", "epochs.txt", "visible.emb", "infrared.emb"})
    CHECK(fs::exists(dir.path / "run1" / f));
  const auto manifest = slurp(dir / "run1/manifest.txt");
  CHECK(manifest.find("config.ids_per_batch=4\n") != std::string::npos);
  CHECK(manifest.find("input.visible.sha256=") != std::string::npos);
  CHECK(manifest.find("version=") != std::string::npos);

  auto again = call({"train", "--from-manifest", dir / "run1/manifest.txt", "--out", dir / "run2"});
  REQUIRE(again.code == 0);
  CHECK(slurp(dir / "run1/metrics.log") == slurp(dir / "run2/metrics.log"));
  CHECK(slurp(dir / "run1/manifest.txt") == slurp(dir / "run2/manifest.txt"));

  auto conflict = call({"train", "--from-manifest", dir / "run1/manifest.txt", "--epochs", "3"});
  CHECK(conflict.code == 1);
  CHECK(conflict.err.find("--epochs") != std::string::npos);

  auto e = call({"eval", "--visible", dir / "run1/visible.emb", "--infrared", dir / "run1/infrared.emb", "--out",
                 dir / "report.txt"});
  CHECK(e.code == 0);
  CHECK(slurp(dir / "report.txt").find("map=") == 0);

  auto h = call({"hist", "--visible", dir / "run1/visible.emb", "--infrared", dir / "run1/infrared.emb", "--bins",
                 "10", "--out", dir / "hist.txt"});
  CHECK(h.code == 0);
  std::istringstream hist(slurp(dir / "hist.txt"));
  std::string line;
  int rows = 0;
  while (std::getline(hist, line)) ++rows;
  CHECK(rows == 10);

  // Editing an input invalidates the manifest.
  {
    std::ofstream f(dir / "d/visible.emb", std::ios::app);
    f << "\n";
  }
  auto stale = call({"train", "--from-manifest", dir / "run1/manifest.txt", "--out", dir / "run3"});
  CHECK(stale.code == 2);
}
