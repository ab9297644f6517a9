/// @file test_cli.cpp
/// @brief End-to-end subcommand runs through the in-process entry point.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "genreforge/cli.hpp"
#include "genreforge/io_util.hpp"
#include "genreforge/persist.hpp"
#include "synth.hpp"
#include "temp_dir.hpp"

using namespace genreforge;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string without_created(const std::string& manifest) {
  std::istringstream in(manifest);
  std::string line;
  std::string out;
  while (std::getline(in, line)) {
    if (line.rfind("created:", 0) != 0) out += line + "\n";
  }
  return out;
}

/// One synthetic audio tree with a truncated jazz file, extracted once.
struct AudioFixture {
  testing::TempDir dir{"cli-audio"};
  fs::path root;
  fs::path out;
  Run extract;

  AudioFixture() {
    root = dir / "genres";
    testing::write_synth_dataset(root, {10, 3, 22050, 3.2, 7, true});
    out = dir / "extract";
    extract = run({"extract", "--dataset-dir", root.string(), "--out", out.string()});
  }
};

AudioFixture& audio() {
  static AudioFixture f;
  return f;
}

}  // namespace

TEST_CASE("extract caches features and reports the corrupt file", "[cli]") {
  auto& f = audio();
  REQUIRE(f.extract.code == 0);
  CHECK(fs::exists(f.out / "features.gfc"));
  const std::string counts = slurp(f.out / "genre_counts.csv");
  CHECK(counts.find("jazz,3\n") != std::string::npos);
  CHECK(counts.find("rock,3\n") != std::string::npos);
  const std::string corrupt = slurp(f.out / "corrupt_files.csv");
  CHECK(corrupt.find("jazz.00054.wav") != std::string::npos);
  CHECK(std::count(corrupt.begin(), corrupt.end(), '\n') == 2);
  const std::string manifest = slurp(f.out / "manifest.txt");
  CHECK(manifest.find("created: ") != std::string::npos);
  CHECK(manifest.find("corrupt: ") != std::string::npos);

  const auto cache = persist::load_cache(f.out / "features.gfc");
  REQUIRE(cache.tensors);
  CHECK(cache.tensors->size() == 30);
  CHECK(cache.tensors->items[0].grid.rows == 130);
  CHECK(cache.tensors->items[0].grid.cols == 13);
}

TEST_CASE("train and predict from audio features", "[cli]") {
  auto& f = audio();
  REQUIRE(f.extract.code == 0);
  testing::TempDir out("cli-train-audio");
  const auto trained = run({"train", "--model", "forest", "--features", (f.out / "features.gfc").string(), "--out",
                            out.path().string(), "--set", "forest.trees=5"});
  REQUIRE(trained.code == 0);
  CHECK(fs::exists(out / "forest.gfm"));
  CHECK(fs::exists(out / "forest_confusion.pgm"));

  const fs::path wav = f.root / "blues" / "blues.00000.wav";
  const auto pred = run({"predict", "--model-file", (out / "forest.gfm").string(), "--wav", wav.string(), "--top",
                         "10"});
  REQUIRE(pred.code == 0);
  std::istringstream lines(pred.out);
  std::string rank, genre;
  double p = 0.0;
  double total = 0.0;
  int n = 0;
  while (lines >> rank >> genre >> p) {
    total += p;
    ++n;
  }
  CHECK(n == 10);
  CHECK(std::abs(total - 1.0) < 1e-5);

  const auto cnn = run({"train", "--model", "cnn", "--features", (f.out / "features.gfc").string(), "--out",
                        out.path().string(), "--set", "cnn.conv1=2", "--set", "cnn.conv2=2", "--set", "cnn.dense=8",
                        "--set", "cnn.epochs=1"});
  CHECK(cnn.code == 0);
  const auto cnn_pred = run({"predict", "--model-file", (out / "cnn.gfm").string(), "--wav", wav.string()});
  CHECK(cnn_pred.code == 0);
}

TEST_CASE("cnn without tensors is a feature type mismatch", "[cli]") {
  testing::TempDir dir("cli-vec-only");
  persist::FeatureCache cache;
  cache.vectors = parse_csv(testing::synth_gtzan_csv(4, 1)).dataset;
  persist::save_cache(dir / "vec.gfc", cache);
  const auto r = run({"train", "--model", "cnn", "--features", (dir / "vec.gfc").string(), "--out",
                      (dir / "out").string()});
  CHECK(r.code == kExitData);
  CHECK(r.err.find("FeatureTypeMismatch") != std::string::npos);
}

TEST_CASE("csv training, prediction and the wav guard", "[cli]") {
  testing::TempDir dir("cli-csv");
  write_file_atomic(dir / "features.csv", testing::synth_gtzan_csv(8, 3, 0.5));
  const std::string csv = (dir / "features.csv").string();
  const auto r = run({"train", "--model", "forest", "--csv", csv, "--out", (dir / "out").string(), "--set",
                      "forest.trees=9"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("forest test accuracy") != std::string::npos);

  const auto pred = run({"predict", "--model-file", (dir / "out" / "forest.gfm").string(), "--csv", csv});
  CHECK(pred.code == 0);
  CHECK(pred.out.find("accuracy ") != std::string::npos);

  auto& f = audio();
  const auto wrong = run({"predict", "--model-file", (dir / "out" / "forest.gfm").string(), "--wav",
                          (f.root / "rock" / "rock.00000.wav").string()});
  CHECK(wrong.code == kExitData);
  CHECK(wrong.err.find("FeatureTypeMismatch") != std::string::npos);
}

TEST_CASE("compare and sweep-k runs are byte-identical apart from the timestamp", "[cli]") {
  testing::TempDir dir("cli-det");
  write_file_atomic(dir / "features.csv", testing::synth_gtzan_csv(8, 4, 0.7));
  const std::string csv = (dir / "features.csv").string();
  for (const std::string run_dir : {"a", "b"}) {
    const auto r = run({"compare", "--csv", csv, "--models", "knn,forest", "--seed", "5", "--out",
                        (dir / run_dir).string(), "--set", "forest.trees=7"});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("forest") != std::string::npos);
  }
  std::size_t compared = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const std::string name = entry.path().filename().string();
    const std::string a = slurp(entry.path());
    const std::string b = slurp(dir / "b" / name);
    if (name == "manifest.txt") {
      CHECK(without_created(a) == without_created(b));
    } else {
      CHECK(a == b);
    }
    ++compared;
  }
  CHECK(compared >= 10);

  const auto other = run({"compare", "--csv", csv, "--models", "knn", "--seed", "6", "--out", (dir / "c").string()});
  REQUIRE(other.code == 0);

  const auto sweep = run({"sweep-k", "--csv", csv, "--k-values", "1,3,5", "--folds", "4", "--out",
                          (dir / "sweep").string()});
  REQUIRE(sweep.code == 0);
  const std::string sweep_csv = slurp(dir / "sweep" / "sweep_k.csv");
  CHECK(std::count(sweep_csv.begin(), sweep_csv.end(), '\n') == 4);
}

TEST_CASE("cli error paths", "[cli]") {
  testing::TempDir dir("cli-err");
  CHECK(run({"extract", "--dataset-dir", (dir / "missing").string(), "--out", (dir / "o").string()}).code != 0);
  CHECK(run({"train", "--model", "svm", "--csv", "x.csv"}).code == kExitUsage);
  CHECK(run({"train", "--model", "knn", "--set", "bogus.key=1", "--csv", "x.csv"}).code == kExitUsage);
  CHECK(run({"frobnicate"}).code == kExitUsage);
  CHECK(run({"train", "--model", "knn", "--csv", (dir / "absent.csv").string()}).code == kExitData);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("compare") != std::string::npos);
}
