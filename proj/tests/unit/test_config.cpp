/// @file test_config.cpp
/// @brief key=value parsing, overrides and snapshots.

#include <catch2/catch_amalgamated.hpp>

#include "genreforge/config.hpp"
#include "genreforge/error.hpp"

using namespace genreforge;

TEST_CASE("key=value parsing", "[config]") {
  const auto kv = parse_key_values(
      "# comment\n"
      "\n"
      "seed = 7\n"
      "  knn.k=5   # trailing\n"
      "seed = 9\n"
      "models = knn, forest\r\n");
  CHECK(kv.size() == 3);
  CHECK(kv.at("seed") == "9");
  CHECK(kv.at("knn.k") == "5");
  CHECK(kv.at("models") == "knn, forest");
  CHECK_THROWS_AS(parse_key_values("seed 7\n"), Error);
}

TEST_CASE("apply_setting updates fields and rejects bad input", "[config]") {
  RunConfig cfg;
  apply_setting(cfg, "knn.k", "7");
  apply_setting(cfg, "cnn.dense", "64,32");
  apply_setting(cfg, "audio.fmax", "8000");
  apply_setting(cfg, "models", "rf,knn");
  apply_setting(cfg, "forest.normalize", "true");
  CHECK(cfg.settings.knn_k == 7);
  CHECK(cfg.settings.cnn_dense == std::vector<std::size_t>{64, 32});
  CHECK(cfg.pipeline.fmax_hz == 8000.0);
  CHECK(cfg.models == std::vector<ModelKind>{ModelKind::Forest, ModelKind::Knn});
  CHECK(cfg.settings.forest_normalize);
  apply_setting(cfg, "audio.fmax", "auto");
  CHECK_FALSE(cfg.pipeline.fmax_hz.has_value());

  const auto kind = [&](std::string_view k, std::string_view v) {
    try {
      apply_setting(cfg, k, v);
    } catch (const Error& e) {
      return e.kind();
    }
    return ErrorKind::Io;
  };
  CHECK(kind("no.such.key", "1") == ErrorKind::InvalidArgument);
  CHECK(kind("knn.k", "seven") == ErrorKind::InvalidArgument);
  CHECK(kind("knn.k", "-1") == ErrorKind::InvalidArgument);
  CHECK(kind("mlp.normalize", "maybe") == ErrorKind::InvalidArgument);
  CHECK(kind("models", "svm") == ErrorKind::InvalidArgument);
}

TEST_CASE("validate rejects degenerate values", "[config]") {
  RunConfig cfg;
  cfg.validate();
  cfg.split.train_fraction = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.settings.mlp_train.batch_size = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = RunConfig{};
  cfg.settings.cnn_dense.clear();
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("snapshot reproduces the configuration", "[config]") {
  RunConfig cfg;
  apply_setting(cfg, "seed", "123");
  apply_setting(cfg, "mlp.learning_rate", "0.003");
  apply_setting(cfg, "cnn.dropout", "0.25");
  apply_setting(cfg, "knn.k_values", "1,2,3");
  apply_setting(cfg, "split.stratified", "false");
  const auto snap = snapshot(cfg);
  CHECK(std::is_sorted(snap.begin(), snap.end()));
  CHECK(snap.size() == known_keys().size());

  RunConfig rebuilt;
  for (const auto& [k, v] : snap) apply_setting(rebuilt, k, v);
  CHECK(snapshot(rebuilt) == snap);
  CHECK(rebuilt.settings.mlp_train.learning_rate == 0.003);
  CHECK(rebuilt.k_values == std::vector<std::size_t>{1, 2, 3});
  CHECK_FALSE(rebuilt.split.stratified);

  RunConfig from_text;
  for (const auto& [k, v] : parse_key_values(snapshot_text(cfg))) apply_setting(from_text, k, v);
  CHECK(snapshot(from_text) == snap);
}
