/* Copyright 2026 The MSI Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <numeric>
#include <sstream>

#include "msi/error.hpp"
#include "msi/synthetic.hpp"
#include "msi/training.hpp"
#include "support/gradcheck.hpp"
#include "support/test_util.hpp"

namespace msi {
namespace {

SegmenterConfig small_config() {
  SegmenterConfig c;
  c.contraction_width = 3;
  c.merge_width = 4;
  c.seed = 7;
  return c;
}

MaskBitmap blob_mask(int side) {
  MaskBitmap m(side, side);
  for (int y = side / 4; y < side / 2 + 1; ++y)
    for (int x = side / 3; x < side - 1; ++x) m.at(x, y) = 1;
  return m;
}

Episode fixed_episode(int k = 1) {
  SyntheticSpec spec;
  spec.seed = 11;
  return generate_synthetic_episode(spec, 1, k);
}

struct GradCase {
  const char* mode;
  int shots;
};

class ModelGradients : public ::testing::TestWithParam<GradCase> {};

TEST_P(ModelGradients, MatchFiniteDifferences) {
  const PipelineMode mode = parse_pipeline_mode(GetParam().mode);
  Rng rng(21);
  std::vector<SuperCorrelationMaps> inputs;
  for (int s = 0; s < GetParam().shots; ++s) {
    inputs.push_back(testing::random_scm(2, 4, mode.input_channels(), rng));
  }
  SegmenterModel model(mode, 2, small_config());
  // Perturb away from the structured init so no unit sits exactly at a kink.
  for (auto& v : model.parameters()) v += 0.05 * rng.normal();
  const auto result = testing::check_gradients(model, inputs, blob_mask(4));
  EXPECT_EQ(result.failures, 0u) << "worst: " << result.worst;
  EXPECT_LT(result.max_rel_error, 1e-4) << result.worst;
  EXPECT_EQ(result.checked, model.parameters().size());
}

INSTANTIATE_TEST_SUITE_P(Modes, ModelGradients,
                         ::testing::Values(GradCase{"concat", 1}, GradCase{"attention", 1},
                                           GradCase{"fm+stf+sif", 1}, GradCase{"sif", 3}),
                         [](const auto& info) {
                           std::string name = info.param.mode;
                           for (auto& ch : name)
                             if (ch == '+') ch = '_';
                           return name + "_k" + std::to_string(info.param.shots);
                         });

TEST(SegmenterModel, OutputAtFinestLevelResolution) {
  Rng rng(1);
  const SegmenterModel model(msi_mode(), 3, small_config());
  const auto scm = testing::random_scm(3, 8, 2, rng);
  const FeatureTensor logits = model.encode(scm);
  EXPECT_EQ(logits.channels, 2);
  EXPECT_EQ(logits.height, 8);
  EXPECT_EQ(logits.width, 8);
}

TEST(SegmenterModel, ZeroInputGivesSpatiallyUniformOutput) {
  const SegmenterModel model(msi_mode(), 3, small_config());
  SuperCorrelationMaps scm;
  scm.channel_sources = {CorrelationSource::kSupportImage, CorrelationSource::kSupportTarget};
  for (int side : {8, 4, 2}) scm.levels.emplace_back(2, side, side, side, side, 0.0);
  const FeatureTensor logits = model.encode(scm);
  for (int c = 0; c < 2; ++c) {
    for (int y = 0; y < logits.height; ++y) {
      for (int x = 0; x < logits.width; ++x) {
        EXPECT_NEAR(logits.at(c, y, x), logits.at(c, 0, 0), 1e-12);
      }
    }
  }
}

TEST(SegmenterModel, RejectsMismatchedInput) {
  Rng rng(2);
  const SegmenterModel model(msi_mode(), 3, small_config());
  EXPECT_THROW(model.encode(testing::random_scm(2, 8, 2, rng)), ShapeError);
  EXPECT_THROW(model.encode(testing::random_scm(3, 8, 3, rng)), ShapeError);
}

TEST(SegmenterModel, SameSeedSameParameters) {
  const SegmenterModel a(msi_mode(), 3, small_config());
  const SegmenterModel b(msi_mode(), 3, small_config());
  EXPECT_TRUE(std::equal(a.parameters().begin(), a.parameters().end(), b.parameters().begin()));
  SegmenterConfig other = small_config();
  other.seed = 8;
  const SegmenterModel c(msi_mode(), 3, other);
  EXPECT_FALSE(std::equal(a.parameters().begin(), a.parameters().end(), c.parameters().begin()));
}

TEST(SegmenterModel, ParameterTableCoversBuffer) {
  const SegmenterModel model(parse_pipeline_mode("attention"), 3, small_config());
  std::size_t expected = 0;
  for (const auto& info : model.parameter_table()) {
    EXPECT_EQ(info.offset, expected) << info.name;
    const std::size_t product = std::accumulate(info.shape.begin(), info.shape.end(),
                                                std::size_t{1}, std::multiplies<>());
    EXPECT_EQ(product, info.size) << info.name;
    expected += info.size;
  }
  EXPECT_EQ(expected, model.parameters().size());
  EXPECT_EQ(model.contraction_channels(), 1);
}

TEST(SegmenterConfig, Validation) {
  SegmenterConfig c;
  EXPECT_NO_THROW(c.validate());
  c.contraction_width = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SegmenterConfig{};
  c.learning_rate = -1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SegmenterConfig{};
  c.threshold = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = SegmenterConfig{};
  c.learning_rate = std::nan("");
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(Prediction, IdenticalSupportsMatchSingleShot) {
  const Backbone backbone = make_toy_backbone({});
  const Episode one = fixed_episode(1);
  Episode five = one;
  for (int i = 0; i < 4; ++i) {
    five.support_images.push_back(one.support_images[0]);
    five.support_masks.push_back(one.support_masks[0]);
  }
  const SegmenterModel model(msi_mode(), 3, SegmenterConfig{});
  const Prediction a = predict(one, model, backbone, 0.5);
  const Prediction b = predict(five, model, backbone, 0.5);
  EXPECT_EQ(a.mask, b.mask);
  ASSERT_EQ(a.probability.size(), b.probability.size());
  for (std::size_t i = 0; i < a.probability.size(); ++i) {
    EXPECT_NEAR(a.probability[i], b.probability[i], 1e-12);
  }
}

TEST(Prediction, MaskIsProbabilityAboveThreshold) {
  const Backbone backbone = make_toy_backbone({});
  const Episode ep = fixed_episode();
  const SegmenterModel model(msi_mode(), 3, SegmenterConfig{});
  const Prediction p = predict(ep, model, backbone, 0.5);
  ASSERT_EQ(p.mask.width, ep.query_image.width);
  ASSERT_EQ(p.mask.height, ep.query_image.height);
  for (std::size_t i = 0; i < p.probability.size(); ++i) {
    EXPECT_GE(p.probability[i], 0.0);
    EXPECT_LE(p.probability[i], 1.0);
    EXPECT_EQ(p.mask.data[i], p.probability[i] > 0.5 ? 1 : 0);
  }
  EXPECT_EQ(predict(ep, model, backbone, 1.0).mask.foreground(), 0u);
}

// Golden output of an untrained default model on a fixed episode. Set
// MSI_REGENERATE_GOLDEN=1 to rewrite the file after an intended change.
TEST(Prediction, UntrainedGolden) {
  const Backbone backbone = make_toy_backbone({});
  const SegmenterModel model(msi_mode(), 3, SegmenterConfig{});
  const Prediction p = predict(fixed_episode(), model, backbone, 0.5);
  const double sum = std::accumulate(p.probability.begin(), p.probability.end(), 0.0);
  const auto path = std::filesystem::path(MSI_TEST_DATA_DIR) / "untrained_prediction.txt";

  if (std::getenv("MSI_REGENERATE_GOLDEN") != nullptr) {
    std::ofstream out(path);
    out.precision(17);
    out << sum << "\n";
    for (int y = 0; y < p.mask.height; ++y) {
      for (int x = 0; x < p.mask.width; ++x) out << int(p.mask.at(x, y));
      out << "\n";
    }
  }
  std::ifstream in(path);
  ASSERT_TRUE(in) << "missing " << path;
  double golden_sum = 0.0;
  in >> golden_sum;
  EXPECT_NEAR(sum, golden_sum, 1e-9 * std::max(1.0, std::abs(golden_sum)));
  for (int y = 0; y < p.mask.height; ++y) {
    std::string row;
    in >> row;
    ASSERT_EQ(row.size(), static_cast<std::size_t>(p.mask.width));
    for (int x = 0; x < p.mask.width; ++x) {
      EXPECT_EQ(row[x] - '0', p.mask.at(x, y)) << "at (" << x << ", " << y << ")";
    }
  }
}

TEST(Ablation, FeatureRowChannelCounts) {
  const auto rows = feature_rows();
  ASSERT_EQ(rows.size(), 7u);
  const std::vector<std::pair<std::string, int>> expected{
      {"sif", 1}, {"fm", 1}, {"stf", 1}, {"fm+stf", 2}, {"stf+sif", 2}, {"fm+sif", 2},
      {"fm+stf+sif", 3}};
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].name, expected[i].first);
    EXPECT_EQ(rows[i].input_channels(), expected[i].second) << rows[i].name;
  }
  EXPECT_EQ(fusion_modes().size(), 4u);
}

TEST(Ablation, AllRowsRunThroughOneEntryPoint) {
  const Backbone backbone = make_toy_backbone({});
  const Episode ep = fixed_episode();
  auto modes = feature_rows();
  for (const auto& m : fusion_modes()) modes.push_back(m);
  for (const auto& mode : modes) {
    const SegmenterModel model(mode, 3, SegmenterConfig{});
    const Prediction p = ablation_forward(mode, ep, model, backbone, 0.5);
    EXPECT_EQ(p.mask.area(), ep.query_mask.area()) << mode.name;
  }
}

TEST(Ablation, FullSupportMaskMakesSifEqualStf) {
  const Backbone backbone = make_toy_backbone({});
  Episode ep = fixed_episode();
  std::fill(ep.support_masks[0].data.begin(), ep.support_masks[0].data.end(), 1);
  const FeaturePyramid query = backbone.extract(ep.query_image, ImageRole::kQuery);
  const auto scm = build_encoder_input(parse_pipeline_mode("fm+stf+sif"), ep.support_images[0],
                                       ep.support_masks[0], query, backbone);
  for (const auto& level : scm.levels) {
    ASSERT_EQ(level.channels, 3);
    const std::size_t n = level.channel_stride();
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(level.data[i], level.data[n + i], 1e-12);
      EXPECT_NEAR(level.data[i], level.data[2 * n + i], 1e-12);
    }
  }
}

std::shared_ptr<const std::vector<Episode>> single(const Episode& ep) {
  return std::make_shared<const std::vector<Episode>>(std::vector<Episode>{ep});
}

TEST(Fit, ZeroLearningRateLeavesParametersUnchanged) {
  const Backbone backbone = make_toy_backbone({});
  SegmenterConfig config = small_config();
  config.learning_rate = 0.0;
  config.steps = 1;
  const auto sampler = list_sampler(single(fixed_episode()));
  const SegmenterModel initial(msi_mode(), 3, config);
  const FitResult r = fit(sampler, sampler, backbone, msi_mode(), config);
  EXPECT_TRUE(std::equal(initial.parameters().begin(), initial.parameters().end(),
                         r.model.parameters().begin()));
  ASSERT_EQ(r.log.records.size(), 1u);
  EXPECT_TRUE(r.log.records[0].val_miou.has_value());
}

TEST(Fit, MemorizesOneEpisode) {
  const Backbone backbone = make_toy_backbone({});
  SegmenterConfig config;
  config.steps = 200;
  config.val_interval = 0;
  const auto sampler = list_sampler(single(fixed_episode()));
  const FitResult r = fit(sampler, sampler, backbone, msi_mode(), config);
  ASSERT_EQ(r.log.records.size(), 200u);
  const double first = r.log.records.front().loss;
  const double last = r.log.records.back().loss;
  EXPECT_LT(last, 0.5 * first);
}

TEST(Fit, DeterministicUnderSeed) {
  const Backbone backbone = make_toy_backbone({});
  SegmenterConfig config = small_config();
  config.steps = 20;
  config.val_interval = 10;
  config.val_episodes = 4;
  const auto train = synthetic_sampler(SyntheticSpec{}, {0, 1, 2}, 1, 5);
  const auto val = synthetic_sampler(SyntheticSpec{}, {3}, 1, 6);
  const FitResult a = fit(train, val, backbone, msi_mode(), config, {.workers = 1});
  const FitResult b = fit(train, val, backbone, msi_mode(), config, {.workers = 2});
  EXPECT_TRUE(std::equal(a.model.parameters().begin(), a.model.parameters().end(),
                         b.model.parameters().begin()));
  ASSERT_EQ(a.log.records.size(), b.log.records.size());
  for (std::size_t i = 0; i < a.log.records.size(); ++i) {
    EXPECT_EQ(a.log.records[i].loss, b.log.records[i].loss);
    EXPECT_EQ(a.log.records[i].val_miou, b.log.records[i].val_miou);
  }
  // Validation at every interval and after the final step.
  EXPECT_TRUE(a.log.records[9].val_miou.has_value());
  EXPECT_TRUE(a.log.records[19].val_miou.has_value());
  EXPECT_FALSE(a.log.records[4].val_miou.has_value());
}

TEST(Fit, DivergenceRaisesNumericalError) {
  const Backbone backbone = make_toy_backbone({});
  SegmenterConfig config;
  config.learning_rate = 1e6;
  config.steps = 50;
  config.val_interval = 0;
  const auto sampler = synthetic_sampler(SyntheticSpec{}, {0, 1, 2}, 1, 5);
  try {
    fit(sampler, sampler, backbone, msi_mode(), config);
    FAIL() << "expected NumericalError";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("step"), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, RoundTrip) {
  const auto dir = testing::temp_dir("checkpoint");
  const SegmenterModel model(parse_pipeline_mode("attention"), 3, small_config());
  save_checkpoint(dir / "ckpt.json", model, small_config(), R"({"seed":3})");
  const LoadedCheckpoint loaded = load_checkpoint(dir / "ckpt.json");
  EXPECT_EQ(loaded.model.mode(), model.mode());
  EXPECT_EQ(loaded.model.levels(), 3);
  EXPECT_EQ(loaded.config, small_config());
  EXPECT_TRUE(std::equal(model.parameters().begin(), model.parameters().end(),
                         loaded.model.parameters().begin(), loaded.model.parameters().end()));
  EXPECT_NE(loaded.config_echo_json.find("seed"), std::string::npos);

  save_checkpoint(dir / "again.json", loaded.model, loaded.config, loaded.config_echo_json);
  EXPECT_EQ(testing::read_file(dir / "ckpt.json"), testing::read_file(dir / "again.json"));
}

TEST(Checkpoint, VersionAndFormatErrors) {
  const auto dir = testing::temp_dir("checkpoint_errors");
  const SegmenterModel model(msi_mode(), 3, small_config());
  save_checkpoint(dir / "ckpt.json", model, small_config(), "{}");
  std::string text = testing::read_file(dir / "ckpt.json");
  const auto pos = text.find("\"version\": 1");
  ASSERT_NE(pos, std::string::npos) << text.substr(0, 200);
  text.replace(pos, 12, "\"version\": 99");
  std::ofstream(dir / "future.json") << text;
  EXPECT_THROW(load_checkpoint(dir / "future.json"), ConfigError);
  std::ofstream(dir / "garbage.json") << "not json";
  EXPECT_THROW(load_checkpoint(dir / "garbage.json"), DataError);
  EXPECT_THROW(load_checkpoint(dir / "missing.json"), DataError);
}

}  // namespace
}  // namespace msi
