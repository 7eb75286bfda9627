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
#include <cstring>
#include <numeric>
#include <fstream>

#include <gtest/gtest.h>

#include "msi/correlation.hpp"
#include "msi/correlation_export.hpp"
#include "msi/error.hpp"
#include "msi/masking.hpp"
#include "msi/png_io.hpp"
#include "support/test_util.hpp"

namespace msi {
namespace {

// Rows of an orthonormal basis laid out as a c x h x w tensor whose spatial
// position p holds basis vector p (c == h * w).
FeatureTensor orthonormal_positions(int h, int w) {
  FeatureTensor t(h * w, h, w);
  for (int p = 0; p < h * w; ++p) t.at(p, p / w, p % w) = 1.0;
  return t;
}

TEST(CosineCorrelation, OrthonormalInputsGiveIdentity) {
  const auto f = orthonormal_positions(3, 3);
  for (const auto& t : {cosine_correlation(flatten_support(f), flatten_query(f)),
                        oracle_correlation(f, f)}) {
    for (int p = 0; p < 9; ++p) {
      for (int q = 0; q < 9; ++q) EXPECT_EQ(t.at(0, p, q), p == q ? 1.0 : 0.0);
    }
  }
}

TEST(CosineCorrelation, AntipodalIsClampedToZero) {
  Rng rng(1);
  FeatureTensor s = testing::random_features(4, 1, 1, rng);
  FeatureTensor q = s;
  for (auto& v : q.data) v = -v;
  EXPECT_EQ(cosine_correlation(flatten_support(s), flatten_query(q)).data[0], 0.0);
  EXPECT_EQ(oracle_correlation(s, q).data[0], 0.0);
}

TEST(CosineCorrelation, MatchesOracleOnRandomFeatures) {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto s = testing::random_features(3, 4, 4, rng);
    const auto q = testing::random_features(3, 4, 4, rng);
    const auto fast = cosine_correlation(flatten_support(s), flatten_query(q));
    const auto slow = oracle_correlation(s, q);
    ASSERT_TRUE(fast.same_geometry(slow));
    for (std::size_t j = 0; j < fast.data.size(); ++j) EXPECT_NEAR(fast.data[j], slow.data[j], 1e-6);
  }
}

TEST(CosineCorrelation, ZeroVectorsCorrelateToZero) {
  Rng rng(3);
  FeatureTensor s(3, 2, 2);
  const auto q = testing::random_features(3, 2, 2, rng);
  for (const double v : cosine_correlation(flatten_support(s), flatten_query(q)).data) {
    EXPECT_EQ(v, 0.0);
  }
}

TEST(CosineCorrelation, ChannelMismatchRejected) {
  Rng rng(4);
  const auto s = testing::random_features(3, 2, 2, rng);
  const auto q = testing::random_features(4, 2, 2, rng);
  EXPECT_THROW(cosine_correlation(flatten_support(s), flatten_query(q)), ShapeError);
  EXPECT_THROW(oracle_correlation(s, q), ShapeError);
}

TEST(CosineCorrelation, RectangularGeometry) {
  Rng rng(5);
  const auto s = testing::random_features(2, 7, 5, rng);
  const auto q = testing::random_features(2, 3, 4, rng);
  const auto t = cosine_correlation(flatten_support(s), flatten_query(q));
  EXPECT_EQ(t.support_height, 7);
  EXPECT_EQ(t.support_width, 5);
  EXPECT_EQ(t.query_height, 3);
  EXPECT_EQ(t.query_width, 4);
  EXPECT_EQ(t.data.size(), 7u * 5 * 3 * 4);
}

TEST(CosineCorrelation, SymmetricWhenSupportEqualsQuery) {
  Rng rng(6);
  const auto f = testing::random_features(5, 4, 4, rng);
  const auto t = cosine_correlation(flatten_support(f), flatten_query(f));
  for (int p = 0; p < 16; ++p) {
    for (int q = 0; q < 16; ++q) EXPECT_NEAR(t.at(0, p, q), t.at(0, q, p), 1e-15);
  }
}

TEST(CosineCorrelation, SupportPermutationEquivariance) {
  Rng rng(7);
  const auto s = testing::random_features(4, 3, 3, rng);
  const auto q = testing::random_features(4, 3, 3, rng);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(std::span<int>(perm));
  FeatureTensor permuted(4, 3, 3);
  for (int c = 0; c < 4; ++c) {
    for (int p = 0; p < 9; ++p) permuted.at(c, p / 3, p % 3) = s.at(c, perm[p] / 3, perm[p] % 3);
  }
  const auto a = cosine_correlation(flatten_support(s), flatten_query(q));
  const auto b = cosine_correlation(flatten_support(permuted), flatten_query(q));
  for (int p = 0; p < 9; ++p) {
    for (int j = 0; j < 9; ++j) EXPECT_EQ(b.at(0, p, j), a.at(0, perm[p], j));
  }
}

TEST(CosineCorrelation, PositiveScaleInvariance) {
  Rng rng(8);
  const auto s = testing::random_features(6, 4, 4, rng);
  const auto q = testing::random_features(6, 4, 4, rng);
  const auto base = cosine_correlation(flatten_support(s), flatten_query(q));
  for (const double lambda : {0.1, 1.0, 10.0, 1e4}) {
    FeatureTensor scaled = s;
    for (int c = 0; c < 6; ++c) scaled.at(c, 2, 1) *= lambda;
    const auto t = cosine_correlation(flatten_support(scaled), flatten_query(q));
    for (std::size_t j = 0; j < t.data.size(); ++j) EXPECT_NEAR(t.data[j], base.data[j], 1e-6);
  }
}

CorrelationPyramid pyramid_of(std::vector<CorrelationTensor> levels, CorrelationSource source) {
  return CorrelationPyramid{std::move(levels), source};
}

TEST(BuildScm, StacksChannelsInOrder) {
  Rng rng(9);
  const auto a = testing::random_features(3, 4, 4, rng);
  const auto b = testing::random_features(3, 4, 4, rng);
  const auto q = testing::random_features(3, 4, 4, rng);
  const auto c = pyramid_of({oracle_correlation(a, q)}, CorrelationSource::kSupportImage);
  const auto s = pyramid_of({oracle_correlation(b, q)}, CorrelationSource::kSupportTarget);
  const auto scm = build_scm(c, s);
  ASSERT_EQ(scm.levels[0].channels, 2);
  const auto stride = scm.levels[0].channel_stride();
  for (std::size_t j = 0; j < stride; ++j) {
    EXPECT_EQ(scm.levels[0].data[j], c.levels[0].data[j]);
    EXPECT_EQ(scm.levels[0].data[stride + j], s.levels[0].data[j]);
  }
  const auto swapped = build_scm(s, c);
  for (std::size_t j = 0; j < stride; ++j) {
    EXPECT_EQ(swapped.levels[0].data[j], scm.levels[0].data[stride + j]);
    EXPECT_EQ(swapped.levels[0].data[stride + j], scm.levels[0].data[j]);
  }
}

TEST(BuildScm, LevelMismatchNamesLevel) {
  CorrelationPyramid c{{CorrelationTensor(1, 2, 2, 2, 2), CorrelationTensor(1, 1, 1, 1, 1)},
                       CorrelationSource::kSupportImage};
  CorrelationPyramid s{{CorrelationTensor(1, 2, 2, 2, 2), CorrelationTensor(1, 1, 2, 1, 1)},
                       CorrelationSource::kSupportTarget};
  try {
    build_scm(c, s);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("level 1"), std::string::npos);
  }
}

Backbone toy_backbone(std::uint64_t seed) {
  ToyBackboneConfig c;
  c.seed = seed;
  return make_toy_backbone(c);
}

TEST(ComputeMsi, FullMaskChannelsBitIdentical) {
  Rng rng(10);
  const auto backbone = toy_backbone(1);
  const auto img = testing::random_image(32, 32, rng);
  const auto query = testing::random_image(32, 32, rng);
  const auto scm = compute_msi(img, MaskBitmap(32, 32, 1), query, backbone);
  ASSERT_EQ(scm.size(), 3);
  for (const auto& level : scm.levels) {
    const auto stride = level.channel_stride();
    for (std::size_t j = 0; j < stride; ++j) ASSERT_EQ(level.data[j], level.data[stride + j]);
  }
}

TEST(ComputeMsi, ZeroMaskChannelOneUniformPerLevel) {
  Rng rng(11);
  const auto backbone = toy_backbone(2);
  const auto scm = compute_msi(testing::random_image(32, 32, rng), MaskBitmap(32, 32, 0),
                               testing::random_image(32, 32, rng), backbone);
  // The zero image maps to constant (here all-zero) support features, so
  // every support position correlates identically with each query position.
  const Image zero(32, 32);
  const auto zero_features = backbone.extract(zero, ImageRole::kTarget);
  for (std::size_t l = 0; l < zero_features.levels.size(); ++l) {
    const auto& f = zero_features.levels[l];
    for (int c = 0; c < f.channels; ++c) {
      for (int p = 0; p < f.spatial(); ++p) EXPECT_EQ(f.data[c * f.spatial() + p], f.data[c * f.spatial()]);
    }
  }
  for (const auto& level : scm.levels) {
    for (int p = 0; p < level.support_size(); ++p) {
      for (int q = 0; q < level.query_size(); ++q) EXPECT_EQ(level.at(1, p, q), level.at(1, 0, 0));
    }
  }
}

TEST(ComputeMsi, RangeAndShape) {
  Rng rng(12);
  const auto backbone = toy_backbone(3);
  const auto scm = compute_msi(testing::random_image(32, 32, rng),
                               testing::random_mask(32, 32, 0.3, rng),
                               testing::random_image(32, 32, rng), backbone);
  const int sides[] = {16, 8, 4};
  for (int l = 0; l < 3; ++l) {
    const auto& t = scm.levels[l];
    EXPECT_EQ(t.channels, 2);
    EXPECT_EQ(t.support_height, sides[l]);
    EXPECT_EQ(t.query_width, sides[l]);
    for (const double v : t.data) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
  EXPECT_EQ(scm.channel_sources,
            (std::vector<CorrelationSource>{CorrelationSource::kSupportImage,
                                            CorrelationSource::kSupportTarget}));
}

FusionInputs inputs_for(const Backbone& backbone, const Image& support, const MaskBitmap& mask,
                        const Image& query) {
  return FusionInputs{backbone.extract(support, ImageRole::kSupport),
                      backbone.extract(mask_image(support, mask), ImageRole::kTarget),
                      backbone.extract(query, ImageRole::kQuery)};
}

TEST(Fuse, CorrelationAddOnEqualInputsDoubles) {
  Rng rng(13);
  const auto backbone = toy_backbone(4);
  const auto in = inputs_for(backbone, testing::random_image(16, 16, rng), MaskBitmap(16, 16, 1),
                             testing::random_image(16, 16, rng));
  const auto c = fuse(FusionMode::kConcat, in);
  const auto sum = fuse(FusionMode::kCorrelationAdd, in);
  for (std::size_t l = 0; l < c.levels.size(); ++l) {
    ASSERT_EQ(sum.levels[l].channels, 1);
    for (std::size_t j = 0; j < sum.levels[l].data.size(); ++j) {
      EXPECT_EQ(sum.levels[l].data[j], 2.0 * c.levels[l].data[j]);
      EXPECT_LE(sum.levels[l].data[j], 2.0);
    }
  }
}

TEST(Fuse, AttentionFrozenAtOneIsC) {
  Rng rng(14);
  const auto backbone = toy_backbone(5);
  const auto in = inputs_for(backbone, testing::random_image(16, 16, rng),
                             testing::random_mask(16, 16, 0.4, rng),
                             testing::random_image(16, 16, rng));
  AttentionGate gate;
  gate.frozen = 1.0;
  const auto att = fuse(FusionMode::kAttention, in, &gate);
  const auto c = fuse(FusionMode::kConcat, in);
  for (std::size_t l = 0; l < c.levels.size(); ++l) {
    for (std::size_t j = 0; j < att.levels[l].data.size(); ++j) {
      EXPECT_EQ(att.levels[l].data[j], c.levels[l].data[j]);
    }
  }
  gate.frozen = 0.0;
  const auto s_only = fuse(FusionMode::kAttention, in, &gate);
  const auto stride = c.levels[0].channel_stride();
  for (std::size_t j = 0; j < stride; ++j) EXPECT_EQ(s_only.levels[0].data[j], c.levels[0].data[stride + j]);
  EXPECT_THROW(fuse(FusionMode::kAttention, in, nullptr), ConfigError);
}

TEST(Fuse, FeatureAddWithZeroTargetIsSifAlone) {
  Rng rng(15);
  const auto backbone = toy_backbone(6);
  const auto in = inputs_for(backbone, testing::random_image(16, 16, rng), MaskBitmap(16, 16, 0),
                             testing::random_image(16, 16, rng));
  const auto added = fuse(FusionMode::kFeatureAdd, in);
  const auto c = fuse(FusionMode::kConcat, in);
  for (std::size_t l = 0; l < c.levels.size(); ++l) {
    for (std::size_t j = 0; j < added.levels[l].data.size(); ++j) {
      EXPECT_EQ(added.levels[l].data[j], c.levels[l].data[j]);
    }
  }
}

TEST(Fuse, UnknownModeNameRejected) {
  EXPECT_THROW(parse_fusion_mode("sum"), ConfigError);
  EXPECT_EQ(parse_fusion_mode("attention"), FusionMode::kAttention);
}

SuperCorrelationMaps sample_scm() {
  Rng rng(16);
  return compute_msi(testing::random_image(32, 32, rng), testing::random_mask(32, 32, 0.3, rng),
                     testing::random_image(32, 32, rng), toy_backbone(7));
}

TEST(CorrelationExport, BinaryHeaderLayout) {
  const auto dir = testing::temp_dir("corr_bin");
  const auto scm = sample_scm();
  write_correlation_binary(dir / "c.bin", scm);
  const std::string bytes = testing::read_file(dir / "c.bin");
  ASSERT_GE(bytes.size(), 16u);
  EXPECT_EQ(bytes.substr(0, 8), "MSICORR1");
  auto u32 = [&](std::size_t off) {
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[off + i]);
    return v;
  };
  EXPECT_EQ(u32(8), 3u);
  EXPECT_EQ(u32(12), 2u);
  std::size_t expected = 16 + 3 * 16;
  for (const auto& level : scm.levels) expected += 4 * level.data.size();
  EXPECT_EQ(bytes.size(), expected);
  EXPECT_EQ(u32(16), 16u);
  EXPECT_EQ(u32(20), 16u);
  EXPECT_EQ(u32(24), 16u);
  EXPECT_EQ(u32(28), 16u);
  // First float is entry (0, 0, 0) of level 0.
  float first = 0.0f;
  std::memcpy(&first, bytes.data() + 64, 4);
  EXPECT_EQ(first, static_cast<float>(scm.levels[0].data[0]));
}

TEST(CorrelationExport, BinaryRoundTripAtFloatPrecision) {
  const auto dir = testing::temp_dir("corr_rt");
  const auto scm = sample_scm();
  write_correlation_binary(dir / "c.bin", scm);
  const auto back = read_correlation_binary(dir / "c.bin");
  ASSERT_EQ(back.size(), scm.size());
  for (int l = 0; l < scm.size(); ++l) {
    ASSERT_TRUE(back.levels[l].same_geometry(scm.levels[l]));
    for (std::size_t j = 0; j < scm.levels[l].data.size(); ++j) {
      EXPECT_EQ(back.levels[l].data[j], static_cast<double>(static_cast<float>(scm.levels[l].data[j])));
    }
  }
}

TEST(CorrelationExport, BadMagicRejected) {
  const auto dir = testing::temp_dir("corr_bad");
  std::ofstream(dir / "c.bin") << "NOTCORR1xxxxxxxx";
  EXPECT_THROW(read_correlation_binary(dir / "c.bin"), DataError);
}

TEST(CorrelationExport, PngTilesPerLevelAndChannel) {
  const auto dir = testing::temp_dir("corr_png");
  const auto scm = sample_scm();
  const auto files = write_correlation_pngs(dir, scm);
  ASSERT_EQ(files.size(), 6u);
  EXPECT_EQ(files[0].filename(), "level0_ch0.png");
  EXPECT_EQ(files[5].filename(), "level2_ch1.png");
  const auto raster = read_png_gray(files[0]);
  EXPECT_EQ(raster.width, 16 * 16);
  EXPECT_EQ(raster.height, 16 * 16);
  // Tile (sy, sx) = (1, 2), query pixel (3, 4).
  const auto& t = scm.levels[0];
  const int p = 1 * 16 + 2;
  const int q = 3 * 16 + 4;
  const int px = 2 * 16 + 4;
  const int py = 1 * 16 + 3;
  EXPECT_EQ(raster.data[static_cast<std::size_t>(py) * raster.width + px],
            static_cast<std::uint8_t>(std::lround(255.0 * t.at(0, p, q))));
}

}  // namespace
}  // namespace msi
