/*
 * Copyright 2026 The tracelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include "tracelab/binpack.hpp"
#include "tracelab/error.hpp"

using namespace tracelab;

namespace {

CompressedTile raw_tile(std::uint32_t id, std::vector<std::uint8_t> bytes) {
    CompressedTile t;
    t.id = id;
    t.raw_size = bytes.size();
    t.comp_size = bytes.size();
    t.payload = std::move(bytes);
    return t;
}

NoiseSpec fixed_noise(double alpha) {
    NoiseSpec n;
    n.alpha = alpha;
    n.support_R = 0;
    return n;
}

struct TileSet {
    std::vector<std::vector<std::uint8_t>> raw;
    std::vector<CompressedTile> tiles;
};

// Dummies are spliced into the raw bytes before compression, as on the device.
TileSet random_tiles(Rng& rng, std::size_t max_tiles, std::size_t max_len, bool dummies) {
    const auto n = std::uniform_int_distribution<std::size_t>(0, max_tiles)(rng);
    TileSet set;
    std::uniform_int_distribution<int> byte(0, 255);
    for (std::size_t i = 0; i < n; ++i) {
        const auto len = std::uniform_int_distribution<std::size_t>(1, max_len)(rng);
        std::vector<std::uint8_t> raw(len);
        for (auto& b : raw) b = std::uint8_t(byte(rng) < 160 ? 0 : byte(rng));
        CompressedTile t;
        if (dummies && i % 3 == 0) {
            auto d = inject_dummy(raw, std::int64_t(len % 97), rng);
            t = compress_tile(d.bytes, std::uint32_t(i));
            t.dummy_spans = d.spans;
        } else {
            t = compress_tile(raw, std::uint32_t(i));
        }
        set.raw.push_back(std::move(raw));
        set.tiles.push_back(std::move(t));
    }
    return set;
}

void expect_roundtrip(const TileSet& set, const PackResult& packed, const BinConfig& cfg) {
    for (const auto& b : packed.bins) ASSERT_EQ(b.image.size(), cfg.bin_size);
    auto back = unpack_bins(packed.bins, cfg);
    ASSERT_EQ(back.size(), set.tiles.size());
    for (std::size_t i = 0; i < set.tiles.size(); ++i) {
        EXPECT_EQ(back[i].id, set.tiles[i].id);
        ASSERT_EQ(back[i].bytes, set.raw[i]) << "tile " << i;
    }
}

TileSet compressed(std::vector<std::vector<std::uint8_t>> raws) {
    TileSet set;
    for (std::size_t i = 0; i < raws.size(); ++i) set.tiles.push_back(compress_tile(raws[i], std::uint32_t(i)));
    set.raw = std::move(raws);
    return set;
}

}  // namespace

TEST(Binpack, GoldenImage) {
    BinConfig cfg{64, 2, 8};
    std::vector<std::uint8_t> a(10), b(30);
    for (int i = 0; i < 10; ++i) a[i] = std::uint8_t(1 + i);
    for (int i = 0; i < 30; ++i) b[i] = std::uint8_t(101 + i);
    std::vector<CompressedTile> tiles{raw_tile(7, a), raw_tile(9, b)};
    Rng rng(1);
    auto packed = pack_bins(tiles, cfg, fixed_noise(4), rng);

    std::ifstream in(TRACELAB_SOURCE_DIR "/tests/data/bin_golden.bin", std::ios::binary);
    ASSERT_TRUE(in.good());
    std::vector<std::uint8_t> golden{std::istreambuf_iterator<char>(in), {}};
    std::vector<std::uint8_t> got;
    for (const auto& bin : packed.bins) got.insert(got.end(), bin.image.begin(), bin.image.end());
    EXPECT_EQ(got, golden);

    ASSERT_EQ(packed.bins.size(), 2u);
    EXPECT_EQ(packed.bins[1].table[0].flags, BinEntry::kContinuation);
    EXPECT_EQ(read_bin_table(packed.bins[0].image, cfg), packed.bins[0].table);
}

TEST(Binpack, TableOverheadForcesSpill) {
    // Three 20,000 B tiles cannot share one 60 kB bin once the table is added.
    BinConfig cfg;
    std::vector<CompressedTile> tiles;
    for (std::uint32_t i = 0; i < 3; ++i) tiles.push_back(raw_tile(i, std::vector<std::uint8_t>(20000, 1)));
    Rng rng(1);
    auto packed = pack_bins(tiles, cfg, fixed_noise(0), rng);
    EXPECT_EQ(packed.bins.size(), 2u);
    EXPECT_EQ(packed.bins[0].table.size(), 3u + 1u);
    EXPECT_EQ(packed.bins[1].table[0].flags, BinEntry::kContinuation);
}

TEST(Binpack, ZeroTilesZeroBins) {
    BinConfig cfg;
    Rng rng(1);
    auto packed = pack_bins({}, cfg, fixed_noise(100), rng);
    EXPECT_TRUE(packed.bins.empty());
    EXPECT_EQ(packed.report.bins_out, 0u);
}

TEST(Binpack, BinCountGrowsWithAlpha) {
    BinConfig cfg{4096, 8, 8};
    std::vector<PackItem> items;
    for (std::uint32_t i = 0; i < 200; ++i) items.push_back(PackItem{i, 500 + 37 * (i % 11), false, false});
    std::size_t prev = 0;
    for (double alpha : {0.0, 256.0, 1024.0, 2048.0, 3000.0}) {
        NoiseSampler n(fixed_noise(alpha), Rng(1));
        const auto bins = plan_bins(items, cfg, n).size();
        EXPECT_GT(bins, prev) << alpha;
        prev = bins;
    }
}

TEST(Binpack, KappaLimitsStarts) {
    BinConfig cfg{60000, 4, 8};
    std::vector<PackItem> items;
    for (std::uint32_t i = 0; i < 40; ++i) items.push_back(PackItem{i, 10, false, false});
    NoiseSampler n(fixed_noise(0), Rng(1));
    auto plans = plan_bins(items, cfg, n);
    EXPECT_EQ(plans.size(), 10u);
    for (const auto& p : plans) EXPECT_LE(p.segments.size(), 4u);
}

TEST(Binpack, GroupStartOpensBin) {
    BinConfig cfg;
    std::vector<PackItem> items{{0, 10, false, false}, {1, 10, false, true}, {2, 10, false, false}};
    NoiseSampler n(fixed_noise(0), Rng(1));
    auto plans = plan_bins(items, cfg, n);
    ASSERT_EQ(plans.size(), 2u);
    EXPECT_EQ(plans[1].segments[0].item, 1u);
}

TEST(Binpack, RoundtripRandomTileSets) {
    BinConfig cfg{4096, 8, 8};
    NoiseSpec noise;
    noise.alpha = 200;
    noise.support_R = 400;
    noise.sigma2_max = 200 * 200;
    Rng rng(11);
    for (int round = 0; round < 200; ++round) {
        auto set = random_tiles(rng, 30, 3000, false);
        expect_roundtrip(set, pack_bins(set.tiles, cfg, noise, rng), cfg);
    }
}

TEST(Binpack, RoundtripSplitAcrossThreeBins) {
    BinConfig cfg{1024, 8, 8};
    Rng rng(12);
    std::vector<std::uint8_t> big(2560);
    for (auto& b : big) b = std::uint8_t(rng());
    auto set = compressed({big});
    auto packed = pack_bins(set.tiles, cfg, fixed_noise(16), rng);
    EXPECT_GE(packed.bins.size(), 3u);
    for (std::size_t i = 1; i < packed.bins.size(); ++i)
        EXPECT_EQ(packed.bins[i].table[0].flags & BinEntry::kContinuation, BinEntry::kContinuation);
    expect_roundtrip(set, packed, cfg);
}

TEST(Binpack, RoundtripWithDummies) {
    BinConfig cfg{2048, 8, 8};
    NoiseSpec noise;
    noise.alpha = 64;
    noise.support_R = 128;
    noise.sigma2_max = 64 * 64;
    Rng rng(13);
    for (int round = 0; round < 100; ++round) {
        auto set = random_tiles(rng, 20, 2000, true);
        expect_roundtrip(set, pack_bins(set.tiles, cfg, noise, rng), cfg);
    }
}

TEST(Binpack, CorruptTableDetected) {
    BinConfig cfg{64, 2, 8};
    std::vector<CompressedTile> tiles{raw_tile(1, std::vector<std::uint8_t>(20, 3))};
    Rng rng(1);
    auto packed = pack_bins(tiles, cfg, fixed_noise(4), rng);
    auto image = packed.bins[0].image;
    image[0] = 0xFF;
    EXPECT_THROW(read_bin_table(image, cfg), IntegrityError);
    image.pop_back();
    EXPECT_THROW(read_bin_table(image, cfg), IntegrityError);
}

TEST(Binpack, ConfigValidation) {
    EXPECT_THROW((BinConfig{16, 8, 8}.validate()), ConfigError);
}
