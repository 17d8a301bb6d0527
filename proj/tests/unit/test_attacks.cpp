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

#include "oracles.hpp"
#include "tracelab/attacks.hpp"
#include "tracelab/scenario.hpp"

using namespace tracelab;

namespace {

const NetworkSpec& vgg() {
    static const NetworkSpec s = load_network(TRACELAB_SOURCE_DIR "/configs/vgg16-32.json");
    return s;
}

const Workload& vgg_workload() {
    static const Workload w = make_workload(vgg(), random_input(vgg().layers[0].shape, 1), 7);
    return w;
}

NetworkSpec single(int K, int C, int H, int R) {
    NetworkSpec n;
    n.name = "single";
    LayerSpec s;
    s.shape = LayerShape::same(K, C, H, H, R, R);
    s.tiling = TilingSpec{K, C, H, H};
    n.layers.push_back(s);
    return n;
}

NeuroplugKey desk_key() {
    NeuroplugKey k;
    k.bins.bin_size = 1200;
    k.noise.alpha = 160;
    k.noise.support_R = 320;
    k.noise.sigma2_max = 160.0 * 160.0;
    k.mode = CompressMode::sampled;
    return k;
}

}  // namespace

TEST(Segment, TwoLayersTwoSegments) {
    NetworkSpec net = single(4, 3, 8, 3);
    LayerSpec l2;
    l2.shape = LayerShape::same(6, 4, 8, 8, 3, 3);
    l2.tiling = TilingSpec{6, 4, 4, 4};
    net.layers.push_back(l2);
    auto tr = baseline_trace(net, random_input(net.layers[0].shape, 1), 7);
    EXPECT_EQ(segment_layers(tr.events).size(), 2u);
}

TEST(Ss, BaselineEstimatesEqualTruth) {
    auto tr = baseline_trace(vgg_workload());
    auto rep = ss_attack({tr.events});
    ASSERT_EQ(rep.layers.size(), tr.layers.size());
    for (std::size_t l = 0; l < tr.layers.size(); ++l) {
        EXPECT_EQ(rep.layers[l].volume, double(tr.layers[l].ifmap_bytes)) << l;
        EXPECT_EQ(rep.layers[l].write_count, tr.layers[l].ofmap_writes) << l;
    }
}

TEST(Ss, RecoversTrueWritesUnderDummyWrites) {
    AdditiveModel m;
    m.kind = AdditiveKind::dummy_writes;
    m.layers = {0};
    auto tr = additive_cm_trace(vgg_workload(), m, 3);
    auto rep = ss_attack({tr.events});
    ASSERT_EQ(rep.layers.size(), tr.layers.size());
    EXPECT_EQ(rep.layers[0].write_count, 1568u);
    EXPECT_EQ(rep.removed_writes, 784u);
}

TEST(Kk, ConstMeanLeakGivesExactVolume) {
    auto net = load_network(TRACELAB_SOURCE_DIR "/configs/vgg16-224-l1.json");
    auto w = make_workload(net, random_input(net.layers[0].shape, 1), 7);
    AdditiveModel m;
    m.kind = AdditiveKind::const_mean;
    std::vector<EventStream> runs;
    for (int r = 0; r < 200; ++r) runs.push_back(additive_cm_trace(w, m, 100 + r).events);
    auto ss = ss_attack(runs);
    EXPECT_NE(ss.layers[0].volume, 150528.0);
    auto kk = kk_attack(ss, {{"mean", 22400}, {"jitter_min", -512}});
    EXPECT_EQ(kk.layers[0].volume, 150528.0);
}

TEST(Kk, EmptyLeakIsIdentity) {
    auto tr = baseline_trace(vgg_workload());
    auto ss = ss_attack({tr.events});
    auto kk = kk_attack(ss, {});
    ASSERT_EQ(kk.layers.size(), ss.layers.size());
    for (std::size_t l = 0; l < ss.layers.size(); ++l) EXPECT_EQ(kk.layers[l].volume, ss.layers[l].volume);
}

TEST(Si, StripsLayerDividerFakes) {
    AdditiveModel m;
    m.kind = AdditiveKind::layer_divider;
    auto tr = additive_cm_trace(vgg_workload(), m, 5);
    EXPECT_GT(segment_layers(tr.events).size(), tr.layers.size());
    const auto drop = si_filter(tr.events);
    for (std::size_t i = 0; i < tr.events.size(); ++i)
        if (tr.events[i].op == Op::write && tr.truth[i].fake) EXPECT_TRUE(drop[i]) << i;
    auto rep = si_attack({tr.events}, true);
    ASSERT_EQ(rep.layers.size(), tr.layers.size());
    for (std::size_t l = 0; l < tr.layers.size(); ++l) {
        EXPECT_EQ(rep.layers[l].volume, double(tr.layers[l].ifmap_bytes)) << l;
        EXPECT_EQ(rep.layers[l].write_count, tr.layers[l].ofmap_writes) << l;
    }
}

TEST(Si, NsqfPriorPrunes) {
    AttackReport rep;
    LayerEstimate e;
    e.volume = 10;
    rep.layers.push_back(e);
    apply_nsqf_prior(rep, NsqfPrior{8, 12});
    std::vector<std::uint64_t> want;
    for (std::uint64_t n = 8; n <= 12; ++n)
        if (oracle::nsqf(n)) want.push_back(n);
    EXPECT_EQ(rep.layers[0].candidates, want);
    EXPECT_EQ(rep.layers[0].candidate_count, 3u);
}

TEST(Si, NeuroplugDigestsAlwaysChange) {
    NeuroplugSession s(vgg_workload(), desk_key());
    std::vector<EventStream> runs{s.run(1).events, s.run(2).events};
    auto rep = si_attack(runs, true);
    EXPECT_EQ(rep.removed_writes, 0u);
}

TEST(Neuroplug, SsEstimatesMissTheTruth) {
    NeuroplugSession s(vgg_workload(), desk_key());
    std::vector<EventStream> runs;
    for (int r = 0; r < 50; ++r) runs.push_back(s.run(std::uint64_t(r)).events);
    auto rep = ss_attack(runs);
    const auto truth = baseline_trace(vgg_workload()).layers;
    // Leaking every hardwired constant does not recover the key-resident parts.
    LeakedConstants leaked{{"bin_size", 1200}, {"kappa", 8}};
    auto kk = kk_attack(rep, leaked);
    const std::size_t n = std::min(kk.layers.size(), truth.size());
    int exact = 0;
    for (std::size_t l = 0; l < n; ++l) exact += kk.layers[l].volume == double(truth[l].ifmap_bytes);
    EXPECT_EQ(exact, 0);
    for (const auto& e : runs[0]) ASSERT_EQ(e.size, 1200u);
}

TEST(Huffduff, ToySparseMatchesConvOracle) {
    auto net = load_network(TRACELAB_SOURCE_DIR "/configs/toy-sparse.json");
    auto wts = generate_weights(net, 7);
    TraceOptions sp;
    sp.sparse = true;
    HuffduffQuery q;
    q.first = net.layers[0].shape;
    auto rep = huffduff_attack(q, [&](const Fmap& in) {
        return baseline_trace(make_workload(net, wts, in), sp).events;
    });
    ASSERT_TRUE(rep.success);
    EXPECT_EQ(rep.layers[0].filter_cols, 3);

    // Layer-1 output NNZ by brute force; write volume = NNZ + a constant.
    const auto& l = net.layers[0].shape;
    ASSERT_EQ(rep.series.size(), std::size_t(l.W));
    std::vector<double> nnz;
    for (int k = 0; k < l.W; ++k) {
        Fmap in(l.C, l.H, l.W);
        in.at(0, 0, k) = 1;
        nnz.push_back(double(oracle::nnz(oracle::conv_relu_pool(l, in, wts[0].filters))));
    }
    for (int k = 0; k < l.W; ++k) EXPECT_EQ(rep.series[k] - nnz[k], rep.series[0] - nnz[0]) << k;
    EXPECT_EQ(plateau_half_width(nnz), 1);
}

TEST(Huffduff, RecoversEveryOddWidth) {
    auto base = load_network(TRACELAB_SOURCE_DIR "/configs/toy-sparse.json");
    TraceOptions sp;
    sp.sparse = true;
    for (int S : {1, 3, 5, 7}) {
        auto net = with_first_filter(base, S);
        auto wts = generate_weights(net, 7 + S);
        HuffduffQuery q;
        q.first = net.layers[0].shape;
        auto rep = huffduff_attack(q, [&](const Fmap& in) {
            return baseline_trace(make_workload(net, wts, in), sp).events;
        });
        EXPECT_EQ(rep.layers[0].filter_cols, S);
        if (S == 1) {
            for (double v : rep.series) EXPECT_EQ(v, rep.series[0]);
        }
    }
}

TEST(Huffduff, NeuroplugHidesBoundary) {
    auto net = load_network(TRACELAB_SOURCE_DIR "/configs/toy-sparse.json");
    auto wts = generate_weights(net, 10);
    TraceOptions sp;
    sp.sparse = true;
    HuffduffQuery q;
    q.first = net.layers[0].shape;
    std::uint64_t run = 0;
    auto rep = huffduff_attack(q, [&](const Fmap& in) {
        auto w = make_workload(net, wts, in);
        return NeuroplugSession(w, desk_key(), sp).run(++run).events;
    });
    EXPECT_FALSE(rep.success);
    EXPECT_EQ(rep.layers[0].filter_cols, 0);
}

TEST(Huffduff, DenseTracesRejected) {
    auto net = single(4, 1, 16, 3);
    auto wts = generate_weights(net, 1);
    HuffduffQuery q;
    q.first = net.layers[0].shape;
    q.sparse_trace = false;
    EXPECT_THROW(huffduff_attack(q, [&](const Fmap& in) {
                     return baseline_trace(make_workload(net, wts, in)).events;
                 }),
                 InapplicableError);
}

TEST(Craft, Policies) {
    auto l = LayerShape::same(8, 1, 64, 64, 3, 3);
    auto row = craft_inputs(CraftPolicy::impulse_row, l, 64, 1);
    ASSERT_EQ(row.tensors.size(), 64u);
    for (int k = 0; k < 64; ++k) {
        EXPECT_EQ(row.tensors[k].nnz(), 1u);
        EXPECT_EQ(row.tensors[k].at(0, 0, k), 1);
        for (int j = 0; j < k; ++j) EXPECT_FALSE(row.tensors[k] == row.tensors[j]);
    }
    auto col = craft_inputs(CraftPolicy::impulse_col, l, 64, 1);
    EXPECT_EQ(col.tensors[5].at(0, 5, 0), 1);
    auto sp0 = craft_inputs(CraftPolicy::speckle, l, 2, 3, 0);
    for (const auto& t : sp0.tensors) EXPECT_EQ(t, random_input(l, 3));
    auto sp2 = craft_inputs(CraftPolicy::speckle, l, 2, 3, 2);
    for (std::size_t i = 0; i < sp2.tensors[0].size(); ++i)
        EXPECT_EQ(sp2.tensors[0].values()[i] != 0, sp0.tensors[0].values()[i] != 0);
    EXPECT_THROW(parse_craft_policy("zigzag"), ConfigError);
}

TEST(Reverse, ToyLayerUnique) {
    auto net = single(4, 3, 8, 3);
    auto tr = baseline_trace(net, random_input(net.layers[0].shape, 1), 7);
    auto rep = reverse_engg_attack(tr.events);
    ASSERT_EQ(rep.layers.size(), 1u);
    ASSERT_EQ(rep.layers[0].candidate_count, 1u);

    // Oracle: enumerate (C, H, K, R, pool) with every dimension <= 16.
    const std::uint64_t in = 3 * 8 * 8, out = 4 * 8 * 8, w = 4 * 3 * 9;
    std::vector<std::vector<std::uint64_t>> sols;
    for (std::uint64_t C = 1; C <= 16; ++C)
        for (std::uint64_t H = 1; H <= 16; ++H)
            for (std::uint64_t K = 1; K <= 16; ++K)
                for (std::uint64_t R = 1; R <= 11; R += 2)
                    for (std::uint64_t p : {1ull, 2ull})
                        if (H % p == 0 && C * H * H == in && K * (H / p) * (H / p) == out &&
                            K * C * R * R == w)
                            sols.push_back({C, H, K, R, p});
    ASSERT_EQ(sols.size(), 1u);
    EXPECT_EQ(rep.layers[0].candidates, sols[0]);
}

TEST(Reverse, BinsInflateCandidates) {
    auto base = reverse_engg_attack(baseline_trace(vgg_workload()).events);
    NeuroplugSession s(vgg_workload(), desk_key());
    auto np = reverse_engg_attack(s.run(1).events);
    std::uint64_t b = 0, n = 0;
    for (const auto& l : base.layers) b += l.candidate_count;
    for (const auto& l : np.layers) n += l.candidate_count;
    EXPECT_TRUE(base.success);
    EXPECT_FALSE(np.success);
    EXPECT_GE(n, 10 * b);
}
