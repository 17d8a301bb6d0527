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

// Parallel kernels against their serial references.

#include <benchmark/benchmark.h>

#include <cmath>

#include "tracelab/mellin.hpp"
#include "tracelab/model.hpp"

using namespace tracelab;

namespace {

struct ConvFixture {
    LayerShape shape = LayerShape::same(32, 16, 32, 32, 3, 3);
    Fmap input;
    std::vector<LayerWeights> weights;

    ConvFixture() {
        NetworkSpec net;
        net.name = "bench";
        LayerSpec l;
        l.shape = shape;
        l.tiling = TilingSpec{8, 16, 16, 16};
        net.layers.push_back(l);
        input = random_input(shape, 1);
        weights = generate_weights(net, 2);
    }
};

const ConvFixture& conv_fixture() {
    static const ConvFixture f;
    return f;
}

void BM_ConvSerial(benchmark::State& st) {
    const auto& f = conv_fixture();
    for (auto _ : st) benchmark::DoNotOptimize(conv_forward_serial(f.shape, f.input, f.weights[0].filters));
}

void BM_ConvParallel(benchmark::State& st) {
    const auto& f = conv_fixture();
    for (auto _ : st) benchmark::DoNotOptimize(conv_forward(f.shape, f.input, f.weights[0].filters));
}

void BM_NsqfSerial(benchmark::State& st) {
    const auto lo = std::uint64_t(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(nsqf_in_range_serial(lo, lo + 1'000'000));
}

void BM_NsqfSieve(benchmark::State& st) {
    const auto lo = std::uint64_t(st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(nsqf_in_range(lo, lo + 1'000'000));
}

const GridPdf& exp_pdf() {
    static const GridPdf g = tabulate([](double x) { return std::exp(-x); }, 1e-4, 40.0, 1u << 14, true);
    return g;
}

void BM_MellinRiemann(benchmark::State& st) {
    const auto ff = mellin_fft(exp_pdf());
    // Riemann on a slice of the FFT's s-grid; time scales linearly in points.
    std::vector<std::complex<double>> s(ff.s.begin(), ff.s.begin() + st.range(0));
    for (auto _ : st) benchmark::DoNotOptimize(mellin_riemann(exp_pdf(), s));
    st.SetItemsProcessed(st.iterations() * st.range(0));
}

void BM_MellinFft(benchmark::State& st) {
    for (auto _ : st) benchmark::DoNotOptimize(mellin_fft(exp_pdf()));
    st.SetItemsProcessed(st.iterations() * (1 << 14));
}

}  // namespace

BENCHMARK(BM_ConvSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ConvParallel)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_NsqfSerial)->Arg(1)->Arg(1'000'000'000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NsqfSieve)->Arg(1)->Arg(1'000'000'000)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_MellinRiemann)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MellinFft)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
