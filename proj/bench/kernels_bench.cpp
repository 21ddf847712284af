// Serial reference kernels against their OpenMP counterparts, plus the
// screened solve that dominates a time step.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "dsmks/helmholtz.hpp"
#include "dsmks/kernels.hpp"

namespace k = dsmks::kernels;

namespace {

struct Data {
    k::Shape shape;
    std::vector<double> a, b, out;
    explicit Data(int n) : shape{2, n, n, 1.0 / n, 1.0 / n}, a(shape.size()), b(shape.size()), out(shape.size()) {
        std::mt19937_64 rng(7);
        std::uniform_real_distribution<double> d(0.0, 1.0);
        for (auto& x : a) x = d(rng);
        for (auto& x : b) x = d(rng);
    }
};

template <auto Fn>
void laplacian(benchmark::State& st) {
    Data d(static_cast<int>(st.range(0)));
    for (auto _ : st) {
        Fn(d.shape, d.a, d.out);
        benchmark::DoNotOptimize(d.out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(d.shape.size()));
}

template <auto Fn>
void laplacian_product(benchmark::State& st) {
    Data d(static_cast<int>(st.range(0)));
    for (auto _ : st) {
        Fn(d.shape, d.a, d.b, d.out);
        benchmark::DoNotOptimize(d.out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(d.shape.size()));
}

template <auto Fn>
void keller_segel(benchmark::State& st) {
    Data d(static_cast<int>(st.range(0)));
    for (auto _ : st) {
        Fn(d.shape, 1.0, d.a, d.b, d.out);
        benchmark::DoNotOptimize(d.out.data());
    }
    st.SetItemsProcessed(st.iterations() * static_cast<long>(d.shape.size()));
}

template <auto Fn>
void sum(benchmark::State& st) {
    Data d(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(Fn(d.a));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(d.shape.size()));
}

template <auto Fn>
void cross_energy(benchmark::State& st) {
    Data d(static_cast<int>(st.range(0)));
    for (auto _ : st) benchmark::DoNotOptimize(Fn(d.shape, d.a, d.b));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(d.shape.size()));
}

void screened_solve(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const double len[2] = {1.0, 1.0};
    const dsmks::Grid g = dsmks::make_grid(2, n, len);
    const dsmks::ScreenedSolver solver(g);
    Data d(n);
    const dsmks::Field rhs(g, d.a);
    for (auto _ : st) benchmark::DoNotOptimize(solver.solve(rhs, 1.0, 0.02));
    st.SetItemsProcessed(st.iterations() * static_cast<long>(g.size()));
}

}  // namespace

#define SIZES ->Arg(128)->Arg(512)->Arg(1024)

BENCHMARK(laplacian<k::serial::laplacian>) SIZES;
BENCHMARK(laplacian<k::omp::laplacian>) SIZES;
BENCHMARK(laplacian_product<k::serial::laplacian_product>) SIZES;
BENCHMARK(laplacian_product<k::omp::laplacian_product>) SIZES;
BENCHMARK(keller_segel<k::serial::keller_segel_rhs>) SIZES;
BENCHMARK(keller_segel<k::omp::keller_segel_rhs>) SIZES;
BENCHMARK(sum<k::serial::sum>) SIZES;
BENCHMARK(sum<k::omp::sum>) SIZES;
BENCHMARK(cross_energy<k::serial::face_cross_energy>) SIZES;
BENCHMARK(cross_energy<k::omp::face_cross_energy>) SIZES;
BENCHMARK(screened_solve)->Arg(128)->Arg(256)->Arg(512);

BENCHMARK_MAIN();
