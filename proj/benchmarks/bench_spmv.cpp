#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <tuple>

#include "sldlag/balance.hpp"
#include "sldlag/corpus.hpp"
#include "sldlag/gridmv.hpp"
#include "sldlag/spmatrix.hpp"

using namespace sldlag;

namespace {

/* matrices are cached so every benchmark family pays generation once */
SparseMatrix const & corpus(std::uint64_t n, unsigned bits, bool nfs)
{
    static std::map<std::tuple<std::uint64_t, unsigned, bool>, std::unique_ptr<SparseMatrix>> cache;
    auto & slot = cache[{n, bits, nfs}];
    if (!slot) {
        CorpusProfile prof = nfs ? profile_nfs(n) : profile_ffs(n);
        prof.seed = 1;
        slot = std::make_unique<SparseMatrix>(generate(prof, PrimeModulus::random_prime(bits, 1)));
    }
    return *slot;
}

void BM_SpmvSequential(benchmark::State & state)
{
    auto const & a = corpus(std::uint64_t(state.range(0)), unsigned(state.range(1)), state.range(2) != 0);
    SpmvKernel k(a);
    Rng rng(2);
    Vector u = random_vector(a.modulus(), a.ncols(), rng);
    Vector v(a.nrows());
    for (auto _ : state) {
        k.apply(u, v);
        benchmark::DoNotOptimize(v.data());
    }
    state.counters["nnz/s"] = benchmark::Counter(double(a.nnz()), benchmark::Counter::kIsIterationInvariantRate);
}

void BM_GridIteration(benchmark::State & state)
{
    auto const & a = corpus(10000, 64, false);
    std::uint32_t const side = std::uint32_t(state.range(0));
    GridSpec const g{side, side};
    GridOptions o;
    o.transport = state.range(1) ? TransportKind::Socket : TransportKind::Channel;
    o.contexts = 1;
    GridEngine engine(split(a, balance_permutation(a, g), g), o);
    Rng rng(3);
    engine.load(random_vector(a.modulus(), engine.size(), rng));
    for (auto _ : state) {
        engine.iterate();
        engine.clear_log();
    }
    state.SetLabel(engine.transport_name());
}

void BM_RowDotRns(benchmark::State & state)
{
    auto const p = PrimeModulus::random_prime(unsigned(state.range(0)), 4);
    Rng rng(5);
    Vector a = random_vector(p, 128, rng), b = random_vector(p, 128, rng);
    for (auto _ : state)
        benchmark::DoNotOptimize(dot(p, a, b));
}

} // namespace

BENCHMARK(BM_SpmvSequential)
    ->ArgNames({"n", "bits", "nfs"})
    ->Args({10000, 64, 0})
    ->Args({10000, 200, 0})
    ->Args({10000, 512, 0})
    ->Args({10000, 200, 1})
    ->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridIteration)->ArgNames({"side", "socket"})->Args({1, 0})->Args({2, 0})->Args({2, 1})->Unit(
    benchmark::kMillisecond);
BENCHMARK(BM_RowDotRns)->Arg(64)->Arg(200)->Arg(1024);

BENCHMARK_MAIN();
