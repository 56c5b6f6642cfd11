#include "sldlag/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "sldlag/errors.hpp"

namespace sldlag {

namespace {

/* Walker/Vose alias table for O(1) draws from a fixed distribution. */
class AliasTable {
  public:
    explicit AliasTable(std::vector<double> const & w)
        : prob_(w.size()), alias_(w.size())
    {
        std::size_t const n = w.size();
        double const total = std::accumulate(w.begin(), w.end(), 0.0);
        std::vector<double> scaled(n);
        std::vector<std::uint32_t> small, large;
        for (std::size_t i = 0; i < n; ++i) {
            scaled[i] = w[i] * double(n) / total;
            (scaled[i] < 1.0 ? small : large).push_back(std::uint32_t(i));
        }
        while (!small.empty() && !large.empty()) {
            std::uint32_t const s = small.back();
            small.pop_back();
            std::uint32_t const l = large.back();
            prob_[s] = scaled[s];
            alias_[s] = l;
            scaled[l] = (scaled[l] + scaled[s]) - 1.0;
            if (scaled[l] < 1.0) {
                large.pop_back();
                small.push_back(l);
            }
        }
        for (auto i : large)
            prob_[i] = 1.0, alias_[i] = i;
        for (auto i : small)
            prob_[i] = 1.0, alias_[i] = i;
    }

    std::uint32_t draw(Rng & rng) const
    {
        auto const i = std::uint32_t(rng.below(prob_.size()));
        return rng.uniform() < prob_[i] ? i : alias_[i];
    }

  private:
    std::vector<double> prob_;
    std::vector<std::uint32_t> alias_;
};

} // namespace

CorpusProfile profile_ffs(std::uint64_t n)
{
    CorpusProfile p;
    p.n = n;
    p.gamma = 100;
    p.pm1_fraction = 0.90;
    p.dense_cols = 0;
    return p;
}

CorpusProfile profile_nfs(std::uint64_t n)
{
    CorpusProfile p;
    p.n = n;
    p.gamma = 150;
    p.pm1_fraction = 0.90;
    p.dense_cols = 5;
    return p;
}

void validate_profile(CorpusProfile const & prof)
{
    if (!(prof.gamma >= 3))
        throw InvalidArgument("profile gamma must be at least 3");
    if (prof.planted_kernel_cols < 1)
        throw InvalidArgument("at least one planted kernel column is required");
    if (!(double(prof.n) > 10 * prof.gamma))
        throw InvalidArgument("profile size must exceed 10 * gamma");
    if (prof.n > std::uint64_t(UINT32_MAX))
        throw InvalidArgument("profile size exceeds 32-bit column indices");
    if (!(prof.pm1_fraction >= 0 && prof.pm1_fraction <= 1))
        throw InvalidArgument("pm1 fraction must lie in [0, 1]");
    if (!(prof.density_decay > 0))
        throw InvalidArgument("density decay must be positive");
    if (prof.small_coeff_max < 2)
        throw InvalidArgument("small coefficient range must include 2");
    if (prof.dense_cols + 2 * prof.planted_kernel_cols + 1 > prof.n / 2)
        throw InvalidArgument("too many dense or planted columns for the size");
}

Vector PlantedColumn::witness(PrimeModulus const & p, std::uint64_t n) const
{
    Vector w(n, p.zero());
    w[a] = alpha;
    w[b] = beta;
    w[planted] = p.neg(p.one());
    return w;
}

Corpus generate_corpus(CorpusProfile const & prof, PrimeModulus const & ell)
{
    validate_profile(prof);
    PrimeModulus const & p = ell;
    std::uint64_t const n = prof.n;
    std::uint64_t const dense = prof.dense_cols;
    std::uint64_t const sparse = n - dense;

    /* 1. sparse pattern with small integer coefficients */
    std::vector<double> weights(sparse);
    for (std::uint64_t j = 0; j < sparse; ++j)
        weights[j] = std::pow(double(j + 1), -prof.density_decay);
    AliasTable const table(weights);

    Rng rng(derive_seed(prof.seed, 1));
    double const row_mean = std::max(1.0, prof.gamma - double(dense));
    double const row_sd = 0.1 * prof.gamma;
    /* dense entries are never +-1, so the sparse part over-represents the
     * unit classes to keep the overall fraction on target */
    double const pm1_prob = std::min(1.0, prof.pm1_fraction * prof.gamma / row_mean);
    std::vector<std::uint64_t> row_ptr{0};
    std::vector<std::uint32_t> cols;
    std::vector<std::int32_t> vals;
    cols.reserve(std::size_t(double(n) * row_mean * 1.05));
    vals.reserve(cols.capacity());
    std::vector<std::uint64_t> stamp(sparse, UINT64_MAX);
    std::vector<std::uint32_t> row;
    for (std::uint64_t i = 0; i < n; ++i) {
        double const drawn = std::round(rng.normal(row_mean, row_sd));
        auto const w = std::uint64_t(std::clamp(drawn, 1.0, double(sparse)));
        row.clear();
        while (row.size() < w) {
            std::uint32_t const c = table.draw(rng);
            if (stamp[c] == i)
                continue;
            stamp[c] = i;
            row.push_back(c);
        }
        std::sort(row.begin(), row.end());
        for (auto c : row) {
            std::int32_t v;
            if (rng.uniform() < pm1_prob) {
                v = rng.below(2) ? 1 : -1;
            } else {
                v = std::int32_t(2 + rng.below(std::uint64_t(prof.small_coeff_max) - 1));
                if (rng.below(2))
                    v = -v;
            }
            cols.push_back(c);
            vals.push_back(v);
        }
        row_ptr.push_back(cols.size());
    }

    /* 2. dense columns */
    Rng vrng(derive_seed(prof.seed, 2));
    std::vector<Vector> dense_vals(dense);
    for (auto & d : dense_vals)
        d = random_vector(p, n, vrng);

    /* 3. planted columns: distinct targets, sources drawn from the rest */
    Rng prng(derive_seed(prof.seed, 3));
    std::vector<PlantedColumn> planted;
    std::vector<bool> used(n, false);
    std::uint64_t sparse_planted = prof.planted_kernel_cols;
    if (dense >= 2) {
        /* the last dense column becomes a combination of the first dense
         * column and a sparse one */
        PlantedColumn pc;
        pc.planted = n - 1;
        pc.a = sparse;
        do
            pc.b = prng.below(sparse);
        while (used[pc.b]);
        pc.alpha = p.random_nonzero(prng);
        pc.beta = p.random_nonzero(prng);
        used[pc.planted] = used[pc.a] = used[pc.b] = true;
        planted.push_back(pc);
        --sparse_planted;
    }
    std::vector<std::uint64_t> targets;
    while (targets.size() < sparse_planted) {
        std::uint64_t const c = prng.below(sparse);
        if (used[c])
            continue;
        used[c] = true;
        targets.push_back(c);
    }
    std::vector<bool> is_target(n, false);
    for (auto t : targets)
        is_target[t] = true;
    for (auto t : targets) {
        PlantedColumn pc;
        pc.planted = t;
        for (std::uint64_t * s : {&pc.a, &pc.b}) {
            do
                *s = prng.below(sparse);
            while (is_target[*s] || *s == t || (s == &pc.b && *s == pc.a) ||
                   (dense >= 2 && *s == planted.front().planted));
        }
        pc.alpha = p.random_nonzero(prng);
        pc.beta = p.random_nonzero(prng);
        planted.push_back(pc);
    }

    if (dense >= 2) {
        PlantedColumn const & pc = planted.front();
        Vector & target = dense_vals[dense - 1];
        Vector const & src = dense_vals[0];
        for (std::uint64_t i = 0; i < n; ++i) {
            Residue sb = p.zero();
            for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k)
                if (cols[k] == pc.b)
                    sb = p.from_i64(vals[k]);
            target[i] = p.add(p.mul(pc.alpha, src[i]), p.mul(pc.beta, sb));
        }
    }

    /* 4. assemble rows, replacing planted sparse columns */
    std::size_t const first_sparse_plant = dense >= 2 ? 1 : 0;
    SparseMatrix a(p, n, n, dense);
    std::vector<Entry> out;
    std::vector<Residue> va(planted.size()), vb(planted.size());
    for (std::uint64_t i = 0; i < n; ++i) {
        for (std::size_t q = first_sparse_plant; q < planted.size(); ++q) {
            va[q] = p.zero();
            vb[q] = p.zero();
        }
        out.clear();
        for (auto k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            std::uint32_t const c = cols[k];
            for (std::size_t q = first_sparse_plant; q < planted.size(); ++q) {
                if (planted[q].a == c)
                    va[q] = p.from_i64(vals[k]);
                if (planted[q].b == c)
                    vb[q] = p.from_i64(vals[k]);
            }
            if (is_target[c])
                continue;
            Coefficient coeff = vals[k] == 1    ? Coefficient::plus_one()
                                : vals[k] == -1 ? Coefficient::minus_one()
                                                : Coefficient::small_value(vals[k]);
            out.push_back({c, coeff});
        }
        for (std::size_t q = first_sparse_plant; q < planted.size(); ++q) {
            Residue const v = p.add(p.mul(planted[q].alpha, va[q]), p.mul(planted[q].beta, vb[q]));
            if (!p.is_zero(v))
                out.push_back({std::uint32_t(planted[q].planted), classify(p, v)});
        }
        std::sort(out.begin(), out.end(),
                  [](Entry const & x, Entry const & y) { return x.col < y.col; });
        a.append_row(out);
    }
    for (std::uint64_t d = 0; d < dense; ++d)
        a.set_dense(d, std::move(dense_vals[d]));
    return {std::move(a), std::move(planted)};
}

SparseMatrix generate(CorpusProfile const & prof, PrimeModulus const & ell)
{
    return generate_corpus(prof, ell).matrix;
}

} // namespace sldlag
