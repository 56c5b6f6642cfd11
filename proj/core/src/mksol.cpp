#include "sldlag/errors.hpp"
#include "sldlag/solver.hpp"

namespace sldlag {

KernelVector mksol_block(MatVec & a, std::vector<Vector> const & Y, Generators const & g)
{
    PrimeModulus const & p = a.modulus();
    std::uint64_t const N = a.dimension();
    if (Y.size() != g.polys.size())
        throw DimensionMismatch("one generator per y vector is required");
    for (auto const & y : Y)
        if (y.size() != N)
            throw DimensionMismatch("y vector length does not match the matrix");
    if (g.is_zero(p))
        throw SolverFailure("zero generator");

    KernelVector kv;
    kv.shift = g.valuation(p);
    std::uint64_t const d = g.degree() - kv.shift;

    /* c_i = sum_j g^(j)_{i+s} y^(j) */
    auto coeff_vector = [&](std::uint64_t i, Vector & out) {
        WideAccumulator acc(p);
        for (std::uint64_t t = 0; t < N; ++t) {
            acc.clear();
            for (std::size_t j = 0; j < Y.size(); ++j) {
                auto const & f = g.polys[j];
                std::uint64_t const idx = i + kv.shift;
                if (idx < f.size() && !p.is_zero(f[idx]))
                    acc.add_product(f[idx], Y[j][t]);
            }
            out[t] = acc.reduce();
        }
    };

    Vector w(N), tmp(N), c(N);
    coeff_vector(d, w);
    for (std::uint64_t i = d; i-- > 0;) {
        a.apply(w, tmp);
        ++kv.horner_spmvs;
        coeff_vector(i, c);
        for (std::uint64_t t = 0; t < N; ++t)
            w[t] = p.add(tmp[t], c[t]);
    }
    if (is_zero_vector(p, w))
        throw SolverFailure("Mksol produced the zero vector");

    /* B^s w = 0 is expected; walk up until the next product vanishes */
    for (std::uint64_t t = 0; t < kv.shift; ++t) {
        a.apply(w, tmp);
        ++kv.tail_spmvs;
        if (is_zero_vector(p, tmp)) {
            kv.w = std::move(w);
            kv.verified = true;
            return kv;
        }
        w.swap(tmp);
    }
    throw SolverFailure("Mksol candidate is not annihilated within " + std::to_string(kv.shift) + " products");
}

KernelVector mksol_scalar(MatVec & a, std::span<Residue const> y, Polynomial const & f)
{
    Generators g;
    g.polys.push_back(f);
    return mksol_block(a, {Vector(y.begin(), y.end())}, g);
}

} // namespace sldlag
