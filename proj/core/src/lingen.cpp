#include <algorithm>
#include <numeric>

#include "sldlag/errors.hpp"
#include "sldlag/solver.hpp"

namespace sldlag {

Polynomial berlekamp_massey(std::span<Residue const> seq, PrimeModulus const & p, bool * all_zero)
{
    /* connection polynomial C with c_0 = 1 and sum_i c_i a_{k-i} = 0 */
    Polynomial C{p.one()}, B{p.one()};
    std::size_t L = 0, shift = 1;
    Residue b = p.one();
    bool nonzero = false;
    for (std::size_t k = 0; k < seq.size(); ++k) {
        nonzero |= !p.is_zero(seq[k]);
        WideAccumulator acc(p);
        acc.add(seq[k]);
        for (std::size_t i = 1; i <= L && i < C.size(); ++i)
            acc.add_product(C[i], seq[k - i]);
        Residue const d = acc.reduce();
        if (p.is_zero(d)) {
            ++shift;
            continue;
        }
        Residue const coef = p.mul(d, p.inverse(b));
        Polynomial const T = C;
        if (C.size() < B.size() + shift)
            C.resize(B.size() + shift, Residue{});
        for (std::size_t i = 0; i < B.size(); ++i)
            C[i + shift] = p.sub(C[i + shift], p.mul(coef, B[i]));
        if (2 * L <= k) {
            L = k + 1 - L;
            B = T;
            b = d;
            shift = 1;
        } else {
            ++shift;
        }
    }
    if (all_zero)
        *all_zero = !nonzero;
    /* F(X) = X^L C(1/X), monic since c_0 = 1 */
    C.resize(std::max(C.size(), L + 1), Residue{});
    Polynomial F(L + 1);
    for (std::size_t i = 0; i <= L; ++i)
        F[i] = C[L - i];
    return F;
}

std::uint64_t Generators::degree() const
{
    std::uint64_t d = 0;
    for (auto const & f : polys)
        for (std::size_t i = f.size(); i-- > 0;)
            if (f[i] != Residue{}) {
                d = std::max<std::uint64_t>(d, i);
                break;
            }
    return d;
}

std::uint64_t Generators::valuation(PrimeModulus const & p) const
{
    std::uint64_t v = UINT64_MAX;
    for (auto const & f : polys)
        for (std::size_t i = 0; i < f.size(); ++i)
            if (!p.is_zero(f[i])) {
                v = std::min<std::uint64_t>(v, i);
                break;
            }
    return v == UINT64_MAX ? 0 : v;
}

bool Generators::is_zero(PrimeModulus const & p) const
{
    for (auto const & f : polys)
        for (auto const & c : f)
            if (!p.is_zero(c))
                return false;
    return true;
}

std::uint64_t annihilation_window(BlockSequence const & seq, Generators const & g)
{
    std::uint64_t const d = g.degree();
    return seq.count > d ? seq.count - d : 0;
}

bool annihilates(BlockSequence const & seq, Generators const & g, PrimeModulus const & p, std::uint64_t window)
{
    if (g.polys.size() != seq.n)
        throw DimensionMismatch("generator count does not match the sequence width");
    if (window > annihilation_window(seq, g))
        throw InvalidArgument("annihilation window exceeds the sequence");
    WideAccumulator acc(p);
    for (std::uint64_t k = 0; k < window; ++k) {
        for (std::uint32_t r = 0; r < seq.m; ++r) {
            acc.clear();
            for (std::uint32_t j = 0; j < seq.n; ++j) {
                auto const & f = g.polys[j];
                for (std::size_t i = 0; i < f.size() && k + i < seq.count; ++i)
                    if (!p.is_zero(f[i]))
                        acc.add_product(f[i], seq.at(k + i, r, j));
            }
            if (!p.is_zero(acc.reduce()))
                return false;
        }
    }
    return true;
}

std::uint64_t generator_degree_bound(std::uint64_t N, BlockingParams const & bp)
{
    return ceil_div(N, bp.n) + 1;
}

namespace {

/* Order basis of [A(X) | -I_m] modulo X^sigma with shifts (0^n, 1^m).
 *
 * Column c of the basis is a pair (P_c, Q_c) with A P_c = Q_c mod X^sigma.
 * Only P_c (n entries) is stored; the residual series E_c = A P_c - Q_c
 * is carried from the current order on. delta_c bounds max(deg P_c,
 * deg Q_c + 1); columns of small delta are generators of the sequence of
 * degree delta_c after reversal. */
class OrderBasis {
  public:
    OrderBasis(BlockSequence const & seq, PrimeModulus const & p)
        : p_(p), m_(seq.m), n_(seq.n), s_(seq.m + seq.n), sigma_(seq.count), delta_(s_), base_(s_, 0),
          P_(s_), E_(s_)
    {
        for (std::uint32_t c = 0; c < s_; ++c) {
            E_[c].assign(sigma_ * m_, Residue{});
            P_[c].assign(n_, Residue{});
            if (c < n_) {
                delta_[c] = 0;
                P_[c][c] = p.one();
                for (std::uint64_t t = 0; t < sigma_; ++t)
                    for (std::uint32_t r = 0; r < m_; ++r)
                        E_[c][t * m_ + r] = seq.at(t, r, c);
            } else {
                delta_[c] = 1;
                if (sigma_ > 0)
                    E_[c][c - n_] = p.neg(p.one());
            }
        }
    }

    void run()
    {
        for (std::uint64_t k = 0; k < sigma_; ++k)
            step(k);
    }

    std::vector<std::uint32_t> order() const
    {
        std::vector<std::uint32_t> ord(s_);
        std::iota(ord.begin(), ord.end(), 0u);
        std::stable_sort(ord.begin(), ord.end(),
                         [&](std::uint32_t a, std::uint32_t b) { return delta_[a] < delta_[b]; });
        return ord;
    }

    std::uint64_t delta(std::uint32_t c) const { return delta_[c]; }
    /* coefficient d of P_c, as an n-vector */
    std::span<Residue const> p_coeff(std::uint32_t c, std::uint64_t d) const
    {
        if ((d + 1) * n_ > P_[c].size())
            return {};
        return std::span(P_[c]).subspan(d * n_, n_);
    }
    std::uint64_t p_degree(std::uint32_t c) const
    {
        auto const & v = P_[c];
        for (std::size_t i = v.size(); i-- > 0;)
            if (!p_.is_zero(v[i]))
                return i / n_;
        return 0;
    }
    bool p_zero(std::uint32_t c) const
    {
        return std::all_of(P_[c].begin(), P_[c].end(), [&](Residue const & x) { return p_.is_zero(x); });
    }

  private:
    Residue const & e(std::uint32_t c, std::uint64_t t, std::uint32_t r) const
    {
        return E_[c][(t - base_[c]) * m_ + r];
    }

    void step(std::uint64_t k)
    {
        auto const ord = order();
        /* echelon form of the residual coefficients, tracking how each
         * reduced vector combines the original pivot columns */
        struct Pivot {
            std::uint32_t col;
            std::uint32_t row;
            Residue inv;
            std::vector<Residue> vec;   // m entries
            std::vector<Residue> combo; // over pivots so far
        };
        std::vector<Pivot> piv;
        struct Update {
            std::uint32_t col;
            std::vector<Residue> lambda; // per pivot: column -= lambda * pivot column
        };
        std::vector<Update> updates;

        for (std::uint32_t c : ord) {
            std::vector<Residue> x(m_);
            for (std::uint32_t r = 0; r < m_; ++r)
                x[r] = e(c, k, r);
            std::vector<Residue> mu(piv.size());
            for (std::size_t q = 0; q < piv.size(); ++q) {
                Residue const f = p_.mul(x[piv[q].row], piv[q].inv);
                mu[q] = f;
                if (p_.is_zero(f))
                    continue;
                for (std::uint32_t r = 0; r < m_; ++r)
                    if (!p_.is_zero(piv[q].vec[r]))
                        x[r] = p_.sub(x[r], p_.mul(f, piv[q].vec[r]));
            }
            /* x = R_c - sum_q mu_q vec_q, and vec_q = sum_t combo_q[t] R_{piv t} */
            std::vector<Residue> lambda(piv.size(), Residue{});
            for (std::size_t q = 0; q < piv.size(); ++q) {
                if (p_.is_zero(mu[q]))
                    continue;
                for (std::size_t t = 0; t <= q; ++t)
                    lambda[t] = p_.add(lambda[t], p_.mul(mu[q], piv[q].combo[t]));
            }
            std::uint32_t row = m_;
            for (std::uint32_t r = 0; r < m_; ++r)
                if (!p_.is_zero(x[r])) {
                    row = r;
                    break;
                }
            if (row == m_) {
                if (std::any_of(lambda.begin(), lambda.end(), [&](Residue const & l) { return !p_.is_zero(l); }))
                    updates.push_back({c, std::move(lambda)});
            } else {
                Pivot pv{c, row, p_.inverse(x[row]), std::move(x), {}};
                pv.combo.resize(piv.size() + 1);
                for (std::size_t t = 0; t < piv.size(); ++t)
                    pv.combo[t] = p_.neg(lambda[t]);
                pv.combo[piv.size()] = p_.one();
                piv.push_back(std::move(pv));
            }
        }

        WideAccumulator acc(p_);
        for (auto const & u : updates) {
            std::uint32_t const c = u.col;
            std::vector<std::pair<std::uint32_t, Residue>> terms;
            for (std::size_t t = 0; t < u.lambda.size(); ++t)
                if (!p_.is_zero(u.lambda[t]))
                    terms.emplace_back(piv[t].col, p_.neg(u.lambda[t]));
            /* residual series from order k on */
            for (std::uint64_t t = k; t < sigma_; ++t) {
                for (std::uint32_t r = 0; r < m_; ++r) {
                    acc.clear();
                    acc.add(e(c, t, r));
                    for (auto const & [pc, l] : terms)
                        acc.add_product(l, e(pc, t, r));
                    E_[c][(t - base_[c]) * m_ + r] = acc.reduce();
                }
            }
            std::size_t len = P_[c].size();
            for (auto const & [pc, l] : terms)
                len = std::max(len, P_[pc].size());
            P_[c].resize(len, Residue{});
            for (std::size_t t = 0; t < len; ++t) {
                acc.clear();
                acc.add(P_[c][t]);
                bool any = false;
                for (auto const & [pc, l] : terms)
                    if (t < P_[pc].size() && !p_.is_zero(P_[pc][t])) {
                        acc.add_product(l, P_[pc][t]);
                        any = true;
                    }
                if (any)
                    P_[c][t] = acc.reduce();
            }
        }
        for (auto const & pv : piv) {
            std::uint32_t const c = pv.col;
            delta_[c] += 1;
            base_[c] += 1;
            P_[c].insert(P_[c].begin(), n_, Residue{});
        }
    }

    PrimeModulus p_;
    std::uint32_t m_, n_, s_;
    std::uint64_t sigma_;
    std::vector<std::uint64_t> delta_;
    std::vector<std::uint64_t> base_;
    std::vector<std::vector<Residue>> P_;
    std::vector<std::vector<Residue>> E_;
};

/* Reversal of column c at degree delta: f_i = P_{delta - i}. */
Generators reversed(OrderBasis const & ob, std::uint32_t c, std::uint32_t n)
{
    std::uint64_t const d = ob.delta(c);
    Generators g;
    g.polys.assign(n, Polynomial(d + 1, Residue{}));
    for (std::uint64_t i = 0; i <= d; ++i) {
        auto const coeff = ob.p_coeff(c, d - i);
        if (coeff.empty())
            continue;
        for (std::uint32_t j = 0; j < n; ++j)
            g.polys[j][i] = coeff[j];
    }
    return g;
}

/* common length deg + 1; the dropped coefficients are zero */
void trim(Generators & g)
{
    std::size_t const len = std::size_t(g.degree()) + 1;
    for (auto & f : g.polys)
        f.resize(len, Residue{});
}

/* Scale so that the leading coefficient of the first component of top
 * degree is one. */
void normalize(Generators & g, PrimeModulus const & p)
{
    trim(g);
    std::uint64_t const d = g.degree();
    for (auto const & f : g.polys) {
        if (!p.is_zero(f[d])) {
            Residue const inv = p.inverse(f[d]);
            for (auto & h : g.polys)
                for (auto & c : h)
                    c = p.mul(c, inv);
            return;
        }
    }
}

} // namespace

Generators block_lingen(BlockSequence const & seq, BlockingParams const & bp, std::uint64_t N,
                        PrimeModulus const & p)
{
    if (seq.m != bp.m || seq.n != bp.n)
        throw DimensionMismatch("sequence shape does not match the blocking parameters");
    OrderBasis ob(seq, p);
    ob.run();

    /* the n lowest-delta columns with a non-zero generator part */
    std::vector<std::uint32_t> cand;
    for (std::uint32_t c : ob.order()) {
        if (cand.size() == bp.n)
            break;
        if (!ob.p_zero(c))
            cand.push_back(c);
    }
    if (cand.empty())
        throw GeneratorFailure("linear generator: no candidate column");

    /* Mksol needs F(0) = 0, i.e. a combination of candidates whose
     * constant terms cancel; the first candidate that depends on the ones
     * before it gives the lowest-degree such combination. */
    struct Row {
        std::uint32_t lead;
        Residue inv;
        std::vector<Residue> vec;   // n entries
        std::vector<Residue> combo; // over candidates
    };
    std::vector<Row> rows;
    std::vector<Residue> chosen;
    for (std::size_t t = 0; t < cand.size() && chosen.empty(); ++t) {
        std::uint64_t const d = ob.delta(cand[t]);
        auto const z0 = ob.p_coeff(cand[t], d);
        std::vector<Residue> z(bp.n, Residue{});
        if (!z0.empty())
            std::copy(z0.begin(), z0.end(), z.begin());
        std::vector<Residue> combo(cand.size(), Residue{});
        combo[t] = p.one();
        for (auto const & row : rows) {
            Residue const f = p.mul(z[row.lead], row.inv);
            if (p.is_zero(f))
                continue;
            for (std::uint32_t j = 0; j < bp.n; ++j)
                z[j] = p.sub(z[j], p.mul(f, row.vec[j]));
            for (std::size_t u = 0; u < cand.size(); ++u)
                combo[u] = p.sub(combo[u], p.mul(f, row.combo[u]));
        }
        std::uint32_t lead = bp.n;
        for (std::uint32_t j = 0; j < bp.n; ++j)
            if (!p.is_zero(z[j])) {
                lead = j;
                break;
            }
        if (lead == bp.n)
            chosen = std::move(combo);
        else
            rows.push_back({lead, p.inverse(z[lead]), std::move(z), std::move(combo)});
    }

    Generators g;
    std::uint64_t dmax = 0;
    if (chosen.empty()) {
        /* no combination vanishes at 0: the matrix looks non-singular;
         * hand back the lowest column and let Mksol report it */
        g = reversed(ob, cand[0], bp.n);
        dmax = ob.delta(cand[0]);
    } else {
        for (std::size_t t = 0; t < cand.size(); ++t)
            if (!p.is_zero(chosen[t]))
                dmax = std::max(dmax, ob.delta(cand[t]));
        g.polys.assign(bp.n, Polynomial(dmax + 1, Residue{}));
        for (std::size_t t = 0; t < cand.size(); ++t) {
            if (p.is_zero(chosen[t]))
                continue;
            Generators const gt = reversed(ob, cand[t], bp.n);
            for (std::uint32_t j = 0; j < bp.n; ++j)
                for (std::size_t i = 0; i < gt.polys[j].size(); ++i)
                    g.polys[j][i] = p.add(g.polys[j][i], p.mul(chosen[t], gt.polys[j][i]));
        }
    }
    if (g.is_zero(p))
        throw GeneratorFailure("linear generator: combination vanished");
    normalize(g, p);

    std::uint64_t const bound = generator_degree_bound(N, bp);
    if (g.degree() > bound)
        throw GeneratorFailure("linear generator degree " + std::to_string(g.degree()) + " exceeds bound " +
                               std::to_string(bound));
    /* the relation is only meaningful if it was checked on a window long
     * enough to pin down X^T B^k for every k */
    std::uint64_t const window = seq.count > dmax ? seq.count - dmax : 0;
    if (window < ceil_div(N, bp.m))
        throw GeneratorFailure("linear generator: sequence too short for a meaningful check");
    if (!annihilates(seq, g, p, window))
        throw GeneratorFailure("linear generator does not annihilate the sequence");
    return g;
}

} // namespace sldlag
