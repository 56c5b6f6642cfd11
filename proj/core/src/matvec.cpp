#include "sldlag/errors.hpp"
#include "sldlag/solver.hpp"

namespace sldlag {

namespace {

class SequentialMatVec final : public MatVec {
  public:
    explicit SequentialMatVec(SparseMatrix const & a) : kernel_(a)
    {
        if (a.nrows() != a.ncols())
            throw DimensionMismatch("the solver needs a square matrix");
    }
    std::uint64_t dimension() const override { return kernel_.matrix().nrows(); }
    PrimeModulus const & modulus() const override { return kernel_.matrix().modulus(); }

  protected:
    void do_apply(std::span<Residue const> in, std::span<Residue> out) override { kernel_.apply(in, out); }

  private:
    SpmvKernel kernel_;
};

class GridMatVec final : public MatVec {
  public:
    GridMatVec(BlockSplit split, GridOptions const & opts) : engine_(std::move(split), opts) {}
    std::uint64_t dimension() const override { return engine_.size(); }
    PrimeModulus const & modulus() const override { return engine_.modulus(); }
    CommLog const * comm_log() const override { return &engine_.log(); }

  protected:
    void do_apply(std::span<Residue const> in, std::span<Residue> out) override
    {
        engine_.load(in);
        engine_.iterate();
        Vector const v = engine_.assemble();
        std::copy(v.begin(), v.end(), out.begin());
    }

  private:
    GridEngine engine_;
};

} // namespace

std::unique_ptr<MatVec> make_sequential_matvec(SparseMatrix const & a)
{
    return std::make_unique<SequentialMatVec>(a);
}

std::unique_ptr<MatVec> make_grid_matvec(BlockSplit split, GridOptions const & opts)
{
    return std::make_unique<GridMatVec>(std::move(split), opts);
}

MatVecFactory sequential_factory(SparseMatrix const & a)
{
    return [&a] { return make_sequential_matvec(a); };
}

MatVecFactory grid_factory(std::shared_ptr<BlockSplit const> split, GridOptions opts)
{
    return [split, opts] { return make_grid_matvec(*split, opts); };
}

BlockingParams BlockingParams::parse(std::string const & s)
{
    BlockingParams bp;
    try {
        std::size_t pos = 0;
        unsigned long const n = std::stoul(s, &pos);
        bp.n = std::uint32_t(n);
        if (pos == s.size()) {
            bp.m = 2 * bp.n;
        } else {
            if (s[pos] != ',')
                throw InvalidArgument("");
            std::size_t pos2 = 0;
            bp.m = std::uint32_t(std::stoul(s.substr(pos + 1), &pos2));
            if (pos + 1 + pos2 != s.size())
                throw InvalidArgument("");
        }
    } catch (std::exception const &) {
        throw InvalidArgument("blocking must look like 'n,m' or 'n', got '" + s + "'");
    }
    bp.validate();
    return bp;
}

void BlockingParams::validate() const
{
    if (n < 1 || m < n || m > 64)
        throw InvalidArgument("blocking needs 1 <= n <= m <= 64, got n=" + std::to_string(n) +
                              " m=" + std::to_string(m));
}

std::uint64_t krylov_length(std::uint64_t N, BlockingParams const & bp, std::uint64_t margin)
{
    return ceil_div(N, bp.n) + ceil_div(N, bp.m) + margin;
}

Algorithm parse_algorithm(std::string const & s)
{
    if (s == "wiedemann")
        return Algorithm::Wiedemann;
    if (s == "block")
        return Algorithm::Block;
    throw InvalidArgument("unknown algorithm '" + s + "' (expected wiedemann or block)");
}

bool verify_kernel(SparseMatrix const & a, std::span<Residue const> w)
{
    if (w.size() != a.ncols())
        throw DimensionMismatch("vector length does not match the matrix");
    PrimeModulus const & p = a.modulus();
    if (is_zero_vector(p, w))
        return false;
    return is_zero_vector(p, spmv_sequential(a, w));
}

} // namespace sldlag
