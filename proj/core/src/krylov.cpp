#include <atomic>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

#include <fmt/format.h>

#include "sldlag/binio.hpp"
#include "sldlag/errors.hpp"
#include "sldlag/parallel.hpp"
#include "sldlag/solver.hpp"

namespace sldlag {

namespace fs = std::filesystem;

BlockSequence BlockSequence::column(std::uint32_t c) const
{
    BlockSequence out;
    out.m = m;
    out.n = 1;
    out.count = count;
    out.terms.reserve(count * m);
    for (std::uint64_t i = 0; i < count; ++i)
        for (std::uint32_t r = 0; r < m; ++r)
            out.terms.push_back(at(i, r, c));
    return out;
}

std::vector<Residue> krylov_scalar(MatVec & a, std::span<Residue const> x, std::span<Residue const> y,
                                   std::uint64_t count)
{
    std::uint64_t const N = a.dimension();
    if (x.size() != N || y.size() != N)
        throw DimensionMismatch("krylov vectors must have the matrix dimension");
    PrimeModulus const & p = a.modulus();
    std::vector<Residue> seq;
    seq.reserve(count);
    Vector v(y.begin(), y.end()), next(N);
    for (std::uint64_t i = 0; i < count; ++i) {
        seq.push_back(dot(p, x, v));
        a.apply(v, next);
        v.swap(next);
    }
    return seq;
}

namespace {

/* SLDQ: magic, u32 version, u32 m, u32 n, u64 count, then count*m*n
 * residues term-major. The residue width comes from the checkpoint meta. */
std::vector<std::uint8_t> encode_sldq(PrimeModulus const & p, std::uint32_t m, std::uint32_t n,
                                      std::uint64_t count, std::span<Residue const> terms)
{
    ByteWriter w;
    w.magic("SLDQ");
    w.u32(1);
    w.u32(m);
    w.u32(n);
    w.u64(count);
    for (std::uint64_t t = 0; t < count * m * n; ++t)
        w.residue(p, terms[t]);
    return w.take();
}

std::vector<Residue> decode_sldq(PrimeModulus const & p, std::span<std::uint8_t const> data, std::uint32_t m,
                                 std::uint32_t n)
{
    ByteReader r(data, "SLDQ");
    r.expect_magic("SLDQ");
    r.expect_version(1);
    if (r.u32() != m || r.u32() != n)
        r.fail(FormatError::Kind::InvariantViolation, "sequence shape does not match the run");
    std::uint64_t const count = r.u64();
    if (count > r.remaining() / p.byte_width() / (std::uint64_t(m) * n))
        r.fail(FormatError::Kind::Truncated, "sequence shorter than announced");
    std::vector<Residue> terms(count * m * n);
    for (auto & t : terms)
        t = r.residue(p);
    r.expect_end();
    return terms;
}

using Meta = std::map<std::string, std::string>;

Meta read_meta(fs::path const & path)
{
    Meta meta;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        auto const eq = line.find('=');
        if (eq == std::string::npos || line.empty() || line[0] == '#')
            continue;
        meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return meta;
}

std::string render_meta(Meta const & meta)
{
    std::string out;
    for (auto const & [k, v] : meta)
        out += k + "=" + v + "\n";
    return out;
}

struct ColumnProgress {
    std::uint64_t iteration = 0;
    std::uint64_t digest = 0;
};

/* Shared by the column tasks of one Krylov run. */
class Checkpointer {
  public:
    Checkpointer(CheckpointConfig cfg, PrimeModulus const & p, std::uint64_t N, std::uint32_t m,
                 std::uint32_t n, std::uint64_t count)
        : cfg_(std::move(cfg)), p_(p), m_(m), progress_(n)
    {
        if (cfg_.interval == 0)
            throw InvalidArgument("checkpoint interval must be positive");
        root_ = cfg_.dir;
        fs::create_directories(root_ / "seq");
        fs::create_directories(root_ / "iter");
        ident_["format"] = "sldlag-checkpoint-1";
        ident_["modulus"] = p.to_hex();
        ident_["dimension"] = std::to_string(N);
        ident_["m"] = std::to_string(m);
        ident_["n"] = std::to_string(n);
        ident_["count"] = std::to_string(count);
        ident_["interval"] = std::to_string(cfg_.interval);
        for (auto const & [k, v] : cfg_.identity)
            ident_[k] = v;
    }

    std::uint64_t interval() const { return cfg_.interval; }

    /* Loads the saved state of column j when the directory belongs to the
     * same run; returns the iteration to continue from (0: start over). */
    std::uint64_t resume(std::uint32_t j, std::vector<Residue> & terms, Vector & v)
    {
        Meta const meta = read_meta(root_ / "meta");
        for (auto const & [k, val] : ident_) {
            auto it = meta.find(k);
            if (it == meta.end() || it->second != val)
                return 0;
        }
        auto const it_key = meta.find(col_key(j, "iteration"));
        auto const dg_key = meta.find(col_key(j, "digest"));
        if (it_key == meta.end() || dg_key == meta.end())
            return 0;
        try {
            std::uint64_t const iteration = std::stoull(it_key->second);
            std::uint64_t const digest = std::stoull(dg_key->second, nullptr, 16);
            auto const iter_bytes = read_file(iter_path(j));
            if (fnv1a64(iter_bytes) != digest)
                return 0;
            PrimeModulus q;
            Vector saved = decode_vector(iter_bytes, q);
            if (!(q == p_) || saved.size() != v.size())
                return 0;
            std::vector<Residue> seq = decode_sldq(p_, read_file(seq_path(j)), m_, 1);
            /* the sequence file may be ahead of the meta if a run died in
             * between; the prefix is what the meta vouches for */
            if (seq.size() < iteration * m_)
                return 0;
            std::copy(seq.begin(), seq.begin() + std::ptrdiff_t(iteration * m_), terms.begin());
            v = std::move(saved);
            std::lock_guard lk(mu_);
            progress_[j] = {iteration, digest};
            return iteration;
        } catch (Error const &) {
            return 0;
        } catch (std::exception const &) {
            return 0;
        }
    }

    void save(std::uint32_t j, std::uint64_t iteration, std::span<Residue const> terms, Vector const & v)
    {
        write_file_atomic(seq_path(j), encode_sldq(p_, m_, 1, iteration, terms));
        auto const iter_bytes = encode_vector(p_, v);
        write_file_atomic(iter_path(j), iter_bytes);
        bool stop = false;
        {
            std::lock_guard lk(mu_);
            progress_[j] = {iteration, fnv1a64(iter_bytes)};
            Meta meta = ident_;
            for (std::uint32_t c = 0; c < progress_.size(); ++c) {
                if (progress_[c].iteration == 0)
                    continue;
                meta[col_key(c, "iteration")] = std::to_string(progress_[c].iteration);
                meta[col_key(c, "digest")] = fmt::format("{:016x}", progress_[c].digest);
            }
            write_text_atomic((root_ / "meta").string(), render_meta(meta));
            ++written_;
            stop = cfg_.interrupt_after >= 0 && written_ >= cfg_.interrupt_after;
        }
        if (stop)
            throw Interrupted("interrupted after checkpoint of column " + std::to_string(j) + " at iteration " +
                              std::to_string(iteration));
    }

  private:
    static std::string col_key(std::uint32_t j, char const * what)
    {
        return "col_" + std::to_string(j) + "." + what;
    }
    std::string seq_path(std::uint32_t j) const { return (root_ / "seq" / fmt::format("col_{}.sldq", j)).string(); }
    std::string iter_path(std::uint32_t j) const { return (root_ / "iter" / fmt::format("col_{}.sldv", j)).string(); }

    CheckpointConfig cfg_;
    PrimeModulus p_;
    std::uint32_t m_;
    fs::path root_;
    Meta ident_;
    std::mutex mu_;
    std::vector<ColumnProgress> progress_;
    std::int64_t written_ = 0;
};

} // namespace

BlockSequence krylov_block(MatVecFactory const & make, std::vector<Vector> const & X,
                           std::vector<Vector> const & Y, std::uint64_t count, KrylovOptions const & opts,
                           KrylovStats * stats)
{
    std::uint32_t const m = std::uint32_t(X.size()), n = std::uint32_t(Y.size());
    if (m == 0 || n == 0)
        throw InvalidArgument("krylov needs at least one x and one y vector");

    /* one probe to learn the dimension and modulus */
    std::unique_ptr<MatVec> probe = make();
    std::uint64_t const N = probe->dimension();
    PrimeModulus const p = probe->modulus();
    for (auto const & v : X)
        if (v.size() != N)
            throw DimensionMismatch("x vector length does not match the matrix");
    for (auto const & v : Y)
        if (v.size() != N)
            throw DimensionMismatch("y vector length does not match the matrix");

    std::optional<Checkpointer> ck;
    if (opts.checkpoint)
        ck.emplace(*opts.checkpoint, p, N, m, n, count);

    std::vector<std::vector<Residue>> cols(n, std::vector<Residue>(count * m));
    std::vector<std::uint64_t> spmvs(n, 0), resumed(n, 0);
    std::vector<CommLog> logs(n);
    unsigned const contexts = opts.contexts ? opts.contexts : contexts_from_env();

    auto task = [&](std::size_t jj) {
        std::uint32_t const j = std::uint32_t(jj);
        std::unique_ptr<MatVec> mv = jj == 0 ? std::move(probe) : make();
        std::vector<Residue> & terms = cols[j];
        Vector v = Y[j], next(N);
        std::uint64_t start = 0;
        if (ck)
            start = ck->resume(j, terms, v);
        resumed[j] = start;
        for (std::uint64_t i = start; i < count; ++i) {
            for (std::uint32_t r = 0; r < m; ++r)
                terms[i * m + r] = dot(p, X[r], v);
            mv->apply(v, next);
            v.swap(next);
            if (ck && ((i + 1) % ck->interval() == 0 || i + 1 == count))
                ck->save(j, i + 1, std::span(terms).first((i + 1) * m), v);
        }
        spmvs[j] = mv->applications();
        if (auto const * log = mv->comm_log())
            logs[j] = *log;
    };
    parallel_for(n, contexts, task);

    BlockSequence seq;
    seq.m = m;
    seq.n = n;
    seq.count = count;
    seq.terms.resize(count * m * n);
    for (std::uint64_t i = 0; i < count; ++i)
        for (std::uint32_t r = 0; r < m; ++r)
            for (std::uint32_t c = 0; c < n; ++c)
                seq.at(i, r, c) = cols[c][i * m + r];
    if (stats) {
        stats->spmvs = spmvs;
        stats->resumed = resumed;
        stats->comm = CommLog{};
        for (auto const & l : logs)
            stats->comm.append(l);
    }
    return seq;
}

} // namespace sldlag
