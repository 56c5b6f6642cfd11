#include "cli.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "sldlag/balance.hpp"
#include "sldlag/binio.hpp"
#include "sldlag/corpus.hpp"
#include "sldlag/errors.hpp"
#include "sldlag/gridmv.hpp"
#include "sldlag/perfmodel.hpp"
#include "sldlag/pipeline.hpp"
#include "sldlag/sge.hpp"
#include "sldlag/spmatrix.hpp"

namespace sldlag::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

/* Usage problems detected after CLI11 has accepted the flags. */
struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Format { Text, Csv, Json };

Format parse_format(std::string const & s)
{
    if (s == "text")
        return Format::Text;
    if (s == "csv")
        return Format::Csv;
    if (s == "json" || s == "json-lines")
        return Format::Json;
    throw UsageError("unknown report format '" + s + "'");
}

/* JSON-lines event log, written in one piece when the command ends. */
class EventLog {
  public:
    void open(std::string path) { path_ = std::move(path); }
    bool enabled() const { return !path_.empty(); }

    void event(json j)
    {
        if (enabled())
            lines_ += j.dump() + "\n";
    }

    void flush() const
    {
        if (enabled())
            write_text_atomic(path_, lines_);
    }

  private:
    std::string path_;
    std::string lines_;
};

/* Batches of grid iterations in log order, for calibration. */
void log_iterations(EventLog & log, std::string const & phase, CommLog const & comm, std::uint64_t batch)
{
    if (!log.enabled() || batch == 0)
        return;
    for (std::size_t b = 0; b < comm.entries.size(); b += batch) {
        std::size_t const e = std::min(comm.entries.size(), std::size_t(b + batch));
        double compute = 0, exchange = 0;
        std::uint64_t bytes = 0, messages = 0;
        for (std::size_t k = b; k < e; ++k) {
            compute += comm.entries[k].compute_seconds;
            exchange += comm.entries[k].comm_seconds;
            bytes += comm.entries[k].bytes;
            messages += comm.entries[k].messages;
        }
        log.event({{"event", "iterations"},
                   {"phase", phase},
                   {"iteration", b},
                   {"count", e - b},
                   {"spmv_ms", compute * 1e3},
                   {"comm_ms", exchange * 1e3},
                   {"comm_bytes", bytes},
                   {"messages", messages}});
    }
}

PrimeModulus modulus_from_flags(unsigned bits, std::string const & hex, std::uint64_t seed)
{
    if (!hex.empty())
        return PrimeModulus::from_hex(hex);
    return PrimeModulus::random_prime(bits, seed);
}

void require_file(std::string const & path, char const * flag)
{
    if (!fs::exists(path))
        throw FormatError(FormatError::Kind::Io, fmt::format("{} file '{}' does not exist", flag, path));
}

std::string csv_join(std::vector<std::string> const & v)
{
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i)
        s += (i ? "," : "") + v[i];
    return s;
}

std::string histogram_text(std::vector<std::uint64_t> const & h)
{
    std::string s;
    for (std::size_t b = 0; b < h.size(); ++b)
        s += fmt::format("{}{}", b ? " " : "", h[b]);
    return s;
}

/* ---- gen ------------------------------------------------------------ */

struct GenArgs {
    std::string profile = "ffs";
    std::uint64_t n = 0;
    std::uint64_t seed = 0;
    unsigned ell_bits = 64;
    std::string ell_hex;
    double gamma = 0;
    std::int64_t dense_cols = -1;
    std::string out;
};

int cmd_gen(GenArgs const & g, std::ostream & out, EventLog & log)
{
    CorpusProfile prof;
    if (g.profile == "ffs")
        prof = profile_ffs(g.n);
    else if (g.profile == "nfs")
        prof = profile_nfs(g.n);
    else
        throw UsageError("unknown profile '" + g.profile + "' (expected ffs or nfs)");
    prof.seed = g.seed;
    if (g.gamma > 0)
        prof.gamma = g.gamma;
    if (g.dense_cols >= 0)
        prof.dense_cols = std::uint64_t(g.dense_cols);
    PrimeModulus const ell = modulus_from_flags(g.ell_bits, g.ell_hex, g.seed);
    auto const t0 = Clock::now();
    SparseMatrix const a = generate(prof, ell);
    store_matrix(a, g.out);
    double const secs = seconds_since(t0);
    out << fmt::format("wrote {} ({}x{}, {} non-zeros, {}-bit ell) in {:.2f}s\n", g.out, a.nrows(), a.ncols(),
                       a.nnz(), ell.bit_length(), secs);
    log.event({{"event", "gen"}, {"n", a.nrows()}, {"nnz", a.nnz()}, {"ell", ell.to_hex()}, {"seconds", secs}});
    return kExitOk;
}

/* ---- stats ---------------------------------------------------------- */

int cmd_stats(std::string const & in, Format fmt_, std::ostream & out)
{
    require_file(in, "--in");
    SparseMatrix const a = load_matrix(in);
    MatrixStats const s = matrix_stats(a);
    switch (fmt_) {
    case Format::Text:
        out << fmt::format("rows: {}\ncolumns: {}\nnon-zeros: {}\ndense columns: {}\n", s.nrows, s.ncols, s.nnz,
                           a.dense_count());
        out << fmt::format("average row weight: {:.3f}\nrow weight stddev: {:.3f}\n", s.avg_row_weight,
                           s.row_weight_stddev);
        out << fmt::format("+-1 fraction: {:.4f}\nell bits: {}\n", s.pm1_fraction, a.modulus().bit_length());
        out << "column weight histogram (empty, [1,2), [2,4), ...): " << histogram_text(s.column_weight_histogram)
            << "\n";
        break;
    case Format::Csv:
        out << "rows,columns,nnz,dense_columns,avg_row_weight,row_weight_stddev,pm1_fraction,ell_bits,histogram\n";
        out << csv_join({std::to_string(s.nrows), std::to_string(s.ncols), std::to_string(s.nnz),
                         std::to_string(a.dense_count()), fmt::format("{:.6f}", s.avg_row_weight),
                         fmt::format("{:.6f}", s.row_weight_stddev), fmt::format("{:.6f}", s.pm1_fraction),
                         std::to_string(a.modulus().bit_length()), histogram_text(s.column_weight_histogram)})
            << "\n";
        break;
    case Format::Json:
        out << json{{"rows", s.nrows},
                    {"columns", s.ncols},
                    {"nnz", s.nnz},
                    {"dense_columns", a.dense_count()},
                    {"avg_row_weight", s.avg_row_weight},
                    {"row_weight_stddev", s.row_weight_stddev},
                    {"pm1_fraction", s.pm1_fraction},
                    {"ell_bits", a.modulus().bit_length()},
                    {"column_weight_histogram", s.column_weight_histogram}}
                   .dump()
            << "\n";
        break;
    }
    return kExitOk;
}

/* ---- sge ------------------------------------------------------------ */

struct SgeArgs {
    std::string in, out, transcript;
    std::uint64_t memory_budget = 0;
    std::uint64_t max_fill = 0;
};

int cmd_sge(SgeArgs const & g, std::ostream & out, EventLog & log)
{
    require_file(g.in, "--in");
    SparseMatrix const a = load_matrix(g.in);
    SgeOptions o;
    o.memory_budget_bytes = g.memory_budget;
    o.max_fill_row_weight = g.max_fill;
    auto const t0 = Clock::now();
    SgeResult const r = sge_reduce(a, o);
    double const secs = seconds_since(t0);
    store_matrix(r.reduced, g.out);
    store_transcript(r.transcript, g.transcript);
    out << fmt::format("{}x{} -> {}x{}, {} steps, stop: {}, {:.2f}s\n", a.nrows(), a.ncols(), r.reduced.nrows(),
                       r.reduced.ncols(), r.transcript.steps.size(), r.stop_reason, secs);
    log.event({{"event", "sge"},
               {"rows", r.reduced.nrows()},
               {"cols", r.reduced.ncols()},
               {"steps", r.transcript.steps.size()},
               {"stop_reason", r.stop_reason},
               {"seconds", secs}});
    return kExitOk;
}

/* ---- balance -------------------------------------------------------- */

struct BalanceArgs {
    std::string in, grid = "1x1", out_dir, perm;
    bool identity = false;
};

int cmd_balance(BalanceArgs const & g, std::ostream & out, EventLog & log)
{
    require_file(g.in, "--in");
    SparseMatrix const a = load_matrix(g.in);
    if (a.nrows() != a.ncols())
        throw UsageError("balance needs a square matrix");
    GridSpec const grid = GridSpec::parse(g.grid);
    PermutationPair const id = identity_permutation(a, grid);
    PermutationPair const pp = g.identity ? id : balance_permutation(a, grid);
    BlockSplit const bs = split(a, pp, grid);
    double const ratio = a.nnz() ? imbalance(bs) : 1.0;
    double const ratio_id = a.nnz() ? imbalance(a, id, grid) : 1.0;
    if (!g.perm.empty())
        store_permutation(pp, g.perm);
    if (!g.out_dir.empty()) {
        fs::create_directories(g.out_dir);
        for (std::uint32_t i = 0; i < grid.r; ++i)
            for (std::uint32_t j = 0; j < grid.c; ++j)
                store_matrix(bs.block(i, j), (fs::path(g.out_dir) / fmt::format("block_{}_{}.sldm", i, j)).string());
    }
    out << fmt::format("grid {} padded size {} imbalance {:.4f} (identity {:.4f})\n", grid.str(), bs.n_padded,
                       ratio, ratio_id);
    log.event({{"event", "balance"},
               {"grid", grid.str()},
               {"n_padded", bs.n_padded},
               {"imbalance", ratio},
               {"identity_imbalance", ratio_id}});
    return kExitOk;
}

/* ---- solve ---------------------------------------------------------- */

struct SolveArgs {
    std::string in, out;
    std::string algo = "block";
    std::uint32_t n = 1, m = 2;
    std::string grid = "1x1";
    std::string transport = "channel";
    std::string checkpoint_dir;
    std::uint64_t checkpoint_interval = std::uint64_t(1) << 14;
    std::uint64_t seed = 0;
    std::uint64_t margin = 32;
    unsigned retries = 3;
    unsigned contexts = 0;
    std::uint64_t memory_budget = 0;
    bool no_sge = false;
    bool no_balance = false;
    bool unit_x = false;
    std::uint64_t timeout_ms = 30000;
    std::uint64_t log_batch = 256;
    std::int64_t interrupt_after = -1;
};

void print_solve_report(PipelineResult const & r, SolveArgs const & g, Format f, std::ostream & out)
{
    std::uint64_t krylov = 0;
    for (auto s : r.solve.krylov_spmvs)
        krylov += s;
    auto timing = [&](std::string const & stage) {
        double s = 0;
        for (auto const & t : r.timings)
            if (t.stage == stage)
                s += t.seconds;
        return s;
    };
    static char const * const kStages[] = {"sge", "fold", "balance", "krylov", "lingen", "mksol", "lift", "verify"};
    switch (f) {
    case Format::Text: {
        out << fmt::format("route: {}\n", r.route);
        out << fmt::format("matrix: {}x{} reduced to {}x{} ({} elimination steps), solved size {}\n",
                           r.original_rows, r.original_cols, r.reduced_rows, r.reduced_cols, r.sge_steps,
                           r.solved_dimension);
        if (r.route == "solver") {
            out << fmt::format("blocking: n={} m={} grid {} imbalance {:.4f}\n", r.blocking.n, r.blocking.m, g.grid,
                               r.imbalance);
            out << fmt::format("attempts: {} sequence length {} generator degree {}\n", r.solve.attempts,
                               r.solve.sequence_length, r.solve.generator_degree);
            out << fmt::format("spmv: krylov {} mksol {}\n", krylov, r.solve.mksol_spmvs);
            out << fmt::format("communication: {} messages, {} bytes\n", r.solve.comm.total_messages(),
                               r.solve.comm.total_bytes());
        }
        std::string line = "timings:";
        for (auto const * s : kStages)
            line += fmt::format(" {} {:.3f}s", s, timing(s));
        out << line << fmt::format(" total {:.3f}s\n", r.total_seconds());
        out << fmt::format("wrote {}\n", g.out);
        break;
    }
    case Format::Csv: {
        std::vector<std::string> head{"route",       "rows",     "cols",     "reduced_rows", "reduced_cols",
                                      "solved_size", "n",        "m",        "grid",         "attempts",
                                      "degree",      "krylov_spmvs", "mksol_spmvs", "comm_bytes", "comm_messages"};
        std::vector<std::string> row{r.route,
                                     std::to_string(r.original_rows),
                                     std::to_string(r.original_cols),
                                     std::to_string(r.reduced_rows),
                                     std::to_string(r.reduced_cols),
                                     std::to_string(r.solved_dimension),
                                     std::to_string(r.blocking.n),
                                     std::to_string(r.blocking.m),
                                     g.grid,
                                     std::to_string(r.solve.attempts),
                                     std::to_string(r.solve.generator_degree),
                                     std::to_string(krylov),
                                     std::to_string(r.solve.mksol_spmvs),
                                     std::to_string(r.solve.comm.total_bytes()),
                                     std::to_string(r.solve.comm.total_messages())};
        for (auto const * s : kStages) {
            head.push_back(std::string(s) + "_s");
            row.push_back(fmt::format("{:.6f}", timing(s)));
        }
        out << csv_join(head) << "\n" << csv_join(row) << "\n";
        break;
    }
    case Format::Json: {
        json t = json::object();
        for (auto const * s : kStages)
            t[s] = timing(s);
        out << json{{"route", r.route},
                    {"rows", r.original_rows},
                    {"cols", r.original_cols},
                    {"reduced_rows", r.reduced_rows},
                    {"reduced_cols", r.reduced_cols},
                    {"solved_size", r.solved_dimension},
                    {"n", r.blocking.n},
                    {"m", r.blocking.m},
                    {"grid", g.grid},
                    {"attempts", r.solve.attempts},
                    {"degree", r.solve.generator_degree},
                    {"krylov_spmvs", krylov},
                    {"mksol_spmvs", r.solve.mksol_spmvs},
                    {"comm_bytes", r.solve.comm.total_bytes()},
                    {"comm_messages", r.solve.comm.total_messages()},
                    {"timings", t}}
                   .dump()
            << "\n";
        break;
    }
    }
}

int cmd_solve(SolveArgs const & g, Format f, std::ostream & out, std::ostream & err, EventLog & log)
{
    require_file(g.in, "--in");
    PipelineOptions o;
    o.grid = GridSpec::parse(g.grid);
    o.grid_options.transport = parse_transport(g.transport);
    o.grid_options.contexts = g.contexts;
    o.grid_options.timeout = std::chrono::milliseconds(g.timeout_ms);
    o.run_sge = !g.no_sge;
    o.sge.memory_budget_bytes = g.memory_budget;
    o.balance = !g.no_balance;
    o.solve.algorithm = parse_algorithm(g.algo);
    o.solve.bp = {g.n, g.m};
    if (o.solve.algorithm == Algorithm::Block)
        o.solve.bp.validate();
    o.solve.seed = g.seed;
    o.solve.margin = g.margin;
    o.solve.max_retries = g.retries;
    o.solve.unit_x = g.unit_x;
    o.solve.contexts = g.contexts;
    if (!g.checkpoint_dir.empty()) {
        CheckpointConfig ck;
        ck.dir = g.checkpoint_dir;
        ck.interval = g.checkpoint_interval;
        ck.interrupt_after = g.interrupt_after;
        o.solve.checkpoint = ck;
    }

    SparseMatrix const a = load_matrix(g.in);
    log.event({{"event", "start"},
               {"command", "solve"},
               {"rows", a.nrows()},
               {"cols", a.ncols()},
               {"nnz", a.nnz()},
               {"grid", g.grid},
               {"n", g.n},
               {"m", g.m},
               {"algo", g.algo},
               {"seed", g.seed}});
    PipelineResult const r = run_pipeline(a, o, [&](std::string const & stage, std::string const & msg) {
        err << "[" << stage << "] " << msg << "\n";
        log.event({{"event", "stage"}, {"stage", stage}, {"message", msg}});
    });
    store_vector(a.modulus(), r.w, g.out);
    log_iterations(log, "solve", r.solve.comm, g.log_batch);
    json timings = json::object();
    for (auto const & t : r.timings)
        timings[t.stage] = timings.value(t.stage, 0.0) + t.seconds;
    log.event({{"event", "done"},
               {"route", r.route},
               {"attempts", r.solve.attempts},
               {"comm_bytes", r.solve.comm.total_bytes()},
               {"comm_messages", r.solve.comm.total_messages()},
               {"timings", timings}});
    print_solve_report(r, g, f, out);
    return kExitOk;
}

/* ---- verify --------------------------------------------------------- */

int cmd_verify(std::string const & matrix, std::string const & vector, std::ostream & out, EventLog & log)
{
    require_file(matrix, "--matrix");
    require_file(vector, "--vector");
    SparseMatrix const a = load_matrix(matrix);
    PrimeModulus q;
    Vector const w = load_vector(vector, q);
    if (!(q == a.modulus()))
        throw ModulusMismatch("vector and matrix use different moduli");
    if (w.size() != a.ncols())
        throw DimensionMismatch(fmt::format("vector has length {} but the matrix has {} columns", w.size(),
                                            a.ncols()));
    bool const zero = is_zero_vector(q, w);
    bool const ok = verify_kernel(a, w);
    log.event({{"event", "verify"}, {"ok", ok}, {"zero_vector", zero}});
    if (ok) {
        out << "KERNEL OK\n";
        return kExitOk;
    }
    out << (zero ? "KERNEL FAILED: zero vector\n" : "KERNEL FAILED: A w != 0\n");
    return kExitSolverFailure;
}

/* ---- estimate ------------------------------------------------------- */

struct EstimateArgs {
    std::uint64_t n_rows = 0;
    std::string blocking = "1,2";
    double t_compute_ms = 0;
    double t_comm_ms = 0;
    double lingen_hours = 0;
};

int cmd_estimate(EstimateArgs const & g, Format f, std::ostream & out, EventLog & log)
{
    BlockingParams const bp = BlockingParams::parse(g.blocking);
    CalibrationParams cal;
    cal.t_iter_compute = g.t_compute_ms / 1e3;
    cal.t_iter_comm = g.t_comm_ms / 1e3;
    RunEstimate const e = estimate(g.n_rows, bp, cal, g.lingen_hours * 3600.0);
    double const with_lingen = e.total_seconds + e.lingen_seconds;
    switch (f) {
    case Format::Text:
        out << fmt::format("matrix size: {}  blocking: n={} m={}\n", g.n_rows, bp.n, bp.m);
        out << fmt::format("per-iteration time: {} ms compute + {} ms communication\n", g.t_compute_ms, g.t_comm_ms);
        out << fmt::format("communication ratio: {:.0f}%\n", e.comm_ratio * 100);
        out << fmt::format("krylov: {} iterations per task, {} days\n", e.krylov_iterations,
                           format_days(e.krylov_seconds));
        out << fmt::format("mksol: {} iterations per task, {} days\n", e.mksol_iterations,
                           format_days(e.mksol_seconds));
        if (g.lingen_hours > 0)
            out << fmt::format("lingen: {} days\n", format_days(e.lingen_seconds));
        out << fmt::format("total (krylov + mksol): {} days\n", format_days(e.total_seconds));
        if (g.lingen_hours > 0)
            out << fmt::format("total including lingen: {} days\n", format_days(with_lingen));
        break;
    case Format::Csv:
        out << "n_rows,n,m,t_compute_ms,t_comm_ms,comm_ratio,krylov_iterations,mksol_iterations,"
               "krylov_days,mksol_days,lingen_days,total_days\n";
        out << fmt::format("{},{},{},{},{},{:.4f},{},{},{},{},{},{}\n", g.n_rows, bp.n, bp.m, g.t_compute_ms,
                           g.t_comm_ms, e.comm_ratio, e.krylov_iterations, e.mksol_iterations,
                           format_days(e.krylov_seconds), format_days(e.mksol_seconds),
                           format_days(e.lingen_seconds), format_days(e.total_seconds));
        break;
    case Format::Json:
        out << json{{"n_rows", g.n_rows},
                    {"n", bp.n},
                    {"m", bp.m},
                    {"comm_ratio", e.comm_ratio},
                    {"krylov_iterations", e.krylov_iterations},
                    {"mksol_iterations", e.mksol_iterations},
                    {"krylov_days", seconds_to_days(e.krylov_seconds)},
                    {"mksol_days", seconds_to_days(e.mksol_seconds)},
                    {"lingen_days", seconds_to_days(e.lingen_seconds)},
                    {"total_days", seconds_to_days(e.total_seconds)}}
                   .dump()
            << "\n";
        break;
    }
    log.event({{"event", "estimate"}, {"comm_ratio", e.comm_ratio}, {"total_seconds", e.total_seconds}});
    return kExitOk;
}

/* ---- bench-spmv ----------------------------------------------------- */

struct BenchArgs {
    std::string in;
    std::string profile = "ffs";
    std::uint64_t n = 10000;
    double gamma = 0;
    std::uint64_t seed = 0;
    unsigned ell_bits = 64;
    std::string grid = "1x1";
    std::string transport = "channel";
    unsigned contexts = 0;
    std::uint64_t iterations = 20;
    std::uint64_t warmup = 2;
    double latency_us = 0;
    double bandwidth_gbs = 0;
    std::uint64_t log_batch = 1;
};

int cmd_bench(BenchArgs const & g, Format f, std::ostream & out, EventLog & log)
{
    SparseMatrix a;
    if (!g.in.empty()) {
        require_file(g.in, "--in");
        a = load_matrix(g.in);
    } else {
        CorpusProfile prof = g.profile == "nfs" ? profile_nfs(g.n) : profile_ffs(g.n);
        if (g.profile != "ffs" && g.profile != "nfs")
            throw UsageError("unknown profile '" + g.profile + "'");
        prof.seed = g.seed;
        if (g.gamma > 0)
            prof.gamma = g.gamma;
        a = generate(prof, PrimeModulus::random_prime(g.ell_bits, g.seed));
    }
    if (a.nrows() != a.ncols())
        throw UsageError("bench-spmv needs a square matrix");
    if (g.iterations == 0)
        throw UsageError("--iterations must be positive");
    GridSpec const grid = GridSpec::parse(g.grid);
    GridOptions go;
    go.transport = parse_transport(g.transport);
    go.contexts = g.contexts;
    BlockSplit bs = split(a, balance_permutation(a, grid), grid);
    std::uint64_t const n_padded = bs.n_padded;
    GridEngine engine(std::move(bs), go);
    Rng rng(derive_seed(g.seed, 0x300));
    engine.load(random_vector(a.modulus(), n_padded, rng));
    engine.run_iterations(g.warmup);
    engine.clear_log();
    auto const t0 = Clock::now();
    engine.run_iterations(g.iterations);
    double const wall = seconds_since(t0);
    CommLog const & cl = engine.log();
    double compute = 0, exchange = 0;
    for (auto const & e : cl.entries) {
        compute += e.compute_seconds;
        exchange += e.comm_seconds;
    }
    double const k = double(g.iterations);
    std::uint64_t const frag_bytes = n_padded / grid.fragments() * a.modulus().byte_width();
    std::uint64_t const model_bytes = comm_volume_model(grid, frag_bytes);
    log_iterations(log, "bench", cl, g.log_batch);

    std::optional<CalibrationParams> cal;
    if (g.latency_us > 0 || g.bandwidth_gbs > 0)
        cal = calibrate_from_run(cl, compute, g.latency_us * 1e-6, g.bandwidth_gbs * 1e9);

    switch (f) {
    case Format::Text:
        out << fmt::format("matrix {}x{} nnz {} ell {} bits, grid {} ({} transport), padded size {}\n", a.nrows(),
                           a.ncols(), a.nnz(), a.modulus().bit_length(), grid.str(), engine.transport_name(),
                           n_padded);
        out << fmt::format("iterations: {}  wall {:.3f} ms/iter  compute {:.3f} ms/iter  exchange {:.3f} ms/iter\n",
                           g.iterations, wall * 1e3 / k, compute * 1e3 / k, exchange * 1e3 / k);
        out << fmt::format("traffic: {} bytes/iter in {} messages/iter (model {} bytes)\n",
                           cl.total_bytes() / g.iterations, cl.total_messages() / g.iterations, model_bytes);
        if (cal)
            out << fmt::format("calibration: t_compute {:.6f} ms t_comm {:.6f} ms\n", cal->t_iter_compute * 1e3,
                               cal->t_iter_comm * 1e3);
        break;
    case Format::Csv:
        out << "rows,nnz,ell_bits,grid,transport,iterations,wall_ms,compute_ms,exchange_ms,bytes,messages,"
               "model_bytes\n";
        out << fmt::format("{},{},{},{},{},{},{:.6f},{:.6f},{:.6f},{},{},{}\n", a.nrows(), a.nnz(),
                           a.modulus().bit_length(), grid.str(), engine.transport_name(), g.iterations,
                           wall * 1e3 / k, compute * 1e3 / k, exchange * 1e3 / k, cl.total_bytes() / g.iterations,
                           cl.total_messages() / g.iterations, model_bytes);
        break;
    case Format::Json: {
        json j{{"rows", a.nrows()},
               {"nnz", a.nnz()},
               {"ell_bits", a.modulus().bit_length()},
               {"grid", grid.str()},
               {"transport", engine.transport_name()},
               {"iterations", g.iterations},
               {"wall_ms", wall * 1e3 / k},
               {"compute_ms", compute * 1e3 / k},
               {"exchange_ms", exchange * 1e3 / k},
               {"bytes", cl.total_bytes() / g.iterations},
               {"messages", cl.total_messages() / g.iterations},
               {"model_bytes", model_bytes}};
        if (cal) {
            j["t_compute_ms"] = cal->t_iter_compute * 1e3;
            j["t_comm_ms"] = cal->t_iter_comm * 1e3;
        }
        out << j.dump() << "\n";
        break;
    }
    }
    return kExitOk;
}

int exit_code_for(std::exception const & e)
{
    if (dynamic_cast<UsageError const *>(&e) || dynamic_cast<InvalidArgument const *>(&e))
        return kExitUsage;
    if (dynamic_cast<SolverFailure const *>(&e) || dynamic_cast<Interrupted const *>(&e))
        return kExitSolverFailure;
    return kExitIo;
}

char const * error_label(std::exception const & e)
{
    if (dynamic_cast<UsageError const *>(&e) || dynamic_cast<InvalidArgument const *>(&e))
        return "usage error";
    if (dynamic_cast<SolverFailure const *>(&e))
        return "SolverFailure";
    if (dynamic_cast<Interrupted const *>(&e))
        return "interrupted";
    if (dynamic_cast<FormatError const *>(&e))
        return "format error";
    return "error";
}

} // namespace

std::vector<std::string> config_tokens(std::string const & text)
{
    std::vector<std::string> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    auto trim = [](std::string s) {
        auto const b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            return std::string();
        auto const e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#')
            continue;
        auto const eq = line.find('=');
        if (eq == std::string::npos)
            throw UsageError(fmt::format("config line {}: expected key=value", lineno));
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw UsageError(fmt::format("config line {}: empty key", lineno));
        while (!key.empty() && key[0] == '-')
            key.erase(0, 1);
        if (value.size() >= 2 && value.front() == '"' && value.back() == '"')
            value = value.substr(1, value.size() - 2);
        out.push_back("--" + key + "=" + value);
    }
    return out;
}

int run_subcommand(std::vector<std::string> args, std::ostream & out, std::ostream & err)
{
    CLI::App app{"Sparse linear algebra over Z/ellZ for discrete logarithm computations", "sldlag"};
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.require_subcommand(1);

    std::string config_path, log_path, format = "text";
    auto common = [&](CLI::App * sub) {
        sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--config", config_path, "key=value file; command-line flags take precedence");
        sub->add_option("--log", log_path, "JSON-lines event log");
        sub->add_option("--format", format, "report format: text, csv or json")
            ->check(CLI::IsMember({"text", "csv", "json", "json-lines"}));
    };

    GenArgs gen;
    auto * s_gen = app.add_subcommand("gen", "generate a synthetic relation matrix");
    common(s_gen);
    s_gen->add_option("--profile", gen.profile, "ffs or nfs")->check(CLI::IsMember({"ffs", "nfs"}));
    s_gen->add_option("--n", gen.n, "matrix size")->required();
    s_gen->add_option("--seed", gen.seed);
    s_gen->add_option("--ell-bits", gen.ell_bits, "bit length of the random prime");
    s_gen->add_option("--ell-hex", gen.ell_hex, "explicit prime in hexadecimal");
    s_gen->add_option("--gamma", gen.gamma, "average row weight override");
    s_gen->add_option("--dense-cols", gen.dense_cols, "dense column count override");
    s_gen->add_option("--out", gen.out)->required();

    std::string stats_in;
    auto * s_stats = app.add_subcommand("stats", "print matrix statistics");
    common(s_stats);
    s_stats->add_option("--in", stats_in)->required();

    SgeArgs sge;
    auto * s_sge = app.add_subcommand("sge", "structured Gaussian elimination");
    common(s_sge);
    s_sge->add_option("--in", sge.in)->required();
    s_sge->add_option("--out", sge.out)->required();
    s_sge->add_option("--transcript", sge.transcript)->required();
    s_sge->add_option("--memory-budget", sge.memory_budget, "stop once the matrix fits in this many bytes");
    s_sge->add_option("--max-fill", sge.max_fill, "largest row weight a combination may create");

    BalanceArgs bal;
    auto * s_bal = app.add_subcommand("balance", "weight balancing and block split");
    common(s_bal);
    s_bal->add_option("--in", bal.in)->required();
    s_bal->add_option("--grid", bal.grid, "RxC");
    s_bal->add_option("--out-dir", bal.out_dir, "directory for block_<i>_<j>.sldm files");
    s_bal->add_option("--perm", bal.perm, "permutation output (SLDP)");
    s_bal->add_flag("--identity", bal.identity, "skip balancing, keep the original order");

    SolveArgs sol;
    auto * s_sol = app.add_subcommand("solve", "compute a kernel vector of the matrix");
    common(s_sol);
    s_sol->add_option("--in", sol.in)->required();
    s_sol->add_option("--out", sol.out)->required();
    s_sol->add_option("--algo", sol.algo, "wiedemann or block")->check(CLI::IsMember({"wiedemann", "block"}));
    s_sol->add_option("--n", sol.n, "number of y vectors");
    s_sol->add_option("--m", sol.m, "number of x vectors");
    s_sol->add_option("--grid", sol.grid, "RxC");
    s_sol->add_option("--transport", sol.transport, "channel or socket")
        ->check(CLI::IsMember({"channel", "socket"}));
    s_sol->add_option("--checkpoint-dir", sol.checkpoint_dir);
    s_sol->add_option("--checkpoint-interval", sol.checkpoint_interval, "Krylov iterations between checkpoints");
    s_sol->add_option("--seed", sol.seed);
    s_sol->add_option("--margin", sol.margin, "extra sequence terms");
    s_sol->add_option("--retries", sol.retries, "attempts after the first");
    s_sol->add_option("--contexts", sol.contexts, "concurrent execution contexts (default SLDLAG_CONTEXTS)");
    s_sol->add_option("--memory-budget", sol.memory_budget, "elimination memory target in bytes");
    s_sol->add_flag("--no-sge", sol.no_sge, "skip structured Gaussian elimination");
    s_sol->add_flag("--no-balance", sol.no_balance, "skip weight balancing");
    s_sol->add_flag("--unit-x", sol.unit_x, "use unit vectors for x");
    s_sol->add_option("--timeout-ms", sol.timeout_ms, "transport receive timeout");
    s_sol->add_option("--log-batch", sol.log_batch, "iterations per JSON-lines record");
    s_sol->add_option("--interrupt-after", sol.interrupt_after, "stop after this many checkpoints (testing)");

    std::string ver_matrix, ver_vector;
    auto * s_ver = app.add_subcommand("verify", "check that a vector is a non-zero kernel vector");
    common(s_ver);
    s_ver->add_option("--matrix", ver_matrix)->required();
    s_ver->add_option("--vector", ver_vector)->required();

    EstimateArgs est;
    auto * s_est = app.add_subcommand("estimate", "wall-clock estimate of a full computation");
    common(s_est);
    s_est->add_option("--n-rows", est.n_rows)->required();
    s_est->add_option("--blocking", est.blocking, "n,m");
    s_est->add_option("--t-compute", est.t_compute_ms, "milliseconds of computation per iteration")->required();
    s_est->add_option("--t-comm", est.t_comm_ms, "milliseconds of communication per iteration")->required();
    s_est->add_option("--lingen-hours", est.lingen_hours);

    BenchArgs bench;
    auto * s_bench = app.add_subcommand("bench-spmv", "time grid SpMV iterations");
    common(s_bench);
    s_bench->add_option("--in", bench.in, "matrix file; a corpus matrix is generated when absent");
    s_bench->add_option("--profile", bench.profile)->check(CLI::IsMember({"ffs", "nfs"}));
    s_bench->add_option("--n", bench.n);
    s_bench->add_option("--gamma", bench.gamma);
    s_bench->add_option("--seed", bench.seed);
    s_bench->add_option("--ell-bits", bench.ell_bits);
    s_bench->add_option("--grid", bench.grid, "RxC");
    s_bench->add_option("--transport", bench.transport)->check(CLI::IsMember({"channel", "socket"}));
    s_bench->add_option("--contexts", bench.contexts);
    s_bench->add_option("--iterations", bench.iterations);
    s_bench->add_option("--warmup", bench.warmup);
    s_bench->add_option("--latency-us", bench.latency_us, "link latency for calibration");
    s_bench->add_option("--bandwidth-gbs", bench.bandwidth_gbs, "link bandwidth for calibration");
    s_bench->add_option("--log-batch", bench.log_batch);

    EventLog log;
    try {
        /* a config file contributes flags placed before the explicit ones,
         * so with the take-last policy the command line wins */
        for (std::size_t i = 1; i < args.size(); ++i) {
            std::string path;
            if (args[i] == "--config" && i + 1 < args.size())
                path = args[i + 1];
            else if (args[i].rfind("--config=", 0) == 0)
                path = args[i].substr(9);
            else
                continue;
            if (!fs::exists(path))
                throw FormatError(FormatError::Kind::Io, "config file '" + path + "' does not exist");
            auto const bytes = read_file(path);
            auto const extra = config_tokens(std::string(bytes.begin(), bytes.end()));
            args.insert(args.begin() + 1, extra.begin(), extra.end());
            break;
        }
        std::vector<std::string> rev(args.rbegin(), args.rend());
        try {
            app.parse(std::move(rev));
        } catch (CLI::CallForHelp const & e) {
            out << app.help();
            return kExitOk;
        } catch (CLI::CallForAllHelp const &) {
            out << app.help("", CLI::AppFormatMode::All);
            return kExitOk;
        } catch (CLI::ParseError const & e) {
            err << "usage error: " << e.what() << "\n";
            auto const * sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
            err << sub->help();
            return kExitUsage;
        }
        if (!log_path.empty())
            log.open(log_path);
        Format const f = parse_format(format);

        int rc = kExitOk;
        try {
            if (*s_gen)
                rc = cmd_gen(gen, out, log);
            else if (*s_stats)
                rc = cmd_stats(stats_in, f, out);
            else if (*s_sge)
                rc = cmd_sge(sge, out, log);
            else if (*s_bal)
                rc = cmd_balance(bal, out, log);
            else if (*s_sol)
                rc = cmd_solve(sol, f, out, err, log);
            else if (*s_ver)
                rc = cmd_verify(ver_matrix, ver_vector, out, log);
            else if (*s_est)
                rc = cmd_estimate(est, f, out, log);
            else if (*s_bench)
                rc = cmd_bench(bench, f, out, log);
        } catch (std::exception const & e) {
            log.event({{"event", "error"}, {"kind", error_label(e)}, {"message", e.what()}});
            log.flush();
            throw;
        }
        log.flush();
        return rc;
    } catch (std::exception const & e) {
        err << error_label(e) << ": " << e.what() << "\n";
        return exit_code_for(e);
    }
}

} // namespace sldlag::cli
