#include "sldlag/perfmodel.hpp"

#include <cmath>

#include <fmt/format.h>

#include "sldlag/errors.hpp"

namespace sldlag {

void CalibrationParams::validate() const
{
    auto bad = [](double x) { return !(x >= 0) || std::isinf(x); };
    if (bad(t_iter_compute) || bad(t_iter_comm) || bad(link_latency) || bad(link_bandwidth))
        throw InvalidArgument("calibration constants must be finite and non-negative");
    if (nodes_per_subtask == 0)
        throw InvalidArgument("a subtask needs at least one node");
}

RunEstimate estimate(std::uint64_t N, BlockingParams const & bp, CalibrationParams const & cal,
                     double lingen_seconds)
{
    bp.validate();
    cal.validate();
    RunEstimate e;
    e.krylov_iterations = krylov_length(N, bp, 0);
    e.mksol_iterations = ceil_div(N, bp.n);
    double const t = cal.t_iter_compute + cal.t_iter_comm;
    e.krylov_seconds = double(e.krylov_iterations) * t;
    e.mksol_seconds = double(e.mksol_iterations) * t;
    e.lingen_seconds = lingen_seconds;
    e.total_seconds = e.krylov_seconds + e.mksol_seconds;
    e.comm_ratio = t > 0 ? cal.t_iter_comm / t : 0.0;
    return e;
}

CalibrationParams calibrate_from_run(CommLog const & log, double measured_compute_seconds, double link_latency,
                                     double link_bandwidth, std::uint32_t nodes_per_subtask)
{
    if (log.entries.empty())
        throw InvalidArgument("calibration needs a non-empty communication log");
    CalibrationParams cal;
    cal.link_latency = link_latency;
    cal.link_bandwidth = link_bandwidth;
    cal.nodes_per_subtask = nodes_per_subtask;
    double const iters = double(log.entries.size());
    double const msgs = double(log.total_messages()) / iters;
    double const bytes = double(log.total_bytes()) / iters;
    if (bytes > 0 && link_bandwidth <= 0)
        throw InvalidArgument("bytes were sent but the link bandwidth is zero");
    cal.t_iter_comm = link_latency * msgs + (bytes > 0 ? bytes / link_bandwidth : 0.0);
    cal.t_iter_compute = measured_compute_seconds / iters;
    cal.validate();
    return cal;
}

CalibrationParams calibrate_from_model(std::uint64_t nnz, double nnz_per_second, GridSpec const & g,
                                       std::uint64_t fragment_bytes, double link_latency, double link_bandwidth)
{
    if (!(nnz_per_second > 0))
        throw InvalidArgument("throughput must be positive");
    CalibrationParams cal;
    cal.nodes_per_subtask = g.nodes();
    cal.link_latency = link_latency;
    cal.link_bandwidth = link_bandwidth;
    /* the busiest node bounds the iteration; balanced blocks share nnz */
    cal.t_iter_compute = double(nnz) / double(g.nodes()) / nnz_per_second;
    double const bytes = double(comm_volume_model(g, fragment_bytes));
    if (bytes > 0 && link_bandwidth <= 0)
        throw InvalidArgument("bytes are sent but the link bandwidth is zero");
    cal.t_iter_comm = link_latency * double(comm_messages_model(g)) + (bytes > 0 ? bytes / link_bandwidth : 0.0);
    cal.validate();
    return cal;
}

std::string format_days(double seconds)
{
    double const d = seconds_to_days(seconds);
    if (d == 0)
        return "0";
    int const digits = int(std::floor(std::log10(std::fabs(d))));
    int const decimals = std::max(0, 1 - digits);
    double const scale = std::pow(10.0, 1 - digits);
    double const rounded = std::round(d * scale) / scale;
    return fmt::format("{:.{}f}", rounded, decimals);
}

} // namespace sldlag
