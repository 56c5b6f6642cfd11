#pragma once

/* Wall-clock model for a Wiedemann run.
 *
 * Column tasks run concurrently, so the wall-clock of a phase is the number
 * of iterations one task performs times the cost of one iteration of that
 * task (local product plus communication). */

#include <cstdint>
#include <string>

#include "sldlag/gridmv.hpp"
#include "sldlag/solver.hpp"

namespace sldlag {

struct CalibrationParams {
    double t_iter_compute = 0; // seconds per iteration per task
    double t_iter_comm = 0;    // seconds per iteration per task
    double link_latency = 0;   // seconds per message
    double link_bandwidth = 0; // bytes per second, 0 means unused
    std::uint32_t nodes_per_subtask = 1;

    void validate() const;
};

struct RunEstimate {
    std::uint64_t krylov_iterations = 0;
    std::uint64_t mksol_iterations = 0;
    double krylov_seconds = 0;
    double mksol_seconds = 0;
    double lingen_seconds = 0; // caller-supplied constant
    double total_seconds = 0;  // krylov + mksol
    double comm_ratio = 0;     // t_comm / (t_comm + t_compute)
};

RunEstimate estimate(std::uint64_t N, BlockingParams const & bp, CalibrationParams const & cal,
                     double lingen_seconds = 0);

/* Per-iteration communication time of a logged run: each message pays the
 * latency once and every byte crosses the link at the given bandwidth.
 * Compute time is the measured total divided by the logged iterations. */
CalibrationParams calibrate_from_run(CommLog const & log, double measured_compute_seconds, double link_latency,
                                     double link_bandwidth, std::uint32_t nodes_per_subtask = 1);

/* Calibration from first principles: nnz spread over the grid at the given
 * per-node throughput plus the modelled traffic of one iteration. */
CalibrationParams calibrate_from_model(std::uint64_t nnz, double nnz_per_second, GridSpec const & g,
                                       std::uint64_t fragment_bytes, double link_latency, double link_bandwidth);

inline double seconds_to_days(double s) { return s / 86400.0; }
/* Two significant figures, e.g. "2.6" or "15". */
std::string format_days(double seconds);

} // namespace sldlag
