#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "toptag/sim.hpp"

namespace toptag {

/// One line of the trials CSV. Lengths in meters, angles in degrees.
struct TrialRow {
  std::uint64_t trial = 0;
  double x = 0.0, y = 0.0, phi = 0.0, delta = 0.0, dist = 0.0;
  SolverKind solver = SolverKind::Basic;
  double est_x = 0.0, est_y = 0.0, est_phi = 0.0;
  double pos_err = 0.0, ang_err = 0.0;
  bool converged = false;
  bool dropped = false;
};

/// Rows for every solver that ran (and for every enabled solver of a dropped
/// trial). Failed solves carry NaN estimates and errors.
std::vector<TrialRow> trial_rows(const std::vector<TrialRecord>& records,
                                 const std::array<bool, 3>& solvers = {true, true, true});

inline constexpr const char* kTrialsHeader =
    "trial,x,y,phi,delta,dist,solver,est_x,est_y,est_phi,pos_err,ang_err,converged,dropped";
inline constexpr const char* kStatsHeader = "dist_m,solver,count,pos_rms_m,pos_max_m,ang_rms_deg";

/// Fixed 9-significant-digit text for a double ("NaN" for NaN).
std::string format_number(double v);

void write_trials_csv(std::ostream& out, const std::vector<TrialRow>& rows);
std::vector<TrialRow> read_trials_csv(std::istream& in);
std::vector<TrialRow> read_trials_csv(const std::filesystem::path& path);

struct SolverBinStats {
  int count = 0;
  double pos_rms = 0.0;  // m
  double pos_max = 0.0;  // m
  double ang_rms = 0.0;  // rad
};

struct DistanceBinStats {
  int distance = 0;  // m
  std::array<SolverBinStats, 3> solvers;
  bool sparse = false;  // some present solver has fewer than min_bin_count samples
};

inline constexpr int kMinBinCount = 50;

/// Groups non-dropped rows by round(dist). Rows with non-finite errors are skipped.
std::vector<DistanceBinStats> bin_by_distance(const std::vector<TrialRow>& rows,
                                              int min_bin_count = kMinBinCount);

/// Solvers present in the rows, in bas, hopt, sopt order.
std::array<bool, 3> solvers_present(const std::vector<TrialRow>& rows);

void write_stats_csv(std::ostream& out, const std::vector<DistanceBinStats>& stats,
                     const std::array<bool, 3>& solvers);
struct ParsedStats {
  std::vector<DistanceBinStats> bins;
  std::array<bool, 3> solvers = {false, false, false};
};
ParsedStats parse_stats_csv(std::istream& in, int min_bin_count = kMinBinCount);

enum class PlotMetric { PositionRms, OrientationRms };

struct Polyline {
  SolverKind solver = SolverKind::Basic;
  std::vector<std::array<double, 2>> points;  // (distance m, value in m or degrees)
};

/// One polyline per solver with at least one non-empty bin.
std::vector<Polyline> plot_polylines(const ParsedStats& stats, PlotMetric metric);
std::string render_svg(const std::vector<Polyline>& lines, PlotMetric metric);

/// Writes stats.csv, pos_rms.svg and ang_rms.svg. The plots are drawn from
/// the CSV text so they match a later re-parse exactly. Throws IoFailure.
void emit_report(const std::vector<DistanceBinStats>& stats, const std::array<bool, 3>& solvers,
                 const std::filesystem::path& out_dir);

}  // namespace toptag
