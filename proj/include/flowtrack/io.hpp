#pragma once

#include <string>
#include <utility>
#include <vector>

#include "flowtrack/core.hpp"
#include "flowtrack/features.hpp"
#include "flowtrack/network.hpp"
#include "flowtrack/rbf.hpp"
#include "flowtrack/sampling.hpp"
#include "flowtrack/solver.hpp"
#include "flowtrack/strain.hpp"
#include "flowtrack/synth.hpp"

namespace flowtrack {

// File-system and format failures (maps to the CLI's usage/IO exit code).
struct IoError : Error {
  using Error::Error;
};

// Point clouds: CSV with header `t,i,x,y,z`, 1-based frame and point ids,
// doubles at full round-trip precision, LF line endings.
void write_sequence_csv(const std::string& path, const FrameSequence& seq);
FrameSequence read_sequence_csv(const std::string& path,
                                bool periodic = false);

// Ground truth: CSV with header `traj,t,x,y,z`; the end-systole frame lives
// in a sibling metadata JSON.
void write_ground_truth_csv(const std::string& path, const GroundTruth& truth);
GroundTruth read_ground_truth_csv(const std::string& path);
void write_phantom_meta_json(const std::string& path,
                             const GroundTruth& truth);
int read_es_frame(const std::string& meta_path);

// Volumes: text header (`dims nx ny nz`, `spacing sx sy sz`) followed by raw
// little-endian float32 in x-fastest raster order.
void write_volume(const std::string& path, const VolumeImage& img);
VolumeImage read_volume(const std::string& path);

// Trajectories plus solve metadata, as JSON.
struct TrajectoryFile {
  std::vector<Trajectory> trajectories;
  std::string constraints;
  double objective = 0.0;
};
void write_trajectories_json(const std::string& path,
                             const std::vector<Trajectory>& trajectories,
                             const FlowSolution& solution);
TrajectoryFile read_trajectories_json(const std::string& path);

void write_rbf_json(const std::string& path, const RbfModel& model);
RbfModel read_rbf_json(const std::string& path);

// Strain export: `t,x,y,z,Err,Ecc,Ell`, one row per sample per frame.
void write_strain_csv(
    const std::string& path,
    const std::vector<std::pair<int, StrainSample>>& rows);

void write_report_json(const std::string& path,
                       const TrackingErrorReport& report);

// Ablation table:
// `constraints,overall_median,overall_iqr,es_median,es_iqr,ed_median,ed_iqr`.
void write_ablation_csv(const std::string& path,
                        const std::vector<AblationRow>& rows);

// Network debug dump: `kind,from_t,from_i,to_t,to_i,weight`.
void write_network_csv(const std::string& path, const FlowNetwork& network);

// Whole-pipeline configuration; parses from JSON with unknown keys rejected.
struct RunConfig {
  TrackingConfig tracking;
  RegularizationWeights regularization;
  CylindricalSamplingSpec sampling;
  LvAxes axes;
  unsigned seed = 1;
  std::string feature = "position";
  int patch_radius = 5;
  int bins = 16;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};
RunConfig read_run_config(const std::string& path);
void write_run_config(const std::string& path, const RunConfig& config);

}  // namespace flowtrack
