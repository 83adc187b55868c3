// Command-line front end: generate phantoms, track, densify, compute strain,
// evaluate against ground truth, and run the constraint ablation.
//
// Exit codes: 0 success, 1 computational failure, 2 usage or IO error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowtrack/io.hpp"

namespace fs = std::filesystem;
using namespace flowtrack;

namespace {

std::string frame_file(const std::string& dir, const char* stem, int t,
                       const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%03d%s", stem, t, ext);
  return (fs::path(dir) / buf).string();
}

Point3 to_point(const std::vector<double>& v) { return {v[0], v[1], v[2]}; }

// Flag mirrors of the RunConfig fields a command may override. Values here
// are defaults for the help text; only flags the user actually passed are
// merged over the config file.
struct TrackArgs {
  int nk = 3;
  double p_th = 0.5;
  std::string constraints = "out,bal,loop";
  std::string sigma_mode = "per-frame";
  double sigma_x = 1.0;
  double sigma_f = 1.0;
  double ball_factor = 3.0;
  std::string feature = "position";
  int patch_radius = 5;
  int bins = 16;
};

void add_tracking_flags(CLI::App* sub, TrackArgs& a) {
  sub->add_option("--nk", a.nk, "candidate edges per node")
      ->check(CLI::PositiveNumber);
  sub->add_option("--p-th", a.p_th, "edge weight threshold in [0,1]");
  sub->add_option("--constraints", a.constraints, "constraint set label")
      ->check(CLI::IsMember({"out", "out,in", "out,bal", "out,in,bal",
                             "out,bal,loop", "out,in,bal,loop"}));
  sub->add_option("--sigma-mode", a.sigma_mode, "sigma estimation mode")
      ->check(CLI::IsMember({"per-frame", "fixed"}));
  sub->add_option("--sigma-x", a.sigma_x, "fixed spatial sigma");
  sub->add_option("--sigma-f", a.sigma_f, "fixed feature sigma");
  sub->add_option("--ball-factor", a.ball_factor,
                  "candidate ball radius in RMS NN distances");
  sub->add_option("--feature", a.feature, "feature provider")
      ->check(CLI::IsMember({"position", "patch", "gradhist"}));
  sub->add_option("--patch-radius", a.patch_radius, "patch radius in voxels")
      ->check(CLI::PositiveNumber);
  sub->add_option("--bins", a.bins, "gradient histogram bins")
      ->check(CLI::PositiveNumber);
}

void apply_tracking_flags(const CLI::App* sub, const TrackArgs& a,
                          RunConfig& cfg) {
  if (sub->count("--nk")) cfg.tracking.nk = a.nk;
  if (sub->count("--p-th")) cfg.tracking.p_th = a.p_th;
  if (sub->count("--constraints"))
    cfg.tracking.constraints = constraint_set_from_label(a.constraints);
  if (sub->count("--sigma-mode"))
    cfg.tracking.sigma_mode = a.sigma_mode == "fixed"
                                  ? SigmaMode::Fixed
                                  : SigmaMode::PerFrameStddev;
  if (sub->count("--sigma-x")) cfg.tracking.sigma_x = a.sigma_x;
  if (sub->count("--sigma-f")) cfg.tracking.sigma_f = a.sigma_f;
  if (sub->count("--ball-factor"))
    cfg.tracking.candidate_ball_factor = a.ball_factor;
  if (sub->count("--feature")) cfg.feature = a.feature;
  if (sub->count("--patch-radius")) cfg.patch_radius = a.patch_radius;
  if (sub->count("--bins")) cfg.bins = a.bins;
}

struct RegArgs {
  double lambda_sparse = 1e-3;
  double lambda_div = 1e-2;
  double lambda_grad = 1e-3;
  double support_radius = 0.0;  // 0 = derive from center spacing
};

void add_reg_flags(CLI::App* sub, RegArgs& a) {
  sub->add_option("--lambda-sparse", a.lambda_sparse, "L1 coefficient weight");
  sub->add_option("--lambda-div", a.lambda_div, "divergence penalty weight");
  sub->add_option("--lambda-grad", a.lambda_grad, "gradient penalty weight");
  sub->add_option("--support-radius", a.support_radius,
                  "kernel support radius (0 = auto)");
}

void apply_reg_flags(const CLI::App* sub, const RegArgs& a, RunConfig& cfg) {
  if (sub->count("--lambda-sparse"))
    cfg.regularization.lambda_sparse = a.lambda_sparse;
  if (sub->count("--lambda-div")) cfg.regularization.lambda_div = a.lambda_div;
  if (sub->count("--lambda-grad"))
    cfg.regularization.lambda_grad = a.lambda_grad;
}

RunConfig load_config(const std::string& path) {
  return path.empty() ? RunConfig{} : read_run_config(path);
}

std::unique_ptr<FeatureProvider> provider_for(const RunConfig& cfg) {
  return make_feature_provider(cfg.feature, cfg.patch_radius, cfg.bins);
}

std::vector<VolumeImage> load_volumes(const std::string& dir, int frames) {
  std::vector<VolumeImage> vols;
  vols.reserve(frames);
  for (int t = 1; t <= frames; ++t)
    vols.push_back(read_volume(frame_file(dir, "vol", t, ".vol")));
  return vols;
}

GroundTruth load_truth(const std::string& truth_path,
                       const std::string& meta_path, int es_override) {
  GroundTruth truth = read_ground_truth_csv(truth_path);
  if (!meta_path.empty()) truth.es_frame = read_es_frame(meta_path);
  if (es_override > 0) truth.es_frame = es_override;
  return truth;
}

// Tracked displacement samples for frame t relative to frame 1. Trajectories
// that do not span every frame are skipped and counted.
std::vector<RbfSample> samples_for_frame(
    const FrameSequence& seq, const std::vector<Trajectory>& trajectories,
    int t, int* skipped) {
  std::vector<RbfSample> samples;
  for (const Trajectory& traj : trajectories) {
    if (static_cast<int>(traj.points.size()) != seq.frame_count()) {
      if (skipped) ++*skipped;
      continue;
    }
    Point3 start = seq.point(traj.points[0]);
    Point3 now = seq.point(traj.points[t - 1]);
    samples.push_back({start, now - start});
  }
  return samples;
}

RbfModel fit_frame(const std::vector<RbfSample>& samples, const RunConfig& cfg,
                   double support_override) {
  std::vector<Point3> centers;
  centers.reserve(samples.size());
  for (const RbfSample& s : samples) centers.push_back(s.position);
  double radius = support_override > 0 ? support_override
                                       : default_support_radius(centers);
  auto grid = default_collocation_grid(centers);
  return fit_rbf(samples, centers, radius, cfg.regularization, grid);
}

int run(int argc, char** argv) {
  CLI::App app{
      "flowtrack: periodic point-set tracking, dense displacement fields, "
      "and strain"};
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads,
                 "cap for parallel sections (0 = no cap); the pipeline "
                 "currently runs sequentially, so any cap is honored")
      ->check(CLI::NonNegativeNumber);

  // generate ---------------------------------------------------------------
  auto* gen = app.add_subcommand("generate", "write a synthetic phantom");
  std::string gen_phantom = "shells";
  std::string gen_out;
  ShellPhantomSpec shells;
  Toy1dSpec toy;
  gen->add_option("--phantom", gen_phantom, "phantom kind")
      ->check(CLI::IsMember({"shells", "toy1d"}));
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--frames", shells.frames, "frames per cycle");
  gen->add_option("--z-fr", shells.z_fr, "axial bands");
  gen->add_option("--theta-fr", shells.theta_fr, "angular rays");
  gen->add_option("--contraction", shells.contraction_amplitude,
                  "radial contraction amplitude");
  gen->add_option("--twist", shells.twist_amplitude, "twist amplitude (rad)");
  gen->add_option("--noise", shells.noise_sigma, "observation noise sigma");
  gen->add_option("--seed", shells.seed, "random seed");
  gen->add_flag("--volumes", shells.volumes, "also write intensity volumes");
  gen->add_option("--points", toy.points_per_frame, "toy1d points per frame");
  gen->add_flag("--crossing", toy.crossing, "toy1d crossing trajectories");
  gen->callback([&] {
    fs::create_directories(gen_out);
    FrameSequence seq;
    GroundTruth truth;
    std::vector<VolumeImage> vols;
    if (gen_phantom == "toy1d") {
      toy.frames = gen->count("--frames") ? shells.frames : toy.frames;
      toy.noise = gen->count("--noise") ? shells.noise_sigma : toy.noise;
      toy.seed = gen->count("--seed") ? shells.seed : toy.seed;
      auto [s, g] = gen_toy_1d(toy);
      seq = std::move(s);
      truth = std::move(g);
    } else {
      ShellPhantom phantom = gen_cyclic_shells(shells);
      seq = std::move(phantom.sequence);
      truth = std::move(phantom.truth);
      vols = std::move(phantom.volumes);
    }
    write_sequence_csv((fs::path(gen_out) / "points.csv").string(), seq);
    write_ground_truth_csv((fs::path(gen_out) / "truth.csv").string(), truth);
    write_phantom_meta_json((fs::path(gen_out) / "meta.json").string(), truth);
    for (size_t t = 0; t < vols.size(); ++t)
      write_volume(frame_file(gen_out, "vol", static_cast<int>(t) + 1, ".vol"),
                   vols[t]);
  });

  // track --------------------------------------------------------------
  auto* track = app.add_subcommand("track", "build network and solve flow");
  std::string track_config, track_in, track_out, track_truth, track_meta;
  std::string track_report, track_volumes, track_network;
  int track_es = 0;
  TrackArgs track_args;
  track->add_option("--config", track_config, "JSON config file");
  track->add_option("--in", track_in, "input points CSV")->required();
  track->add_option("--out", track_out, "output trajectories JSON")
      ->required();
  track->add_option("--truth", track_truth, "ground-truth CSV (for metrics)");
  track->add_option("--meta", track_meta, "phantom metadata JSON");
  track->add_option("--es-frame", track_es, "end-systole frame override");
  track->add_option("--report", track_report,
                    "metrics JSON path (default <out>.report.json)");
  track->add_option("--volumes", track_volumes, "directory with vol_###.vol");
  track->add_option("--network-csv", track_network, "debug edge dump");
  add_tracking_flags(track, track_args);
  track->callback([&] {
    RunConfig cfg = load_config(track_config);
    apply_tracking_flags(track, track_args, cfg);
    FrameSequence seq =
        read_sequence_csv(track_in, cfg.tracking.constraints.loop);
    auto provider = provider_for(cfg);
    std::vector<VolumeImage> vols;
    const std::vector<VolumeImage>* images = nullptr;
    if (!track_volumes.empty()) {
      vols = load_volumes(track_volumes, seq.frame_count());
      images = &vols;
    } else if (provider->needs_image()) {
      throw IoError("feature '" + cfg.feature + "' requires --volumes DIR");
    }
    FlowNetwork network = build_network(seq, *provider, images, cfg.tracking);
    network = threshold_edges(network, cfg.tracking.p_th);
    if (!track_network.empty()) write_network_csv(track_network, network);
    FlowSolution solution = solve_flow(network, cfg.tracking.constraints);
    auto trajectories = extract_trajectories(solution, network);
    if (trajectories.empty())
      std::cerr << "warning: no trajectories survived (threshold too "
                   "aggressive?)\n";
    write_trajectories_json(track_out, trajectories, solution);
    if (!track_truth.empty()) {
      GroundTruth truth = load_truth(track_truth, track_meta, track_es);
      TrackingErrorReport report = tracking_error(trajectories, seq, truth);
      std::string path = track_report.empty() ? track_out + ".report.json"
                                              : track_report;
      write_report_json(path, report);
    }
  });

  // densify ------------------------------------------------------------
  auto* densify = app.add_subcommand(
      "densify", "fit per-frame displacement fields from trajectories");
  std::string den_config, den_in, den_traj, den_out;
  int den_frame = 0;
  RegArgs den_reg;
  densify->add_option("--config", den_config, "JSON config file");
  densify->add_option("--in", den_in, "input points CSV")->required();
  densify->add_option("--trajectories", den_traj, "trajectories JSON")
      ->required();
  densify->add_option("--out", den_out, "output directory")->required();
  densify->add_option("--frame", den_frame, "single frame (0 = all)")
      ->check(CLI::NonNegativeNumber);
  add_reg_flags(densify, den_reg);
  densify->callback([&] {
    RunConfig cfg = load_config(den_config);
    apply_reg_flags(densify, den_reg, cfg);
    FrameSequence seq = read_sequence_csv(den_in);
    TrajectoryFile file = read_trajectories_json(den_traj);
    fs::create_directories(den_out);
    int skipped = 0;
    int lo = den_frame > 0 ? den_frame : 2;
    int hi = den_frame > 0 ? den_frame : seq.frame_count();
    for (int t = lo; t <= hi; ++t) {
      auto samples = samples_for_frame(seq, file.trajectories, t, &skipped);
      if (samples.empty()) throw Error("no full-length trajectories to fit");
      RbfModel model = fit_frame(samples, cfg, den_reg.support_radius);
      write_rbf_json(frame_file(den_out, "rbf", t, ".json"), model);
      skipped = 0;
    }
  });

  // strain -------------------------------------------------------------
  auto* strain = app.add_subcommand(
      "strain", "Lagrangian strain at tracked material points");
  std::string str_config, str_in, str_traj, str_out;
  int str_frame = 0;
  RegArgs str_reg;
  std::vector<double> str_axis, str_origin;
  strain->add_option("--config", str_config, "JSON config file");
  strain->add_option("--in", str_in, "input points CSV")->required();
  strain->add_option("--trajectories", str_traj, "trajectories JSON")
      ->required();
  strain->add_option("--out", str_out, "output strain CSV")->required();
  strain->add_option("--frame", str_frame, "single frame (0 = all)")
      ->check(CLI::NonNegativeNumber);
  strain->add_option("--long-axis", str_axis, "LV long axis x y z")
      ->expected(3);
  strain->add_option("--origin", str_origin, "LV axis origin x y z")
      ->expected(3);
  add_reg_flags(strain, str_reg);
  strain->callback([&] {
    RunConfig cfg = load_config(str_config);
    apply_reg_flags(strain, str_reg, cfg);
    if (strain->count("--long-axis")) cfg.axes.long_axis = to_point(str_axis);
    if (strain->count("--origin"))
      cfg.axes.apex_base_origin = to_point(str_origin);
    FrameSequence seq = read_sequence_csv(str_in);
    TrajectoryFile file = read_trajectories_json(str_traj);
    std::vector<Point3> queries;
    for (const Trajectory& traj : file.trajectories)
      if (static_cast<int>(traj.points.size()) == seq.frame_count())
        queries.push_back(seq.point(traj.points[0]));
    if (queries.empty()) throw Error("no full-length trajectories to fit");
    std::vector<std::pair<int, StrainSample>> rows;
    int lo = str_frame > 0 ? str_frame : 2;
    int hi = str_frame > 0 ? str_frame : seq.frame_count();
    for (int t = lo; t <= hi; ++t) {
      auto samples = samples_for_frame(seq, file.trajectories, t, nullptr);
      RbfModel model = fit_frame(samples, cfg, str_reg.support_radius);
      std::vector<Violation> skipped;
      auto field = strain_field(model, cfg.axes, queries, &skipped);
      if (!skipped.empty())
        std::cerr << "warning: frame " << t << ": " << skipped.size()
                  << " on-axis queries skipped\n";
      for (const StrainSample& s : field) rows.emplace_back(t, s);
    }
    write_strain_csv(str_out, rows);
  });

  // evaluate -----------------------------------------------------------
  auto* evaluate = app.add_subcommand(
      "evaluate", "tracking error of trajectories against ground truth");
  std::string eval_in, eval_traj, eval_truth, eval_meta, eval_out;
  int eval_es = 0;
  evaluate->add_option("--in", eval_in, "input points CSV")->required();
  evaluate->add_option("--trajectories", eval_traj, "trajectories JSON")
      ->required();
  evaluate->add_option("--truth", eval_truth, "ground-truth CSV")->required();
  evaluate->add_option("--meta", eval_meta, "phantom metadata JSON");
  evaluate->add_option("--es-frame", eval_es, "end-systole frame override");
  evaluate->add_option("--out", eval_out, "output report JSON")->required();
  evaluate->callback([&] {
    FrameSequence seq = read_sequence_csv(eval_in);
    TrajectoryFile file = read_trajectories_json(eval_traj);
    GroundTruth truth = load_truth(eval_truth, eval_meta, eval_es);
    write_report_json(eval_out,
                      tracking_error(file.trajectories, seq, truth));
  });

  // ablate -------------------------------------------------------------
  auto* ablate = app.add_subcommand(
      "ablate", "tracking error per constraint set on one shared network");
  std::string abl_config, abl_in, abl_truth, abl_meta, abl_out, abl_volumes;
  int abl_es = 0;
  TrackArgs abl_args;
  ablate->add_option("--config", abl_config, "JSON config file");
  ablate->add_option("--in", abl_in, "input points CSV")->required();
  ablate->add_option("--truth", abl_truth, "ground-truth CSV")->required();
  ablate->add_option("--meta", abl_meta, "phantom metadata JSON");
  ablate->add_option("--es-frame", abl_es, "end-systole frame override");
  ablate->add_option("--out", abl_out, "output ablation CSV")->required();
  ablate->add_option("--volumes", abl_volumes, "directory with vol_###.vol");
  add_tracking_flags(ablate, abl_args);
  ablate->callback([&] {
    RunConfig cfg = load_config(abl_config);
    apply_tracking_flags(ablate, abl_args, cfg);
    FrameSequence seq = read_sequence_csv(abl_in, true);
    GroundTruth truth = load_truth(abl_truth, abl_meta, abl_es);
    auto provider = provider_for(cfg);
    std::vector<VolumeImage> vols;
    const std::vector<VolumeImage>* images = nullptr;
    if (!abl_volumes.empty()) {
      vols = load_volumes(abl_volumes, seq.frame_count());
      images = &vols;
    } else if (provider->needs_image()) {
      throw IoError("feature '" + cfg.feature + "' requires --volumes DIR");
    }
    auto rows = constraint_ablation(seq, truth, *provider, images,
                                    cfg.tracking);
    write_ablation_csv(abl_out, rows);
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
