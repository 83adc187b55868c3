#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "flowtrack/io.hpp"
#include "json.hpp"

using namespace flowtrack;

namespace {

std::string tmp_path(const std::string& name) { return "tmp_io_" + name; }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

FrameSequence awkward_sequence() {
  FrameSequence seq;
  seq.frames = {{{0.1, 1.0 / 3.0, -2.5e-17}, {1e300, 3.141592653589793, 0.0}},
                {{2.2250738585072014e-308, -7.0, 42.5}}};
  return seq;
}

}  // namespace

TEST_CASE("sequence CSV round-trips exactly") {
  const std::string path = tmp_path("seq.csv");
  FrameSequence seq = awkward_sequence();
  write_sequence_csv(path, seq);
  FrameSequence back = read_sequence_csv(path);
  CHECK(!back.periodic);
  REQUIRE(back.frame_count() == 2);
  REQUIRE(back.point_count(1) == 2);
  REQUIRE(back.point_count(2) == 1);
  for (int t = 1; t <= 2; ++t)
    for (int i = 1; i <= back.point_count(t); ++i) {
      const Point3& a = seq.point({t, i});
      const Point3& b = back.point({t, i});
      CHECK(a.x == b.x);
      CHECK(a.y == b.y);
      CHECK(a.z == b.z);
    }
  CHECK(read_sequence_csv(path, true).periodic);
  CHECK(read_text(path).rfind("t,i,x,y,z\n", 0) == 0);
}

TEST_CASE("sequence CSV rejects malformed input") {
  const std::string path = tmp_path("seq_bad.csv");
  CHECK_THROWS_AS(read_sequence_csv(tmp_path("does_not_exist.csv")), IoError);

  write_text(path, "x,y,z\n1,1,0,0,0\n");
  CHECK_THROWS_AS(read_sequence_csv(path), IoError);
  write_text(path, "t,i,x,y,z\n1,1,0,0\n");
  CHECK_THROWS_AS(read_sequence_csv(path), IoError);
  write_text(path, "t,i,x,y,z\n1,1,zero,0,0\n");
  CHECK_THROWS_AS(read_sequence_csv(path), IoError);
  write_text(path, "t,i,x,y,z\n2,1,0,0,0\n");
  CHECK_THROWS_AS(read_sequence_csv(path), IoError);
  write_text(path, "t,i,x,y,z\n1,1,0,0,0\n1,3,1,0,0\n");
  CHECK_THROWS_AS(read_sequence_csv(path), IoError);
  write_text(path, "t,i,x,y,z\n1,1,0,0,0\n1,1,1,0,0\n");
  CHECK_THROWS_AS(read_sequence_csv(path), IoError);
  write_text(path, "t,i,x,y,z\n");
  CHECK_THROWS_AS(read_sequence_csv(path), IoError);
}

TEST_CASE("ground truth CSV round-trips") {
  const std::string path = tmp_path("truth.csv");
  GroundTruth truth;
  truth.positions = {{{0, 0.25, 1}, {0.5, 0.25, 1}},
                     {{4, -1, 2}, {4.5, -1, 2}}};
  write_ground_truth_csv(path, truth);
  GroundTruth back = read_ground_truth_csv(path);
  REQUIRE(back.trajectory_count() == 2);
  REQUIRE(back.frame_count() == 2);
  for (int j = 0; j < 2; ++j)
    for (int t = 0; t < 2; ++t)
      CHECK(norm(back.positions[j][t] - truth.positions[j][t]) == 0.0);

  write_text(path, "traj,t,x,y,z\n1,1,0,0,0\n1,2,0,0,0\n2,1,0,0,0\n");
  CHECK_THROWS_AS(read_ground_truth_csv(path), IoError);  // ragged spans
  write_text(path, "traj,t,x,y,z\n1,1,0,0,0\n3,1,0,0,0\n");
  CHECK_THROWS_AS(read_ground_truth_csv(path), IoError);  // id gap
}

TEST_CASE("phantom metadata carries the ES frame") {
  const std::string path = tmp_path("meta.json");
  GroundTruth truth;
  truth.positions.assign(3, std::vector<Point3>(4));
  truth.es_frame = 2;
  write_phantom_meta_json(path, truth);
  CHECK(read_es_frame(path) == 2);

  write_text(path, "{\"frames\": 4}\n");
  CHECK_THROWS_AS(read_es_frame(path), IoError);
  write_text(path, "{\"es_frame\": 2.5}\n");
  CHECK_THROWS_AS(read_es_frame(path), IoError);
  write_text(path, "not json");
  CHECK_THROWS_AS(read_es_frame(path), IoError);
  CHECK_THROWS_AS(read_es_frame(tmp_path("missing_meta.json")), IoError);
}

TEST_CASE("volume files round-trip exactly") {
  const std::string path = tmp_path("vol.vol");
  VolumeImage img;
  img.nx = 3;
  img.ny = 2;
  img.nz = 4;
  img.sx = 0.5;
  img.sy = 1.25;
  img.sz = 2.0;
  img.voxels.resize(24);
  for (size_t v = 0; v < img.voxels.size(); ++v)
    img.voxels[v] = static_cast<float>(0.37 * v - 3.0);
  write_volume(path, img);
  VolumeImage back = read_volume(path);
  CHECK(back.nx == 3);
  CHECK(back.ny == 2);
  CHECK(back.nz == 4);
  CHECK(back.sx == 0.5);
  CHECK(back.sy == 1.25);
  CHECK(back.sz == 2.0);
  CHECK(back.voxels == img.voxels);
  CHECK(read_text(path).rfind("dims 3 2 4\nspacing 0.5 1.25 2\n", 0) == 0);
}

TEST_CASE("volume reader rejects bad files") {
  const std::string path = tmp_path("vol_bad.vol");
  write_text(path, "dim 3 2 4\n");
  CHECK_THROWS_AS(read_volume(path), IoError);
  write_text(path, "dims 3 2 4\nspacing 1 1 1\nxx");  // truncated payload
  CHECK_THROWS_AS(read_volume(path), IoError);
  write_text(path, "dims 0 2 4\nspacing 1 1 1\n");
  CHECK_THROWS_AS(read_volume(path), IoError);
  write_text(path, "dims 3 2 4\nmargin 1 1 1\n");
  CHECK_THROWS_AS(read_volume(path), IoError);
  CHECK_THROWS_AS(read_volume(tmp_path("missing.vol")), IoError);
}

TEST_CASE("trajectory JSON round-trips paths and metadata") {
  const std::string path = tmp_path("traj.json");
  std::vector<Trajectory> tracks(2);
  tracks[0].points = {{1, 1}, {2, 2}, {3, 1}};
  tracks[0].loop_closure = PointId{1, 1};
  tracks[1].points = {{1, 2}, {2, 1}, {3, 2}};
  FlowSolution sol;
  sol.constraints = ConstraintSet{true, false, true, true};
  sol.objective = 3.25;
  sol.stats.method = "circulation";
  sol.stats.iterations = 17;
  write_trajectories_json(path, tracks, sol);

  TrajectoryFile file = read_trajectories_json(path);
  CHECK(file.constraints == "out,bal,loop");
  CHECK(file.objective == 3.25);
  REQUIRE(file.trajectories.size() == 2u);
  CHECK(file.trajectories[0].points == tracks[0].points);
  CHECK(file.trajectories[1].points == tracks[1].points);
  REQUIRE(file.trajectories[0].loop_closure.has_value());
  CHECK(*file.trajectories[0].loop_closure == PointId{1, 1});
  CHECK(!file.trajectories[1].loop_closure.has_value());

  nlohmann::json j = nlohmann::json::parse(read_text(path));
  CHECK(j["stats"]["method"] == "circulation");
  CHECK(j["stats"]["iterations"] == 17);
}

TEST_CASE("trajectory JSON rejects malformed documents") {
  const std::string path = tmp_path("traj_bad.json");
  write_text(path, "{\"trajectories\": [], \"surprise\": 1}\n");
  CHECK_THROWS_AS(read_trajectories_json(path), IoError);
  write_text(path, "{\"constraints\": \"out\"}\n");
  CHECK_THROWS_AS(read_trajectories_json(path), IoError);
  write_text(path, "{\"trajectories\": [{\"points\": [[1]]}]}\n");
  CHECK_THROWS_AS(read_trajectories_json(path), IoError);
  write_text(path, "{\"trajectories\": [{\"loop\": [1, 1]}]}\n");
  CHECK_THROWS_AS(read_trajectories_json(path), IoError);
}

TEST_CASE("RBF JSON round-trips exactly") {
  const std::string path = tmp_path("rbf.json");
  RbfModel model;
  model.support_radius = 2.75;
  model.centers = {{0.1, -0.2, 0.3}, {1e-7, 12.0, 1.0 / 7.0}};
  model.coefficients = {{-1.5, 0.25, 0.0}, {0.0, 1e-12, 9.0}};
  write_rbf_json(path, model);
  RbfModel back = read_rbf_json(path);
  CHECK(back.support_radius == 2.75);
  REQUIRE(back.centers.size() == 2u);
  for (size_t k = 0; k < 2; ++k) {
    CHECK(norm(back.centers[k] - model.centers[k]) == 0.0);
    CHECK(norm(back.coefficients[k] - model.coefficients[k]) == 0.0);
  }
}

TEST_CASE("RBF JSON rejects malformed documents") {
  const std::string path = tmp_path("rbf_bad.json");
  write_text(path, R"({"kernel": "gauss", "support_radius": 1,
                       "centers": [], "coefficients": []})");
  CHECK_THROWS_AS(read_rbf_json(path), IoError);
  write_text(path, R"({"kernel": "wendland_c2", "support_radius": 0,
                       "centers": [], "coefficients": []})");
  CHECK_THROWS_AS(read_rbf_json(path), IoError);
  write_text(path, R"({"kernel": "wendland_c2", "support_radius": 1,
                       "centers": [[0,0,0]], "coefficients": []})");
  CHECK_THROWS_AS(read_rbf_json(path), IoError);
  write_text(path, R"({"kernel": "wendland_c2", "support_radius": 1,
                       "centers": [], "coefficients": [], "extra": 0})");
  CHECK_THROWS_AS(read_rbf_json(path), IoError);
}

TEST_CASE("strain CSV has the documented layout") {
  const std::string path = tmp_path("strain.csv");
  StrainSample s;
  s.position = {1.0, 2.0, 3.0};
  s.radial = 0.5;
  s.circumferential = -0.25;
  s.longitudinal = 0.0;
  write_strain_csv(path, {{2, s}});
  CHECK(read_text(path) == "t,x,y,z,Err,Ecc,Ell\n2,1,2,3,0.5,-0.25,0\n");
}

TEST_CASE("report JSON carries the six summary numbers") {
  const std::string path = tmp_path("report.json");
  TrackingErrorReport r{0.5, 0.25, 0.75, 0.1, 0.9, 0.0};
  write_report_json(path, r);
  nlohmann::json j = nlohmann::json::parse(read_text(path));
  CHECK(j["overall"]["median"] == 0.5);
  CHECK(j["overall"]["iqr"] == 0.25);
  CHECK(j["es"]["median"] == 0.75);
  CHECK(j["es"]["iqr"] == 0.1);
  CHECK(j["ed"]["median"] == 0.9);
  CHECK(j["ed"]["iqr"] == 0.0);
}

TEST_CASE("ablation CSV quotes the constraint label") {
  const std::string path = tmp_path("ablation.csv");
  AblationRow row;
  row.constraints = ConstraintSet{true, false, true, true};
  row.report = {1.5, 0.0, 2.0, 0.25, 3.0, 0.5};
  write_ablation_csv(path, {row});
  CHECK(read_text(path) ==
        "constraints,overall_median,overall_iqr,es_median,es_iqr,"
        "ed_median,ed_iqr\n"
        "\"out,bal,loop\",1.5,0,2,0.25,3,0.5\n");
}

TEST_CASE("network CSV lists every edge") {
  const std::string path = tmp_path("network.csv");
  FlowNetwork net;
  net.edges = {{EdgeKind::Source, kSourceNode, {1, 1}, 1.0},
               {EdgeKind::Temporal, {1, 1}, {2, 1}, 0.25},
               {EdgeKind::Loop, {2, 1}, {1, 1}, 0.125}};
  write_network_csv(path, net);
  CHECK(read_text(path) ==
        "kind,from_t,from_i,to_t,to_i,weight\n"
        "source,0,0,1,1,1\n"
        "temporal,1,1,2,1,0.25\n"
        "loop,2,1,1,1,0.125\n");
}

TEST_CASE("run config round-trips through JSON") {
  const std::string path = tmp_path("config.json");
  RunConfig cfg;
  write_run_config(path, cfg);
  CHECK(read_run_config(path) == cfg);

  cfg.tracking.nk = 7;
  cfg.tracking.p_th = 0.25;
  cfg.tracking.z_fr = 11;
  cfg.tracking.theta_fr = 9;
  cfg.tracking.constraints = ConstraintSet{true, true, false, false};
  cfg.tracking.sigma_mode = SigmaMode::Fixed;
  cfg.tracking.sigma_x = 2.5;
  cfg.tracking.sigma_f = 0.75;
  cfg.tracking.candidate_ball_factor = 4.5;
  cfg.regularization = {0.1, 0.2, 0.3};
  cfg.sampling.z_fr = 13;
  cfg.sampling.theta_fr = 5;
  cfg.sampling.long_axis = {1, 0, 0};
  cfg.sampling.axis_origin = {1, 2, 3};
  cfg.axes.long_axis = {0, 1, 0};
  cfg.axes.apex_base_origin = {4, 5, 6};
  cfg.seed = 42;
  cfg.feature = "gradhist";
  cfg.patch_radius = 3;
  cfg.bins = 8;
  write_run_config(path, cfg);
  RunConfig back = read_run_config(path);
  CHECK(back == cfg);

  // a partial document keeps defaults for what it omits
  write_text(path, "{\"seed\": 5, \"tracking\": {\"nk\": 2}}\n");
  RunConfig partial = read_run_config(path);
  CHECK(partial.seed == 5u);
  CHECK(partial.tracking.nk == 2);
  CHECK(partial.tracking.p_th == 0.5);
  CHECK(partial.feature == "position");
}

TEST_CASE("run config rejects unknown keys everywhere") {
  const std::string path = tmp_path("config_bad.json");
  write_text(path, "{\"sede\": 5}\n");
  CHECK_THROWS_AS(read_run_config(path), IoError);
  write_text(path, "{\"tracking\": {\"nkk\": 2}}\n");
  CHECK_THROWS_AS(read_run_config(path), IoError);
  write_text(path, "{\"regularization\": {\"lambda\": 2}}\n");
  CHECK_THROWS_AS(read_run_config(path), IoError);
  write_text(path, "{\"sampling\": {\"zfr\": 2}}\n");
  CHECK_THROWS_AS(read_run_config(path), IoError);
  write_text(path, "{\"axes\": {\"apex\": [0,0,0]}}\n");
  CHECK_THROWS_AS(read_run_config(path), IoError);
  write_text(path, "{\"tracking\": {\"sigma_mode\": \"auto\"}}\n");
  CHECK_THROWS_AS(read_run_config(path), IoError);
  write_text(path, "{\"tracking\": {\"constraints\": \"out,loop\"}}\n");
  CHECK_THROWS(read_run_config(path));
  write_text(path, "not json at all");
  CHECK_THROWS_AS(read_run_config(path), IoError);
  CHECK_THROWS_AS(read_run_config(tmp_path("missing_config.json")), IoError);
}

TEST_CASE("writers report unwritable paths") {
  FrameSequence seq = awkward_sequence();
  CHECK_THROWS_AS(write_sequence_csv("no_such_dir/x.csv", seq), IoError);
  RunConfig cfg;
  CHECK_THROWS_AS(write_run_config("no_such_dir/x.json", cfg), IoError);
}
