#include "flowtrack/io.hpp"

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

namespace flowtrack {
namespace {

using nlohmann::json;

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::string& path, bool binary = false) {
  std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
  if (!out) throw IoError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path, bool binary = false) {
  std::ifstream in(path, binary ? std::ios::binary : std::ios::in);
  if (!in) throw IoError("cannot open for reading: " + path);
  return in;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

double to_double(const std::string& s, const std::string& path) {
  try {
    size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad numeric field '" + s + "' in " + path);
  }
}

int to_int(const std::string& s, const std::string& path) {
  try {
    size_t pos = 0;
    int v = std::stoi(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw IoError("bad integer field '" + s + "' in " + path);
  }
}

// Strips a trailing carriage return so CRLF inputs parse too.
bool next_line(std::istream& in, std::string& line) {
  if (!std::getline(in, line)) return false;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return true;
}

void expect_header(std::istream& in, const std::string& want,
                   const std::string& path) {
  std::string line;
  if (!next_line(in, line) || line != want)
    throw IoError("expected header '" + want + "' in " + path);
}

json load_json(const std::string& path) {
  auto in = open_in(path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("invalid JSON in " + path + ": " + e.what());
  }
  return j;
}

void dump_json(const std::string& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path);
}

void reject_unknown_keys(const json& j,
                         std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* key : allowed)
      if (it.key() == key) known = true;
    if (!known)
      throw IoError("unknown key '" + it.key() + "' in " + where);
  }
}

json point_to_json(const Point3& p) { return json::array({p.x, p.y, p.z}); }

Point3 point_from_json(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 3)
    throw IoError("expected [x, y, z] in " + where);
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

const char* kind_name(EdgeKind kind) {
  switch (kind) {
    case EdgeKind::Source: return "source";
    case EdgeKind::Temporal: return "temporal";
    case EdgeKind::Loop: return "loop";
  }
  return "?";
}

}  // namespace

void write_sequence_csv(const std::string& path, const FrameSequence& seq) {
  auto out = open_out(path);
  out << "t,i,x,y,z\n";
  for (size_t t = 0; t < seq.frames.size(); ++t) {
    const auto& frame = seq.frames[t];
    for (size_t i = 0; i < frame.size(); ++i) {
      const Point3& p = frame[i];
      out << (t + 1) << ',' << (i + 1) << ',' << fmt(p.x) << ',' << fmt(p.y)
          << ',' << fmt(p.z) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

FrameSequence read_sequence_csv(const std::string& path, bool periodic) {
  auto in = open_in(path);
  expect_header(in, "t,i,x,y,z", path);
  std::map<int, std::map<int, Point3>> rows;
  std::string line;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 5) throw IoError("expected 5 fields per row in " + path);
    int t = to_int(f[0], path);
    int i = to_int(f[1], path);
    Point3 p{to_double(f[2], path), to_double(f[3], path),
             to_double(f[4], path)};
    if (!rows[t].emplace(i, p).second)
      throw IoError("duplicate point id in " + path);
  }
  if (rows.empty()) throw IoError("no data rows in " + path);

  FrameSequence seq;
  seq.periodic = periodic;
  int expect_t = 1;
  for (const auto& [t, frame] : rows) {
    if (t != expect_t++)
      throw IoError("frame ids must be contiguous from 1 in " + path);
    std::vector<Point3> pts;
    int expect_i = 1;
    for (const auto& [i, p] : frame) {
      if (i != expect_i++)
        throw IoError("point ids must be contiguous from 1 in " + path);
      pts.push_back(p);
    }
    seq.frames.push_back(std::move(pts));
  }
  return seq;
}

void write_ground_truth_csv(const std::string& path,
                            const GroundTruth& truth) {
  auto out = open_out(path);
  out << "traj,t,x,y,z\n";
  for (size_t j = 0; j < truth.positions.size(); ++j) {
    const auto& walk = truth.positions[j];
    for (size_t t = 0; t < walk.size(); ++t) {
      const Point3& p = walk[t];
      out << (j + 1) << ',' << (t + 1) << ',' << fmt(p.x) << ',' << fmt(p.y)
          << ',' << fmt(p.z) << '\n';
    }
  }
  if (!out) throw IoError("write failed: " + path);
}

GroundTruth read_ground_truth_csv(const std::string& path) {
  auto in = open_in(path);
  expect_header(in, "traj,t,x,y,z", path);
  std::map<int, std::map<int, Point3>> rows;
  std::string line;
  while (next_line(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv(line);
    if (f.size() != 5) throw IoError("expected 5 fields per row in " + path);
    int j = to_int(f[0], path);
    int t = to_int(f[1], path);
    rows[j][t] = Point3{to_double(f[2], path), to_double(f[3], path),
                        to_double(f[4], path)};
  }
  if (rows.empty()) throw IoError("no data rows in " + path);

  GroundTruth truth;
  int expect_j = 1;
  size_t frames = 0;
  for (const auto& [j, walk] : rows) {
    if (j != expect_j++)
      throw IoError("trajectory ids must be contiguous from 1 in " + path);
    std::vector<Point3> pts;
    int expect_t = 1;
    for (const auto& [t, p] : walk) {
      if (t != expect_t++)
        throw IoError("frame ids must be contiguous from 1 in " + path);
      pts.push_back(p);
    }
    if (frames == 0) frames = pts.size();
    if (pts.size() != frames)
      throw IoError("trajectories must span the same frames in " + path);
    truth.positions.push_back(std::move(pts));
  }
  return truth;
}

void write_phantom_meta_json(const std::string& path,
                             const GroundTruth& truth) {
  json j;
  j["es_frame"] = truth.es_frame;
  j["frames"] = truth.frame_count();
  j["trajectories"] = truth.trajectory_count();
  dump_json(path, j);
}

int read_es_frame(const std::string& meta_path) {
  json j = load_json(meta_path);
  if (!j.contains("es_frame") || !j["es_frame"].is_number_integer())
    throw IoError("missing integer 'es_frame' in " + meta_path);
  return j["es_frame"].get<int>();
}

void write_volume(const std::string& path, const VolumeImage& img) {
  img.validate();
  auto out = open_out(path, true);
  out << "dims " << img.nx << ' ' << img.ny << ' ' << img.nz << '\n';
  out << "spacing " << fmt(img.sx) << ' ' << fmt(img.sy) << ' ' << fmt(img.sz)
      << '\n';
  out.write(reinterpret_cast<const char*>(img.voxels.data()),
            static_cast<std::streamsize>(img.voxels.size() * sizeof(float)));
  if (!out) throw IoError("write failed: " + path);
}

VolumeImage read_volume(const std::string& path) {
  auto in = open_in(path, true);
  std::string word;
  VolumeImage img;
  in >> word;
  if (word != "dims") throw IoError("expected 'dims' header in " + path);
  in >> img.nx >> img.ny >> img.nz;
  in >> word;
  if (word != "spacing") throw IoError("expected 'spacing' header in " + path);
  in >> img.sx >> img.sy >> img.sz;
  if (!in) throw IoError("malformed volume header in " + path);
  in.get();  // consume the newline before the raw block
  if (img.nx <= 0 || img.ny <= 0 || img.nz <= 0)
    throw IoError("non-positive dims in " + path);
  size_t n = static_cast<size_t>(img.nx) * img.ny * img.nz;
  img.voxels.resize(n);
  in.read(reinterpret_cast<char*>(img.voxels.data()),
          static_cast<std::streamsize>(n * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != n * sizeof(float))
    throw IoError("truncated voxel data in " + path);
  img.validate();
  return img;
}

void write_trajectories_json(const std::string& path,
                             const std::vector<Trajectory>& trajectories,
                             const FlowSolution& solution) {
  json j;
  j["constraints"] = solution.constraints.label();
  j["objective"] = solution.objective;
  j["stats"] = {{"iterations", solution.stats.iterations},
                {"max_integrality_deviation",
                 solution.stats.max_integrality_deviation},
                {"max_constraint_residual",
                 solution.stats.max_constraint_residual},
                {"method", solution.stats.method}};
  json list = json::array();
  for (const Trajectory& traj : trajectories) {
    json points = json::array();
    for (const PointId& id : traj.points)
      points.push_back(json::array({id.frame, id.index}));
    json entry;
    entry["points"] = std::move(points);
    if (traj.loop_closure)
      entry["loop"] =
          json::array({traj.loop_closure->frame, traj.loop_closure->index});
    else
      entry["loop"] = nullptr;
    list.push_back(std::move(entry));
  }
  j["trajectories"] = std::move(list);
  dump_json(path, j);
}

TrajectoryFile read_trajectories_json(const std::string& path) {
  json j = load_json(path);
  reject_unknown_keys(j, {"constraints", "objective", "stats", "trajectories"},
                      path);
  TrajectoryFile file;
  file.constraints = j.value("constraints", std::string{});
  file.objective = j.value("objective", 0.0);
  if (!j.contains("trajectories") || !j["trajectories"].is_array())
    throw IoError("missing 'trajectories' array in " + path);
  for (const json& entry : j["trajectories"]) {
    Trajectory traj;
    if (!entry.contains("points") || !entry["points"].is_array())
      throw IoError("trajectory entry without 'points' in " + path);
    for (const json& id : entry["points"]) {
      if (!id.is_array() || id.size() != 2)
        throw IoError("expected [t, i] pairs in " + path);
      traj.points.push_back({id[0].get<int>(), id[1].get<int>()});
    }
    if (entry.contains("loop") && !entry["loop"].is_null()) {
      const json& id = entry["loop"];
      if (!id.is_array() || id.size() != 2)
        throw IoError("expected [t, i] loop target in " + path);
      traj.loop_closure = PointId{id[0].get<int>(), id[1].get<int>()};
    }
    file.trajectories.push_back(std::move(traj));
  }
  return file;
}

void write_rbf_json(const std::string& path, const RbfModel& model) {
  json j;
  j["kernel"] = "wendland_c2";
  j["support_radius"] = model.support_radius;
  json centers = json::array();
  for (const Point3& c : model.centers) centers.push_back(point_to_json(c));
  json coeffs = json::array();
  for (const Point3& c : model.coefficients)
    coeffs.push_back(point_to_json(c));
  j["centers"] = std::move(centers);
  j["coefficients"] = std::move(coeffs);
  dump_json(path, j);
}

RbfModel read_rbf_json(const std::string& path) {
  json j = load_json(path);
  reject_unknown_keys(j, {"kernel", "support_radius", "centers",
                          "coefficients"},
                      path);
  if (j.value("kernel", std::string{}) != "wendland_c2")
    throw IoError("unsupported kernel in " + path);
  RbfModel model;
  model.support_radius = j.value("support_radius", 0.0);
  if (!(model.support_radius > 0))
    throw IoError("support_radius must be positive in " + path);
  for (const json& c : j.at("centers"))
    model.centers.push_back(point_from_json(c, path));
  for (const json& c : j.at("coefficients"))
    model.coefficients.push_back(point_from_json(c, path));
  if (model.centers.size() != model.coefficients.size())
    throw IoError("centers/coefficients size mismatch in " + path);
  return model;
}

void write_strain_csv(
    const std::string& path,
    const std::vector<std::pair<int, StrainSample>>& rows) {
  auto out = open_out(path);
  out << "t,x,y,z,Err,Ecc,Ell\n";
  for (const auto& [t, s] : rows) {
    out << t << ',' << fmt(s.position.x) << ',' << fmt(s.position.y) << ','
        << fmt(s.position.z) << ',' << fmt(s.radial) << ','
        << fmt(s.circumferential) << ',' << fmt(s.longitudinal) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_report_json(const std::string& path,
                       const TrackingErrorReport& report) {
  json j;
  j["overall"] = {{"median", report.overall_median},
                  {"iqr", report.overall_iqr}};
  j["es"] = {{"median", report.es_median}, {"iqr", report.es_iqr}};
  j["ed"] = {{"median", report.ed_median}, {"iqr", report.ed_iqr}};
  dump_json(path, j);
}

void write_ablation_csv(const std::string& path,
                        const std::vector<AblationRow>& rows) {
  auto out = open_out(path);
  out << "constraints,overall_median,overall_iqr,es_median,es_iqr,"
         "ed_median,ed_iqr\n";
  for (const AblationRow& row : rows) {
    const TrackingErrorReport& r = row.report;
    out << '"' << row.constraints.label() << '"' << ','
        << fmt(r.overall_median) << ',' << fmt(r.overall_iqr) << ','
        << fmt(r.es_median) << ',' << fmt(r.es_iqr) << ',' << fmt(r.ed_median)
        << ',' << fmt(r.ed_iqr) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

void write_network_csv(const std::string& path, const FlowNetwork& network) {
  auto out = open_out(path);
  out << "kind,from_t,from_i,to_t,to_i,weight\n";
  for (const Edge& e : network.edges) {
    out << kind_name(e.kind) << ',' << e.from.frame << ',' << e.from.index
        << ',' << e.to.frame << ',' << e.to.index << ',' << fmt(e.weight)
        << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

namespace {

json tracking_to_json(const TrackingConfig& c) {
  return {{"nk", c.nk},
          {"p_th", c.p_th},
          {"z_fr", c.z_fr},
          {"theta_fr", c.theta_fr},
          {"constraints", c.constraints.label()},
          {"sigma_mode",
           c.sigma_mode == SigmaMode::Fixed ? "fixed" : "per-frame"},
          {"sigma_x", c.sigma_x},
          {"sigma_f", c.sigma_f},
          {"candidate_ball_factor", c.candidate_ball_factor}};
}

TrackingConfig tracking_from_json(const json& j, const std::string& path) {
  reject_unknown_keys(j,
                      {"nk", "p_th", "z_fr", "theta_fr", "constraints",
                       "sigma_mode", "sigma_x", "sigma_f",
                       "candidate_ball_factor"},
                      path + " tracking");
  TrackingConfig c;
  c.nk = j.value("nk", c.nk);
  c.p_th = j.value("p_th", c.p_th);
  c.z_fr = j.value("z_fr", c.z_fr);
  c.theta_fr = j.value("theta_fr", c.theta_fr);
  if (j.contains("constraints"))
    c.constraints = constraint_set_from_label(j["constraints"].get<std::string>());
  if (j.contains("sigma_mode")) {
    std::string mode = j["sigma_mode"].get<std::string>();
    if (mode == "fixed")
      c.sigma_mode = SigmaMode::Fixed;
    else if (mode == "per-frame")
      c.sigma_mode = SigmaMode::PerFrameStddev;
    else
      throw IoError("unknown sigma_mode '" + mode + "' in " + path);
  }
  c.sigma_x = j.value("sigma_x", c.sigma_x);
  c.sigma_f = j.value("sigma_f", c.sigma_f);
  c.candidate_ball_factor =
      j.value("candidate_ball_factor", c.candidate_ball_factor);
  return c;
}

}  // namespace

RunConfig read_run_config(const std::string& path) {
  json j = load_json(path);
  reject_unknown_keys(j,
                      {"tracking", "regularization", "sampling", "axes",
                       "seed", "feature", "patch_radius", "bins"},
                      path);
  RunConfig cfg;
  if (j.contains("tracking"))
    cfg.tracking = tracking_from_json(j["tracking"], path);
  if (j.contains("regularization")) {
    const json& r = j["regularization"];
    reject_unknown_keys(r, {"lambda_sparse", "lambda_div", "lambda_grad"},
                        path + " regularization");
    cfg.regularization.lambda_sparse =
        r.value("lambda_sparse", cfg.regularization.lambda_sparse);
    cfg.regularization.lambda_div =
        r.value("lambda_div", cfg.regularization.lambda_div);
    cfg.regularization.lambda_grad =
        r.value("lambda_grad", cfg.regularization.lambda_grad);
  }
  if (j.contains("sampling")) {
    const json& s = j["sampling"];
    reject_unknown_keys(s, {"z_fr", "theta_fr", "long_axis", "axis_origin"},
                        path + " sampling");
    cfg.sampling.z_fr = s.value("z_fr", cfg.sampling.z_fr);
    cfg.sampling.theta_fr = s.value("theta_fr", cfg.sampling.theta_fr);
    if (s.contains("long_axis"))
      cfg.sampling.long_axis = point_from_json(s["long_axis"], path);
    if (s.contains("axis_origin"))
      cfg.sampling.axis_origin = point_from_json(s["axis_origin"], path);
  }
  if (j.contains("axes")) {
    const json& a = j["axes"];
    reject_unknown_keys(a, {"long_axis", "origin"}, path + " axes");
    if (a.contains("long_axis"))
      cfg.axes.long_axis = point_from_json(a["long_axis"], path);
    if (a.contains("origin"))
      cfg.axes.apex_base_origin = point_from_json(a["origin"], path);
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.feature = j.value("feature", cfg.feature);
  cfg.patch_radius = j.value("patch_radius", cfg.patch_radius);
  cfg.bins = j.value("bins", cfg.bins);
  return cfg;
}

void write_run_config(const std::string& path, const RunConfig& cfg) {
  json j;
  j["tracking"] = tracking_to_json(cfg.tracking);
  j["regularization"] = {{"lambda_sparse", cfg.regularization.lambda_sparse},
                         {"lambda_div", cfg.regularization.lambda_div},
                         {"lambda_grad", cfg.regularization.lambda_grad}};
  j["sampling"] = {{"z_fr", cfg.sampling.z_fr},
                   {"theta_fr", cfg.sampling.theta_fr},
                   {"long_axis", point_to_json(cfg.sampling.long_axis)},
                   {"axis_origin", point_to_json(cfg.sampling.axis_origin)}};
  j["axes"] = {{"long_axis", point_to_json(cfg.axes.long_axis)},
               {"origin", point_to_json(cfg.axes.apex_base_origin)}};
  j["seed"] = cfg.seed;
  j["feature"] = cfg.feature;
  j["patch_radius"] = cfg.patch_radius;
  j["bins"] = cfg.bins;
  dump_json(path, j);
}

}  // namespace flowtrack
