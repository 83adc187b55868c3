#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "flowtrack/io.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace flowtrack;

namespace {

std::string cli_path() {
  const char* env = std::getenv("FLOWTRACK_CLI");
  REQUIRE_MESSAGE(env != nullptr, "FLOWTRACK_CLI must point at the binary");
  return env;
}

int run(const std::string& args) {
  std::string cmd = "\"" + cli_path() + "\" " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "missing file: ", path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  fs::path dir = fs::path("cli_scratch") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
  CHECK(run("") == 2);
  CHECK(run("bogus") == 2);
  CHECK(run("generate") == 2);             // --out is required
  CHECK(run("track --out x.json") == 2);   // --in is required
  CHECK(run("--help") == 0);
  CHECK(run("track --help") == 0);
  CHECK(run("track --in nowhere.csv --out x.json") == 2);  // missing input
}

TEST_CASE("generate is deterministic") {
  fs::path a = scratch("gen_a");
  fs::path b = scratch("gen_b");
  std::string flags =
      " --phantom shells --frames 6 --z-fr 3 --theta-fr 4 --noise 0.05"
      " --seed 11";
  REQUIRE(run("generate --out " + a.string() + flags) == 0);
  REQUIRE(run("generate --out " + b.string() + flags) == 0);
  for (const char* name : {"points.csv", "truth.csv", "meta.json"})
    CHECK(read_text((a / name).string()) == read_text((b / name).string()));
  CHECK(read_es_frame((a / "meta.json").string()) == 3);
}

TEST_CASE("track writes trajectories and a report") {
  fs::path dir = scratch("track");
  REQUIRE(run("generate --out " + dir.string() +
              " --phantom shells --frames 6 --z-fr 3 --theta-fr 4") == 0);
  std::string traj = (dir / "tracked.json").string();
  REQUIRE(run("track --in " + (dir / "points.csv").string() + " --out " +
              traj + " --truth " + (dir / "truth.csv").string() + " --meta " +
              (dir / "meta.json").string() + " --p-th 0.1") == 0);

  TrajectoryFile file = read_trajectories_json(traj);
  CHECK(file.constraints == "out,bal,loop");
  CHECK(file.trajectories.size() == 3u * 4u * 2u);
  for (const Trajectory& t : file.trajectories) {
    CHECK(t.points.size() == 6u);
    CHECK(t.loop_closure.has_value());
  }
  // noiseless phantom tracks exactly
  nlohmann::json report = nlohmann::json::parse(read_text(traj +
                                                          ".report.json"));
  CHECK(report["overall"]["median"].get<double>() == 0.0);
}

TEST_CASE("flags override the config file") {
  fs::path dir = scratch("config");
  REQUIRE(run("generate --out " + dir.string() +
              " --phantom toy1d --points 4 --frames 4") == 0);
  RunConfig cfg;
  cfg.tracking.constraints = constraint_set_from_label("out,in");
  cfg.tracking.p_th = 0.0;
  std::string cfg_path = (dir / "cfg.json").string();
  write_run_config(cfg_path, cfg);
  std::string in = (dir / "points.csv").string();

  // config alone applies...
  REQUIRE(run("track --in " + in + " --out " + (dir / "a.json").string() +
              " --config " + cfg_path) == 0);
  CHECK(read_trajectories_json((dir / "a.json").string()).constraints ==
        "out,in");
  // ...and an explicit flag wins over it
  REQUIRE(run("track --in " + in + " --out " + (dir / "b.json").string() +
              " --config " + cfg_path + " --constraints out,bal,loop") == 0);
  CHECK(read_trajectories_json((dir / "b.json").string()).constraints ==
        "out,bal,loop");
}

TEST_CASE("an aggressive threshold leaves no trajectories") {
  fs::path dir = scratch("threshold");
  REQUIRE(run("generate --out " + dir.string() +
              " --phantom toy1d --points 4 --frames 4 --noise 0.1") == 0);
  std::string traj = (dir / "none.json").string();
  REQUIRE(run("track --in " + (dir / "points.csv").string() + " --out " +
              traj + " --p-th 1.0") == 0);
  CHECK(read_trajectories_json(traj).trajectories.empty());
}

TEST_CASE("densify and strain consume tracked paths") {
  fs::path dir = scratch("derive");
  REQUIRE(run("generate --out " + dir.string() +
              " --phantom shells --frames 6 --z-fr 3 --theta-fr 4") == 0);
  std::string in = (dir / "points.csv").string();
  std::string traj = (dir / "tracked.json").string();
  REQUIRE(run("track --in " + in + " --out " + traj + " --p-th 0.1") == 0);

  REQUIRE(run("densify --in " + in + " --trajectories " + traj + " --out " +
              dir.string() + " --frame 2 --lambda-sparse 0") == 0);
  RbfModel model = read_rbf_json((dir / "rbf_002.json").string());
  CHECK(model.centers.size() == 3u * 4u * 2u);
  CHECK(model.support_radius > 0.0);

  std::string strain_csv = (dir / "strain.csv").string();
  REQUIRE(run("strain --in " + in + " --trajectories " + traj + " --out " +
              strain_csv + " --frame 2 --origin 40 40 40") == 0);
  std::string text = read_text(strain_csv);
  CHECK(text.rfind("t,x,y,z,Err,Ecc,Ell\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 1 + 3 * 4 * 2);
}

TEST_CASE("evaluate and ablate write their tables") {
  fs::path dir = scratch("eval");
  REQUIRE(run("generate --out " + dir.string() +
              " --phantom shells --frames 6 --z-fr 3 --theta-fr 4") == 0);
  std::string in = (dir / "points.csv").string();
  std::string truth = (dir / "truth.csv").string();
  std::string meta = (dir / "meta.json").string();
  std::string traj = (dir / "tracked.json").string();
  REQUIRE(run("track --in " + in + " --out " + traj + " --p-th 0.1") == 0);

  std::string report = (dir / "report.json").string();
  REQUIRE(run("evaluate --in " + in + " --trajectories " + traj +
              " --truth " + truth + " --meta " + meta + " --out " + report) ==
          0);
  nlohmann::json j = nlohmann::json::parse(read_text(report));
  CHECK(j["overall"]["median"].get<double>() == 0.0);
  CHECK(j["es"]["median"].get<double>() == 0.0);

  std::string table = (dir / "ablation.csv").string();
  REQUIRE(run("ablate --in " + in + " --truth " + truth + " --meta " + meta +
              " --out " + table + " --p-th 0.1") == 0);
  std::string text = read_text(table);
  CHECK(text.rfind("constraints,", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 5);
  CHECK(text.find("\"out\"") != std::string::npos);
  CHECK(text.find("\"out,bal,loop\"") != std::string::npos);
}

TEST_CASE("missing trajectory files exit with the IO code") {
  fs::path dir = scratch("missing");
  REQUIRE(run("generate --out " + dir.string() +
              " --phantom toy1d --points 3 --frames 4") == 0);
  CHECK(run("densify --in " + (dir / "points.csv").string() +
            " --trajectories " + (dir / "nope.json").string() + " --out " +
            dir.string()) == 2);
  CHECK(run("evaluate --in " + (dir / "points.csv").string() +
            " --trajectories " + (dir / "nope.json").string() + " --truth " +
            (dir / "truth.csv").string() + " --out " +
            (dir / "r.json").string()) == 2);
}

TEST_CASE("invalid argument values exit with the usage code") {
  fs::path dir = scratch("invalid");
  REQUIRE(run("generate --out " + dir.string() +
              " --phantom toy1d --points 3 --frames 4") == 0);
  std::string in = (dir / "points.csv").string();
  CHECK(run("track --in " + in + " --out " + (dir / "t.json").string() +
            " --constraints out,loop") == 2);   // rejected by the flag check
  CHECK(run("track --in " + in + " --out " + (dir / "t.json").string() +
            " --p-th 1.5") == 1);               // rejected by the library
}
