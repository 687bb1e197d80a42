#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include <mgineq/mgineq.hpp>

using namespace mgineq;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code;
  std::string out;
};

fs::path workdir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / "mgineq_test_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Run run(const fs::path& dir, const std::string& args) {
  fs::path log = dir / "stdout.txt";
  std::string cmd = std::string(MGINEQ_CLI) + " --out-dir " + dir.string() + " " + args + " > " + log.string() + " 2>&1";
  int raw = std::system(cmd.c_str());
  std::ifstream in(log);
  std::stringstream ss;
  ss << in.rdbuf();
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kOneState = R"({"states":["z"],"increments":[0],"transition":[[0]],"payoff":[0],"z0":0})";

}  // namespace

TEST_CASE("solve on a one-state problem") {
  auto dir = workdir("one");
  write(dir / "p.json", kOneState);
  auto r = run(dir, "solve " + (dir / "p.json").string());
  CHECK(r.code == 0);
  CHECK(slurp(dir / "values.csv") == "state_index,label,value\n0,\"z\",0\n");
  auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(summary["status"] == "Converged");
  CHECK(summary["value_at_z0"] == 0.0);
}

TEST_CASE("input errors exit 1 with a diagnostic") {
  auto dir = workdir("bad");
  write(dir / "p.json", R"({"states":["z"],"increments":[0],"transition":[[0]],"payoff":["oops"],"z0":0})");
  auto r = run(dir, "solve " + (dir / "p.json").string());
  CHECK(r.code == 1);
  CHECK(r.out.find("payoff[0]") != std::string::npos);
  CHECK(run(dir, "solve " + (dir / "absent.json").string()).code == 1);
  CHECK(run(dir, "no-such-command").code == 1);
}

TEST_CASE("Doob preset through the generic pipeline") {
  auto dir = workdir("doob");
  auto r = run(dir, "doob --p 2 --c 4 --grid-points 200 --emit-problem");
  CHECK(r.code == 0);
  CHECK(fs::exists(dir / "rho.csv"));
  CHECK(slurp(dir / "rho.csv").rfind("r,value,closed_form,abs_err\n", 0) == 0);
  auto problem = (dir / "problem.json").string();
  auto s = run(dir, "solve " + problem);
  CHECK(s.code == 0);
  auto summary = nlohmann::json::parse(slurp(dir / "summary.json"));
  CHECK(std::fabs(summary["value_at_z0"].get<double>() - 1.0) <= 1e-3);

  CHECK(run(dir, "--tol 1e-6 verify " + problem + " " + (dir / "values.csv").string()).code == 0);
  CHECK(run(dir, "--tol 1e-6 verify " + problem + " " + (dir / "closed_form.csv").string()).code == 0);

  std::ofstream payoff(dir / "payoff.json");
  auto spec = io::read_problem(problem);
  nlohmann::json arr = nlohmann::json::array();
  for (ExtReal v : spec.payoff) arr.push_back(v.is_finite() ? nlohmann::json(v.value()) : nlohmann::json("-inf"));
  payoff << arr.dump();
  payoff.close();
  CHECK(run(dir, "--tol 1e-6 verify " + problem + " " + (dir / "payoff.json").string()).code != 0);

  CHECK(run(dir, "hedge-check " + problem + " --horizon 4").code == 0);
  CHECK(slurp(dir / "strategy.csv").rfind("time,state_index,xi\n", 0) == 0);
  auto noisy = run(dir, "hedge-check " + problem + " --horizon 4 --xi-noise 0.5");
  CHECK(noisy.code != 0);
  CHECK(noisy.out.find("witness") != std::string::npos);
  CHECK(run(dir, "hedge-check " + problem + " --horizon 0").code == 0);
  CHECK(run(dir, "enumerate " + problem + " --horizon 2").code == 0);
}

TEST_CASE("subcritical Doob constant exits 2") {
  auto dir = workdir("diverge");
  CHECK(run(dir, "doob --p 2 --c 3.9 --grid-points 100 --emit-problem").code == 2);
  CHECK(run(dir, "solve " + (dir / "problem.json").string()).code == 2);
  CHECK(run(dir, "--max-iter 2 doob --p 2 --c 5 --grid-points 100").code == 3);
}

TEST_CASE("verify on an identity system") {
  auto dir = workdir("identity");
  write(dir / "p.json", R"({"states":[0,1],"increments":[-1,0,1],"transition":[[0,0,0],[1,1,1]],"payoff":[0,0],"z0":0})");
  write(dir / "u.json", "[0, 0]");
  CHECK(run(dir, "verify " + (dir / "p.json").string() + " " + (dir / "u.json").string()).code == 0);
}

TEST_CASE("reduce subcommand") {
  auto dir = workdir("reduce");
  write(dir / "four.json",
        R"({"n":1,"T":1,"x0":[0],"children":[{"w":0.25,"x":[-2],"children":[]},{"w":0.25,"x":[-1],"children":[]},)"
        R"({"w":0.25,"x":[1],"children":[]},{"w":0.25,"x":[2],"children":[]}]})");
  auto r = run(dir, "reduce " + (dir / "four.json").string() + " --payoff terminal-power:2");
  CHECK(r.code == 0);
  auto reduced = io::tree_from_json(nlohmann::json::parse(slurp(dir / "reduced_tree.json")));
  CHECK(reduced.leaves().size() <= 3);
  auto report = nlohmann::json::parse(slurp(dir / "reduce_report.json"));
  CHECK(std::fabs(report["moments_after"][0].get<double>() - 2.5) <= 1e-10);

  write(dir / "vals.json", "[[1],[2],[3],[4]]");
  CHECK(run(dir, "reduce " + (dir / "four.json").string() + " --leaf-values " + (dir / "vals.json").string()).code == 0);

  write(dir / "small.json", R"({"n":1,"T":1,"x0":[0],"children":[{"w":0.5,"x":[-1],"children":[]},{"w":0.5,"x":[1],"children":[]}]})");
  CHECK(run(dir, "reduce " + (dir / "small.json").string()).code == 0);
  CHECK(nlohmann::json::parse(slurp(dir / "reduced_tree.json")) == nlohmann::json::parse(slurp(dir / "small.json")));

  write(dir / "broken.json", R"({"n":1,"T":1,"x0":[0],"children":[{"w":0.3,"x":[-1],"children":[]},{"w":0.5,"x":[1],"children":[]}]})");
  CHECK(run(dir, "reduce " + (dir / "broken.json").string()).code == 1);
}

TEST_CASE("burkholder subcommand") {
  auto dir = workdir("burkholder");
  CHECK(run(dir, "burkholder --p 3 --state-samples 2000 --direction-samples 200 --paths 20000").code == 0);
  auto rep = nlohmann::json::parse(slurp(dir / "burkholder.json"));
  CHECK(rep["dominates"] == true);
  CHECK(rep["line_concave"] == true);
}
