#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

fs::path tmp_dir() {
  const fs::path d = KDTOPO_TMP;
  fs::create_directories(d);
  return d;
}

// Runs the CLI with `args` inside the scratch directory; stdout is captured,
// stderr goes to stderr.txt.
Run cli(const std::string& args) {
  const std::string cmd =
      "cd '" + tmp_dir().string() + "' && '" KDTOPO_CLI "' " + args + " 2>stderr.txt";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void put(const std::string& name, const std::string& content) {
  std::ofstream(tmp_dir() / name) << content;
}

}  // namespace

TEST_CASE("kde at a single point equals K(x,x)") {
  put("one.csv", "x1,x2\n0.5,0.5\n");
  const Run r = cli("--sigma 0.05 kde --in one.csv --at 0.5,0.5");
  CHECK(r.code == 0);
  CHECK(std::stod(r.out) == doctest::Approx(0.0025).epsilon(1e-15));
}

TEST_CASE("persist on the unit square site set reports the H1 class") {
  put("square.csv", "x1,x2,site_weight\n0,0,0\n1,0,0\n1,1,0\n0,1,0\n");
  Run r = cli("--no-manifest rips --sites square.csv --alpha-max inf --metric euclidean "
              "--out square.cx");
  REQUIRE(r.code == 0);
  r = cli("--no-manifest persist --complex square.cx --out square_dgm.csv");
  REQUIRE(r.code == 0);
  const std::string dgm = slurp(tmp_dir() / "square_dgm.csv");
  CHECK(dgm.find("1,0.5,0.70710678") != std::string::npos);

  r = cli("bottleneck --a square_dgm.csv --b square_dgm.csv");
  CHECK(r.code == 0);
  CHECK(r.out.find("1,0\n") != std::string::npos);
  CHECK(r.out.find("0,0\n") != std::string::npos);
}

TEST_CASE("validation failures exit with code 2") {
  CHECK(cli("generate --n 10 --out x.csv").code == 2);
  put("bad.csv", "x1,x2\n0.1,0.2\n0.5,abc\n");
  CHECK(cli("kde --in bad.csv --at 0,0").code == 2);
  CHECK(slurp(tmp_dir() / "stderr.txt").find("bad.csv:3") != std::string::npos);
  CHECK(cli("--kernel cubic kde --in one.csv --at 0,0").code == 2);
  CHECK(cli("--sigma -1 kde --in one.csv --at 0,0").code == 2);
  CHECK(cli("kde --in one.csv --at 0,0,0").code == 2);
  CHECK(cli("kde --in missing.csv --at 0,0").code == 2);
}

TEST_CASE("net size above the cap exits with code 3") {
  REQUIRE(cli("generate --shape circle --n 200 --seed 1 --out c.csv").code == 0);
  CHECK(cli("--sigma 0.001 phat --in c.csv --max-net 10").code == 3);
}

TEST_CASE("manifest is written and replay reproduces the outputs") {
  REQUIRE(cli("--sigma 0.3 generate --shape circle --n 150 --seed 4 --out m.csv").code == 0);
  Run r = cli("--sigma 0.3 rips --in m.csv --out m.cx");
  REQUIRE(r.code == 0);
  const std::string man = slurp(tmp_dir() / "m.cx.manifest.json");
  CHECK(man.find("\"version\"") != std::string::npos);
  CHECK(man.find("\"sigma\"") != std::string::npos);
  CHECK(man.find("m.cx") != std::string::npos);

  r = cli("replay --manifest-file m.cx.manifest.json");
  CHECK(r.code == 0);
  CHECK(r.out.find("1/1 outputs identical") != std::string::npos);

  // Changing the input makes the re-run output differ from the recorded digest.
  put("m.csv", "x1,x2\n0,0\n1,1\n");
  r = cli("replay --manifest-file m.cx.manifest.json");
  CHECK(r.code == 1);
  CHECK(r.out.find("0/1 outputs identical") != std::string::npos);
}

TEST_CASE("generate is deterministic in the seed") {
  REQUIRE(cli("--no-manifest generate --preset grid --seed 9 --out g1.csv").code == 0);
  REQUIRE(cli("--no-manifest generate --preset grid --seed 9 --out g2.csv").code == 0);
  CHECK(slurp(tmp_dir() / "g1.csv") == slurp(tmp_dir() / "g2.csv"));
}
