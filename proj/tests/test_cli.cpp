#include "mbi/tuning.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>
#include <unistd.h>

using namespace mbi;
using mbi::testing::Gen;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("mbi_cli_" + std::to_string(std::rand()) + "_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(MBI_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

DataSet small_dataset() {
  Gen gen(21);
  const std::vector<std::vector<bool>> layouts{
      {true, true, true}, {true, true, false}, {false, true, true}, {true, false, true}};
  MatrixXd x = gen.normal_matrix(240, 9);
  VectorXd beta = VectorXd::Zero(9);
  beta(0) = 3.0;
  beta(4) = -3.0;
  beta(7) = 3.0;
  const VectorXd y = x * beta + gen.normal_vector(240);
  return mbi::testing::block_dataset(x, y, {3, 3, 3}, layouts, {60, 60, 60, 60});
}

void write_csv(const fs::path& p, const DataSet& d, int blank_row = -1) {
  std::ofstream out(p);
  out.precision(17);
  out << "y";
  for (Index j = 0; j < d.cols(); ++j) out << ",x" << j + 1;
  out << '\n';
  for (Index i = 0; i < d.rows(); ++i) {
    out << d.response()(i);
    for (Index j = 0; j < d.cols(); ++j) {
      // A lone missing cell breaks the block structure.
      if (d.mask()(i, j) && !(i == blank_row && j == 0)) out << ',' << d.values()(i, j);
      else out << ",NA";
    }
    out << '\n';
  }
}

}  // namespace

TEST_CASE("cli fit writes the expected files") {
  TempDir tmp;
  const DataSet d = small_dataset();
  write_csv(tmp.path / "data.csv", d);
  const std::string out = (tmp.path / "out").string();
  REQUIRE(run("fit --data " + (tmp.path / "data.csv").string() + " --sources 1-3,4-6,7-9 --lambda 0.5 --out-dir " +
              out) == 0);
  const std::string summary = slurp(tmp.path / "out" / "summary.txt");
  CHECK(summary.find("G(2)={1,3,4}") != std::string::npos);
  CHECK(summary.find("G(1)={1}") != std::string::npos);

  // Coefficients agree with an in-process fit at the same lambda.
  const FitProblem problem(d);
  const FitResult ref = run_path(problem, {0.5}).best();
  std::ifstream in(tmp.path / "out" / "coefficients.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "name,coefficient,selected");
  int j = 0;
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string name, coef, sel;
    std::getline(ss, name, ',');
    std::getline(ss, coef, ',');
    std::getline(ss, sel, ',');
    if (name == "(intercept)") continue;
    REQUIRE(j < 9);
    CHECK(name == "x" + std::to_string(j + 1));
    CHECK(std::stod(coef) == doctest::Approx(ref.beta(j)).epsilon(1e-12));
    CHECK((sel == "1") == (ref.beta(j) != 0.0));
    ++j;
  }
  CHECK(j == 9);
  CHECK(fs::exists(tmp.path / "out" / "path.csv"));
}

TEST_CASE("cli exit codes") {
  TempDir tmp;
  const DataSet d = small_dataset();
  write_csv(tmp.path / "data.csv", d);
  write_csv(tmp.path / "broken.csv", d, 70);
  const std::string data = (tmp.path / "data.csv").string();
  const std::string out = " --out-dir " + (tmp.path / "o").string();
  CHECK(run("fit --data " + data + " --sources 1-3,4-6,7-9 --response z --lambda 0.5" + out) == 2);
  CHECK(run("fit --data " + data + " --sources 1-3,4-6,7-10 --lambda 0.5" + out) == 2);
  CHECK(run("fit --data " + (tmp.path / "nope.csv").string() + " --sources 1-9" + out) == 2);
  CHECK(run("fit --data " + (tmp.path / "broken.csv").string() + " --sources 1-3,4-6,7-9 --lambda 0.5" + out) == 3);
  CHECK(run("simulate --setting 1 --rho 1.5 --reps 1") == 2);
  CHECK(run("bogus") == 2);
}
