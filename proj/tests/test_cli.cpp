#include <doctest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "lrtc/io.hpp"

using namespace lrtc;
namespace fs = std::filesystem;

namespace {

struct CliDir {
  fs::path path;
  CliDir() {
    path = fs::temp_directory_path() / ("lrtc_cli_" + std::to_string(::getpid()) + "_" +
                                        std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~CliDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
  static int& counter() {
    static int c = 0;
    return c;
  }
};

int run_cli(const std::string& args) {
  const std::string cmd = std::string(LRTC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

TEST_CASE("simulate emits data, truth, and complementary masks") {
  CliDir tmp;
  const std::string prefix = tmp.file("sim");
  REQUIRE(run_cli("simulate --dims 6 4 3 --rank 2 --snr-db 15 --missing 0.25 --seed 3 "
                  "--out-prefix " +
                  prefix) == 0);
  const Tensor3 z = read_tensor(prefix + "_z.txt");
  const Tensor3 x = read_tensor(prefix + "_xtrue.txt");
  const Mask3 train = read_mask(prefix + "_train_mask.txt");
  const Mask3 test = read_mask(prefix + "_test_mask.txt");
  REQUIRE(z.dim0() == 6);
  REQUIRE(z.dim1() == 4);
  REQUIRE(z.dim2() == 3);
  CHECK(test.count() == 18);  // floor(0.25 * 72)
  for (std::size_t i = 0; i < train.values().size(); ++i) {
    CHECK(train.values()[i] + test.values()[i] == 1);
  }
  double noise = 0.0;
  for (std::size_t i = 0; i < z.values().size(); ++i) {
    noise += std::abs(z.values()[i] - x.values()[i]);
  }
  CHECK(noise > 0.0);  // finite snr actually perturbed the data

  const nlohmann::json man = nlohmann::json::parse(std::ifstream(prefix + ".manifest.json"));
  CHECK(man.at("command") == "simulate");
  CHECK(man.at("outputs").size() == 4);
}

TEST_CASE("impute reruns are byte-identical and round-trip through the reader") {
  CliDir tmp;
  const std::string prefix = tmp.file("d");
  REQUIRE(run_cli("simulate --dims 8 4 4 --rank 2 --snr-db 20 --missing 0.25 --seed 5 "
                  "--out-prefix " +
                  prefix) == 0);
  const std::string fit = " impute --tensor " + prefix + "_z.txt --mask " + prefix +
                          "_train_mask.txt --mu-rel 0.01 --rank 4 --seed 1";
  REQUIRE(run_cli(fit + " --out " + tmp.file("a.txt") + " --report " + tmp.file("a.csv")) == 0);
  REQUIRE(run_cli(fit + " --out " + tmp.file("b.txt") + " --report " + tmp.file("b.csv")) == 0);
  CHECK(read_file(tmp.file("a.txt")) == read_file(tmp.file("b.txt")));
  CHECK(read_file(tmp.file("a.csv")) == read_file(tmp.file("b.csv")));

  // reload, rewrite: the text format loses nothing
  const Tensor3 est = read_tensor(tmp.file("a.txt"));
  write_tensor(tmp.file("rewrite.txt"), est);
  CHECK(read_file(tmp.file("rewrite.txt")) == read_file(tmp.file("a.txt")));

  // binary container carries the same values
  REQUIRE(run_cli(fit + " --out " + tmp.file("c.bin") + " --binary") == 0);
  const Tensor3 bin = read_tensor(tmp.file("c.bin"));
  for (std::size_t i = 0; i < est.values().size(); ++i) {
    CHECK(bin.values()[i] == est.values()[i]);
  }

  const nlohmann::json man = nlohmann::json::parse(std::ifstream(tmp.file("a.txt") +
                                                                 ".manifest.json"));
  CHECK(man.at("command") == "impute");
  CHECK(man.at("inputs").at(prefix + "_z.txt") == file_digest(prefix + "_z.txt"));
  CHECK(man.at("config").contains("final_cost"));
  CHECK(man.at("config").at("seed") == "1");
}

TEST_CASE("the collapse weight yields an exactly zero estimate") {
  CliDir tmp;
  const std::string prefix = tmp.file("d");
  REQUIRE(run_cli("simulate --dims 6 4 4 --rank 2 --snr-db 20 --missing 0.2 --seed 8 "
                  "--out-prefix " +
                  prefix) == 0);
  REQUIRE(run_cli("impute --tensor " + prefix + "_z.txt --mask " + prefix +
                  "_train_mask.txt --mu-rel 1.0 --rank 4 --seed 2 --out " +
                  tmp.file("zero.txt")) == 0);
  const Tensor3 est = read_tensor(tmp.file("zero.txt"));
  for (double v : est.values()) CHECK(v == 0.0);
}

TEST_CASE("count model on negative data exits with the input-error code") {
  CliDir tmp;
  Tensor3 z(2, 2, 2);
  z(0, 0, 0) = -3.0;
  write_tensor(tmp.file("z.txt"), z);
  Mask3 mask = Mask3::ones(2, 2, 2);
  write_mask(tmp.file("m.txt"), mask);
  CHECK(run_cli("impute --model poisson --tensor " + tmp.file("z.txt") + " --mask " +
                tmp.file("m.txt") + " --mu 1 --out " + tmp.file("o.txt")) == 1);
  CHECK(!fs::exists(tmp.file("o.txt")));
}

TEST_CASE("flag misuse and missing files exit with the input-error code") {
  CliDir tmp;
  CHECK(run_cli("impute --tensor nowhere.txt --mask nowhere.txt --mu 1 --out " +
                tmp.file("o.txt")) == 1);
  CHECK(run_cli("impute --tensor nowhere.txt --mask nowhere.txt --out " + tmp.file("o.txt")) ==
        1);  // neither --mu nor --mu-rel
  CHECK(run_cli("sweep --tensor a --mask b --test-mask c --mu-grid nonsense:3 --out d") == 1);
  CHECK(run_cli("simulate --dims 3 3 --out-prefix x") == 1);  // needs three extents
  CHECK(run_cli("--help") == 0);
  CHECK(run_cli("impute --help") == 0);
}

TEST_CASE("sweep emits the documented CSV schema and reruns byte-identically") {
  CliDir tmp;
  const std::string prefix = tmp.file("d");
  REQUIRE(run_cli("simulate --dims 8 4 4 --rank 2 --snr-db 20 --missing 0.25 --seed 5 "
                  "--out-prefix " +
                  prefix) == 0);
  const std::string sweep = " sweep --tensor " + prefix + "_z.txt --mask " + prefix +
                            "_train_mask.txt --test-mask " + prefix +
                            "_test_mask.txt --mu-grid log:3:1e-3:1 --mu-rel --seeds 2 "
                            "--rank 4 --seed 7";
  REQUIRE(run_cli(sweep + " --out " + tmp.file("s1.csv")) == 0);
  REQUIRE(run_cli(sweep + " --out " + tmp.file("s2.csv")) == 0);
  const std::string csv = read_file(tmp.file("s1.csv"));
  CHECK(csv == read_file(tmp.file("s2.csv")));
  CHECK(csv.rfind("mu,mean_error_db,mean_rank,n_seeds\n", 0) == 0);
  int lines = 0;
  for (char ch : csv) lines += ch == '\n';
  CHECK(lines == 4);  // header plus one row per grid point

  // explicit list grids parse too
  REQUIRE(run_cli(" sweep --tensor " + prefix + "_z.txt --mask " + prefix +
                  "_train_mask.txt --test-mask " + prefix +
                  "_test_mask.txt --mu-grid list:0.5,2.0 --seeds 1 --rank 4 --out " +
                  tmp.file("s3.csv")) == 0);
  const std::string listed = read_file(tmp.file("s3.csv"));
  CHECK(listed.find("\n0.5,") != std::string::npos);
  CHECK(listed.find("\n2,") != std::string::npos);
}

TEST_CASE("estimated covariances feed straight back into imputation") {
  CliDir tmp;
  std::string samples;
  for (int s = 1; s <= 3; ++s) {
    const std::string prefix = tmp.file("t" + std::to_string(s));
    REQUIRE(run_cli("simulate --dims 6 5 4 --rank 2 --seed " + std::to_string(s) +
                    " --out-prefix " + prefix) == 0);
    samples += " " + prefix + "_xtrue.txt";
  }
  const std::string dir = tmp.file("priors");
  REQUIRE(run_cli("estimate-priors --samples" + samples + " --rank-hint 2 --out " + dir) == 0);
  for (const char* name : {"r_a.csv", "r_b.csv", "r_c.csv"}) {
    const Eigen::MatrixXd r = read_matrix_csv((fs::path(dir) / name).string());
    CHECK(r.rows() == r.cols());
    CHECK((r - r.transpose()).cwiseAbs().maxCoeff() < 1e-12);
  }
  const nlohmann::json man =
      nlohmann::json::parse(std::ifstream((fs::path(dir) / "priors.manifest.json").string()));
  CHECK(man.at("config").contains("theta"));
  CHECK(std::stod(man.at("config").at("theta").get<std::string>()) > 0.0);

  REQUIRE(run_cli("impute --tensor " + tmp.file("t1") + "_xtrue.txt --mask " + tmp.file("t1") +
                  "_train_mask.txt --mu 0.05 --rank 2 --priors " + dir + " --seed 4 --out " +
                  tmp.file("fit.txt")) == 0);
  CHECK(fs::exists(tmp.file("fit.txt")));

  // a wrong-shaped prior directory is an input error
  REQUIRE(run_cli("simulate --dims 3 3 3 --rank 1 --seed 9 --out-prefix " + tmp.file("w")) == 0);
  CHECK(run_cli("impute --tensor " + tmp.file("w") + "_z.txt --mask " + tmp.file("w") +
                "_train_mask.txt --mu 0.05 --priors " + dir + " --out " +
                tmp.file("bad.txt")) == 1);
}

TEST_CASE("reserved slices survive the trip through simulate") {
  CliDir tmp;
  const std::string prefix = tmp.file("s");
  REQUIRE(run_cli("simulate --dims 5 4 3 --rank 1 --missing 0.1 --reserve-slice column 2 "
                  "--seed 6 --out-prefix " +
                  prefix) == 0);
  const Mask3 train = read_mask(prefix + "_train_mask.txt");
  const Mask3 test = read_mask(prefix + "_test_mask.txt");
  for (Index m = 0; m < 5; ++m)
    for (Index p = 0; p < 3; ++p) {
      CHECK(train(m, 2, p) == 0);
      CHECK(test(m, 2, p) == 1);
    }
  CHECK(run_cli("simulate --dims 5 4 3 --rank 1 --reserve-slice diagonal 1 --seed 6 "
                "--out-prefix " +
                tmp.file("bad")) == 1);
  CHECK(run_cli("simulate --dims 5 4 3 --rank 1 --reserve-slice column nine --seed 6 "
                "--out-prefix " +
                tmp.file("bad2")) == 1);
}
