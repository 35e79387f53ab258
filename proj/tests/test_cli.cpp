// End-to-end checks of the command-line tool via subprocess invocation.
// The binary path arrives in the LPSIM_CLI environment variable (set by
// ctest); without it these tests are skipped.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>

#include <doctest.h>

#include "lpsim/io.hpp"

using namespace lpsim;
namespace fs = std::filesystem;

namespace {

struct CliRunner {
  std::string binary;
  fs::path dir;

  CliRunner() {
    const char* env = std::getenv("LPSIM_CLI");
    binary = env ? env : "";
    dir = fs::temp_directory_path() /
          ("lpsim_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~CliRunner() { std::error_code ec; fs::remove_all(dir, ec); }

  int run(const std::string& args, std::string* out = nullptr) const {
    const fs::path out_path = dir / "stdout.txt";
    const std::string cmd = binary + " " + args + " > " + out_path.string() +
                            " 2> " + (dir / "stderr.txt").string();
    const int status = std::system(cmd.c_str());
    if (out) {
      std::ifstream is(out_path);
      std::ostringstream ss;
      ss << is.rdbuf();
      *out = ss.str();
    }
    return WEXITSTATUS(status);
  }

  std::string file_bytes(const fs::path& p) const {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
  }
};

} // namespace

TEST_CASE("command-line tool") {
  CliRunner cli;
  if (cli.binary.empty()) {
    MESSAGE("LPSIM_CLI not set; skipping CLI tests");
    return;
  }

  SUBCASE("quantize with the identity format round-trips the payload") {
    const Tensor t = random_uniform({4, 4}, RngStream{3}, 0, -50.0f, 50.0f);
    const fs::path in = cli.dir / "in.lpt", out = cli.dir / "out.lpt";
    write_tensor_file(in.string(), t);
    CHECK(cli.run("quantize --in " + in.string() + " --out " + out.string() +
                  " --format float:8:23") == 0);
    CHECK(cli.file_bytes(in) == cli.file_bytes(out));
  }

  SUBCASE("quantize applies the numeric-core golden") {
    const fs::path in = cli.dir / "v.lpt", out = cli.dir / "q.lpt";
    write_tensor_file(in.string(), Tensor({1}, {0.74f}));
    CHECK(cli.run("quantize --in " + in.string() + " --out " + out.string() +
                  " --format fixed:3:1 --rounding nearest_even") == 0);
    const Tensor q = read_tensor_file(out.string());
    CHECK(q[0] == 0.5f);
  }

  SUBCASE("missing input file exits 2") {
    CHECK(cli.run("quantize --in " + (cli.dir / "absent.lpt").string() +
                  " --out " + (cli.dir / "o.lpt").string() +
                  " --format fixed:3:1") == 2);
  }

  SUBCASE("non-finite input exits 3") {
    // a tensor file with an Inf payload parses but fails numerically
    const fs::path in = cli.dir / "inf.lpt", out = cli.dir / "o.lpt";
    std::ofstream os(in, std::ios::binary);
    os.write("LPT1", 4);
    const unsigned char header[4] = {1, 0, 0, 0};
    os.write(reinterpret_cast<const char*>(header), 4);
    const unsigned char extent[8] = {1, 0, 0, 0, 0, 0, 0, 0};
    os.write(reinterpret_cast<const char*>(extent), 8);
    const unsigned char inf_bits[4] = {0x00, 0x00, 0x80, 0x7F};
    os.write(reinterpret_cast<const char*>(inf_bits), 4);
    os.close();
    CHECK(cli.run("quantize --in " + in.string() + " --out " + out.string() +
                  " --format fixed:3:1") == 3);
  }

  SUBCASE("identical seeded invocations are byte-identical") {
    const Tensor t = random_uniform({8, 8}, RngStream{5}, 0, -2.0f, 2.0f);
    const fs::path in = cli.dir / "s.lpt";
    const fs::path o1 = cli.dir / "s1.lpt", o2 = cli.dir / "s2.lpt";
    write_tensor_file(in.string(), t);
    const std::string args = " --in " + in.string() +
                             " --format fixed:8:4 --rounding stochastic "
                             "--seed 77 --out ";
    CHECK(cli.run("quantize" + args + o1.string()) == 0);
    CHECK(cli.run("quantize" + args + o2.string()) == 0);
    CHECK(cli.file_bytes(o1) == cli.file_bytes(o2));
  }

  SUBCASE("enumerate prints the representable set") {
    std::string out;
    CHECK(cli.run("enumerate --format fixed:3:1", &out) == 0);
    CHECK(out == "-2\n-1.5\n-1\n-0.5\n0\n0.5\n1\n1.5\n");
    CHECK(cli.run("enumerate --format fixed:2:0:symmetric", &out) == 0);
    CHECK(out == "-1\n0\n1\n");
    CHECK(cli.run("enumerate --format float:8:23") == 2); // cap exceeded
    CHECK(cli.run("enumerate --format block:4 --block-exponent 0", &out) == 0);
    CHECK(out.rfind("-2\n", 0) == 0);
  }

  SUBCASE("train: empty config reaches the baseline accuracy") {
    const fs::path cfg = cli.dir / "empty.json";
    std::ofstream(cfg) << "{}";
    const fs::path trace = cli.dir / "trace.csv";
    std::string out;
    CHECK(cli.run("train --config " + cfg.string() + " --epochs 30 --seed 1 "
                  "--trace-out " + trace.string(), &out) == 0);
    double acc = 0.0;
    REQUIRE(std::sscanf(out.c_str(), "final_accuracy %lf", &acc) == 1);
    CHECK(acc >= 0.99);
    std::ifstream ts(trace);
    std::string header;
    std::getline(ts, header);
    CHECK(header == "epoch,loss,accuracy");
  }

  SUBCASE("train: full block-8 config lands near the baseline") {
    std::string out;
    CHECK(cli.run("train --epochs 30 --seed 1", &out) == 0);
    double base = 0.0;
    REQUIRE(std::sscanf(out.c_str(), "final_accuracy %lf", &base) == 1);

    const fs::path cfg = cli.dir / "block8.json";
    std::ofstream(cfg) << R"({
      "weight":      {"kind": "block", "wl": 8, "rounding": "stochastic"},
      "accumulator": {"kind": "block", "wl": 8, "rounding": "stochastic"},
      "gradient":    {"kind": "block", "wl": 8, "rounding": "stochastic"},
      "activation":  {"kind": "block", "wl": 8, "rounding": "stochastic"},
      "error":       {"kind": "block", "wl": 8, "rounding": "stochastic"}
    })";
    CHECK(cli.run("train --config " + cfg.string() + " --epochs 30 --seed 1",
                  &out) == 0);
    double low = 0.0;
    REQUIRE(std::sscanf(out.c_str(), "final_accuracy %lf", &low) == 1);
    CHECK(std::fabs(low - base) <= 0.05);
  }

  SUBCASE("train: bad config values exit 2 naming the key") {
    const fs::path cfg = cli.dir / "bad.json";
    std::ofstream(cfg) << R"({"weight": {"kind": "fixed", "wl": 30, "fl": 1}})";
    const fs::path err = cli.dir / "stderr.txt";
    CHECK(cli.run("train --config " + cfg.string()) == 2);
    CHECK(cli.file_bytes(err).find("wl") != std::string::npos);
  }

  SUBCASE("train runs are byte-identical for identical command lines") {
    const fs::path cfg = cli.dir / "b8.json";
    std::ofstream(cfg)
        << R"({"weight": {"kind": "block", "wl": 8, "rounding": "stochastic"}})";
    const fs::path t1 = cli.dir / "t1.csv", t2 = cli.dir / "t2.csv";
    CHECK(cli.run("train --config " + cfg.string() +
                  " --epochs 3 --seed 9 --trace-out " + t1.string()) == 0);
    CHECK(cli.run("train --config " + cfg.string() +
                  " --epochs 3 --seed 9 --trace-out " + t2.string()) == 0);
    CHECK(cli.file_bytes(t1) == cli.file_bytes(t2));
  }

  SUBCASE("bench: default smoke case emits CSV rows") {
    const fs::path csv = cli.dir / "bench.csv";
    const auto t0 = std::chrono::steady_clock::now();
    CHECK(cli.run("bench --sizes 1024 --formats fixed:8:4 "
                  "--rounding nearest_even --repeats 5 --warmup 1 --csv " +
                  csv.string()) == 0);
    const auto t1 = std::chrono::steady_clock::now();
    CHECK(std::chrono::duration<double>(t1 - t0).count() < 5.0);
    std::ifstream is(csv);
    std::string line;
    std::getline(is, line);
    CHECK(line ==
          "case_id,format,mode,implementation,elements,threads,median_ns,iqr_ns");
    int rows = 0;
    while (std::getline(is, line))
      if (!line.empty()) ++rows;
    CHECK(rows == 2); // fused + composed
  }

  SUBCASE("bench rejects composed float explicitly") {
    CHECK(cli.run("bench --sizes 1024 --formats float --impl composed") == 2);
  }

  SUBCASE("bench skips the composed side of float under --impl both") {
    const fs::path csv = cli.dir / "benchf.csv";
    CHECK(cli.run("bench --sizes 1024 --formats float:5:2 "
                  "--rounding nearest_even --repeats 5 --warmup 1 --csv " +
                  csv.string()) == 0);
    std::ifstream is(csv);
    std::string all((std::istreambuf_iterator<char>(is)),
                    std::istreambuf_iterator<char>());
    CHECK(all.find("fused") != std::string::npos);
    CHECK(all.find("composed") == std::string::npos);
  }

  SUBCASE("bad format string exits 2") {
    CHECK(cli.run("enumerate --format decimal:7") == 2);
    CHECK(cli.run("quantize --in x --out y --format fixed:8") == 2);
  }
}
