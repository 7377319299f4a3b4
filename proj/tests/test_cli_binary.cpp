#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

using namespace std::string_literals;
namespace fs = std::filesystem;

namespace {

struct CliResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

std::string slurp_or_empty(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) return {};
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "esim-cli-tests" / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

// Runs the installed binary with the given arguments, captures both streams.
CliResult run_cli(const std::string& args) {
  static int counter = 0;
  const fs::path dir = fresh_dir("io-" + std::to_string(counter++));
  const fs::path out = dir / "stdout.txt";
  const fs::path err = dir / "stderr.txt";
  const std::string cmd =
      "\""s + ESIM_CLI_PATH + "\" " + args + " >" + out.string() + " 2>" + err.string();
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp_or_empty(out);
  r.err = slurp_or_empty(err);
  return r;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "config.esim";
  std::ofstream os(p);
  os << text;
  return p;
}

std::size_t count_lines(const std::string& text) {
  std::size_t n = 0;
  for (char c : text) n += (c == '\n');
  return n;
}

}  // namespace

TEST_CASE("cli: usage errors exit with status 1") {
  CHECK(run_cli("").exit_code == 1);                 // a subcommand is required
  CHECK(run_cli("bogus").exit_code == 1);            // unknown subcommand
  CHECK(run_cli("run").exit_code == 1);              // missing config argument
  CHECK(run_cli("run cfg --frobnicate").exit_code == 1);
  CHECK(run_cli("figure").exit_code == 1);           // missing figure name
}

TEST_CASE("cli: --help succeeds and documents the subcommands") {
  const CliResult r = run_cli("--help");
  CHECK(r.exit_code == 0);
  for (const char* word : {"run", "table2", "figure", "plot"})
    CHECK(r.out.find(word) != std::string::npos);
}

TEST_CASE("cli: configuration errors name the offending key on stderr") {
  const fs::path dir = fresh_dir("bad-config");
  const fs::path cfg = write_config(dir, "mu = 10\nislands = 4\nout = " + dir.string() + "\n");
  const CliResult r = run_cli("run " + cfg.string());
  CHECK(r.exit_code == 1);
  CHECK(r.err.find("mu") != std::string::npos);

  const CliResult missing = run_cli("run " + (dir / "absent.esim").string());
  CHECK(missing.exit_code == 1);
  CHECK(missing.err.find("config") != std::string::npos);

  const CliResult figure = run_cli("figure bogus");
  CHECK(figure.exit_code == 1);
  CHECK(figure.err.find("figure") != std::string::npos);

  const CliResult swaps = run_cli("figure fig6 --swaps 3");
  CHECK(swaps.exit_code == 1);
  CHECK(swaps.err.find("swaps") != std::string::npos);

  const CliResult plot = run_cli("plot " + (dir / "absent.csv").string());
  CHECK(plot.exit_code == 1);
  CHECK(plot.err.find("csv") != std::string::npos);
}

TEST_CASE("cli: run produces the bundle and identical reruns") {
  const fs::path dir = fresh_dir("run");
  const fs::path out_a = dir / "a";
  const fs::path out_b = dir / "b";
  const fs::path cfg = write_config(dir,
                                    "problem = DTLZ2\nmu = 8\nislands = 2\ngenerations = 30\n"
                                    "migration_interval = 15\ntau = 5\nchildren_per_species = 5\n"
                                    "runs = 2\nseed = 42\n");

  const CliResult a = run_cli("run " + cfg.string() + " --out " + out_a.string());
  REQUIRE(a.exit_code == 0);
  for (const char* name : {"activity.csv", "sensitivity.csv", "significance.csv", "manifest.json"})
    CHECK(fs::exists(out_a / name));

  const CliResult b = run_cli("run " + cfg.string() + " --out " + out_b.string());
  REQUIRE(b.exit_code == 0);
  for (const char* name : {"activity.csv", "sensitivity.csv", "significance.csv"})
    CHECK(slurp_or_empty(out_a / name) == slurp_or_empty(out_b / name));

  // The plot subcommand accepts the activity file the run just wrote.
  const CliResult plot =
      run_cli("plot " + (out_a / "activity.csv").string() + " --out " + (dir / "svg").string());
  CHECK(plot.exit_code == 0);
  const std::string svg = slurp_or_empty(dir / "svg" / "activity.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
}

TEST_CASE("cli: seed overrides change the data, matching seeds reproduce it") {
  const fs::path dir = fresh_dir("seeds");
  const fs::path cfg = write_config(dir,
                                    "problem = ZDT3\nmu = 8\nislands = 2\ngenerations = 20\n"
                                    "migration_interval = 10\ntau = 5\nchildren_per_species = 5\n"
                                    "runs = 1\n");
  const auto out = [&](const std::string& leaf) { return (dir / leaf).string(); };
  REQUIRE(run_cli("run " + cfg.string() + " --seed 7 --out " + out("s7")).exit_code == 0);
  REQUIRE(run_cli("run " + cfg.string() + " --seed 8 --out " + out("s8")).exit_code == 0);
  REQUIRE(run_cli("run " + cfg.string() + " --seed 7 --out " + out("s7x")).exit_code == 0);
  const std::string a = slurp_or_empty(dir / "s7" / "activity.csv");
  CHECK(a != slurp_or_empty(dir / "s8" / "activity.csv"));
  CHECK(a == slurp_or_empty(dir / "s7x" / "activity.csv"));
}

TEST_CASE("cli: table2 summarizes the whole suite") {
  const fs::path dir = fresh_dir("table2");
  const CliResult r = run_cli("table2 --runs 2 --generations 20 --migration-interval 20 --seed 5 --out " +
                              dir.string());
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(dir / "sensitivity.csv"));
  CHECK(fs::exists(dir / "manifest.json"));
  const std::string table = slurp_or_empty(dir / "table2.csv");
  CHECK(count_lines(table) == 13);  // header plus one row per benchmark problem
  CHECK(table.rfind("problem,mean_s,mean_s_first_event\n", 0) == 0);
  for (const char* name : {"DTLZ1", "DTLZ2", "DTLZ3", "DTLZ4", "ZDT3", "ZDT4", "ECC", "FM",
                           "Griewangk", "Hyper-ellipsoid", "MMDP", "MTTP"})
    CHECK(table.find("\n"s + name + ",") != std::string::npos);
  const std::string manifest = slurp_or_empty(dir / "manifest.json");
  CHECK(manifest.find("\"command\": \"table2\"") != std::string::npos);
}
