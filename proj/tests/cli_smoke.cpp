// Drives the command-line binary end to end: exit codes, the fit-curve and
// report commands, and the skip-bad ingestion path. Takes the binary path as
// its first argument and returns the number of failed checks.

#include <unistd.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "spotsim/earlycurve.hpp"
#include "spotsim/workload.hpp"

namespace fs = std::filesystem;
using namespace spotsim;

namespace {

int g_failures = 0;

void check(bool ok, const std::string& what) {
  if (!ok) {
    ++g_failures;
    std::printf("[FAIL] %s\n", what.c_str());
  } else {
    std::printf("[PASS] %s\n", what.c_str());
  }
}

int run(const std::string& cmd) {
  const int rc = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: cli_smoke <binary>\n");
    return 1;
  }
  const std::string cli = argv[1];
  const fs::path dir = fs::temp_directory_path() /
                       ("spotsim_smoke_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);

  check(run(cli + " definitely-not-a-command") == 1, "usage errors exit 1");
  check(run(cli + " ingest --input /nowhere --output-dir " +
            (dir / "x").string()) == 2,
        "missing input exits 2");

  // A malformed row fails by default and passes with a warning under
  // --skip-bad.
  {
    std::ofstream raw(dir / "raw.csv");
    raw << "timestamp,instance_type,price\n"
        << "0,r4.large,0.10\n"
        << "60,r4.large,oops\n"
        << "120,r4.large,0.12\n";
  }
  check(run(cli + " ingest --input " + (dir / "raw.csv").string() +
            " --output-dir " + (dir / "grid").string()) == 2,
        "bad row without --skip-bad exits 2");
  check(run(cli + " ingest --skip-bad --input " + (dir / "raw.csv").string() +
            " --output-dir " + (dir / "grid").string()) == 0,
        "bad row with --skip-bad succeeds");
  check(fs::exists(dir / "grid" / "r4.large.csv"), "grid trace written");

  // fit-curve: a drop-shaped trace fits better staged than single-stage.
  {
    earlycurve::MetricTrace trace;
    for (long k = 0; k < 400; ++k) {
      const double v = k < 200 ? 1.0 / (0.002 * k + 1.0) + 0.5
                               : 1.0 / (0.004 * k + 2.0) + 0.1;
      trace.points.push_back({k, v});
    }
    std::ofstream out(dir / "metric.csv");
    earlycurve::write_metric_csv(out, trace);
  }
  check(run(cli + " fit-curve --input " + (dir / "metric.csv").string() +
            " --max-steps 500 --theta 0.5 --out " +
            (dir / "curve.json").string()) == 0,
        "fit-curve succeeds on a two-stage trace");
  {
    const std::string body = slurp(dir / "curve.json");
    check(body.find("staged_residual") != std::string::npos &&
              body.find("single_stage_residual") != std::string::npos,
          "fit-curve emits both residuals");
    std::ifstream in(dir / "curve.json");
    auto curve = earlycurve::read_curve_json(in);
    check(curve.stages.size() == 2, "fit-curve found two stages");
  }
  {
    std::ofstream out(dir / "short.csv");
    out << "step,metric\n0,1.0\n1,0.9\n2,0.8\n";
  }
  check(run(cli + " fit-curve --input " + (dir / "short.csv").string() +
            " --max-steps 10 --theta 0.1") == 2,
        "a three-point trace exits 2");

  // Full pipeline into report + eval-revpred.
  const std::string demo = (dir / "demo").string();
  check(run(cli + " gen-demo --out " + demo + " --demo-seed 3") == 0,
        "gen-demo succeeds");
  check(run(cli + " ingest --input " + demo + "/traces --output-dir " + demo +
            "/grid") == 0,
        "demo ingest succeeds");
  check(run(cli + " train-revpred -c " + demo +
            "/config.json --all --out " + demo + "/predictors") == 0,
        "demo training succeeds");
  check(run(cli + " train-revpred -c " + demo +
            "/config.json --trace " + demo +
            "/grid/r4.large.csv --train-until 1493337600 --eval-from "
            "1493300000 --out " +
            demo + "/p2") == 2,
        "overlapping train and eval windows exit 2");
  check(run(cli + " eval-revpred -c " + demo + "/config.json --model " + demo +
            "/predictors/revpred_r4.large_logistic.json --eval-from "
            "1493337600 --out " +
            demo + "/eval.csv") == 0,
        "eval-revpred succeeds");
  check(slurp(demo + "/eval.csv").find("accuracy") != std::string::npos,
        "eval table has the metric header");
  check(run(cli + " simulate -c " + demo + "/config.json --group lor") == 0,
        "demo simulate succeeds");
  check(run(cli + " report --inputs " + demo + "/out/lor_policy.json " + demo +
            "/out/lor_baseline_cheapest.json --reference lor_policy --out " +
            demo + "/pcr.csv") == 0,
        "report command succeeds");
  {
    const std::string pcr = slurp(demo + "/pcr.csv");
    check(pcr.find("lor_policy,") != std::string::npos,
          "report table lists the reference run");
    check(pcr.find(",1\n") != std::string::npos ||
              pcr.find(",1\r\n") != std::string::npos,
          "reference PCR is exactly one");
  }

  // A trace that cannot cover the horizon surfaces a simulation error.
  {
    std::ofstream cfg(dir / "short_sim.json");
    cfg << R"({"seed": 3,
               "paths": {"trace_dir": ")"
        << demo << R"(/short_grid", "bundle": ")" << demo
        << R"(/bundle.json", "predictor_dir": ")" << demo
        << R"(/predictors", "output_dir": ")" << demo << R"(/out2"}})";
    fs::create_directories(demo + "/short_grid");
    std::ifstream in(demo + "/grid/r4.large.csv");
    std::ofstream out(demo + "/short_grid/r4.large.csv");
    std::string line;
    for (int i = 0; i < 200 && std::getline(in, line); ++i) {
      out << line << '\n';
    }
  }
  check(run(cli + " simulate -c " + (dir / "short_sim.json").string()) == 3,
        "horizon exhaustion exits 3");

  fs::remove_all(dir);
  if (g_failures == 0) std::printf("cli smoke: all checks passed\n");
  return g_failures;
}
