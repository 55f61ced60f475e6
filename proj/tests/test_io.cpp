#include <doctest.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <limits>
#include <sstream>
#include <string>

#include "error.hpp"
#include "io.hpp"

using namespace moustache;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::internal;
}

}  // namespace

TEST_CASE("config keys round-trip through set and get") {
  ExperimentConfig cfg;
  for (const auto& key : config_keys()) {
    const std::string v = cfg.get(key);
    CHECK_NOTHROW(cfg.set(key, v));
    CHECK(cfg.get(key) == v);
  }
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config text parsing") {
  ExperimentConfig cfg;
  load_config_text(cfg,
                   "# experiment\n"
                   "r = 3\n"
                   "k=12   # closing level\n"
                   "\n"
                   "n_cycles=1e5\n"
                   "t=10,100\n"
                   "seed=42\n"
                   "dt_natural=0.002\n"
                   "format=json\n"
                   "table=true\n");
  CHECK(cfg.r == 3.0);
  CHECK(cfg.k == 12);
  CHECK(cfg.n_cycles == 100000);
  REQUIRE(cfg.t_grid.size() == 2);
  CHECK(cfg.t_grid[1] == 100.0);
  CHECK(cfg.integrator.seed == 42);
  CHECK(cfg.integrator.dt_natural == 0.002);
  CHECK(cfg.format == OutputFormat::json);
  CHECK(cfg.table);
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("config errors") {
  ExperimentConfig cfg;
  CHECK(code_of([&] { cfg.set("no_such_key", "1"); }) == ErrorCode::config);
  CHECK(code_of([&] { cfg.set("k", "twelve"); }) == ErrorCode::config);
  CHECK(code_of([&] { cfg.set("n_cycles", "-3"); }) == ErrorCode::config);
  CHECK(code_of([&] { load_config_text(cfg, "just words\n"); }) == ErrorCode::config);
  CHECK(code_of([&] { load_config_file(cfg, "/nonexistent/moustache.cfg"); }) == ErrorCode::io);

  cfg = ExperimentConfig{};
  cfg.set("r", "1");
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::config);
  cfg = ExperimentConfig{};
  cfg.set("side", "sideways");
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::config);
  cfg = ExperimentConfig{};
  cfg.set("dt_natural", "0");
  CHECK(code_of([&] { cfg.validate(); }) == ErrorCode::config);
}

TEST_CASE("doubles are written in shortest round-trip form") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, std::numeric_limits<double>::denorm_min()}) {
    const std::string s = format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
  CHECK(format_double(2.0) == "2");
  CHECK(format_double(0.1) == "0.1");
}

TEST_CASE("pool CSV round trip is exact") {
  IntegratorConfig icfg;
  icfg.seed = 3;
  const auto pool = sample_cycle_pool(CycleLawParams{2.0}, 6, 25, icfg, 1);
  std::ostringstream out;
  write_pool_csv(pool, out);
  std::istringstream in(out.str());
  const auto back = read_pool_csv(in);
  REQUIRE(back.size() == pool.size());
  CHECK(back.k == pool.k);
  CHECK(back.params.r == pool.params.r);
  CHECK(back.cfg_fingerprint == pool.cfg_fingerprint);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    CHECK(back.records[i].T == pool.records[i].T);
    CHECK(back.records[i].H == pool.records[i].H);
    CHECK(back.records[i].A == pool.records[i].A);
    CHECK(back.records[i].V == pool.records[i].V);
    CHECK(back.records[i].err_bound == pool.records[i].err_bound);
  }
  std::ostringstream again;
  write_pool_csv(back, again);
  CHECK(again.str() == out.str());

  const std::string path = "test_io_pool.csv";
  save_pool(pool, path);
  CHECK(load_pool(path).size() == pool.size());
  std::remove(path.c_str());
}

TEST_CASE("malformed pool files are I/O errors") {
  auto read = [](const std::string& text) {
    std::istringstream in(text);
    return read_pool_csv(in);
  };
  CHECK(code_of([&] { read("H,T,A,B,U,V,k,err_bound\n"); }) == ErrorCode::io);
  CHECK(code_of([&] { read("# r=2;k=30;x\nwrong header\n"); }) == ErrorCode::io);
  CHECK(code_of([&] { read("# r=2;k=30;x\nH,T,A,B,U,V,k,err_bound\n1,2,3\n"); }) == ErrorCode::io);
  // A outside (1, r)
  CHECK(code_of([&] { read("# r=2;k=30;x\nH,T,A,B,U,V,k,err_bound\n1,2,3,4,1.58,2,30,0.05\n"); }) ==
        ErrorCode::io);
  CHECK(code_of([&] { load_pool("/nonexistent/pool.csv"); }) == ErrorCode::io);
}

TEST_CASE("renewal CSV") {
  std::vector<double> U{0.5, 0.25}, lnTp{0.0, 0.0};
  const auto seq = assemble_from_draws(2.0, U, lnTp);
  std::ostringstream out;
  write_renewal_csv(seq, out);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "i,U,lnTp,lnA,lnT,S");
  std::getline(in, line);
  CHECK(line.rfind("1,0.5,0,", 0) == 0);
}

TEST_CASE("JSON field names") {
  TailEstimate t;
  t.t_grid = {10.0};
  t.p_hat = {0.5};
  t.ci_low = {0.4};
  t.ci_high = {0.6};
  const auto jt = to_json(t);
  for (const char* key : {"t_grid", "p_hat", "ci_low", "ci_high", "trunc_bias", "n"}) CHECK(jt.contains(key));

  const auto jk = to_json(KsReport{0.01, 100, 0.163, true});
  for (const char* key : {"d_n", "n", "threshold", "pass"}) CHECK(jk.contains(key));

  RdeReport r;
  const auto jr = to_json(r);
  for (const char* key : {"a_hat", "a_se", "t_grid", "b_hat", "beta0_hat", "beta0_index", "n"}) CHECK(jr.contains(key));

  CrossingReport c;
  const auto jc = to_json(c);
  for (const char* key : {"count", "checked", "indices", "margins"}) CHECK(jc.contains(key));

  ExitEstimate e;
  CHECK(to_json(e).contains("p_hat"));
}

TEST_CASE("emit writes files and reports unwritable paths") {
  const std::string path = "test_io_emit.txt";
  emit("hello\n", path);
  std::ifstream in(path);
  std::string s;
  std::getline(in, s);
  CHECK(s == "hello");
  std::remove(path.c_str());
  CHECK(code_of([] { emit("x", "/nonexistent/dir/out.txt"); }) == ErrorCode::io);
}
