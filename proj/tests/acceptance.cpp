// Runs the acceptance criteria and prints one line per criterion.

#include <cstdio>
#include <cstdlib>

#include "moustache/moustache.h"

namespace {

void print_line(const char*, int, int, const char* line, void*) {
  std::printf("%s\n", line);
  std::fflush(stdout);
}

}  // namespace

int main(int argc, char** argv) {
  msc_config* cfg = nullptr;
  if (msc_config_create(&cfg) != MSC_OK) return 1;
  if (const char* seed = std::getenv("MOUSTACHE_SEED")) msc_config_set(cfg, "seed", seed);
  const char* workers = argc > 1 ? argv[1] : "1";
  if (msc_config_set(cfg, "workers", workers) != MSC_OK) {
    std::fprintf(stderr, "acceptance: %s\n", msc_last_error());
    return 2;
  }
  int passed = 0;
  const msc_status s = msc_verify(cfg, "acceptance", print_line, nullptr, &passed);
  msc_config_destroy(cfg);
  if (s != MSC_OK) {
    std::fprintf(stderr, "acceptance: %s\n", msc_last_error());
    return 1;
  }
  std::printf("%s\n", passed ? "acceptance passed" : "acceptance FAILED");
  return passed ? 0 : 1;
}
