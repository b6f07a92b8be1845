#include "emoflow/checks.hpp"

#include <cstdio>
#include <cstring>
#include <exception>

int main(int argc, char** argv) {
  int failed = 0;
  int ran = 0;
  for (const auto& check : emoflow::acceptance_checks()) {
    if (argc > 1) {
      bool selected = false;
      for (int i = 1; i < argc; ++i) selected = selected || std::strcmp(argv[i], check.id.c_str()) == 0;
      if (!selected) continue;
    }
    emoflow::CheckResult result;
    try {
      result = check.run();
    } catch (const std::exception& e) {
      result = {check.id, check.name, false, std::string("exception: ") + e.what(), 0};
    }
    std::printf("%s\n", emoflow::format_result(result).c_str());
    std::fflush(stdout);
    ++ran;
    if (!result.passed) ++failed;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no acceptance criteria matched the given ids\n");
    return 1;
  }
  std::printf("%d/%d acceptance criteria passed\n", ran - failed, ran);
  return failed == 0 ? 0 : 1;
}
