#pragma once

#include <functional>
#include <string>
#include <vector>

namespace emoflow {

struct CheckResult {
  std::string id;
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0;
};

struct CheckSpec {
  std::string id;
  std::string name;
  bool needs_training = false;
  std::function<CheckResult()> run;
};

/// The end-to-end acceptance checks, each self-contained and seeded.
std::vector<CheckSpec> acceptance_checks();

CheckResult check_forward_marginal();
CheckResult check_stationarity();
CheckResult check_oracle_recovery();
CheckResult check_guidance_identities();
CheckResult check_intensity_monotonicity();
CheckResult check_null_dropout();
CheckResult check_gradient_integrity();
CheckResult check_training_efficacy();
CheckResult check_mcd_units();
CheckResult check_dsp_formats();

std::string format_result(const CheckResult& r);

}  // namespace emoflow
