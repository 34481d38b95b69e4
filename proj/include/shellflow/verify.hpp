#pragma once
//
// Built-in invariant suite behind the `verify` command: every module's
// conservation law, lemma check, and scheme property over a pinned parameter
// matrix.  `quick` keeps the matrix at desk scale (< 2 minutes).

#include <string>
#include <vector>

namespace shellflow {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

std::vector<CheckResult> run_verification(bool quick);

}  // namespace shellflow
