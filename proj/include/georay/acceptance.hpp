#pragma once

#include "georay/config.hpp"

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

namespace georay {

struct CriterionResult {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    int id;
    std::string name;
    double budget_s;  // wall-clock budget
    std::function<CriterionResult(const RunConfig&)> run;
};

const std::vector<Criterion>& acceptance_criteria();

void list_criteria(std::ostream& os);
// Runs the selected criteria (all when empty), one line per criterion.
// Returns the number of failures.
int run_acceptance(const RunConfig& cfg, std::ostream& os, const std::vector<int>& only = {});

}  // namespace georay
