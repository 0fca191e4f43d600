#pragma once

#include <string>
#include <vector>

#include "ksjko/fields.hpp"

namespace ksjko {
namespace validate {

struct CheckRow {
    std::string name;      // short identifier
    std::string property;  // what is being checked, in behavior terms
    Real margin = 0.0;     // nonnegative = pass, with room to spare
    bool pass = false;
};

/// suite is one of {lemmas, metrics, convergence}; jobs caps scenario-level
/// parallelism (clamped by the KSJKO_THREADS environment variable).
std::vector<CheckRow> run_suite(const std::string& suite, int jobs);

}  // namespace validate
}  // namespace ksjko
