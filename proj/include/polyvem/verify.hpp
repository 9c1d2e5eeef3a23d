#pragma once

// Self-verification suites shared by the CLI `verify` command and the
// acceptance binary.

#include <cstdint>
#include <string>
#include <vector>

namespace polyvem {

struct CheckResult {
    std::string name;
    bool passed = false;
    double value = 0.0;      // measured quantity (error, count difference, ...)
    double threshold = 0.0;  // pass when value <= threshold
    std::string detail;
};

/// Local DoF counts on triangle, square and pentagon, k = 2..4, against the closed forms.
std::vector<CheckResult> verify_dims();

/// Polynomial reproduction of the four projectors on random simple polygons.
std::vector<CheckResult> verify_projectors(int polygons = 20, std::uint64_t seed = 20240917);

/// |form_h(p, q) - form(p, q)| for monomials p, q and the three bilinear forms.
std::vector<CheckResult> verify_consistency(int polygons = 20, std::uint64_t seed = 20240917);

/// One backward Euler step reproducing a space-time polynomial solution.
std::vector<CheckResult> verify_patch(int resolution = 4);

/// Global Newton Jacobian against central differences of the residual.
std::vector<CheckResult> verify_jacobian(int directions = 5, std::uint64_t seed = 7);

/// Element matrices do not depend on the boundary condition; only the DoF map does.
std::vector<CheckResult> verify_bc_unification();

/// dims, projectors, consistency, patch, jacobian, bc
const std::vector<std::string>& verify_suites();
std::vector<CheckResult> run_verify(const std::string& suite);

}  // namespace polyvem
