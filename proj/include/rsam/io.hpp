#pragma once

#include <cstdint>
#include <string>

#include "rsam/filter.hpp"
#include "rsam/grid.hpp"
#include "rsam/model.hpp"
#include "rsam/sim.hpp"

namespace rsam {

// Shortest round-trip decimal formatting of a double.
std::string format_double(double x);

// FNV-1a 64-bit over a byte string, hex-encoded; used as config hash.
std::string fnv1a_hex(const std::string& bytes);

// Grid CSV, schema: t, x1..xn, phi_tilde, phi, h1..hm (versioned header line).
void write_grid_csv(const std::string& path, const ValueGrid& values,
                    const PolicyGrid& policy, double theta);

// Compact binary checkpoint of the converged (value, policy) pair.
void write_checkpoint(const std::string& path, const ValueGrid& values,
                      const PolicyGrid& policy);
struct Checkpoint {
    ValueGrid values;
    PolicyGrid policy;
};
Checkpoint read_checkpoint(const std::string& path);

// Path CSV: t, X..., S..., V, chi.
void write_path_csv(const std::string& path, const SimPath& sim);

// Filter CSV: t, x_hat..., P flattened row-major, dU... (dU blank at t=0).
void write_filter_csv(const std::string& path, const FilterRun& run,
                      const PathMesh& mesh);

}  // namespace rsam
