#pragma once

#include <cstdint>

namespace ibl {

/// Selects the OpenMP kernel or the serial reference path of a parallel operation.
enum class Execution { serial, parallel };

/// Number of OpenMP workers available to parallel kernels.
int max_workers();

/// Deterministic per-task seed derived from a base seed (splitmix64 finalizer).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace ibl
