#pragma once

// Execution policy for the data-parallel kernels (batch encoding, exact
// scans, evaluation over targets). Every parallel kernel has a serial
// twin selected by this flag; tests compare the two for exact equality.

namespace qenc {

enum class ExecPolicy { kSerial, kParallel };

int max_threads();

}  // namespace qenc
