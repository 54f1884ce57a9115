#pragma once

// Runtime-dispatched copies of the hot loops for wider vector units. Per-entry
// summation order is fixed in source and -ffp-contract=off forbids fused
// multiply-add, so every clone produces bit-identical results.
#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__) && defined(__linux__)
#define DSKD_VECTOR_CLONES __attribute__((target_clones("avx512f", "avx2", "default")))
#else
#define DSKD_VECTOR_CLONES
#endif
