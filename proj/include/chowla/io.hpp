#pragma once

#include <cstdint>
#include <cstdio>
#include <iosfwd>
#include <string>

namespace chowla {

// Explicit little-endian scalar I/O so cache files are bit-exact across
// platforms regardless of host endianness.
void write_u32_le(std::ostream& os, uint32_t v);
void write_u64_le(std::ostream& os, uint64_t v);
uint32_t read_u32_le(std::istream& is);
uint64_t read_u64_le(std::istream& is);

// Deterministic numeric formatting shared by every CSV/JSON writer.
std::string format_double(double x);

// FNV-1a 64-bit, used for config hashes in run manifests.
uint64_t fnv1a64(const std::string& data);

}  // namespace chowla
