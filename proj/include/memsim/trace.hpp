#pragma once

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "memsim/random.hpp"

namespace memsim {

inline constexpr std::uint64_t kMaxTraceAddress = std::uint64_t{1} << 48;

struct TraceRecord {
  std::uint64_t gap_instructions = 0;
  std::uint64_t address = 0;
  bool is_write = false;

  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

using Trace = std::vector<TraceRecord>;

// Streaming microbenchmark: walks [0, footprint) by stride, with a
// reuse_fraction share of accesses going to a random line of the hot region
// [0, hot_region_bytes) instead.
struct SyntheticWorkloadSpec {
  std::uint64_t footprint_bytes = 64ull << 20;
  std::uint64_t stride_bytes = 64;
  std::uint64_t compute_gap = 0;
  std::uint64_t record_count = 0;
  double reuse_fraction = 0.0;
  // 0 selects min(footprint_bytes, 256 KiB).
  std::uint64_t hot_region_bytes = 0;
  double write_fraction = 0.0;
  std::uint64_t seed = 1;
};

class TraceParseError : public std::runtime_error {
 public:
  TraceParseError(std::size_t line, const std::string& reason)
      : std::runtime_error("line " + std::to_string(line) + ": " + reason),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

inline std::uint64_t effective_hot_region(const SyntheticWorkloadSpec& spec) {
  std::uint64_t hot = spec.hot_region_bytes;
  if (hot == 0) hot = std::min<std::uint64_t>(spec.footprint_bytes, 256 << 10);
  return std::min(hot, spec.footprint_bytes);
}

inline void validate(const SyntheticWorkloadSpec& spec) {
  if (spec.footprint_bytes == 0)
    throw std::invalid_argument("footprint_bytes must be nonzero");
  if (spec.stride_bytes == 0)
    throw std::invalid_argument("stride_bytes must be at least 1");
  if (spec.footprint_bytes < spec.stride_bytes)
    throw std::invalid_argument("footprint_bytes must be >= stride_bytes");
  if (spec.reuse_fraction < 0.0 || spec.reuse_fraction > 1.0)
    throw std::invalid_argument("reuse_fraction must lie in [0, 1]");
  if (spec.write_fraction < 0.0 || spec.write_fraction > 1.0)
    throw std::invalid_argument("write_fraction must lie in [0, 1]");
  if (spec.footprint_bytes > kMaxTraceAddress)
    throw std::invalid_argument("footprint_bytes exceeds 2^48");
}

inline Trace generate_trace(const SyntheticWorkloadSpec& spec) {
  validate(spec);
  Trace out;
  out.reserve(spec.record_count);

  Rng rng(spec.seed);
  const std::uint64_t hot_lines = std::max<std::uint64_t>(1, effective_hot_region(spec) / 64);
  std::uint64_t cursor = 0;
  for (std::uint64_t i = 0; i < spec.record_count; ++i) {
    TraceRecord rec;
    rec.gap_instructions = spec.compute_gap;
    if (spec.reuse_fraction > 0.0 && rng.uniform() < spec.reuse_fraction) {
      rec.address = rng.below(hot_lines) * 64;
    } else {
      rec.address = cursor;
      cursor += spec.stride_bytes;
      if (cursor >= spec.footprint_bytes) cursor %= spec.footprint_bytes;
    }
    if (spec.write_fraction > 0.0) rec.is_write = rng.uniform() < spec.write_fraction;
    out.push_back(rec);
  }
  return out;
}

// Memory accesses per thousand instructions, counting each record as
// gap_instructions compute instructions plus the access itself.
inline double trace_mpki(const Trace& trace) {
  if (trace.empty()) return 0.0;
  long double instructions = 0;
  for (const auto& r : trace) instructions += static_cast<long double>(r.gap_instructions) + 1;
  return static_cast<double>(1000.0L * trace.size() / instructions);
}

namespace detail {

template <typename T>
bool parse_uint(std::string_view token, T& out, int base) {
  if (token.empty()) return false;
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out, base);
  return ec == std::errc() && ptr == token.data() + token.size();
}

}  // namespace detail

inline Trace parse_trace(std::istream& in) {
  Trace out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;

    std::string_view view(line);
    std::vector<std::string_view> fields;
    std::size_t pos = 0;
    while (pos <= view.size()) {
      std::size_t next = view.find(' ', pos);
      if (next == std::string_view::npos) next = view.size();
      fields.push_back(view.substr(pos, next - pos));
      pos = next + 1;
    }
    if (fields.size() != 3)
      throw TraceParseError(lineno, "expected 3 space-separated fields, got " +
                                        std::to_string(fields.size()));

    TraceRecord rec;
    if (!detail::parse_uint(fields[0], rec.gap_instructions, 10))
      throw TraceParseError(lineno, "bad gap '" + std::string(fields[0]) + "'");

    std::string_view addr = fields[1];
    if (addr.size() < 3 || addr[0] != '0' || (addr[1] != 'x' && addr[1] != 'X') ||
        !detail::parse_uint(addr.substr(2), rec.address, 16))
      throw TraceParseError(lineno, "bad address '" + std::string(addr) + "'");
    if (rec.address > kMaxTraceAddress)
      throw TraceParseError(lineno, "address above 2^48");

    if (fields[2] == "R") {
      rec.is_write = false;
    } else if (fields[2] == "W") {
      rec.is_write = true;
    } else {
      throw TraceParseError(lineno, "bad access type '" + std::string(fields[2]) + "'");
    }
    out.push_back(rec);
  }
  return out;
}

inline Trace parse_trace(const std::string& text) {
  std::istringstream in(text);
  return parse_trace(in);
}

inline void serialize_trace(const Trace& records, std::ostream& out) {
  char buf[64];
  for (const auto& r : records) {
    auto* p = std::to_chars(buf, buf + sizeof buf, r.gap_instructions).ptr;
    *p++ = ' ';
    *p++ = '0';
    *p++ = 'x';
    p = std::to_chars(p, buf + sizeof buf, r.address, 16).ptr;
    *p++ = ' ';
    *p++ = r.is_write ? 'W' : 'R';
    *p++ = '\n';
    out.write(buf, p - buf);
  }
}

inline std::string serialize_trace(const Trace& records) {
  std::ostringstream out;
  serialize_trace(records, out);
  return out.str();
}

}  // namespace memsim
