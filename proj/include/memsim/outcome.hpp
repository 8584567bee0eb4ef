#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace memsim {

enum class ModelError {
  kNone,
  kNoHighPriorityEpochs,
  kNoEpochs,
  kDegenerateDenominator,
  kNoProgress,
};

inline const char* to_string(ModelError e) {
  switch (e) {
    case ModelError::kNone: return "none";
    case ModelError::kNoHighPriorityEpochs: return "no_high_priority_epochs";
    case ModelError::kNoEpochs: return "no_epochs";
    case ModelError::kDegenerateDenominator: return "degenerate_denominator";
    case ModelError::kNoProgress: return "no_progress";
  }
  return "?";
}

// A model quantity that may be unavailable for the current window.
template <typename T>
class Outcome {
 public:
  Outcome(T value) : value_(value) {}  // NOLINT(google-explicit-constructor)
  static Outcome failure(ModelError e) {
    Outcome o{T{}};
    o.error_ = e;
    return o;
  }

  bool ok() const { return error_ == ModelError::kNone; }
  explicit operator bool() const { return ok(); }
  ModelError error() const { return error_; }

  const T& value() const {
    if (!ok()) throw std::logic_error(std::string("model value unavailable: ") + to_string(error_));
    return value_;
  }
  const T& operator*() const { return value(); }
  T value_or(T fallback) const { return ok() ? value_ : fallback; }

 private:
  T value_;
  ModelError error_ = ModelError::kNone;
};

// Bit flags attached to emitted estimates.
enum EstimateFlag : std::uint32_t {
  kFlagNone = 0,
  kFlagClamped = 1u << 0,
  kFlagDegenerate = 1u << 1,
  kFlagCarriedForward = 1u << 2,
  kFlagUnavailable = 1u << 3,
  kFlagNoSampledAccesses = 1u << 4,
  kFlagNeutralWeight = 1u << 5,
};

inline std::string flags_to_string(std::uint32_t flags) {
  if (flags == 0) return "";
  std::string out;
  auto add = [&](const char* s) {
    if (!out.empty()) out += '|';
    out += s;
  };
  if (flags & kFlagClamped) add("clamped");
  if (flags & kFlagDegenerate) add("degenerate");
  if (flags & kFlagCarriedForward) add("carried_forward");
  if (flags & kFlagUnavailable) add("unavailable");
  if (flags & kFlagNoSampledAccesses) add("no_sampled_accesses");
  if (flags & kFlagNeutralWeight) add("neutral_weight");
  return out;
}

}  // namespace memsim
