#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace textalpha {

/// Bad input data (malformed files, missing coverage). CLI exit code 2.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller misuse: shape mismatch, invalid configuration. CLI exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A produced artifact failed a validation gate (empty split, leakage). CLI exit code 3.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure during training (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Date = std::chrono::sys_days;

/// Strict ISO-8601 `YYYY-MM-DD`. Throws DataError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);
int year_of(Date d);
Date make_date(int year, unsigned month, unsigned day);

inline constexpr int kNumClasses = 3;

/// Under < Average < Over.
enum class PerformanceClass : int { Under = 0, Average = 1, Over = 2 };

std::string_view class_name(PerformanceClass c);
PerformanceClass class_from_index(int index);
inline int class_index(PerformanceClass c) { return static_cast<int>(c); }

using ClassProbabilities = std::array<double, kNumClasses>;

/// Argmax with ties resolved to the lower class.
PerformanceClass argmax_class(const ClassProbabilities& p);

/// Numerically stable softmax over three scores.
ClassProbabilities softmax3(const std::array<double, kNumClasses>& scores);

/// 64-bit FNV-1a; stable across platforms, used for config hashes.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);

}  // namespace textalpha
