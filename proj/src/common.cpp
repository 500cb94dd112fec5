#include "textalpha/common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace textalpha {

Date parse_date(std::string_view text) {
  auto bad = [&]() { return DataError("invalid date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  auto digits = [&](std::size_t from, std::size_t n) {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (text[i] < '0' || text[i] > '9') throw bad();
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  const std::chrono::year_month_day ymd{std::chrono::year{digits(0, 4)},
                                        std::chrono::month{static_cast<unsigned>(digits(5, 2))},
                                        std::chrono::day{static_cast<unsigned>(digits(8, 2))}};
  if (!ymd.ok()) throw bad();
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int year_of(Date d) { return static_cast<int>(std::chrono::year_month_day{d}.year()); }

Date make_date(int year, unsigned month, unsigned day) {
  return std::chrono::sys_days{std::chrono::year{year} / std::chrono::month{month} / std::chrono::day{day}};
}

std::string_view class_name(PerformanceClass c) {
  switch (c) {
    case PerformanceClass::Under: return "under";
    case PerformanceClass::Average: return "average";
    case PerformanceClass::Over: return "over";
  }
  return "?";
}

PerformanceClass class_from_index(int index) {
  if (index < 0 || index >= kNumClasses) throw UsageError("class index out of range: " + std::to_string(index));
  return static_cast<PerformanceClass>(index);
}

PerformanceClass argmax_class(const ClassProbabilities& p) {
  int best = 0;
  for (int k = 1; k < kNumClasses; ++k) {
    if (p[k] > p[best]) best = k;
  }
  return static_cast<PerformanceClass>(best);
}

ClassProbabilities softmax3(const std::array<double, kNumClasses>& scores) {
  const double m = *std::max_element(scores.begin(), scores.end());
  ClassProbabilities out{};
  double z = 0.0;
  for (int k = 0; k < kNumClasses; ++k) {
    out[k] = std::exp(scores[k] - m);
    z += out[k];
  }
  for (auto& v : out) v /= z;
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

}  // namespace textalpha
