/*
 * Copyright 2026 The toxens Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "toxens/common.h"

#include <cstdio>

namespace toxens {

namespace {

uint64_t SplitMix(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kIngestion:
      return "ingestion error";
    case ErrorKind::kArgument:
      return "argument error";
    case ErrorKind::kConfiguration:
      return "configuration error";
    case ErrorKind::kParse:
      return "parse error";
    case ErrorKind::kValidation:
      return "validation error";
    case ErrorKind::kUndefinedMetric:
      return "undefined metric";
    case ErrorKind::kReport:
      return "report error";
    case ErrorKind::kTraining:
      return "training error";
    case ErrorKind::kInternal:
      return "internal error";
    case ErrorKind::kIo:
      return "i/o error";
  }
  return "error";
}

void Fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, std::string(ErrorKindName(kind)) + ": " + message);
}

uint64_t Fnv1a64(std::string_view data, uint64_t basis) {
  uint64_t h = basis;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

uint32_t Fnv1a32(std::string_view data) {
  uint32_t h = 2166136261u;
  for (unsigned char c : data) {
    h ^= c;
    h *= 16777619u;
  }
  return h;
}

std::string HexDigest(uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(value));
  return buf;
}

uint64_t CounterRng::NextU64() {
  // Two rounds of SplitMix over (seed, stream, counter) give a keyed bijection
  // of the counter that passes the usual statistical batteries.
  const uint64_t key = SplitMix(seed_ ^ SplitMix(stream_ + 0x632BE59BD9B4E019ULL));
  return SplitMix(key + SplitMix(counter_++));
}

double CounterRng::NextDouble() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

uint64_t CounterRng::NextBelow(uint64_t bound) {
  if (bound == 0) Fail(ErrorKind::kInternal, "NextBelow with zero bound");
  // Rejection sampling removes modulo bias.
  const uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  uint64_t v;
  do {
    v = NextU64();
  } while (v >= limit);
  return v % bound;
}

CounterRng CounterRng::Fork(uint64_t stream) const {
  return CounterRng(SplitMix(seed_ ^ SplitMix(stream_)) ^ counter_,
                    SplitMix(stream + 1));
}

}  // namespace toxens
