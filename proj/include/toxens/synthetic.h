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

// Constructed datasets with known structure.

#ifndef TOXENS_SYNTHETIC_H_
#define TOXENS_SYNTHETIC_H_

#include <cstdint>
#include <string>

#include "toxens/corpus.h"

namespace toxens {

// Two multi-label classes, toxic and insult. Every comment has 6 to 10
// neutral words; each class is present with probability 0.3 and then adds one
// keyword, spelled plainly (idiot, stupid / loser, jerk) or obfuscated with
// digits (1d10t, stup1d / l0s3r, j3rk) with equal odds. A word model that
// sees only alphabetic tokens misses the obfuscated half and a model that
// sees only tokens with non-letters misses the plain half.
Corpus MakeComplementarityCorpus(size_t n = 1000, uint64_t seed = 11);

// One multi-label class "xor". Each comment holds two markers in random
// order: alpha or gamma, and beta or delta. The label is alpha XOR beta.
// The four marker patterns appear round-robin (counts differ by at most one)
// in shuffled order.
Corpus MakeXorCorpus(size_t n = 400, uint64_t seed = 3);

// Jigsaw-style CSV: id, comment_text, one 0/1 column per class.
std::string ToJigsawCsv(const Corpus& corpus);

}  // namespace toxens

#endif  // TOXENS_SYNTHETIC_H_
