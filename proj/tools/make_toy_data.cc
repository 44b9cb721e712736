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

// Writes a constructed dataset as a Jigsaw-style CSV plus its schema.
//
//   make_toy_data complementarity|xor OUT_DIR [N] [SEED]

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>

#include "toxens/binary_io.h"
#include "toxens/synthetic.h"

int main(int argc, char** argv) {
  if (argc < 3) {
    std::cerr << "usage: make_toy_data complementarity|xor OUT_DIR [N] [SEED]\n";
    return 1;
  }
  const std::string kind = argv[1];
  const std::filesystem::path dir = argv[2];
  const size_t n = argc > 3 ? std::strtoull(argv[3], nullptr, 10) : (kind == "xor" ? 400 : 1000);
  const uint64_t seed = argc > 4 ? std::strtoull(argv[4], nullptr, 10) : (kind == "xor" ? 3 : 11);
  toxens::Corpus corpus = kind == "xor" ? toxens::MakeXorCorpus(n, seed)
                          : kind == "complementarity"
                              ? toxens::MakeComplementarityCorpus(n, seed)
                              : throw std::invalid_argument("unknown dataset " + kind);
  toxens::WriteStringToFile((dir / "comments.csv").string(), toxens::ToJigsawCsv(corpus));
  toxens::WriteStringToFile((dir / "schema.json").string(), toxens::SerializeSchema(corpus.schema()));
  std::cout << "wrote " << corpus.size() << " comments to " << dir.string() << "\n";
  return 0;
}
