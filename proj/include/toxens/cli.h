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

// Command-line driver for the whole pipeline.

#ifndef TOXENS_CLI_H_
#define TOXENS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace toxens {

// Runs one command. `args` excludes the program name. Exit status: 0 on
// success, 1 on a validation or configuration error, 2 on a runtime failure.
int RunCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toxens

#endif  // TOXENS_CLI_H_
