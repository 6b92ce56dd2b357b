/*
 * Copyright 2026 The codecal Authors.
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

#ifndef CODECAL_SVG_HPP_
#define CODECAL_SVG_HPP_

#include <string>

#include "codecal/metrics.hpp"

namespace codecal {

// Reliability diagram: one bar per occupied bin centred on its mean
// confidence with height equal to its accuracy, opacity scaled by the bin
// count, plus the identity line. Output is deterministic text.
std::string ReliabilitySvg(const EvalReport& report);

// Mean score against accuracy, one point per non-empty group.
std::string GroupScatterSvg(const EvalReport& report);

}  // namespace codecal

#endif  // CODECAL_SVG_HPP_
