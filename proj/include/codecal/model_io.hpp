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

#ifndef CODECAL_MODEL_IO_HPP_
#define CODECAL_MODEL_IO_HPP_

#include <filesystem>

#include "codecal/calibrators.hpp"
#include "json.hpp"

namespace codecal {

inline constexpr int kModelFormatVersion = 1;

// Versioned JSON document holding the method, grid, group names, parameters,
// patch list and convergence metadata. Doubles are written with round-trip
// precision so a reloaded model applies bit-identically.
nlohmann::json ModelToJson(const CalibratorModel& model);
CalibratorModel ModelFromJson(const nlohmann::json& j);

void SaveModel(const std::filesystem::path& path, const CalibratorModel& model);
CalibratorModel LoadModel(const std::filesystem::path& path);

// Group names the model was fitted on; empty for Platt and HB.
std::vector<std::string> ModelGroupNames(const CalibratorModel& model);

}  // namespace codecal

#endif  // CODECAL_MODEL_IO_HPP_
