// Copyright 2026 The RFEA-Sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "rfea/dynamics.hpp"
#include "rfea/errors.hpp"
#include "rfea/forces.hpp"
#include "rfea/geometry.hpp"
#include "rfea/identification.hpp"
#include "rfea/io.hpp"
#include "rfea/kinematics.hpp"
#include "rfea/ode.hpp"
#include "rfea/presets.hpp"
#include "rfea/simulate.hpp"
#include "rfea/steady_state.hpp"
