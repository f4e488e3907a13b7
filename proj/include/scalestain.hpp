// Copyright 2026 The Scalestain Authors. All Rights Reserved.
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

/// @file scalestain.hpp
/// @brief Umbrella header.

#pragma once

#include "scalestain/analytics.hpp"
#include "scalestain/bundle.hpp"
#include "scalestain/error.hpp"
#include "scalestain/expected_max.hpp"
#include "scalestain/parallel.hpp"
#include "scalestain/png_io.hpp"
#include "scalestain/pyramid.hpp"
#include "scalestain/raster.hpp"
#include "scalestain/render.hpp"
#include "scalestain/rng.hpp"
#include "scalestain/sensitivity.hpp"
#include "scalestain/server.hpp"
#include "scalestain/stain.hpp"
#include "scalestain/synth.hpp"
