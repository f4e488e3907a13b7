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

/// @file error.hpp
/// @brief Exception hierarchy shared by every scalestain module.

#pragma once

#include <stdexcept>
#include <string>

namespace scalestain {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A region, level or tile address outside the pyramid.
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// A tile that should exist is missing or cannot be decoded.
class CorruptionError : public Error {
 public:
  using Error::Error;
};

/// Invalid visualization or build parameters.
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// A picker point outside the parameter triangle.
class GeometryError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace scalestain
