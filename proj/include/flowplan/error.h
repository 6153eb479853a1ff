// Copyright 2026 The flowplan Authors.
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

#ifndef FLOWPLAN_ERROR_H_
#define FLOWPLAN_ERROR_H_

#include <stdexcept>
#include <string>

namespace flowplan {

// Base of every error the library throws. Domain violations that are
// expected outcomes (invalid graphs, infeasible schedules) are returned as
// data instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The input has a shape the algorithms cannot work with (cycle after
// condensation, disconnected DAG, malformed schedule tree).
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Instance exceeds a hard size cap (cut enumeration, oracle guards).
class SizeError : public Error {
 public:
  using Error::Error;
};

class MissingProfileError : public Error {
 public:
  using Error::Error;
};

class GranularityError : public Error {
 public:
  using Error::Error;
};

class WorkloadError : public Error {
 public:
  using Error::Error;
};

// File could not be read or does not match its documented format. The
// message carries the file and the offending location.
class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace flowplan

#endif  // FLOWPLAN_ERROR_H_
