// Copyright 2026 The loopcluster Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace loopcluster {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
   public:
    using std::runtime_error::runtime_error;
};

/// Invalid argument: bad index, out-of-range parameter, mismatched lengths.
class ArgumentError : public Error {
   public:
    using Error::Error;
};

/// Requested qubit count exceeds what the chosen representation can hold.
class CapacityError : public Error {
   public:
    using Error::Error;
};

/// A projection or post-selection branch has (numerically) zero probability.
class BranchImpossibleError : public Error {
   public:
    using Error::Error;
};

/// Loop-protocol operations called in an order the apparatus cannot realize.
class ProtocolOrderError : public Error {
   public:
    using Error::Error;
};

/// Malformed pulse sequence, detector or background configuration.
class ConfigError : public Error {
   public:
    using Error::Error;
};

/// An operation needs data (counts, records) and got none.
class EmptyDataError : public Error {
   public:
    using Error::Error;
};

/// Formula evaluated at a pole.
class SingularLimitError : public Error {
   public:
    using Error::Error;
};

/// File could not be written or read.
class IoError : public Error {
   public:
    using Error::Error;
};

/// Different measurement branches of the chain gave inequivalent end pairs.
class OutcomeAsymmetryError : public Error {
   public:
    using Error::Error;
};

}  // namespace loopcluster
