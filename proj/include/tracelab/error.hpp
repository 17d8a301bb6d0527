/*
 * Copyright 2026 The tracelab Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace tracelab {

/// Base of every error raised by the library. Subclasses name the failure
/// class so callers (and the CLI exit-code mapping) can dispatch on it.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error { using Error::Error; };
class DomainError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class PlanningError : public Error { using Error::Error; };
class IntegrityError : public Error { using Error::Error; };
class OrderingError : public Error { using Error::Error; };
class ResolutionError : public Error { using Error::Error; };
class NotInSupportError : public Error { using Error::Error; };
class EmptyEvidenceError : public Error { using Error::Error; };
class InapplicableError : public Error { using Error::Error; };
class UndefinedError : public Error { using Error::Error; };

}  // namespace tracelab
