// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace ila
{

/// Base of every error the framework raises deliberately.
class Error: public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Bad or missing configuration. The CLI maps this to exit code 2.
class ConfigError: public Error
{
public:
    using Error::Error;
};

/// Documentation could not be ingested (unreadable file, bad encoding, ...).
class IngestError: public Error
{
public:
    using Error::Error;
};

/// A persisted artifact (store, index, problem file, log) failed to load.
class LoadError: public Error
{
public:
    using Error::Error;
};

/// Type index construction failed.
class BuildError: public Error
{
public:
    using Error::Error;
};

/// A remote provider could not be reached after the configured retries.
class TransportError: public Error
{
public:
    using Error::Error;
};

/// Rendering the agent state cannot fit the context budget.
class ContextOverflow: public Error
{
public:
    using Error::Error;
};

class IoError: public Error
{
public:
    using Error::Error;
};

} // namespace ila
