#pragma once

#include <stdexcept>
#include <string>

namespace restmorph {

// Base class for every error the engine raises across module boundaries.
// Runtime trouble that is part of normal operation (HTTP failures, relation
// violations, dropped candidates) is encoded as data, not exceptions.
class EngineError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// --- spec-model ---

// The document is neither parseable JSON nor parseable YAML.
class UnparseableDocument : public EngineError {
public:
    using EngineError::EngineError;
};

// The document parsed but declares no supported spec dialect.
class UnsupportedVersion : public EngineError {
public:
    using EngineError::EngineError;
};

// The document parsed but violates structural expectations (e.g. no paths).
class SchemaViolation : public EngineError {
public:
    using EngineError::EngineError;
};

// A concrete request matches two or more path templates equally well.
class AmbiguousMatch : public EngineError {
public:
    using EngineError::EngineError;
};

// --- mt-model ---

// Lenient parsing could not recover a JSON array from raw LLM output.
class NoArrayFound : public EngineError {
public:
    using EngineError::EngineError;
};

// --- agent-orchestration ---

// A prompt template references a context field with no value.
class MissingPlaceholder : public EngineError {
public:
    using EngineError::EngineError;
};

// The LLM provider could not be reached or returned no usable completion.
class LlmTransportError : public EngineError {
public:
    using EngineError::EngineError;
};

// --- emt-plan ---

// Raw text could not be turned into a structurally complete test plan.
class PlanParseError : public EngineError {
public:
    using EngineError::EngineError;
};

// --- session-manager / cli ---

// Configuration that cannot be run at all (exit code 2 at the CLI).
class FatalConfigError : public EngineError {
public:
    using EngineError::EngineError;
};

// Filesystem trouble while persisting or loading artifacts.
class IoError : public EngineError {
public:
    using EngineError::EngineError;
};

// --- fixture-testbed ---

// The fixture service could not bind a listening port.
class PortUnavailable : public EngineError {
public:
    using EngineError::EngineError;
};

} // namespace restmorph
