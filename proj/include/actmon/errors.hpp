#pragma once

#include <stdexcept>
#include <string>

namespace actmon {

// Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2, ModelError -> 3.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct InvalidConfig : ConfigError {
    using ConfigError::ConfigError;
};

struct NoSegments : DataError {
    using DataError::DataError;
};
struct StreamTooShort : DataError {
    using DataError::DataError;
};
struct SeriesTooShort : DataError {
    using DataError::DataError;
};
struct LengthMismatch : DataError {
    using DataError::DataError;
};
struct SingleClassTrainingSet : DataError {
    using DataError::DataError;
};
struct BadWindowLength : DataError {
    using DataError::DataError;
};
struct ShapeMismatch : DataError {
    using DataError::DataError;
};
struct NonFiniteLoss : DataError {
    using DataError::DataError;
};
struct BadScenario : DataError {
    using DataError::DataError;
};

struct ModelMissing : ModelError {
    using ModelError::ModelError;
};
struct VersionMismatch : ModelError {
    using ModelError::ModelError;
};
struct CorruptModel : ModelError {
    using ModelError::ModelError;
};
struct SchemaMismatch : ModelError {
    using ModelError::ModelError;
};

}  // namespace actmon
