#pragma once

#include <stdexcept>
#include <string>

namespace alforge {

// Invalid model/experiment configuration (bad dimensions, T=0, ...).
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Shape mismatch between a model and its input.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Bad data: non-finite features, non-binary labels, malformed CSV rows.
struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite intermediate in a numeric routine.
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Training preconditions violated (empty labeled set).
struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Metric undefined for the given inputs (single-class AUC).
struct MetricError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Query strategy cannot produce a selection (empty candidate set).
struct SelectionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Labeled/unlabeled bookkeeping violated (double-commit of an index).
struct PoolError : std::logic_error {
    using std::logic_error::logic_error;
};

// Filesystem failures on load/export paths.
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace alforge
