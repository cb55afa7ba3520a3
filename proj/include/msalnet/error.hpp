#pragma once

#include <stdexcept>
#include <string>

namespace msalnet {

// Shape or extent mismatch between tensors and layer parameters.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Malformed or insufficient input data (files, configs, datasets).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values where finite ones are required.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A metric that is undefined for the given input (e.g. AUC with one class).
class EvaluationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Site-feature selection could not use any scale variable.
class SelectionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Synthetic data generation failed (e.g. covariance projection produced non-finite values).
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace msalnet
