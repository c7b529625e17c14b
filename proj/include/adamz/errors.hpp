#pragma once

#include <stdexcept>
#include <string>

namespace adamz {

// Tensor/op shape preconditions.
struct ShapeError : std::invalid_argument {
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

// Bad hyperparameter or run configuration.
struct ValidationError : std::invalid_argument {
    explicit ValidationError(const std::string& msg) : std::invalid_argument(msg) {}
};

// NaN/inf encountered where training cannot continue.
struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// File-system failures, reported with the offending path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// IDX ingestion failures; `code` distinguishes the corrupted field.
struct IdxError : std::runtime_error {
    enum class Code {
        bad_image_magic,
        bad_label_magic,
        truncated_image_file,
        truncated_label_file,
        count_mismatch,
        bad_label_value,
    };

    IdxError(Code c, const std::string& msg) : std::runtime_error(msg), code(c) {}
    Code code;
};

}  // namespace adamz
