#pragma once

#include <stdexcept>
#include <string>

namespace secnn {

// Base class for everything this library throws.
class error : public std::runtime_error {
public:
    explicit error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor extents do not line up (includes unsupported kernel geometries).
class shape_error : public error {
public:
    using error::error;
};

// A scalar argument or input set violates a precondition.
class argument_error : public error {
public:
    using error::error;
};

// Invalid model / training / generator configuration. The message names
// the violated constraint.
class config_error : public error {
public:
    using error::error;
};

// Backward called without a matching forward, or a cache reused.
class cache_error : public error {
public:
    using error::error;
};

// Non-finite loss during training; message carries fold/epoch/batch.
class divergence_error : public error {
public:
    using error::error;
};

// File could not be opened, read or written.
class io_error : public error {
public:
    using error::error;
};

// Bad magic bytes or unsupported format version.
class format_error : public error {
public:
    using error::error;
};

// Structurally valid header but payload lengths or checksums disagree.
class corruption_error : public error {
public:
    using error::error;
};

// Weight archive manifest does not match the target model.
class incompatible_archive_error : public error {
public:
    using error::error;
};

}  // namespace secnn
